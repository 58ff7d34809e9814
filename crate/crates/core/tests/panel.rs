mod common;

use common::basis;
use execflow::panel::{cross_projection, pnl_weighted, spike_order};
use execflow::{synth, AnalysisConfig, AssetPanel, BasisKind, Tick};

/// Interleaves per-symbol tick lists by time.
fn merge(streams: &[(&str, Vec<Tick>)]) -> Vec<(String, Tick)> {
    let mut all: Vec<(String, Tick)> =
        streams.iter().flat_map(|(s, ts)| ts.iter().map(move |t| (s.to_string(), *t))).collect();
    all.sort_by_key(|(s, t)| (t.t, s.clone()));
    all
}

fn feed(panel: &mut AssetPanel, ticks: &[(String, Tick)]) {
    for (s, t) in ticks {
        panel.process(s, t).unwrap();
    }
}

#[test]
fn cross_projection_is_symmetric_and_one_on_the_diagonal() {
    let b = basis(BasisKind::LegendreShifted, 8, 60.0);
    let mut panel = AssetPanel::new(b.clone(), AnalysisConfig::default());
    feed(
        &mut panel,
        &merge(&[("AAA", synth::random_session(1, 300, 1.0)), ("BBB", synth::random_session(2, 300, 1.0))]),
    );
    let snap = panel.snapshot();
    let ab = cross_projection(&b, &snap, "AAA", "BBB").unwrap().unwrap();
    let ba = cross_projection(&b, &snap, "BBB", "AAA").unwrap().unwrap();
    let aa = cross_projection(&b, &snap, "AAA", "AAA").unwrap().unwrap();
    assert!((ab - ba).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&ab));
    assert!((aa - 1.0).abs() < 1e-9, "{aa}");
    assert!(cross_projection(&b, &snap, "AAA", "ZZZ").is_err());
}

#[test]
fn later_spike_is_more_recent() {
    let b = basis(BasisKind::Laguerre, 10, 100.0);
    let mut panel = AssetPanel::new(b, AnalysisConfig::default());
    let early = synth::burst(3, 600.0, 1.0, &[(200.0, 4.0, 5000.0)]);
    let late = synth::burst(4, 600.0, 1.0, &[(450.0, 4.0, 5000.0)]);
    feed(&mut panel, &merge(&[("EARLY", early), ("LATE", late)]));
    let (d_m, d_ih) = spike_order(&panel.snapshot(), "LATE", "EARLY").unwrap();
    assert!(d_m.unwrap() < 0.0, "{d_m:?}");
    assert!(d_ih.unwrap() < 0.0, "{d_ih:?}");
}

#[test]
fn identical_assets_scale_the_index() {
    let b = basis(BasisKind::LegendreShifted, 6, 50.0);
    let ticks = synth::random_session(9, 200, 1.0);
    let index_of = |copies: usize| {
        let mut panel = AssetPanel::new(b.clone(), AnalysisConfig::default());
        let names: Vec<String> = (0..copies).map(|k| format!("S{k}")).collect();
        for t in &ticks {
            for n in &names {
                panel.process(n, t).unwrap();
            }
        }
        let lam = panel.index_state().unwrap().lambda;
        (panel.index_moments().clone(), lam, pnl_weighted(&panel.snapshot()))
    };
    let (m1, l1, p1) = index_of(1);
    let (m3, l3, p3) = index_of(3);
    assert!((&m3 - &m1 * 3.0).amax() <= 1e-10 * m3.amax());
    assert!((l3 / l1 - 3.0).abs() < 1e-9);
    assert!((p3 - 3.0 * p1).abs() <= 1e-9 * p3.abs().max(1.0));
}

#[test]
fn idle_assets_follow_the_shared_clock() {
    let b = basis(BasisKind::LegendreShifted, 6, 50.0);
    let mut panel = AssetPanel::new(b, AnalysisConfig::default());
    panel.process("A", &Tick::new(0, 10.0, 1.0)).unwrap();
    panel.process("A", &Tick::new(1_000_000_000, 10.5, 1.0)).unwrap();
    panel.process("B", &Tick::new(5_000_000_000, 20.0, 1.0)).unwrap();
    let a = panel.engine("A").unwrap().moments();
    assert!((a.t_now() - 5.0).abs() < 1e-12);
    assert!(panel.engine("C").is_err());
    assert_eq!(panel.symbols().collect::<Vec<_>>(), ["A", "B"]);
}
