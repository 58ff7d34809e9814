use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use execflow::synth;
use flate2::write::GzEncoder;
use flate2::Compression;

fn muse() -> Command {
    Command::new(env!("CARGO_BIN_EXE_muse"))
}

fn write_ticks(path: &Path, symbols: &[&str], count: usize) {
    let mut text = String::from("# header comment\n");
    for (k, sym) in symbols.iter().enumerate() {
        for t in synth::random_session(40 + k as u64, count, 0.5) {
            text.push_str(&format!("{sym}\t{}\t{}\t{}\tx\tx\tx\tx\tx\n", t.t, t.price, t.size));
        }
    }
    fs::write(path, text).unwrap();
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn empty_input_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.tsv");
    let out = dir.path().join("out.tsv");
    fs::write(&input, "").unwrap();
    let st = muse().arg("--musein_file").arg(&input).arg("--museout_file").arg(&out).status().unwrap();
    assert!(st.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.starts_with('#')));
}

#[test]
fn gzip_and_plain_inputs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("t.tsv");
    write_ticks(&plain, &["X"], 300);
    let gz = dir.path().join("t.tsv.gz");
    let mut enc = GzEncoder::new(fs::File::create(&gz).unwrap(), Compression::default());
    enc.write_all(&fs::read(&plain).unwrap()).unwrap();
    enc.finish().unwrap();
    let mut outs = Vec::new();
    for (k, input) in [&plain, &gz].into_iter().enumerate() {
        let out = dir.path().join(format!("o{k}.tsv"));
        let st = muse().arg("--musein_file").arg(input).arg("--museout_file").arg(&out).args(["--n", "6"]).status().unwrap();
        assert!(st.success());
        outs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn rows_have_one_value_per_column() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.tsv");
    write_ticks(&input, &["X"], 200);
    let out = dir.path().join("o.tsv");
    let plot = dir.path().join("p.tsv");
    let st = muse()
        .arg("--musein_file")
        .arg(&input)
        .arg("--museout_file")
        .arg(&out)
        .args(["--n", "6", "--tau", "40", "--measure", "Laguerre", "--compare", "--experimental", "--plot_scale_lambda"])
        .arg("--plotdata")
        .arg(&plot)
        .status()
        .unwrap();
    assert!(st.success());
    let text = fs::read_to_string(&out).unwrap();
    let cols = text.lines().nth(1).unwrap().trim_start_matches('#').split('\t').count();
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r.split('\t').count() == cols));
    assert!(text.lines().nth(1).unwrap().contains("pFV.Delta_I.RightProduct"));
    assert_eq!(data_lines(&plot).len(), 200);
}

#[test]
fn symbol_column_enables_panel_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.tsv");
    write_ticks(&input, &["AAA", "BBB", "CCC"], 100);
    let out = dir.path().join("o.tsv");
    let st = muse()
        .arg("--musein_file")
        .arg(&input)
        .arg("--museout_file")
        .arg(&out)
        .args(["--musein_cols", "9:1:2:3:0", "--n", "6", "--symbols", "AAA,CCC"])
        .status()
        .unwrap();
    assert!(st.success());
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| !r.contains("BBB")));
    assert!(fs::read_to_string(&out).unwrap().contains("panel.index_lambda"));
}

#[test]
fn bad_arguments_fail() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.tsv");
    write_ticks(&input, &["X"], 10);
    for args in [vec!["--n", "0"], vec!["--tau", "-1"], vec!["--threshold", "2"], vec!["--musein_cols", "3:1:2:3"], vec!["--measure", "Hermite"]] {
        let st = muse().arg("--musein_file").arg(&input).args(&args).output().unwrap();
        assert!(!st.status.success(), "{args:?}");
    }
    let missing = muse().arg("--musein_file").arg(dir.path().join("nope")).output().unwrap();
    assert!(!missing.status.success());
}
