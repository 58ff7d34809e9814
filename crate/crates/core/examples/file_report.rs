//! Runs the file pipeline on a generated tick file and prints the first rows.
//!
//! `cargo run --release --example file_report [ticks]`

use std::fs;

use execflow::{run, synth, RunConfig};

fn main() -> execflow::Result<()> {
    let count: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let dir = std::env::temp_dir().join(format!("execflow-report-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let input = dir.join("ticks.tsv");
    let mut text = String::new();
    for t in synth::random_session(3, count, 0.05) {
        text.push_str(&format!("S\t{}\t{:.2}\t{}\t0\t0\t0\t0\t0\n", t.t, t.price, t.size));
    }
    fs::write(&input, text)?;

    let mut cfg = RunConfig::new(&input);
    cfg.output = Some(dir.join("out.tsv"));
    cfg.plotdata = Some(dir.join("plot.tsv"));
    let summary = run(&cfg)?;
    println!("{} rows in {:.2} s, {:.0} ticks/s", summary.rows, summary.seconds, summary.ticks_per_second());

    let out = fs::read_to_string(cfg.output.as_ref().unwrap())?;
    for line in out.lines().take(2) {
        println!("{}", &line[..line.len().min(160)]);
    }
    if let Some(row) = out.lines().last() {
        println!("{}", &row[..row.len().min(160)]);
    }
    fs::remove_dir_all(&dir)?;
    Ok(())
}
