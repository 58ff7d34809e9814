use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use execflow::density::RhoMethod;
use execflow::{AnalysisConfig, BasisKind, ColSpec, IdpdtVariant, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rho {
    Lyapunov,
    MinNorm,
}

/// Per-tick execution-flow indicators from a tab-separated trade file.
#[derive(Debug, Parser)]
#[command(name = "muse", version)]
struct Args {
    /// Input ticks, plain or gzip.
    #[arg(long = "musein_file")]
    musein_file: PathBuf,
    /// `total:time:price:size[:symbol]`, zero-based.
    #[arg(long = "musein_cols", default_value = "9:1:2:3")]
    musein_cols: ColSpec,
    #[arg(long, default_value_t = 12)]
    n: usize,
    /// Seconds.
    #[arg(long, default_value_t = 256.0)]
    tau: f64,
    /// Laguerre, LegendreShifted, ChebyshevShifted or Monomial.
    #[arg(long, default_value = "LegendreShifted")]
    measure: BasisKind,
    /// Output file; stdout when absent.
    #[arg(long = "museout_file")]
    museout_file: Option<PathBuf>,
    #[arg(long = "idpdt_variant", default_value = "RightProduct")]
    idpdt_variant: IdpdtVariant,
    /// `wH^2` at or above this marks directional signals as no-info.
    #[arg(long, default_value_t = 0.1)]
    threshold: f64,
    /// Relative eigenvalue floor for variants with `1/lambda`.
    #[arg(long = "lambda_floor", default_value_t = 1e-8)]
    lambda_floor: f64,
    /// Ticks before frames are ready; default `2n`.
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long, value_enum, default_value = "lyapunov")]
    rho: Rho,
    /// Emit every variant's Delta_I side by side.
    #[arg(long)]
    compare: bool,
    /// Projector, V/T and double-integration outputs.
    #[arg(long)]
    experimental: bool,
    /// Auxiliary plot file.
    #[arg(long)]
    plotdata: Option<PathBuf>,
    /// Rescale lambda onto the price range in the plot file.
    #[arg(long = "plot_scale_lambda")]
    plot_scale_lambda: bool,
    /// Comma-separated symbols to keep from a merged file.
    #[arg(long, value_delimiter = ',')]
    symbols: Option<Vec<String>>,
}

fn main() -> ExitCode {
    let a = Args::parse();
    let cfg = RunConfig {
        input: a.musein_file,
        cols: a.musein_cols,
        kind: a.measure,
        n: a.n,
        tau: a.tau,
        output: a.museout_file,
        analysis: AnalysisConfig {
            variant: a.idpdt_variant,
            compare: a.compare,
            threshold: a.threshold,
            lambda_floor: a.lambda_floor,
            warmup: a.warmup,
            rho_method: match a.rho {
                Rho::Lyapunov => RhoMethod::Lyapunov,
                Rho::MinNorm => RhoMethod::MinNorm,
            },
            experimental: a.experimental,
        },
        plotdata: a.plotdata,
        plot_scale_lambda: a.plot_scale_lambda,
        symbols: a.symbols,
    };
    match execflow::run(&cfg) {
        Ok(s) => {
            eprintln!(
                "muse: {} rows, {} skipped input lines, {:.0} ticks/s",
                s.rows,
                s.ingest.skipped(),
                s.ticks_per_second()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("muse: {e}");
            ExitCode::FAILURE
        }
    }
}
