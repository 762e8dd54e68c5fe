use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sweepwidth::Error;
use sweepwidth_cli::config::RunConfig;
use sweepwidth_cli::run::{self, Command as RunCommand};

#[derive(Parser)]
#[command(
    name = "sweepwidth",
    version,
    about = "Sweep widths, boundary geodesics and critical pairs on Riemannian discs"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Args)]
struct Common {
    /// Fixture configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Directory artifacts are written into (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Override the fixture's pair-grid resolution.
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Reserved for future randomized experiments; accepted, recorded in
    /// the summary, not used by any current subcommand.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Print the machine-readable summary instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Min-max sweep width S with the optimal sweepout (CSV).
    Width(Common),
    /// Boundary diameter: the maximal pair distance on the grid.
    Diameter(Common),
    /// Critical-pair scan: components, verdicts, certificates (JSON).
    Critical(Common),
    /// Minimizing geodesics between two boundary arclength parameters.
    Geodesic {
        #[command(flatten)]
        common: Common,
        /// Arclength of the first endpoint.
        #[arg(long, value_name = "S")]
        from: f64,
        /// Arclength of the second endpoint.
        #[arg(long, value_name = "S")]
        to: f64,
    },
    /// Chord shortening started from the minimizer between two parameters.
    Birkhoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "S")]
        from: f64,
        #[arg(long, value_name = "S")]
        to: f64,
        /// Iteration budget for the shortening process.
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Free-boundary chords with Morse indices and spectra.
    Fbg(Common),
    /// Directional widths, extremes and the Cauchy-Crofton check
    /// (plane charts only).
    Planar(Common),
    /// Width/diameter/length relations, critical structure, stable-chord
    /// check (JSON).
    Report(Common),
    /// SVG overlay: curve, maximal-pair geodesics, free-boundary chords.
    Render(Common),
}

impl CliCommand {
    fn split(self) -> (Common, RunCommand) {
        match self {
            CliCommand::Width(c) => (c, RunCommand::Width),
            CliCommand::Diameter(c) => (c, RunCommand::Diameter),
            CliCommand::Critical(c) => (c, RunCommand::Critical),
            CliCommand::Geodesic { common, from, to } => {
                (common, RunCommand::Geodesic { from, to })
            }
            CliCommand::Birkhoff {
                common,
                from,
                to,
                iters,
            } => (common, RunCommand::Birkhoff { from, to, iters }),
            CliCommand::Fbg(c) => (c, RunCommand::Fbg),
            CliCommand::Planar(c) => (c, RunCommand::Planar),
            CliCommand::Report(c) => (c, RunCommand::Report),
            CliCommand::Render(c) => (c, RunCommand::Render),
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) => "config",
        Error::Curve(_) => "curve",
        Error::DeclarationRequired { .. } => "declaration_required",
        Error::OutsideDomain { .. } => "outside_domain",
        Error::ChartSingular { .. } => "chart_singular",
        Error::NoConnector { .. } => "no_connector",
        Error::Numerical { .. } => "numerical",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn execute(common: &Common, cmd: RunCommand) -> sweepwidth::Result<()> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(grid) = common.grid {
        cfg.override_grid(grid)?;
    }
    let outcome = run::run(&cfg, cmd)?;

    std::fs::create_dir_all(&common.out)?;
    for (file, contents) in &outcome.files {
        std::fs::write(common.out.join(file), contents)?;
    }

    if common.json {
        let mut summary = outcome.summary;
        if let (Some(seed), Some(obj)) = (common.seed, summary.as_object_mut()) {
            obj.insert("seed".into(), seed.into());
        }
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print!("{}", outcome.text);
        for (file, _) in &outcome.files {
            println!("wrote {}", common.out.join(file).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, cmd) = cli.command.split();
    match execute(&common, cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": { "kind": error_kind(&e), "message": e.to_string() }
            });
            eprintln!("{payload}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
