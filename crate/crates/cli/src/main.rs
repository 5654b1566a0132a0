use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kstar_cli::config::JobConfig;
use kstar_cli::{run_geom, run_lsymbol, run_star, run_tensor_t, run_verify, Outcome};

/// Exact star products with separation of variables on a Kähler chart.
#[derive(Parser)]
#[command(name = "kstar", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// The star product f ⋆ g through ν^N.
    Star(JobArgs),
    /// The symbol of left star multiplication by f.
    Lsymbol(JobArgs),
    /// The total symbol T through ν^N.
    TensorT {
        #[command(flatten)]
        job: JobArgs,
        /// Report only the constant coefficients.
        #[arg(long)]
        at_origin: bool,
    },
    /// Metric, inverse metric, connection, curvature, ρ₂₂ and γ.
    Geom(JobArgs),
    /// Run the verification suite; exit code 1 if any check fails.
    Verify(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// JSON job file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A built-in name (flat, fubini-study, hyperbolic) or an expression.
    #[arg(long)]
    potential: Option<String>,
    /// Chart dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Highest power of ν.
    #[arg(long)]
    nu_order: Option<usize>,
    /// Output jet order M.
    #[arg(long)]
    jet_order: Option<u32>,
    /// Expansion order of the potential; defaults to M + 2N + 4.
    #[arg(long)]
    phi_order: Option<u32>,
    #[arg(long)]
    f: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl JobArgs {
    fn config(self) -> Result<JobConfig, String> {
        let flags = JobConfig {
            n: self.n,
            potential: self.potential,
            nu_order: self.nu_order,
            jet_order: self.jet_order,
            phi_order: self.phi_order,
            f: self.f,
            g: self.g,
            h: self.h,
            seed: self.seed,
        };
        let file = match &self.config {
            Some(path) => JobConfig::load(path)?,
            None => JobConfig::default(),
        };
        Ok(file.overridden_by(flags))
    }
}

fn run(command: Command) -> Result<Outcome, String> {
    match command {
        Command::Star(a) => run_star(&a.config()?.resolve()?),
        Command::Lsymbol(a) => run_lsymbol(&a.config()?.resolve()?),
        Command::TensorT { job, at_origin } => run_tensor_t(&job.config()?.resolve()?, at_origin),
        Command::Geom(a) => run_geom(&a.config()?.resolve()?),
        Command::Verify(a) => run_verify(&a.config()?.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.json).expect("json");
            // A closed pipe is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
