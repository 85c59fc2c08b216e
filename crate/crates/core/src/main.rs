use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fbs_herald::config::parse_override;
use fbs_herald::experiments::{run_experiment, ExperimentName, ExperimentSpec};

#[derive(Parser)]
#[command(
    name = "fbs-herald",
    version,
    about = "Heralded phonon Fock states in forward Brillouin scattering"
)]
struct Cli {
    #[command(subcommand)]
    experiment: Command,

    /// TOML file with model and experiment parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Herald probabilities P0..P3 over gt, lossless and with gamma = g.
    Fig3,
    /// Integrators against the closed forms.
    OracleCheck,
    /// Dense check of the factorized propagator.
    GlauberCheck,
    /// Seeded Monte Carlo of the detector array.
    HeraldMc,
    /// Stop-band invariance and negative control.
    Stopband,
    /// Herald, swap into the readout mode, read out.
    Tomography,
}

impl From<Command> for ExperimentName {
    fn from(c: Command) -> Self {
        match c {
            Command::Fig3 => ExperimentName::Fig3,
            Command::OracleCheck => ExperimentName::OracleCheck,
            Command::GlauberCheck => ExperimentName::GlauberCheck,
            Command::HeraldMc => ExperimentName::HeraldMc,
            Command::Stopband => ExperimentName::Stopband,
            Command::Tomography => ExperimentName::Tomography,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();

    let mut spec = ExperimentSpec::new(cli.experiment.into(), &cli.out).with_seed(cli.seed);
    spec.config = cli.config;
    for text in &cli.set {
        match parse_override(text) {
            Ok(kv) => spec.overrides.push(kv),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }

    match run_experiment(&spec) {
        Ok(manifest) => {
            for c in &manifest.checks {
                println!(
                    "{} {}: {:e} (threshold {:e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            println!("wrote {}", spec.out_dir.join("manifest.json").display());
            if manifest.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
