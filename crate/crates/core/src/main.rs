use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qcmod::lab::{render, write_report, ExperimentConfig, ExperimentId, Lab, ReportFormat, Verdict};
use qcmod::lorentz_ideal::NormConvention;
use qcmod::Error;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(name = "qcmod", version, about = "Quasicentral modulus estimators on self-similar spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a configuration without running it.
    Validate { config: PathBuf },
    /// Run the configured experiments and write a report.
    Run {
        config: PathBuf,
        #[arg(long, value_parser = parse_experiment)]
        experiment: Option<ExperimentId>,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_format)]
        format: Option<ReportFormat>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = parse_convention)]
        convention: Option<NormConvention>,
        #[arg(long)]
        max_dim: Option<usize>,
    },
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_convention(s: &str) -> Result<NormConvention, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Resource(_) => ExitCode::from(EXIT_RESOURCE),
        _ => ExitCode::from(EXIT_CONFIG),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            match ExperimentConfig::load(&config).and_then(Lab::new) {
                Ok(lab) => {
                    let c = lab.config();
                    let ids: Vec<String> = c.experiments.iter().map(|e| e.to_string()).collect();
                    println!(
                        "ok: {} with N={} λ={} p={} experiments [{}]",
                        config.display(),
                        lab.ifs().branches(),
                        lab.ifs().ratio(),
                        lab.ideal_parameter(),
                        ids.join(", ")
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => exit_for(&e),
            }
        }
        Command::Run {
            config,
            experiment,
            out,
            format,
            seed,
            convention,
            max_dim,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            if let Some(id) = experiment {
                cfg.experiments = vec![id];
            }
            if let Some(path) = out {
                cfg.output = Some(path);
            }
            if let Some(f) = format {
                cfg.format = f;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(c) = convention {
                cfg.conventions = vec![c];
            }
            if let Some(d) = max_dim {
                cfg.max_dim = d;
            }
            let report = match Lab::new(cfg.clone()).and_then(|lab| lab.run()) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            for exp in &report.experiments {
                let count = |v: Verdict| exp.rows.iter().filter(|r| r.verdict == v).count();
                eprintln!(
                    "{}: {} pass, {} fail, {} probe, {} other in {:.2?}",
                    exp.id,
                    count(Verdict::Pass),
                    count(Verdict::Fail),
                    count(Verdict::Probe),
                    count(Verdict::Vacuous) + count(Verdict::Skipped),
                    exp.wall_clock
                );
            }
            let written = match &cfg.output {
                Some(path) => write_report(&report, cfg.format, path),
                None => render(&report, cfg.format).map(|text| print!("{text}")),
            };
            if let Err(e) = written {
                return exit_for(&e);
            }
            if report.failed() {
                ExitCode::from(EXIT_FAILED)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
