//! `hitchin-forge`: runs the configured experiments and writes CSV tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hitchin_core::census::{load_census, save_census, write_census, Census};
use hitchin_core::checks::run_checks;
use hitchin_core::config::ExperimentConfig;
use hitchin_core::experiments::{graft_sweep, pants_entropy, ray_label, ray_path, Setup};
use hitchin_core::thermo::{entropy_estimate, pressure_length};
use hitchin_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "hitchin-forge", version, about = "Length censuses and entropy experiments for grafted Hitchin representations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; `-` writes to standard output. Defaults to the config's
    /// `outputs` entry for the subcommand, then to standard output.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured census word-length bound.
    #[arg(long, global = true)]
    max_word_len: Option<usize>,
    /// Reject a loaded census whose config hash differs from this run's.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
enum Command {
    /// Census of closed geodesics with lengths under every ray point.
    Census,
    /// Entropy fits along the ray grid.
    Entropy {
        /// Reuse a census written by `census` instead of building one.
        #[arg(long)]
        census: Option<PathBuf>,
    },
    /// Entropy, intersections and boundary mass along the ray grid.
    GraftSweep,
    /// Pressure speeds and cumulative length along the grafting ray.
    PressureLength,
    /// Entropy of pairs of pants with growing third boundary.
    PantsEntropy,
    /// The invariant suite.
    Check,
}

impl Command {
    fn key(&self) -> &'static str {
        match self {
            Command::Census => "census",
            Command::Entropy { .. } => "entropy",
            Command::GraftSweep => "graft-sweep",
            Command::PressureLength => "pressure-length",
            Command::PantsEntropy => "pants-entropy",
            Command::Check => "check",
        }
    }
}

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) => EXIT_INVARIANT,
        e if e.is_numeric() => EXIT_NUMERIC,
        Error::InsufficientData(_) | Error::ResourceCap { .. } => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hitchin-forge {}: {e}", cli.command.key());
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.max_word_len {
        cfg.max_word_len = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cli.out.clone().or_else(|| cfg.outputs.get(cli.command.key()).cloned());
    let setup = Setup::new(&cfg)?;
    log::info!("{} with config {}", cli.command.key(), cfg.hash());
    match &cli.command {
        Command::Census => {
            let (census, _) = setup.ray_census(&cfg.ray_grid)?;
            match out.as_deref() {
                None | Some("-") => write_census(&census, &mut io::stdout().lock()),
                Some(p) => save_census(&census, Path::new(p)),
            }
        }
        Command::Entropy { census } => {
            let c = match census {
                Some(p) => load_census(p, cli.strict.then(|| cfg.hash()).as_deref())?,
                None => setup.ray_census(&cfg.ray_grid)?.0,
            };
            emit(out.as_deref(), |w| write_entropy(w, &cfg, &c))
        }
        Command::GraftSweep => {
            let s = graft_sweep(&setup)?;
            emit(out.as_deref(), |w| {
                header(w, &cfg, Some(s.census.r_star()))?;
                let radii: Vec<String> = s.mass_radii.iter().map(|r| format!("{r:.6}")).collect();
                writeln!(w, "# boundary_mass radii: {}", radii.join(";"))?;
                writeln!(w, "t,height,delta,stderr,I,J,boundary_mass")?;
                for r in &s.rows {
                    writeln!(
                        w,
                        "{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12e}",
                        r.t, r.height, r.delta, r.stderr, r.i, r.j, r.boundary_mass
                    )?;
                }
                Ok(())
            })
        }
        Command::PressureLength => {
            let ray = ray_path(&setup)?;
            let pl = pressure_length(&ray.census, &ray.path)?;
            emit(out.as_deref(), |w| {
                header(w, &cfg, Some(ray.census.r_star()))?;
                writeln!(w, "# length {:.12}", pl.length)?;
                writeln!(w, "t,speed,cumulative,upper_bound")?;
                for &(t, speed, cum) in &pl.nodes {
                    writeln!(w, "{t},{speed:.12},{cum:.12},{:.12}", pl.upper_bound)?;
                }
                Ok(())
            })
        }
        Command::PantsEntropy => {
            let rows = pants_entropy(&cfg)?;
            emit(out.as_deref(), |w| {
                header(w, &cfg, None)?;
                writeln!(w, "# gap_product = delta * max(a, b, c), reported against gap_reference = log(2)/4")?;
                writeln!(w, "a,b,c,delta,stderr,r1,k_hat,k_lower,gap_product,gap_reference")?;
                for r in &rows {
                    writeln!(
                        w,
                        "{},{},{},{:.12},{:.12},{:.6},{:.12},{},{:.12},{:.12}",
                        r.a, r.b, r.c, r.delta, r.stderr, r.r1, r.k_hat, r.k_lower, r.gap_product, r.gap_reference
                    )?;
                }
                Ok(())
            })
        }
        Command::Check => {
            let checks = run_checks(&setup)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            emit(out.as_deref(), |w| {
                for c in &checks {
                    writeln!(w, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
                }
                writeln!(w, "{} of {} invariants hold", checks.len() - failed, checks.len())?;
                Ok(())
            })?;
            if failed > 0 {
                return Err(Error::Invariant(format!("{failed} invariants failed")));
            }
            Ok(())
        }
    }
}

fn header(w: &mut dyn Write, cfg: &ExperimentConfig, r_star: Option<f64>) -> io::Result<()> {
    writeln!(w, "# hitchin-forge {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "# config {}", cfg.hash())?;
    match r_star {
        Some(r) => writeln!(w, "# r_star {r:.12}"),
        None => writeln!(w, "# r_star per row (r1)"),
    }
}

fn write_entropy(w: &mut dyn Write, cfg: &ExperimentConfig, c: &Census) -> io::Result<()> {
    header(w, cfg, Some(c.r_star()))?;
    writeln!(w, "label,t,delta,stderr,r0,r1,samples")?;
    for (i, label) in c.labels().iter().enumerate() {
        let t = cfg.ray_grid.iter().find(|&&t| ray_label(t) == *label);
        let t = t.map_or(String::new(), |t| t.to_string());
        match entropy_estimate(c, label) {
            Ok(f) => writeln!(
                w,
                "{label},{t},{:.12},{:.12},{:.6},{:.6},{}",
                f.delta, f.stderr, f.r0, f.r1, f.samples
            )?,
            Err(e) => {
                log::warn!("no entropy for label {i} ({label}): {e}");
                writeln!(w, "{label},{t},,,,,0")?
            }
        }
    }
    Ok(())
}

/// Buffers the table, then writes it to `out` or standard output.
fn emit(out: Option<&str>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    match out {
        None | Some("-") => io::stdout().lock().write_all(&buf)?,
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            f.write_all(&buf)?;
            f.flush()?;
        }
    }
    Ok(())
}
