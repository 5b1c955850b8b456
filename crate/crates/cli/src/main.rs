use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use wigvol_cli::config::{Config, Job, Overrides};
use wigvol_cli::error::{CliError, Result};
use wigvol_cli::{init_threads, plot, sweep, verify};
use wigvol_core::closedform::{default_mask, ClosedFormCase, Shape};
use wigvol_core::negativity::{negative_volume, negative_volume_masked, Mask};

#[derive(Parser)]
#[command(name = "wigvol", version, about = "Regularized Wigner fields of operator sets and their negative volume")]
struct Cli {
    /// worker threads (default: all cores)
    #[arg(long, global = true, env = "WIGVOL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    /// noise parameter(s); one value is broadcast to every operator
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// grid points per axis
    #[arg(long)]
    count: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::load(&self.config)?;
        cfg.apply(&Overrides { epsilon: self.epsilon, lambda: self.lambda.clone(), count: self.count });
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Closedform,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one field and write it as CSV (a1..an,w) plus <out>.meta.json
    Wigner {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Negative volume across a parameter sweep
    Sweep {
        #[command(flatten)]
        common: Common,
        /// CSV destination (default stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the self-check suite; one JSON line per check
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
        /// only checks whose name contains this
        #[arg(long)]
        checks: Option<String>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// gnuplot script from a sweep CSV
    Plot {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// logarithmic y axis
        #[arg(long)]
        log: bool,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn wigner(common: &Common, out: &Path) -> Result<()> {
    let cfg = common.load()?;
    let docs = cfg.operator_docs()?;
    if docs.len() != 1 {
        return Err(CliError::Config(format!("operators: wigner takes one set, got {}", docs.len())));
    }
    let job = Job::resolve(&cfg, &docs[0], cfg.epsilon())?;
    let field = job.field()?;
    let mut w = create(out)?;
    field.write_csv(&mut w)?;
    w.flush()?;

    let case = ClosedFormCase::new(&job.set).ok().filter(|c| c.shape() == Shape::Disk && job.set.coords().is_some());
    let (mask_policy, neg) = match case {
        Some(c) => {
            let m = Mask::singular_shell(&c, &job.grid, default_mask(cfg.epsilon()))?;
            (m.policy.clone(), negative_volume_masked(&field, &m)?)
        }
        None => ("none".to_string(), negative_volume(&field)),
    };
    let meta = json!({
        "family": job.doc.family,
        "params": job.doc.params,
        "state": job.rho.bloch_vector(),
        "epsilon": cfg.epsilon(),
        "grid": job.grid.describe(),
        "axes": job.grid.axes(),
        "kernel": job.reg.describe(),
        "cutoff": field.cutoff(),
        "mask": mask_policy,
        "negative_volume": neg,
        "integral": field.integral(),
        "engine": field.engine().name(),
        "imag_ratio": field.imag_ratio(),
    });
    let mut side = out.as_os_str().to_owned();
    side.push(".meta.json");
    std::fs::write(PathBuf::from(side), serde_json::to_string_pretty(&meta).expect("plain data") + "\n")?;
    eprintln!("{} points, min {:.6e}, max {:.6e}", field.values().len(), field.min(), field.max());
    Ok(())
}

fn run_sweep(common: &Common, out: Option<&Path>) -> Result<()> {
    let cfg = common.load()?;
    let rows = sweep::run(&cfg)?;
    match out {
        Some(p) => {
            let mut w = create(p)?;
            sweep::write_csv(&rows, &mut w)?;
            w.flush()?;
        }
        None => sweep::write_csv(&rows, std::io::stdout().lock())?,
    }
    for line in sweep::monotone_summary(&rows) {
        eprintln!("{line}");
    }
    Ok(())
}

fn run_verify(level: LevelArg, checks: Option<&str>, fault: Option<FaultArg>) -> Result<()> {
    let level = match level {
        LevelArg::Quick => verify::Level::Quick,
        LevelArg::Full => verify::Level::Full,
    };
    let fault = match fault {
        Some(FaultArg::Closedform) => verify::Fault::ClosedForm,
        None => verify::Fault::None,
    };
    let mut stdout = std::io::stdout().lock();
    let results = verify::run(level, checks, fault, |r| {
        let _ = writeln!(stdout, "{}", r.json());
    })?;
    let failed = results.iter().filter(|r| !r.passed).count();
    eprintln!("{} checks, {failed} failed", results.len());
    if failed > 0 {
        return Err(CliError::VerifyFailed(failed));
    }
    Ok(())
}

fn run_plot(input: &Path, out: Option<&Path>, log: bool) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    let s = plot::script(&text, log)?;
    match out {
        Some(p) => std::fs::write(p, s)?,
        None => print!("{s}"),
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let r = match &cli.cmd {
        Cmd::Wigner { common, out } => wigner(common, out),
        Cmd::Sweep { common, out } => run_sweep(common, out.as_deref()),
        Cmd::Verify { level, checks, inject_fault } => run_verify(*level, checks.as_deref(), *inject_fault),
        Cmd::Plot { input, out, log } => run_plot(input, out.as_deref(), *log),
    };
    if let Err(e) = r {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
