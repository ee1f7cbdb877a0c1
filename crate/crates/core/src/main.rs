use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mapwave::runner::config::{ModelKind, ScenarioConfig, BUILTINS};
use mapwave::runner::{self, selftest};
use mapwave::{Error, Result};

#[derive(Parser)]
#[command(name = "mapwave", version, about = "Mapped hard-constrained PINNs for exterior Helmholtz problems")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "MAPWAVE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a scenario and evaluate it against its oracle.
    Run(ScenarioArgs),
    /// Run a scenario once per wavenumber and write summary.csv.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated wavenumbers.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        ks: Vec<f64>,
    },
    /// Re-evaluate a saved checkpoint without training.
    Evaluate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Evaluate the reference oracle alone on the test grid.
    Oracle(ScenarioArgs),
    /// Run the fast invariant checks.
    Selftest,
    /// List the builtin scenarios.
    List,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Builtin scenario name.
    #[arg(long)]
    scenario: Option<String>,
    /// TOML config file; may name a builtin scenario and override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Collocation points.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    adam_iters: Option<usize>,
    #[arg(long)]
    lbfgs_iters: Option<usize>,
    /// Write heatmap.ppm of the predicted real part.
    #[arg(long)]
    heatmap: bool,
    /// Record wall time in metrics.json.
    #[arg(long)]
    timing: bool,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut c = match (&self.config, &self.scenario) {
            (Some(path), name) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("malformed config: {e}")))?;
                match (table.contains_key("scenario"), name) {
                    (false, Some(n)) => ScenarioConfig::from_toml_str(&format!("scenario = {}\n{text}", toml::Value::String(n.clone())))?,
                    _ => ScenarioConfig::from_toml_str(&text)?,
                }
            }
            (None, Some(name)) => ScenarioConfig::builtin(name)?,
            (None, None) => return Err(Error::Config("give --scenario or --config".into())),
        };
        if let Some(dir) = &self.out {
            c.output.dir = dir.clone();
        }
        if let Some(k) = self.k {
            c.physics.k = k;
        }
        if let Some(seed) = self.seed {
            c.set_seed(seed);
        }
        if let Some(n) = self.points {
            c.sampling.points = n;
        }
        if let Some(n) = self.adam_iters {
            c.schedule.adam_iters = n;
        }
        if let Some(n) = self.lbfgs_iters {
            c.schedule.lbfgs_iters = n;
        }
        c.output.heatmap |= self.heatmap;
        c.output.timing |= self.timing;
        c.validate()?;
        Ok(c)
    }
}

/// What a verb produced: `Ok(true)` for success, `Ok(false)` for a numerical failure outcome.
fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run(args) => {
            let c = args.resolve()?;
            let outcome = runner::run_scenario(&c)?;
            runner::write_artifacts(&outcome, &c, &c.output.dir)?;
            report(&c, &outcome, &c.output.dir);
            let failed = outcome.diverged();
            if failed {
                eprintln!("training diverged");
            }
            Ok(!failed || c.model == ModelKind::Baseline)
        }
        Command::Sweep { scenario, ks } => {
            let c = scenario.resolve()?;
            let rows = runner::sweep(&c, &ks, &c.output.dir)?;
            for r in &rows {
                let rel = r.metrics.as_ref().map_or(f64::NAN, |m| m.rel_l2_complex);
                println!("k={:<6} {:<10} rel_l2={rel:.3e} ({:.1} s)", r.k, r.status, r.seconds);
            }
            println!("summary: {}", c.output.dir.join("summary.csv").display());
            Ok(rows.iter().all(|r| r.ok()) || c.model == ModelKind::Baseline)
        }
        Command::Evaluate { scenario, checkpoint } => {
            let c = scenario.resolve()?;
            let outcome = runner::evaluate_checkpoint(&c, &checkpoint)?;
            let dir = &c.output.dir;
            std::fs::create_dir_all(dir)?;
            outcome.field.save_csv(&dir.join("field.csv"))?;
            std::fs::write(dir.join("metrics.json"), outcome.metrics.to_json()?)?;
            if c.output.heatmap {
                runner::write_field_heatmap(&runner::Scenario::build(&c)?, &outcome.net, &dir.join("heatmap.ppm"))?;
            }
            report(&c, &outcome, dir);
            Ok(true)
        }
        Command::Oracle(args) => {
            let c = args.resolve()?;
            let (table, summary) = runner::oracle_table(&c)?;
            std::fs::create_dir_all(&c.output.dir)?;
            let path = c.output.dir.join("oracle.csv");
            table.save_csv(&path)?;
            println!("{summary}");
            println!("{} points written to {}", table.points.len(), path.display());
            Ok(true)
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                println!("{} {:<24} {:.3e} (limit {:.0e})", if c.passed() { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
            }
            Ok(checks.iter().all(|c| c.passed()))
        }
        Command::List => {
            for name in BUILTINS {
                println!("{name}");
            }
            Ok(true)
        }
    }
}

fn report(c: &ScenarioConfig, outcome: &runner::RunOutcome, dir: &Path) {
    let m = &outcome.metrics;
    println!("scenario {} ({:?}), k = {}", c.scenario, c.model, m.k);
    println!("oracle: {}", outcome.oracle_summary);
    println!("rel_l2 complex {:.3e}, real {:.3e}, max abs err {:.3e}", m.rel_l2_complex, m.rel_l2_real, m.max_abs_err);
    println!("final loss {:.3e} after {} Adam + {} L-BFGS iterations in {:.1} s", m.final_loss, m.adam_iters, m.lbfgs_iters, outcome.seconds);
    if let Some(n) = outcome.corner_excluded {
        println!("rel_l2 away from corners {:.3e}", n.rel_l2_complex);
    }
    if let Some(s) = &outcome.surface {
        println!("surface amplitude rel_l2 {:.3e}, asymmetry {:.3e}", s.amplitude_error(), s.asymmetry());
    }
    println!("artifacts in {}", dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
