use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irris_core::oracle::predict_complexity;
use irris_harness::experiment::{run_experiment, write_outputs, ExperimentOutcome};
use irris_harness::presets::preset_text;
use irris_harness::{Baseline, ExperimentSpec, Result};

#[derive(Parser)]
#[command(name = "irris", version, about = "Irregular RIS sum-rate and power experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run {
        spec: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a named figure preset (fig4 .. fig9).
    Preset {
        name: String,
        /// Print the preset's spec text and exit.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        flags: Flags,
    },
    /// Compare the joint search against exhaustive search on every drop.
    Oracle {
        spec: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print exhaustive and proposed search counts for every sweep point.
    Complexity { spec: PathBuf },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    /// Output directory; defaults to `results/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Write zero seconds so repeated runs give identical CSVs.
    #[arg(long)]
    no_timing: bool,
}

impl Flags {
    fn apply(&self, spec: &mut ExperimentSpec) -> Result<()> {
        if let Some(s) = self.seed {
            spec.scenario.seed = s;
        }
        if let Some(d) = self.drops {
            spec.drops = d;
        }
        if let Some(o) = &self.out {
            spec.output = Some(o.clone());
        }
        if let Some(w) = self.workers {
            spec.workers = w;
        }
        if self.no_timing {
            spec.timing = false;
        }
        spec.validate()
    }
}

fn print_summary(outcome: &ExperimentOutcome) {
    let spec = &outcome.spec;
    let power = spec.sweep.minimizes_power();
    println!(
        "{:>10}  {:<15} {:>12} {:>10} {:>9} {:>12}",
        spec.sweep.axis(),
        "baseline",
        if power { "P_T (W)" } else { "WSR" },
        "stderr",
        "seconds",
        "evals/drop"
    );
    for r in &outcome.summary {
        let (m, se) = if power { (r.mean_p_tx, r.stderr_p_tx) } else { (r.mean_wsr, r.stderr_wsr) };
        println!(
            "{:>10}  {:<15} {:>12.5e} {:>10.3e} {:>9.2} {:>12.0}",
            r.sweep,
            r.baseline.name(),
            m,
            se,
            r.seconds,
            r.mean_evals
        );
    }
    for c in &outcome.comparisons {
        let p = c.test.map_or(f64::NAN, |t| t.p_value);
        println!(
            "{} = {}: {} vs {} on {}: ratio {:.4}, one-sided p = {:.3e}",
            spec.sweep.axis(),
            c.sweep,
            c.better,
            c.worse,
            c.metric,
            c.ratio_of_means,
            p
        );
    }
}

fn execute(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let outcome = run_experiment(spec)?;
    let dir = spec
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(&spec.name));
    let written = write_outputs(&outcome, &dir)?;
    print_summary(&outcome);
    eprintln!("wrote {} files under {}", written.len(), dir.display());
    Ok(outcome)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec, flags } => {
            let mut spec = ExperimentSpec::from_file(&spec)?;
            flags.apply(&mut spec)?;
            execute(&spec)?;
        }
        Command::Preset { name, print, flags } => {
            let text = preset_text(&name)?;
            if print {
                print!("{text}");
                return Ok(());
            }
            let mut spec = ExperimentSpec::parse(&text)?;
            flags.apply(&mut spec)?;
            execute(&spec)?;
        }
        Command::Oracle { spec, flags } => {
            let mut spec = ExperimentSpec::from_file(&spec)?;
            spec.baselines = vec![Baseline::IrregularNece, Baseline::Exhaustive];
            flags.apply(&mut spec)?;
            let outcome = execute(&spec)?;
            let mut worst = f64::INFINITY;
            for pair in outcome.rows.chunks(2) {
                let (joint, exact) = (&pair[0], &pair[1]);
                let ratio = if exact.wsr > 0.0 { joint.wsr / exact.wsr } else { 1.0 };
                worst = worst.min(ratio);
                println!("{} = {} drop {}: joint / exhaustive = {ratio:.6}", spec.sweep.axis(), joint.sweep, joint.drop);
            }
            println!("worst ratio {worst:.6}");
        }
        Command::Complexity { spec } => {
            let spec = ExperimentSpec::from_file(&spec)?;
            for i in 0..spec.sweep.len() {
                let cfg = spec.config_at(i);
                let c = predict_complexity(&cfg);
                println!(
                    "{} = {}: N = {}, N_s = {}, exhaustive = {}, proposed = {}",
                    spec.sweep.axis(),
                    spec.sweep.label(i),
                    cfg.elements,
                    cfg.grid_points,
                    c.exhaustive,
                    c.proposed
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
