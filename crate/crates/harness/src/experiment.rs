//! Monte Carlo sweeps over paired drops.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use irris_core::ats::ats_optimize;
use irris_core::channel::draw_drop;
use irris_core::model::{PhaseConfig, TopologyMask};
use irris_core::nece::{Nece, PhaseOptimizer};
use irris_core::oracle::exhaustive_search;
use irris_core::{EvaluationResult, Objective, SearchContext, StreamKey, SystemConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::spec::{Baseline, ExperimentSpec};
use crate::sr::SuccessiveRefinement;
use crate::stats::{mean, paired_t_test, std_err, PairedTest};
use crate::topology::{export_topology, write_topology};

pub const CSV_HEADER: &str = "sweep,baseline,drop,wsr,p_tx,seconds,evals";

/// One baseline on one drop at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct DropRow {
    pub sweep_index: usize,
    pub sweep: f64,
    pub baseline: Baseline,
    pub drop: u64,
    pub wsr: f64,
    pub p_tx: f64,
    pub seconds: f64,
    pub evals: u64,
    pub sinr: Vec<f64>,
    pub mask: TopologyMask,
    pub phase: PhaseConfig,
}

/// Aggregate over drops for one (sweep point, baseline).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep: f64,
    pub baseline: Baseline,
    pub drops: usize,
    pub mean_wsr: f64,
    pub stderr_wsr: f64,
    /// Over feasible drops only.
    pub mean_p_tx: f64,
    pub stderr_p_tx: f64,
    pub infeasible: usize,
    pub seconds: f64,
    pub mean_evals: f64,
}

/// Paired comparison `better` vs `worse` at one sweep point; for power
/// minimization the test is on `worse.p_tx - better.p_tx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub sweep: f64,
    pub better: Baseline,
    pub worse: Baseline,
    pub metric: &'static str,
    pub ratio_of_means: f64,
    pub test: Option<PairedTest>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub spec: ExperimentSpec,
    pub rows: Vec<DropRow>,
    pub summary: Vec<ResultRow>,
    pub comparisons: Vec<Comparison>,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    name: &'a str,
    axis: &'static str,
    seed: u64,
    drops: usize,
    objective: &'static str,
    results: &'a [ResultRow],
    comparisons: &'a [Comparison],
}

struct Solved {
    mask: TopologyMask,
    phase: PhaseConfig,
    evaluation: EvaluationResult,
}

fn solve(
    spec: &ExperimentSpec,
    cfg: &SystemConfig,
    ctx: &SearchContext<'_>,
    baseline: Baseline,
    key: StreamKey,
) -> Result<Solved> {
    let nece = Nece::new(cfg.nece.clone());
    let sr = SuccessiveRefinement::default();
    let regular = TopologyMask::leading(cfg.grid_points, cfg.elements);
    let fixed = |opt: &dyn PhaseOptimizer| -> Result<Solved> {
        let sol = opt.optimize(ctx, &regular, key)?;
        let (_, evaluation) = ctx.evaluate(&regular, &sol.phase)?;
        Ok(Solved {
            mask: regular.clone(),
            phase: sol.phase,
            evaluation,
        })
    };
    match baseline {
        Baseline::RegularNece => fixed(&nece),
        Baseline::RegularSr => fixed(&sr),
        Baseline::IrregularNece | Baseline::IrregularSr => {
            let screening = cfg.ats.screening.clone().map(Nece::new);
            let (inner, screen): (&dyn PhaseOptimizer, Option<&dyn PhaseOptimizer>) = match baseline {
                Baseline::IrregularNece => (&nece, screening.as_ref().map(|s| s as &dyn PhaseOptimizer)),
                _ => (&sr, None),
            };
            let r = ats_optimize(ctx, inner, screen, key)?;
            Ok(Solved {
                mask: r.mask,
                phase: r.phase,
                evaluation: r.evaluation,
            })
        }
        Baseline::Exhaustive => {
            let r = exhaustive_search(ctx, spec.oracle_cap)?;
            Ok(Solved {
                mask: r.mask,
                phase: r.phase,
                evaluation: r.evaluation,
            })
        }
    }
}

/// Every baseline of the spec on one drop; all share the drop's channels.
pub fn run_drop(spec: &ExperimentSpec, sweep_index: usize, drop: u64) -> Result<Vec<DropRow>> {
    let cfg = spec.config_at(sweep_index);
    let (_, channels) = draw_drop(&cfg, drop)?;
    let objective = match spec.targets_at(sweep_index) {
        Some(t) => Objective::min_power(&cfg, &t)?,
        None => Objective::sum_rate(&cfg),
    };
    let task_key = StreamKey::root(cfg.seed)
        .tag("search")
        .index(sweep_index as u64)
        .index(drop);
    let mut rows = Vec::with_capacity(spec.baselines.len());
    for &baseline in &spec.baselines {
        let ctx = SearchContext::new(&cfg, &channels, objective.clone())?;
        let start = Instant::now();
        let solved = solve(spec, &cfg, &ctx, baseline, task_key.tag(baseline.name()))?;
        let seconds = if spec.timing { start.elapsed().as_secs_f64() } else { 0.0 };
        rows.push(DropRow {
            sweep_index,
            sweep: spec.sweep.value(sweep_index),
            baseline,
            drop,
            wsr: solved.evaluation.wsr,
            p_tx: solved.evaluation.p_tx,
            seconds,
            evals: ctx.evaluations(),
            sinr: solved.evaluation.sinr,
            mask: solved.mask,
            phase: solved.phase,
        });
    }
    Ok(rows)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e)))?;
    let tasks: Vec<(usize, u64)> = (0..spec.sweep.len())
        .flat_map(|i| (0..spec.drops as u64).map(move |d| (i, d)))
        .collect();
    let nested: Vec<Vec<DropRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, d)| run_drop(spec, i, d))
            .collect::<Result<_>>()
    })?;
    let rows: Vec<DropRow> = nested.into_iter().flatten().collect();
    let summary = summarize(spec, &rows);
    let comparisons = compare(spec, &rows);
    Ok(ExperimentOutcome {
        spec: spec.clone(),
        rows,
        summary,
        comparisons,
    })
}

fn select(rows: &[DropRow], i: usize, b: Baseline) -> impl Iterator<Item = &DropRow> {
    rows.iter().filter(move |r| r.sweep_index == i && r.baseline == b)
}

pub fn summarize(spec: &ExperimentSpec, rows: &[DropRow]) -> Vec<ResultRow> {
    let mut out = Vec::new();
    for i in 0..spec.sweep.len() {
        for &b in &spec.baselines {
            let wsr: Vec<f64> = select(rows, i, b).map(|r| r.wsr).collect();
            let p: Vec<f64> = select(rows, i, b).map(|r| r.p_tx).filter(|p| p.is_finite()).collect();
            let evals: Vec<f64> = select(rows, i, b).map(|r| r.evals as f64).collect();
            out.push(ResultRow {
                sweep: spec.sweep.value(i),
                baseline: b,
                drops: wsr.len(),
                mean_wsr: mean(&wsr),
                stderr_wsr: std_err(&wsr),
                mean_p_tx: mean(&p),
                stderr_p_tx: std_err(&p),
                infeasible: wsr.len() - p.len(),
                seconds: select(rows, i, b).map(|r| r.seconds).sum(),
                mean_evals: mean(&evals),
            });
        }
    }
    out
}

const PAIRS: [(Baseline, Baseline); 4] = [
    (Baseline::IrregularNece, Baseline::RegularNece),
    (Baseline::IrregularSr, Baseline::RegularSr),
    (Baseline::RegularNece, Baseline::RegularSr),
    (Baseline::IrregularNece, Baseline::IrregularSr),
];

pub fn compare(spec: &ExperimentSpec, rows: &[DropRow]) -> Vec<Comparison> {
    let power = spec.sweep.minimizes_power();
    let mut out = Vec::new();
    for i in 0..spec.sweep.len() {
        for (better, worse) in PAIRS {
            if !spec.baselines.contains(&better) || !spec.baselines.contains(&worse) {
                continue;
            }
            let a: Vec<&DropRow> = select(rows, i, better).collect();
            let b: Vec<&DropRow> = select(rows, i, worse).collect();
            let (x, y): (Vec<f64>, Vec<f64>) = if power {
                a.iter()
                    .zip(&b)
                    .filter(|(p, q)| p.p_tx.is_finite() && q.p_tx.is_finite())
                    .map(|(p, q)| (q.p_tx, p.p_tx))
                    .unzip()
            } else {
                a.iter().zip(&b).map(|(p, q)| (p.wsr, q.wsr)).unzip()
            };
            let ratio = if power { mean(&y) / mean(&x) } else { mean(&x) / mean(&y) };
            out.push(Comparison {
                sweep: spec.sweep.value(i),
                better,
                worse,
                metric: if power { "p_tx" } else { "wsr" },
                ratio_of_means: ratio,
                test: paired_t_test(&x, &y),
            });
        }
    }
    out
}

/// Raw per-drop rows, ordered by sweep point, drop and baseline.
pub fn results_csv(rows: &[DropRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.sweep, r.baseline, r.drop, r.wsr, r.p_tx, r.seconds, r.evals
        );
    }
    s
}

pub fn summary_json(outcome: &ExperimentOutcome) -> Result<String> {
    let spec = &outcome.spec;
    let file = SummaryFile {
        name: &spec.name,
        axis: spec.sweep.axis(),
        seed: spec.scenario.seed,
        drops: spec.drops,
        objective: if spec.sweep.minimizes_power() { "min-power" } else { "sum-rate" },
        results: &outcome.summary,
        comparisons: &outcome.comparisons,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

/// Writes `results.csv`, `summary.json` and, when enabled, topology bitmaps.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv = dir.join("results.csv");
    fs::write(&csv, results_csv(&outcome.rows))?;
    let json = dir.join("summary.json");
    fs::write(&json, summary_json(outcome)?)?;
    let mut written = vec![csv, json];
    let spec = &outcome.spec;
    if spec.topologies {
        let tdir = dir.join("topologies");
        for r in outcome.rows.iter().filter(|r| r.baseline.is_irregular()) {
            let (rows, cols) = spec.config_at(r.sweep_index).grid_layout();
            let bitmap = export_topology(&r.mask, rows, cols)?;
            let stem = format!("{}-{}-drop{}-{}", spec.sweep.axis(), r.sweep, r.drop, r.baseline);
            written.push(write_topology(&tdir, &stem, &bitmap)?);
        }
    }
    Ok(written)
}
