//! The four subcommands. Each writes its CSV files under the experiment's
//! output directory and returns a console summary.
//!
//! Arm indices in CSV files are 1-based.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use tcb_core::complexity::{optimal_allocation, DEFAULT_TOL};
use tcb_core::harness::{
    log_checkpoints, run_trials, summarize, sweep_beta, trace_allocation_mean, TrialResult, CHECKPOINTS_PER_DECADE,
};
use tcb_core::samplers::SamplerConfig;

use crate::config::Experiment;
use crate::table::{full, opt_full, short, Table, NA};

pub const SIMULATE_HEADER: [&str; 9] = [
    "algorithm", "beta", "delta", "trial", "seed", "tau", "decision", "correct", "error",
];
pub const SIMULATE_SUMMARY_HEADER: [&str; 6] = ["algorithm", "beta", "delta", "mean_tau", "stderr", "error_rate"];
pub const TRACE_HEADER: [&str; 4] = ["algorithm", "t", "max_deviation", "mle_error"];
pub const SWEEP_HEADER: [&str; 5] = ["algorithm", "beta", "mean_tau", "stderr_tau", "error_rate"];

/// `instance_id, gamma, w_1..w_k, residual`.
pub fn complexity_header(k: usize) -> Vec<String> {
    let mut h = vec!["instance_id".to_string(), "gamma".to_string()];
    h.extend((1..=k).map(|i| format!("w_{i}")));
    h.push("residual".to_string());
    h
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub console: String,
}

impl Report {
    fn write(&mut self, exp: &Experiment, name: &str, table: &Table) -> Result<()> {
        let path = exp.out.join(name);
        table.write(&path)?;
        self.files.push(path);
        Ok(())
    }
}

fn beta_cell(cfg: &SamplerConfig) -> String {
    opt_full(cfg.beta)
}

fn label(cfg: &SamplerConfig) -> String {
    match cfg.beta {
        Some(b) => format!("{} (beta={})", cfg.kind, short(b)),
        None => cfg.kind.to_string(),
    }
}

/// Optimal allocation for every instance. Instances with fewer arms than the
/// widest one get `NA` in the unused weight columns.
pub fn cmd_complexity(exp: &Experiment) -> Result<Report> {
    let width = exp.instances.iter().map(|(_, i)| i.n_arms()).max().unwrap_or(0);
    let mut table = Table::new(complexity_header(width));
    let mut report = Report::default();
    for (id, inst) in &exp.instances {
        let sol = optimal_allocation(inst, DEFAULT_TOL)?;
        let w = sol.allocation.weights();
        let mut row = vec![id.clone(), full(sol.value)];
        row.extend((0..width).map(|i| w.get(i).map_or_else(|| NA.to_string(), |&x| full(x))));
        row.push(full(sol.balance_residual()));
        table.push(row);
        let ws: Vec<String> = w.iter().map(|&x| short(x)).collect();
        writeln!(report.console, "{id}: gamma {} w [{}]", short(sol.value), ws.join(", "))?;
    }
    report.write(exp, "complexity.csv", &table)?;
    Ok(report)
}

fn trial_row(cfg: &SamplerConfig, r: &TrialResult) -> Vec<String> {
    vec![
        cfg.kind.to_string(),
        beta_cell(cfg),
        full(cfg.delta),
        r.trial.to_string(),
        r.seed.to_string(),
        r.stopping_time.to_string(),
        r.decision.map_or_else(|| NA.to_string(), |d| (d + 1).to_string()),
        u8::from(r.correct).to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

/// Independent trials of each algorithm on each instance.
pub fn cmd_simulate(exp: &Experiment) -> Result<Report> {
    exp.require_algorithms()?;
    let mut report = Report::default();
    for (id, inst) in &exp.instances {
        let mut trials = Table::new(SIMULATE_HEADER);
        let mut summary = Table::new(SIMULATE_SUMMARY_HEADER);
        for algo in &exp.algorithms {
            let cfg = &algo.config()?;
            let results = run_trials(inst, cfg, exp.trials, exp.seed, exp.parallelism)?;
            if results.iter().all(|r| r.error.is_some()) {
                bail!(
                    "{id}/{}: every trial failed: {}",
                    label(cfg),
                    results[0].error.as_deref().unwrap_or_default()
                );
            }
            for r in &results {
                trials.push(trial_row(cfg, r));
            }
            let s = summarize(&results);
            summary.push(vec![
                cfg.kind.to_string(),
                beta_cell(cfg),
                full(cfg.delta),
                full(s.mean_tau),
                full(s.stderr_tau),
                full(s.error_rate),
            ]);
            writeln!(
                report.console,
                "{id} {}: mean tau {} +- {}, error rate {}, censored {}, failed {}",
                label(cfg),
                short(s.mean_tau),
                short(s.stderr_tau),
                short(s.error_rate),
                s.censored,
                s.failed
            )?;
        }
        report.write(exp, &format!("simulate_{id}.csv"), &trials)?;
        report.write(exp, &format!("simulate_{id}_summary.csv"), &summary)?;
    }
    Ok(report)
}

/// Allocation traces with stopping disabled, averaged over `trials` seeds.
pub fn cmd_trace(exp: &Experiment) -> Result<Report> {
    exp.require_algorithms()?;
    let checkpoints = exp
        .checkpoints
        .clone()
        .unwrap_or_else(|| log_checkpoints(exp.horizon, CHECKPOINTS_PER_DECADE));
    let mut report = Report::default();
    for (id, inst) in &exp.instances {
        let mut table = Table::new(TRACE_HEADER);
        for algo in &exp.algorithms {
            let cfg = &algo.config()?;
            let trace =
                trace_allocation_mean(inst, cfg, exp.horizon, &checkpoints, exp.trials, exp.seed, exp.parallelism)?;
            for rec in &trace {
                table.push(vec![
                    cfg.kind.to_string(),
                    rec.t.to_string(),
                    full(rec.max_deviation),
                    full(rec.mle_error),
                ]);
            }
            let last = trace.last().expect("nonempty checkpoints");
            writeln!(
                report.console,
                "{id} {}: t={} max deviation {} mle error {}",
                label(cfg),
                last.t,
                short(last.max_deviation),
                short(last.mle_error)
            )?;
        }
        report.write(exp, &format!("trace_{id}.csv"), &table)?;
    }
    Ok(report)
}

/// Mean stopping time of every top-two algorithm over the β grid; the other
/// algorithms appear once with `beta = NA`.
pub fn cmd_sweep(exp: &Experiment) -> Result<Report> {
    exp.require_algorithms()?;
    if exp.betas.is_empty() {
        bail!("beta grid is empty");
    }
    let mut report = Report::default();
    for (id, inst) in &exp.instances {
        let mut table = Table::new(SWEEP_HEADER);
        for algo in &exp.algorithms {
            if algo.beta.is_some() {
                bail!("algorithm {}: the sweep sets beta from the grid; remove beta", algo.kind);
            }
            let rows = sweep_beta(
                inst,
                &[algo.kind],
                &exp.betas,
                algo.delta,
                algo.alpha,
                exp.trials,
                exp.seed,
                exp.parallelism,
            )?;
            for row in rows {
                let s = row.summary;
                table.push(vec![
                    row.kind.to_string(),
                    opt_full(row.beta),
                    full(s.mean_tau),
                    full(s.stderr_tau),
                    full(s.error_rate),
                ]);
                let b = row.beta.map_or_else(|| NA.to_string(), short);
                writeln!(
                    report.console,
                    "{id} {} beta={b}: mean tau {} +- {}, error rate {}",
                    row.kind,
                    short(s.mean_tau),
                    short(s.stderr_tau),
                    short(s.error_rate)
                )?;
            }
        }
        report.write(exp, &format!("sweep_{id}.csv"), &table)?;
    }
    Ok(report)
}
