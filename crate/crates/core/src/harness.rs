//! Monte Carlo harness: independent trials, allocation traces and β sweeps.
//!
//! Trial `k` of a batch draws from `ChaCha8Rng` seeded with
//! `trial_seed(master_seed, k)`, so results depend only on the master seed and
//! never on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::complexity::{optimal_allocation, DEFAULT_TOL};
use crate::error::{BaiError, Result};
use crate::model::BanditInstance;
use crate::samplers::{check_stop, BaiRun, SamplerConfig, SamplerKind};

/// Rounds after which a trial is abandoned and reported as censored.
pub const DEFAULT_TRIAL_CAP: u64 = 10_000_000;

/// Checkpoints per decade in [`log_checkpoints`].
pub const CHECKPOINTS_PER_DECADE: u32 = 20;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Per-trial seed derived from the batch seed and the trial index.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ trial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: u64,
    pub seed: u64,
    /// Samples drawn before stopping (the cap when censored).
    pub stopping_time: u64,
    pub decision: Option<usize>,
    pub correct: bool,
    pub censored: bool,
    pub final_counts: Vec<u64>,
    /// Set when the trial aborted; the other fields are then partial.
    pub error: Option<String>,
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    if parallelism == 0 {
        return Err(BaiError::InvalidConfig("parallelism must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| BaiError::InvalidConfig(format!("thread pool: {e}")))
}

/// Run one trial to stopping or to `cap` rounds.
pub fn run_trial(instance: &BanditInstance, config: &SamplerConfig, trial: u64, seed: u64, cap: u64) -> TrialResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = BaiRun::new(instance, *config);
    let mut error = None;
    let mut decision = None;
    while run.state().t() < cap {
        match run.step(&mut rng) {
            Ok(d) if d.stopped => {
                decision = d.terminal_decision;
                break;
            }
            Ok(_) => {}
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
    }
    // A stop can only be detected at the start of a round.
    if decision.is_none() && error.is_none() {
        match check_stop(run.state(), config) {
            Ok(c) => decision = c.terminal_decision,
            Err(e) => error = Some(e.to_string()),
        }
    }
    let state = run.state();
    TrialResult {
        trial,
        seed,
        stopping_time: state.t(),
        decision,
        correct: decision == Some(instance.best_arm()),
        censored: decision.is_none() && error.is_none(),
        final_counts: state.counts(),
        error,
    }
}

/// `n_trials` independent runs on `parallelism` threads, in trial order.
pub fn run_trials(
    instance: &BanditInstance,
    config: &SamplerConfig,
    n_trials: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<Vec<TrialResult>> {
    run_trials_capped(instance, config, n_trials, master_seed, parallelism, DEFAULT_TRIAL_CAP)
}

pub fn run_trials_capped(
    instance: &BanditInstance,
    config: &SamplerConfig,
    n_trials: u64,
    master_seed: u64,
    parallelism: usize,
    cap: u64,
) -> Result<Vec<TrialResult>> {
    let pool = pool(parallelism)?;
    Ok(pool.install(|| {
        (0..n_trials)
            .into_par_iter()
            .map(|k| run_trial(instance, config, k, trial_seed(master_seed, k), cap))
            .collect()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub trials: usize,
    /// Trials that aborted with an error; excluded from the statistics below.
    pub failed: usize,
    pub censored: usize,
    pub mean_tau: f64,
    pub stderr_tau: f64,
    /// Wrong or missing decisions among the non-failed trials.
    pub errors: usize,
    pub error_rate: f64,
}

pub fn summarize(results: &[TrialResult]) -> Summary {
    let ok: Vec<&TrialResult> = results.iter().filter(|r| r.error.is_none()).collect();
    let n = ok.len();
    let taus: Vec<f64> = ok.iter().map(|r| r.stopping_time as f64).collect();
    let mean = if n > 0 { taus.iter().sum::<f64>() / n as f64 } else { f64::NAN };
    let stderr = if n > 1 {
        let var = taus.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        f64::NAN
    };
    let errors = ok.iter().filter(|r| !r.correct).count();
    Summary {
        trials: results.len(),
        failed: results.len() - n,
        censored: ok.iter().filter(|r| r.censored).count(),
        mean_tau: mean,
        stderr_tau: stderr,
        errors,
        error_rate: if n > 0 { errors as f64 / n as f64 } else { f64::NAN },
    }
}

/// `P(X >= errors)` for `X ~ Binomial(n, p)`.
pub fn binomial_upper_tail(errors: u64, n: u64, p: f64) -> f64 {
    if errors == 0 {
        return 1.0;
    }
    Binomial::new(p, n).expect("valid binomial").sf(errors - 1)
}

/// One-sided test of `error rate <= delta`; passes unless the observed error
/// count is significant at level `1 - confidence`.
pub fn error_rate_consistent(errors: u64, n: u64, delta: f64, confidence: f64) -> bool {
    binomial_upper_tail(errors, n, delta) >= 1.0 - confidence
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    /// `max_i |T(i)/t - w_i(ν)|`.
    pub max_deviation: f64,
    /// `max_i |μ̂_i - μ_i|`.
    pub mle_error: f64,
}

/// Roughly log-spaced rounds `10^(j / per_decade)` from 10 up to `horizon`,
/// with `horizon` itself always included.
pub fn log_checkpoints(horizon: u64, per_decade: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let mut j = per_decade;
    loop {
        let t = 10f64.powf(j as f64 / per_decade as f64).round() as u64;
        if t >= horizon {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        j += 1;
    }
    out.push(horizon);
    out
}

fn check_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<()> {
    if checkpoints.is_empty() || checkpoints[0] == 0 {
        return Err(BaiError::InvalidArgument("checkpoints must be nonempty and positive".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BaiError::InvalidArgument("checkpoints must be strictly increasing".into()));
    }
    if *checkpoints.last().expect("nonempty") > horizon {
        return Err(BaiError::InvalidArgument(format!(
            "checkpoint {} exceeds horizon {horizon}",
            checkpoints.last().expect("nonempty")
        )));
    }
    Ok(())
}

/// Distance of the empirical proportions from the optimal allocation along one
/// run with stopping disabled.
pub fn trace_allocation(
    instance: &BanditInstance,
    config: &SamplerConfig,
    horizon: u64,
    checkpoints: &[u64],
    seed: u64,
) -> Result<Vec<TraceRecord>> {
    check_checkpoints(checkpoints, horizon)?;
    let target = optimal_allocation(instance, DEFAULT_TOL)?.allocation;
    trace_against(instance, config, target.weights(), checkpoints, seed)
}

fn trace_against(
    instance: &BanditInstance,
    config: &SamplerConfig,
    target: &[f64],
    checkpoints: &[u64],
    seed: u64,
) -> Result<Vec<TraceRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = BaiRun::new(instance, *config).without_stopping();
    let mut out = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        while run.state().t() < cp {
            run.step(&mut rng)?;
        }
        let s = run.state();
        let t = s.t() as f64;
        let max_deviation = s
            .counts()
            .iter()
            .zip(target)
            .map(|(&c, &w)| (c as f64 / t - w).abs())
            .fold(0.0, f64::max);
        let mle_error = (0..s.n_arms())
            .map(|i| s.mle(i).map_or(f64::INFINITY, |m| (m - instance.means()[i]).abs()))
            .fold(0.0, f64::max);
        out.push(TraceRecord {
            t: cp,
            max_deviation,
            mle_error,
        });
    }
    Ok(out)
}

/// Pointwise mean of [`trace_allocation`] over `n_seeds` runs.
pub fn trace_allocation_mean(
    instance: &BanditInstance,
    config: &SamplerConfig,
    horizon: u64,
    checkpoints: &[u64],
    n_seeds: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<Vec<TraceRecord>> {
    check_checkpoints(checkpoints, horizon)?;
    if n_seeds == 0 {
        return Err(BaiError::InvalidArgument("need at least one seed".into()));
    }
    let target = optimal_allocation(instance, DEFAULT_TOL)?.allocation;
    let runs: Vec<Vec<TraceRecord>> = pool(parallelism)?.install(|| {
        (0..n_seeds)
            .into_par_iter()
            .map(|k| trace_against(instance, config, target.weights(), checkpoints, trial_seed(master_seed, k)))
            .collect::<Result<_>>()
    })?;
    let n = n_seeds as f64;
    Ok((0..checkpoints.len())
        .map(|c| TraceRecord {
            t: checkpoints[c],
            max_deviation: runs.iter().map(|r| r[c].max_deviation).sum::<f64>() / n,
            mle_error: runs.iter().map(|r| r[c].mle_error).sum::<f64>() / n,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub kind: SamplerKind,
    /// `None` for rules without a leader probability.
    pub beta: Option<f64>,
    pub summary: Summary,
}

/// Every top-two rule in `kinds` at every `beta`, and every other rule once.
/// All cells share `master_seed`.
#[allow(clippy::too_many_arguments)]
pub fn sweep_beta(
    instance: &BanditInstance,
    kinds: &[SamplerKind],
    betas: &[f64],
    delta: f64,
    alpha: f64,
    n_trials: u64,
    master_seed: u64,
    parallelism: usize,
) -> Result<Vec<SweepRow>> {
    if betas.is_empty() && kinds.iter().any(|k| k.is_top_two()) {
        return Err(BaiError::InvalidArgument("beta grid is empty".into()));
    }
    let mut rows = Vec::new();
    for &kind in kinds {
        let cells: Vec<Option<f64>> = if kind.is_top_two() {
            betas.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for beta in cells {
            let config = SamplerConfig::new(kind, beta, delta, alpha)?;
            let results = run_trials(instance, &config, n_trials, master_seed, parallelism)?;
            rows.push(SweepRow {
                kind,
                beta,
                summary: summarize(&results),
            });
        }
    }
    Ok(rows)
}
