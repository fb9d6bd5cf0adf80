//! Slow reference computations used to validate the closed forms.
//!
//! Nothing here is on the hot path. These routines work from raw rewards and
//! direct numeric search so they share no code path with the water-filling
//! MLE or the balancing solver they check.

use crate::error::{BaiError, Result};
use crate::gllr::ExperimentState;
use crate::model::DistributionFamily;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimize a unimodal function on `[a, b]` by golden-section search.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // Endpoints can win for monotone objectives.
    let mid = 0.5 * (a + b);
    [mid, a, b]
        .into_iter()
        .min_by(|&x, &y| f(x).total_cmp(&f(y)))
        .expect("nonempty")
}

pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    golden_section_min(|x| -f(x), a, b, tol)
}

/// Raw per-arm rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationLog {
    family: DistributionFamily,
    rewards: Vec<Vec<f64>>,
}

impl ObservationLog {
    pub fn new(family: DistributionFamily, n_arms: usize) -> Self {
        Self {
            family,
            rewards: vec![Vec::new(); n_arms],
        }
    }

    pub fn push(&mut self, arm: usize, x: f64) {
        self.rewards[arm].push(x);
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.rewards
    }

    pub fn total(&self) -> usize {
        self.rewards.iter().map(Vec::len).sum()
    }

    pub fn to_state(&self) -> ExperimentState {
        let mut s = ExperimentState::new(self.family, self.rewards.len());
        for (arm, xs) in self.rewards.iter().enumerate() {
            for &x in xs {
                s.update(arm, x);
            }
        }
        s
    }

    fn arm_loglik(&self, arm: usize, mean: f64) -> f64 {
        self.rewards[arm]
            .iter()
            .map(|&x| self.family.log_likelihood_unchecked(mean, x))
            .sum()
    }

    /// Full-data log-likelihood at a mean vector.
    pub fn loglik(&self, means: &[f64]) -> f64 {
        (0..self.rewards.len()).map(|a| self.arm_loglik(a, means[a])).sum()
    }

    fn search_range(&self) -> (f64, f64) {
        let (lo, hi) = self.family.mean_domain();
        let all = self.rewards.iter().flatten();
        let min = all.clone().copied().fold(f64::INFINITY, f64::min);
        let max = all.copied().fold(f64::NEG_INFINITY, f64::max);
        (lo.max(min - 1.0), hi.min(max + 1.0))
    }
}

/// Maximum of the full-data log-likelihood over mean vectors with
/// `mu[hypothesis] >= max_j mu[j]`.
///
/// Phase one evaluates every arm's log-likelihood on a uniform grid of step
/// `grid_step` and maximizes exactly over the product grid (the objective is
/// separable once the hypothesis arm's level is fixed). Phase two refines
/// around the best grid level with nested golden-section searches on the
/// continuous problem.
pub fn brute_force_constrained_loglik(log: &ObservationLog, hypothesis: usize, grid_step: f64) -> Result<f64> {
    let k = log.rewards.len();
    if k > 4 || log.total() > 50 {
        return Err(BaiError::OracleSize(format!(
            "brute-force oracle supports K <= 4 and <= 50 samples, got K={k}, n={}",
            log.total()
        )));
    }
    if let Some(arm) = log.rewards.iter().position(Vec::is_empty) {
        return Err(BaiError::NotWarmedUp { arm });
    }
    if grid_step.is_nan() || grid_step <= 0.0 {
        return Err(BaiError::InvalidArgument("grid_step must be positive".into()));
    }
    let (lo, hi) = log.search_range();
    let n = ((hi - lo) / grid_step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|g| (lo + g as f64 * grid_step).min(hi)).collect();

    // Running maximum of each arm's log-likelihood over grid points <= level.
    let prefix_max: Vec<Vec<f64>> = (0..k)
        .map(|a| {
            let mut run = f64::NEG_INFINITY;
            grid.iter()
                .map(|&m| {
                    run = run.max(log.arm_loglik(a, m));
                    run
                })
                .collect()
        })
        .collect();
    let mut best_g = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (g, &m) in grid.iter().enumerate() {
        let mut v = log.arm_loglik(hypothesis, m);
        for (a, pm) in prefix_max.iter().enumerate() {
            if a != hypothesis {
                v += pm[g];
            }
        }
        if v > best_v {
            best_v = v;
            best_g = g;
        }
    }

    let profile = |level: f64| {
        let mut v = log.arm_loglik(hypothesis, level);
        for a in (0..k).filter(|&a| a != hypothesis) {
            let arg = golden_section_max(|m| log.arm_loglik(a, m), lo, level, 1e-13);
            v += log.arm_loglik(a, arg);
        }
        v
    };
    let a = (grid[best_g] - grid_step).max(lo);
    let b = (grid[best_g] + grid_step).min(hi);
    let level = golden_section_max(profile, a, b, 1e-13);
    Ok(profile(level).max(best_v))
}

/// Maximum of `f` over the probability simplex in `k <= 4` dimensions on a
/// uniform lattice of step `step`. Returns the best value and its point.
pub fn simplex_grid_max<F: Fn(&[f64]) -> f64>(k: usize, step: f64, f: F) -> (f64, Vec<f64>) {
    let n = (1.0 / step).round() as usize;
    let mut best = (f64::NEG_INFINITY, vec![0.0; k]);
    let mut idx = vec![0usize; k];
    let mut w = vec![0.0; k];
    fn rec<F: Fn(&[f64]) -> f64>(
        pos: usize,
        left: usize,
        n: usize,
        idx: &mut [usize],
        w: &mut [f64],
        f: &F,
        best: &mut (f64, Vec<f64>),
    ) {
        let k = idx.len();
        if pos == k - 1 {
            idx[pos] = left;
            for (wi, &ii) in w.iter_mut().zip(idx.iter()) {
                *wi = ii as f64 / n as f64;
            }
            let v = f(w);
            if v > best.0 {
                *best = (v, w.to_vec());
            }
            return;
        }
        for c in 0..=left {
            idx[pos] = c;
            rec(pos + 1, left - c, n, idx, w, f, best);
        }
    }
    rec(0, n, n, &mut idx, &mut w, &f, &mut best);
    best
}
