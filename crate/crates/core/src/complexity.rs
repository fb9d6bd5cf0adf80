//! Transport costs, the weighted problem complexity and its maximizer.
//!
//! For a best arm `b` and a suboptimal arm `i`, the transport cost under
//! weights `w` is
//!
//! ```text
//! Γ_i(w) = min_{x in [μ_i, μ_b]}  w_b · d_U(μ_b, x) + w_i · d_L(μ_i, x)
//! ```
//!
//! and `Γ(ν, w) = min_i Γ_i(w)`. The optimal allocation maximizes `Γ(ν, ·)`
//! over the simplex and is the unique point where all `Γ_i` coincide.
//!
//! [`optimal_allocation`] finds it by nested bisection. Writing `x_i = w_i /
//! w_b`, each `Γ_i / w_b = g_i(x_i)` is increasing in `x_i`, so a common level
//! `y` fixes every `x_i` by a scalar inversion. The level is then chosen where
//! `Σ_i kl(μ_b, m_i) / kl(μ_i, m_i) = 1`, with `m_i` the inner minimizer, which
//! is the first-order condition of `y / (1 + Σ_i x_i(y))` in `y`.

use crate::error::{BaiError, Result};
use crate::gllr::ExperimentState;
use crate::model::{BanditInstance, DistributionFamily};

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Total bisection step cap for [`optimal_allocation`].
pub const MAX_SOLVER_ITERATIONS: u64 = 1_000_000;
/// Value returned by [`penalized_phi`] when a suboptimal arm has zero weight.
pub const PHI_SENTINEL: f64 = -1e18;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    weights: Vec<f64>,
}

impl Allocation {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(BaiError::InvalidArgument(format!(
                "allocation entries must be nonnegative: {weights:?}"
            )));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(BaiError::InvalidArgument(format!("allocation sums to {s}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(k: usize) -> Self {
        Self {
            weights: vec![1.0 / k as f64; k],
        }
    }

    /// Empirical proportions `T(i) / t`.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let t: u64 = counts.iter().sum();
        if t == 0 {
            return Err(BaiError::InvalidArgument("no samples yet".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / t as f64).collect())
    }

    /// Allocation obtained if `arm` is sampled next: `(T(j) + 1{j = arm}) / (t + 1)`.
    pub fn after_pull(counts: &[u64], arm: usize) -> Self {
        let denom = counts.iter().sum::<u64>() as f64 + 1.0;
        Self {
            weights: counts
                .iter()
                .enumerate()
                .map(|(j, &c)| (c as f64 + f64::from(u8::from(j == arm))) / denom)
                .collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexitySolution {
    /// `Γ(ν)`.
    pub value: f64,
    /// `w(ν)`.
    pub allocation: Allocation,
    /// `Γ_i` at the solution for every suboptimal arm, in arm order.
    pub per_arm_costs: Vec<f64>,
    pub iterations: u64,
}

impl ComplexitySolution {
    /// `max Γ_i − min Γ_i`.
    pub fn balance_residual(&self) -> f64 {
        let max = self.per_arm_costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.per_arm_costs.iter().copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Value and minimizer of the two-arm transport problem.
pub fn transport_cost(
    family: DistributionFamily,
    w_star: f64,
    mu_star: f64,
    w_i: f64,
    mu_i: f64,
) -> Result<(f64, f64)> {
    if mu_i > mu_star {
        return Err(BaiError::InvalidArgument(format!(
            "transport cost needs mu_i <= mu_star, got {mu_i} > {mu_star}"
        )));
    }
    if w_i == 0.0 {
        return Ok((0.0, mu_star));
    }
    if w_star == 0.0 {
        return Ok((0.0, mu_i));
    }
    let x = family.inner_minimizer(w_star, mu_star, w_i, mu_i)?;
    Ok((w_star * family.d_upper(mu_star, x)? + w_i * family.d_lower(mu_i, x)?, x))
}

/// Unchecked transport cost for hot loops; callers guarantee `mu_i <= mu_star`
/// and nonnegative weights.
#[inline]
fn cost(family: DistributionFamily, w_star: f64, mu_star: f64, w_i: f64, mu_i: f64) -> f64 {
    if w_i == 0.0 || w_star == 0.0 || mu_i == mu_star {
        return 0.0;
    }
    let x = (w_star * mu_star + w_i * mu_i) / (w_star + w_i);
    w_star * family.divergence(mu_star, x) + w_i * family.divergence(mu_i, x)
}

fn check_len(instance: &BanditInstance, allocation: &Allocation) -> Result<()> {
    if allocation.len() != instance.n_arms() {
        return Err(BaiError::InvalidArgument(format!(
            "allocation has {} entries for {} arms",
            allocation.len(),
            instance.n_arms()
        )));
    }
    Ok(())
}

/// `Γ_i(ν, w)` for each suboptimal arm, in arm order.
pub fn per_arm_costs(instance: &BanditInstance, allocation: &Allocation) -> Result<Vec<f64>> {
    check_len(instance, allocation)?;
    let fam = instance.family();
    let b = instance.best_arm();
    let mu = instance.means();
    let w = allocation.weights();
    Ok((0..mu.len())
        .filter(|&i| i != b)
        .map(|i| cost(fam, w[b], mu[b], w[i], mu[i]))
        .collect())
}

/// `Γ(ν, w)`.
pub fn gamma_of(instance: &BanditInstance, allocation: &Allocation) -> Result<f64> {
    Ok(per_arm_costs(instance, allocation)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

struct Inverter {
    family: DistributionFamily,
    mu_best: f64,
    mu_i: f64,
}

impl Inverter {
    fn mix(&self, x: f64) -> f64 {
        (self.mu_best + x * self.mu_i) / (1.0 + x)
    }

    /// `Γ_i(1, x)`.
    fn g(&self, x: f64) -> f64 {
        let m = self.mix(x);
        self.family.divergence(self.mu_best, m) + x * self.family.divergence(self.mu_i, m)
    }

    /// Smallest `x` with `g(x) >= y`, by bisection to machine precision.
    fn invert(&self, y: f64, iterations: &mut u64) -> Result<f64> {
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.g(hi) < y {
            lo = hi;
            hi *= 2.0;
            *iterations += 1;
            if !hi.is_finite() || hi > 1e300 {
                return Err(BaiError::SolverFailure {
                    iterations: *iterations,
                    residual: y - self.g(lo),
                });
            }
        }
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            *iterations += 1;
            if mid <= lo || mid >= hi {
                break;
            }
            if self.g(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `kl(μ_b, m) / kl(μ_i, m)` at ratio `x`.
    fn ratio(&self, x: f64) -> f64 {
        let m = self.mix(x);
        self.family.divergence(self.mu_best, m) / self.family.divergence(self.mu_i, m)
    }
}

/// Optimal allocation `w(ν)` and complexity `Γ(ν)`.
pub fn optimal_allocation(instance: &BanditInstance, tol: f64) -> Result<ComplexitySolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(BaiError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let fam = instance.family();
    let b = instance.best_arm();
    let mu = instance.means();
    let others: Vec<usize> = (0..mu.len()).filter(|&i| i != b).collect();
    let inverters: Vec<Inverter> = others
        .iter()
        .map(|&i| Inverter {
            family: fam,
            mu_best: mu[b],
            mu_i: mu[i],
        })
        .collect();
    let y_max = others
        .iter()
        .map(|&i| fam.divergence(mu[b], mu[i]))
        .fold(f64::INFINITY, f64::min);

    let mut iterations = 0u64;
    let ratios_at = |y: f64, iterations: &mut u64| -> Result<Vec<f64>> {
        inverters.iter().map(|inv| inv.invert(y, iterations)).collect()
    };
    let foc = |xs: &[f64]| -> f64 { inverters.iter().zip(xs).map(|(inv, &x)| inv.ratio(x)).sum::<f64>() - 1.0 };

    let (mut lo, mut hi) = (0.0, y_max);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= tol * 1e-6 * y_max {
            break;
        }
        let residual = foc(&ratios_at(mid, &mut iterations)?);
        if residual > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if iterations > MAX_SOLVER_ITERATIONS {
            return Err(BaiError::SolverFailure { iterations, residual });
        }
    }
    let xs = ratios_at(0.5 * (lo + hi), &mut iterations)?;

    let w_best = 1.0 / (1.0 + xs.iter().sum::<f64>());
    let mut weights = vec![0.0; mu.len()];
    weights[b] = w_best;
    for (&i, &x) in others.iter().zip(&xs) {
        weights[i] = x * w_best;
    }
    let allocation = Allocation { weights };
    let costs = per_arm_costs(instance, &allocation)?;
    let value = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let sol = ComplexitySolution {
        value,
        allocation,
        per_arm_costs: costs,
        iterations,
    };
    if sol.balance_residual() > tol * (1.0 + value) {
        return Err(BaiError::SolverFailure {
            iterations,
            residual: sol.balance_residual(),
        });
    }
    Ok(sol)
}

/// Plug-in view of a warmed-up state: MLE means, the empirical best arm and
/// the counts. Built once per round by the samplers.
#[derive(Debug, Clone)]
pub struct PlugIn {
    family: DistributionFamily,
    means: Vec<f64>,
    counts: Vec<u64>,
    top: usize,
    t: u64,
}

impl PlugIn {
    pub fn new(state: &ExperimentState) -> Result<Self> {
        Ok(Self {
            family: state.family(),
            means: state.mles()?,
            counts: state.counts(),
            top: state.top_arm()?,
            t: state.t(),
        })
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn challengers(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.means.len()).filter(move |&i| i != self.top)
    }

    /// Transport cost between the top arm and `i` under weights `w`.
    pub fn arm_cost(&self, w: &[f64], i: usize) -> f64 {
        cost(self.family, w[self.top], self.means[self.top], w[i], self.means[i])
    }

    /// `Γ_t(w)`.
    pub fn gamma(&self, w: &[f64]) -> f64 {
        self.challengers().map(|i| self.arm_cost(w, i)).fold(f64::INFINITY, f64::min)
    }

    /// `Φ_t(w)`.
    pub fn phi(&self, w: &[f64]) -> f64 {
        let next = self.t as f64 + 1.0;
        let mut best = f64::INFINITY;
        for i in self.challengers() {
            if w[i] <= 0.0 {
                return PHI_SENTINEL;
            }
            best = best.min(self.arm_cost(w, i) + (next * w[i]).ln() / next);
        }
        best
    }

    fn proportions(&self) -> Vec<f64> {
        let t = self.t as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    fn argmin_by(&self, score: impl Fn(usize) -> f64) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for i in self.challengers() {
            let v = score(i);
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        best.expect("at least two arms").0
    }

    /// `a_t^min`.
    pub fn min_cost_arm(&self) -> usize {
        let w = self.proportions();
        self.argmin_by(|i| self.arm_cost(&w, i))
    }

    /// `b_t^min`.
    pub fn penalized_min_cost_arm(&self) -> usize {
        let w = self.proportions();
        let t = self.t as f64;
        self.argmin_by(|i| self.arm_cost(&w, i) + (self.counts[i] as f64).ln() / t)
    }
}

fn check_state_len(state: &ExperimentState, allocation: &Allocation) -> Result<()> {
    if allocation.len() != state.n_arms() {
        return Err(BaiError::InvalidArgument(format!(
            "allocation has {} entries for {} arms",
            allocation.len(),
            state.n_arms()
        )));
    }
    Ok(())
}

/// `Γ_t(w)`: the complexity of the plug-in instance built from the MLEs, with
/// the empirical best arm as reference. Tied MLEs contribute cost 0.
pub fn empirical_gamma(state: &ExperimentState, allocation: &Allocation) -> Result<f64> {
    check_state_len(state, allocation)?;
    Ok(PlugIn::new(state)?.gamma(allocation.weights()))
}

/// The suboptimal arm with the smallest transport cost at the current
/// proportions.
pub fn min_cost_arm(state: &ExperimentState) -> Result<usize> {
    Ok(PlugIn::new(state)?.min_cost_arm())
}

/// `Φ_t(w)`: `Γ_t` with the exploration penalty `ln((t+1) w_i) / (t+1)`.
/// Returns [`PHI_SENTINEL`] when a suboptimal arm has zero weight.
pub fn penalized_phi(state: &ExperimentState, allocation: &Allocation) -> Result<f64> {
    check_state_len(state, allocation)?;
    Ok(PlugIn::new(state)?.phi(allocation.weights()))
}

/// Like [`min_cost_arm`] with the penalty `ln T(i) / t`.
pub fn penalized_min_cost_arm(state: &ExperimentState) -> Result<usize> {
    Ok(PlugIn::new(state)?.penalized_min_cost_arm())
}
