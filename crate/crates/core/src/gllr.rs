//! Sequential state and the generalized log-likelihood ratio statistic.
//!
//! Everything here works from per-arm sufficient statistics (count and sum of
//! rewards). For a one-parameter exponential family the log-likelihood of an
//! arm's data at mean `m` differs from its value at the sample mean `x̄` by
//! exactly `-T * kl(x̄, m)`, so likelihood ratios never need the raw rewards.

use crate::error::{BaiError, Result};
use crate::model::{argmax_first, DistributionFamily};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmRecord {
    pub count: u64,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentState {
    family: DistributionFamily,
    t: u64,
    arms: Vec<ArmRecord>,
}

/// Maximizer of the data likelihood under the hypothesis "arm
/// `hypothesis_arm` is best".
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedMle {
    pub hypothesis_arm: usize,
    /// Per-arm means at the constrained maximum.
    pub values: Vec<f64>,
    /// Arms sharing `pooled_value`, sorted. Empty when the constraint is slack.
    pub pooled_set: Vec<usize>,
    pub pooled_value: Option<f64>,
}

impl ExperimentState {
    pub fn new(family: DistributionFamily, n_arms: usize) -> Self {
        Self {
            family,
            t: 0,
            arms: vec![ArmRecord::default(); n_arms],
        }
    }

    /// Build a state directly from counts and reward sums.
    pub fn from_stats(family: DistributionFamily, counts: &[u64], sums: &[f64]) -> Result<Self> {
        if counts.len() != sums.len() {
            return Err(BaiError::InvalidArgument("counts and sums differ in length".into()));
        }
        let arms: Vec<ArmRecord> = counts
            .iter()
            .zip(sums)
            .map(|(&count, &sum)| ArmRecord { count, sum })
            .collect();
        Ok(Self {
            family,
            t: counts.iter().sum(),
            arms,
        })
    }

    /// Build a state whose arms have the given counts and exact sample means.
    pub fn from_means(family: DistributionFamily, counts: &[u64], means: &[f64]) -> Result<Self> {
        let sums: Vec<f64> = counts.iter().zip(means).map(|(&c, &m)| c as f64 * m).collect();
        Self::from_stats(family, counts, &sums)
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        let rec = &mut self.arms[arm];
        rec.count += 1;
        rec.sum += reward;
        self.t += 1;
    }

    pub fn family(&self) -> DistributionFamily {
        self.family
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmRecord] {
        &self.arms
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.arms[arm].count
    }

    pub fn counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.count).collect()
    }

    /// Clamped MLE of one arm, `None` before its first sample.
    pub fn mle(&self, arm: usize) -> Option<f64> {
        let a = self.arms[arm];
        self.family.mle(a.sum, a.count).ok()
    }

    pub fn is_warmed_up(&self) -> bool {
        self.arms.iter().all(|a| a.count > 0)
    }

    fn warmed_up(&self) -> Result<()> {
        match self.arms.iter().position(|a| a.count == 0) {
            Some(arm) => Err(BaiError::NotWarmedUp { arm }),
            None => Ok(()),
        }
    }

    /// Clamped MLEs of all arms.
    pub fn mles(&self) -> Result<Vec<f64>> {
        self.warmed_up()?;
        Ok((0..self.n_arms()).map(|i| self.mle(i).expect("warmed up")).collect())
    }

    fn raw_mean(&self, arm: usize) -> f64 {
        let a = self.arms[arm];
        a.sum / a.count as f64
    }

    /// Arms whose MLE strictly exceeds that of `arm`.
    pub fn superior_set(&self, arm: usize) -> Result<Vec<usize>> {
        let mles = self.mles()?;
        Ok(superior(&mles, arm))
    }

    /// Water-filling solution of the likelihood maximization under "arm
    /// `hypothesis` is best".
    ///
    /// The hypothesis arm is pooled with the superior arms, largest mean
    /// first, for as long as the next arm's mean exceeds the running pooled
    /// mean. Pooled values are count-weighted means of the raw sample means,
    /// clamped into the domain.
    pub fn constrained_mle(&self, hypothesis: usize) -> Result<ConstrainedMle> {
        let mles = self.mles()?;
        let mut values = mles.clone();
        let mut sup = superior(&mles, hypothesis);
        if sup.is_empty() {
            return Ok(ConstrainedMle {
                hypothesis_arm: hypothesis,
                values,
                pooled_set: Vec::new(),
                pooled_value: None,
            });
        }
        sup.sort_by(|&a, &b| {
            self.raw_mean(b)
                .total_cmp(&self.raw_mean(a))
                .then(a.cmp(&b))
        });
        let mut pooled = vec![hypothesis];
        let mut weight = self.arms[hypothesis].count as f64;
        let mut mass = self.arms[hypothesis].sum;
        for &j in &sup {
            if self.raw_mean(j) <= mass / weight {
                break;
            }
            pooled.push(j);
            weight += self.arms[j].count as f64;
            mass += self.arms[j].sum;
        }
        let level = self.family.clamp_mean(mass / weight);
        for &j in &pooled {
            values[j] = level;
        }
        pooled.sort_unstable();
        Ok(ConstrainedMle {
            hypothesis_arm: hypothesis,
            values,
            pooled_set: pooled,
            pooled_value: Some(level),
        })
    }

    /// Log-likelihood of all data at the constrained maximum for `hypothesis`,
    /// minus the log-likelihood at the unconstrained (clamped) MLEs. Always
    /// `<= 0`, and `0` when the hypothesis arm is an empirical best arm.
    pub fn constrained_loglik_gap(&self, hypothesis: usize) -> Result<f64> {
        let sol = self.constrained_mle(hypothesis)?;
        Ok(self.loglik_gap_at(&sol))
    }

    fn loglik_gap_at(&self, sol: &ConstrainedMle) -> f64 {
        let fam = self.family;
        sol.pooled_set
            .iter()
            .map(|&a| {
                let rec = self.arms[a];
                let xbar = self.raw_mean(a);
                let at_mle = fam.clamp_mean(xbar);
                -(rec.count as f64) * (fam.divergence(xbar, sol.values[a]) - fam.divergence(xbar, at_mle))
            })
            .sum()
    }

    /// GLLR between hypotheses "arm `i` is best" and "arm `j` is best".
    pub fn gllr_pair(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(BaiError::InvalidArgument(format!("gllr_pair needs distinct arms, got {i} twice")));
        }
        Ok(self.constrained_loglik_gap(i)? - self.constrained_loglik_gap(j)?)
    }

    /// Empirical best arm, lowest index on ties.
    pub fn top_arm(&self) -> Result<usize> {
        Ok(argmax_first(&self.mles()?))
    }

    /// Index and GLLR value of the arm closest to the top arm.
    pub fn challenger_with_value(&self) -> Result<(usize, f64)> {
        let top = self.top_arm()?;
        let mut best: Option<(usize, f64)> = None;
        for i in (0..self.n_arms()).filter(|&i| i != top) {
            // The top hypothesis is unconstrained, so its gap is zero.
            let v = -self.constrained_loglik_gap(i)?;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
        best.ok_or_else(|| BaiError::InvalidArgument("need at least two arms".into()))
    }

    pub fn challenger(&self) -> Result<usize> {
        Ok(self.challenger_with_value()?.0)
    }
}

fn superior(mles: &[f64], arm: usize) -> Vec<usize> {
    let m = mles[arm];
    (0..mles.len()).filter(|&j| mles[j] > m).collect()
}
