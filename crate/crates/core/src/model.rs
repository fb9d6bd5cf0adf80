//! Mean-parameterized reward families and their information-geometric
//! primitives.
//!
//! Every other module reaches a family only through the operations on
//! [`DistributionFamily`]: sampling, log-likelihood, KL divergence, the two
//! one-sided projections `d_upper` / `d_lower`, the two-arm inner minimizer,
//! and the clamped MLE. Adding a family means adding a variant and filling in
//! those arms.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{BaiError, Result};

/// Clamp applied to Bernoulli and Poisson means so every KL stays finite.
pub const MEAN_CLAMP: f64 = 1e-6;

/// Default upper end of the Poisson mean domain.
pub const DEFAULT_POISSON_MAX_MEAN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionFamily {
    Bernoulli,
    /// Gaussian with known variance (units of reward squared).
    Gaussian { variance: f64 },
    /// Poisson with mean domain `[MEAN_CLAMP, max_mean]`.
    Poisson { max_mean: f64 },
}

impl DistributionFamily {
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(BaiError::InvalidConfig(format!(
                "gaussian variance must be positive and finite, got {variance}"
            )));
        }
        Ok(Self::Gaussian { variance })
    }

    pub fn poisson(max_mean: f64) -> Result<Self> {
        if !(max_mean.is_finite() && max_mean > MEAN_CLAMP) {
            return Err(BaiError::InvalidConfig(format!(
                "poisson max_mean must exceed {MEAN_CLAMP}, got {max_mean}"
            )));
        }
        Ok(Self::Poisson { max_mean })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Bernoulli => "bernoulli",
            Self::Gaussian { .. } => "gaussian",
            Self::Poisson { .. } => "poisson",
        }
    }

    /// Closed interval of admissible means. The Gaussian domain is the whole
    /// real line.
    pub fn mean_domain(&self) -> (f64, f64) {
        match *self {
            Self::Bernoulli => (MEAN_CLAMP, 1.0 - MEAN_CLAMP),
            Self::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Poisson { max_mean } => (MEAN_CLAMP, max_mean),
        }
    }

    pub fn contains_mean(&self, mean: f64) -> bool {
        let (lo, hi) = self.mean_domain();
        mean.is_finite() && mean >= lo && mean <= hi
    }

    fn check_mean(&self, mean: f64) -> Result<()> {
        if self.contains_mean(mean) {
            Ok(())
        } else {
            let (lo, hi) = self.mean_domain();
            Err(BaiError::MeanOutOfDomain { mean, lo, hi })
        }
    }

    pub fn clamp_mean(&self, mean: f64) -> f64 {
        let (lo, hi) = self.mean_domain();
        mean.clamp(lo, hi)
    }

    /// Draw one reward from the member with the given mean.
    pub fn sample<R: Rng + ?Sized>(&self, mean: f64, rng: &mut R) -> Result<f64> {
        self.check_mean(mean)?;
        Ok(match *self {
            Self::Bernoulli => {
                if rng.random::<f64>() < mean {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Gaussian { variance } => Normal::new(mean, variance.sqrt())
                .expect("validated variance")
                .sample(rng),
            Self::Poisson { .. } => Poisson::new(mean).expect("validated mean").sample(rng),
        })
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self {
            Self::Bernoulli => x == 0.0 || x == 1.0,
            Self::Gaussian { .. } => x.is_finite(),
            Self::Poisson { .. } => x.is_finite() && x >= 0.0 && x.fract() == 0.0,
        }
    }

    /// Natural log of the density (Gaussian) or mass (Bernoulli, Poisson) at `x`.
    pub fn log_likelihood(&self, mean: f64, x: f64) -> Result<f64> {
        self.check_mean(mean)?;
        if !self.in_support(x) {
            return Err(BaiError::OutsideSupport { value: x });
        }
        Ok(self.log_likelihood_unchecked(mean, x))
    }

    pub(crate) fn log_likelihood_unchecked(&self, mean: f64, x: f64) -> f64 {
        match *self {
            Self::Bernoulli => {
                if x == 1.0 {
                    mean.ln()
                } else {
                    (1.0 - mean).ln()
                }
            }
            Self::Gaussian { variance } => {
                let d = x - mean;
                -0.5 * (2.0 * std::f64::consts::PI * variance).ln() - d * d / (2.0 * variance)
            }
            Self::Poisson { .. } => {
                x * mean.ln() - mean - statrs::function::factorial::ln_factorial(x as u64)
            }
        }
    }

    /// KL divergence between the members with means `mu1` and `mu2`.
    pub fn kl(&self, mu1: f64, mu2: f64) -> Result<f64> {
        self.check_mean(mu1)?;
        self.check_mean(mu2)?;
        Ok(self.divergence(mu1, mu2))
    }

    /// KL divergence without domain checks.
    ///
    /// The first argument may sit on the closure of the domain (a raw sample
    /// mean such as 0 or 1 for Bernoulli) and uses `0 ln 0 = 0`. The second
    /// argument must lie inside the support's mean range or the result is
    /// infinite.
    pub(crate) fn divergence(&self, mu1: f64, mu2: f64) -> f64 {
        if mu1 == mu2 {
            return 0.0;
        }
        match *self {
            Self::Bernoulli => xlogy_ratio(mu1, mu2) + xlogy_ratio(1.0 - mu1, 1.0 - mu2),
            Self::Gaussian { variance } => {
                let d = mu1 - mu2;
                d * d / (2.0 * variance)
            }
            Self::Poisson { .. } => xlogy_ratio(mu1, mu2) - mu1 + mu2,
        }
    }

    /// Minimum KL from the member with mean `mu` to any member with mean at
    /// most `x`.
    pub fn d_upper(&self, mu: f64, x: f64) -> Result<f64> {
        self.check_mean(mu)?;
        self.check_mean(x)?;
        Ok(if mu > x { self.divergence(mu, x) } else { 0.0 })
    }

    /// Minimum KL from the member with mean `mu` to any member with mean at
    /// least `x`.
    pub fn d_lower(&self, mu: f64, x: f64) -> Result<f64> {
        self.check_mean(mu)?;
        self.check_mean(x)?;
        Ok(if mu < x { self.divergence(mu, x) } else { 0.0 })
    }

    /// The unique `x` in `[mu2, mu1]` minimizing
    /// `w1 * d_upper(mu1, x) + w2 * d_lower(mu2, x)`.
    ///
    /// For one-parameter exponential families in the mean parameterization
    /// this is the weighted mean of the two means.
    pub fn inner_minimizer(&self, w1: f64, mu1: f64, w2: f64, mu2: f64) -> Result<f64> {
        check_weight(w1)?;
        check_weight(w2)?;
        if mu2 > mu1 {
            return Err(BaiError::InvalidArgument(format!(
                "inner minimizer needs mu2 <= mu1, got mu1={mu1}, mu2={mu2}"
            )));
        }
        if w1 + w2 <= 0.0 {
            return Err(BaiError::DegenerateWeights);
        }
        Ok(match self {
            Self::Bernoulli | Self::Gaussian { .. } | Self::Poisson { .. } => {
                ((w1 * mu1 + w2 * mu2) / (w1 + w2)).clamp(mu2, mu1)
            }
        })
    }

    /// Exponential-family MLE of the mean (the sample mean), clamped into
    /// the domain.
    pub fn mle(&self, sum: f64, count: u64) -> Result<f64> {
        if count == 0 {
            return Err(BaiError::UndefinedEstimate);
        }
        Ok(self.clamp_mean(sum / count as f64))
    }
}

/// Generic inner minimizer for families without a closed form: bisection on
/// the derivative of `w1 * kl(mu1, x) + w2 * kl(mu2, x)` over `[mu2, mu1]`,
/// with the derivative taken by central differences.
///
/// The objective is strictly convex in `x`, so the derivative changes sign
/// exactly once on the interval.
pub fn inner_minimizer_bisection<F>(kl: F, w1: f64, mu1: f64, w2: f64, mu2: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    check_weight(w1)?;
    check_weight(w2)?;
    if w1 + w2 <= 0.0 {
        return Err(BaiError::DegenerateWeights);
    }
    if mu2 > mu1 {
        return Err(BaiError::InvalidArgument("inner minimizer needs mu2 <= mu1".into()));
    }
    if w2 == 0.0 || mu1 == mu2 {
        return Ok(mu1);
    }
    if w1 == 0.0 {
        return Ok(mu2);
    }
    let objective = |x: f64| w1 * kl(mu1, x) + w2 * kl(mu2, x);
    let h = ((mu1 - mu2) * 1e-7).max(1e-12);
    let slope = |x: f64| {
        let a = (x - h).max(mu2);
        let b = (x + h).min(mu1);
        (objective(b) - objective(a)) / (b - a)
    };
    let (mut lo, mut hi) = (mu2, mu1);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_weight(w: f64) -> Result<()> {
    if w.is_finite() && w >= 0.0 {
        Ok(())
    } else {
        Err(BaiError::InvalidArgument(format!("weights must be nonnegative, got {w}")))
    }
}

/// `a * ln(a / b)` with the convention `0 * ln(0 / b) = 0`.
fn xlogy_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * (a / b).ln()
    }
}

/// A family plus the vector of arm means.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    family: DistributionFamily,
    means: Vec<f64>,
    best_arm: usize,
}

impl BanditInstance {
    /// Validates `K >= 2`, every mean in the domain, and a unique top mean.
    /// Ties among suboptimal arms are allowed.
    pub fn new(family: DistributionFamily, means: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(BaiError::InvalidArgument(format!(
                "a bandit instance needs at least 2 arms, got {}",
                means.len()
            )));
        }
        for &m in &means {
            family.check_mean(m)?;
        }
        let best_arm = argmax_first(&means);
        if let Some(second) = (0..means.len()).find(|&j| j != best_arm && means[j] == means[best_arm]) {
            return Err(BaiError::AmbiguousBestArm {
                first: best_arm,
                second,
            });
        }
        Ok(Self {
            family,
            means,
            best_arm,
        })
    }

    pub fn family(&self) -> DistributionFamily {
        self.family
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn n_arms(&self) -> usize {
        self.means.len()
    }

    /// Zero-based index of the best arm.
    pub fn best_arm(&self) -> usize {
        self.best_arm
    }

    pub fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<f64> {
        self.family.sample(self.means[arm], rng)
    }
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const G1: DistributionFamily = DistributionFamily::Gaussian { variance: 1.0 };
    const POIS: DistributionFamily = DistributionFamily::Poisson { max_mean: 100.0 };
    const BERN: DistributionFamily = DistributionFamily::Bernoulli;

    #[test]
    fn bernoulli_near_one_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            let x = BERN.sample(1.0 - MEAN_CLAMP, &mut rng).unwrap();
            assert!(x == 0.0 || x == 1.0);
            s += x;
        }
        assert!(s / n as f64 > 0.9999);
    }

    #[test]
    fn gaussian_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let s: f64 = (0..n).map(|_| G1.sample(0.0, &mut rng).unwrap()).sum();
        assert!((s / n as f64).abs() < 0.01);
    }

    #[test]
    fn poisson_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 1_000_000;
        let xs: Vec<f64> = (0..n).map(|_| POIS.sample(3.0, &mut rng).unwrap()).collect();
        assert!(xs.iter().all(|&x| x >= 0.0 && x.fract() == 0.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 3.0).abs() < 0.01);
        assert!((var - 3.0).abs() < 0.03);
    }

    #[test]
    fn sample_rejects_out_of_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            BERN.sample(1.0, &mut rng),
            Err(BaiError::MeanOutOfDomain { .. })
        ));
    }

    #[test]
    fn log_likelihood_values() {
        assert_abs_diff_eq!(BERN.log_likelihood(0.5, 1.0).unwrap(), 0.5f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            G1.log_likelihood(0.0, 0.0).unwrap(),
            -0.5 * (2.0 * std::f64::consts::PI).ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(POIS.log_likelihood(1.0, 0.0).unwrap(), -1.0, epsilon = 1e-15);
        assert!(matches!(BERN.log_likelihood(0.5, 0.5), Err(BaiError::OutsideSupport { .. })));
        assert!(POIS.log_likelihood(2.0, -1.0).is_err());
        assert!(POIS.log_likelihood(2.0, 1.5).is_err());
    }

    #[test]
    fn kl_values() {
        assert_abs_diff_eq!(G1.kl(1.2, 1.0).unwrap(), 0.02, epsilon = 1e-12);
        assert_eq!(BERN.kl(0.5, 0.5).unwrap(), 0.0);
        // 0.5 ln(0.5/0.4) + 0.5 ln(0.5/0.6), evaluated with mpmath at 30 digits.
        assert_abs_diff_eq!(BERN.kl(0.5, 0.4).unwrap(), 0.020410997260127586, epsilon = 1e-15);
        assert!(BERN.kl(0.0, 0.5).is_err());
    }

    #[test]
    fn projections() {
        assert_eq!(G1.d_upper(1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(G1.d_upper(1.0, 0.5).unwrap(), 0.125, epsilon = 1e-15);
        assert_eq!(BERN.d_upper(0.3, 0.35).unwrap(), 0.0);
        assert_abs_diff_eq!(G1.d_lower(0.0, 0.5).unwrap(), 0.125, epsilon = 1e-15);
        assert_eq!(BERN.d_lower(0.2, 0.2).unwrap(), 0.0);
        // mpmath: 0.21 ln(0.21/0.25) + 0.79 ln(0.79/0.75)
        assert_abs_diff_eq!(BERN.d_lower(0.21, 0.25).unwrap(), 0.004433982454858404, epsilon = 1e-15);
    }

    #[test]
    fn inner_minimizer_cases() {
        assert_abs_diff_eq!(G1.inner_minimizer(0.5, 1.0, 0.5, 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(G1.inner_minimizer(1.0, 1.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(G1.inner_minimizer(0.0, 1.0, 0.0, 0.0), Err(BaiError::DegenerateWeights));
        assert!(G1.inner_minimizer(0.5, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn inner_minimizer_matches_golden_section() {
        let (w1, mu1, w2, mu2) = (0.3359, 0.3, 0.2515, 0.21);
        let x = BERN.inner_minimizer(w1, mu1, w2, mu2).unwrap();
        let f = |x: f64| w1 * BERN.d_upper(mu1, x).unwrap() + w2 * BERN.d_lower(mu2, x).unwrap();
        let g = crate::oracle::golden_section_min(f, mu2, mu1, 1e-12);
        assert_abs_diff_eq!(x, g, epsilon = 1e-8);
    }

    #[test]
    fn bisection_fallback_agrees_with_closed_form() {
        for fam in [BERN, G1, POIS] {
            let (mu1, mu2) = match fam {
                DistributionFamily::Poisson { .. } => (4.0, 1.5),
                _ => (0.7, 0.2),
            };
            let x = inner_minimizer_bisection(|a, b| fam.divergence(a, b), 0.3, mu1, 0.6, mu2, 1e-13).unwrap();
            assert_abs_diff_eq!(x, fam.inner_minimizer(0.3, mu1, 0.6, mu2).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn mle_cases() {
        assert_abs_diff_eq!(BERN.mle(3.0, 10).unwrap(), 0.3);
        assert_eq!(BERN.mle(0.0, 5).unwrap(), MEAN_CLAMP);
        assert_abs_diff_eq!(G1.mle(-2.4, 2).unwrap(), -1.2);
        assert_eq!(G1.mle(1.0, 0), Err(BaiError::UndefinedEstimate));
    }

    #[test]
    fn instance_validation() {
        assert!(BanditInstance::new(G1, vec![1.0]).is_err());
        assert!(matches!(
            BanditInstance::new(G1, vec![1.0, 1.0, 0.0]),
            Err(BaiError::AmbiguousBestArm { first: 0, second: 1 })
        ));
        let inst = BanditInstance::new(G1, vec![1.2, 1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(inst.best_arm(), 0);
        assert!(BanditInstance::new(BERN, vec![0.5, 1.0]).is_err());
    }

    fn mean_in(fam: DistributionFamily) -> BoxedStrategy<f64> {
        match fam {
            DistributionFamily::Bernoulli => (0.001f64..0.999).boxed(),
            DistributionFamily::Gaussian { .. } => (-5.0f64..5.0).boxed(),
            DistributionFamily::Poisson { .. } => (0.01f64..50.0).boxed(),
        }
    }

    fn fam_and_means(n: usize) -> impl Strategy<Value = (DistributionFamily, Vec<f64>)> {
        prop_oneof![Just(BERN), Just(G1), Just(POIS)]
            .prop_flat_map(move |f| (Just(f), proptest::collection::vec(mean_in(f), n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn kl_nonnegative_zero_iff_equal((fam, m) in fam_and_means(2)) {
            let k = fam.kl(m[0], m[1]).unwrap();
            prop_assert!(k >= 0.0);
            prop_assert_eq!(k == 0.0, m[0] == m[1]);
            prop_assert_eq!(fam.kl(m[0], m[0]).unwrap(), 0.0);
        }

        #[test]
        fn kl_strictly_convex_in_second((fam, m) in fam_and_means(3), lam in 0.01f64..0.99) {
            prop_assume!((m[1] - m[2]).abs() > 1e-3);
            let mid = lam * m[1] + (1.0 - lam) * m[2];
            let lhs = fam.kl(m[0], mid).unwrap();
            let rhs = lam * fam.kl(m[0], m[1]).unwrap() + (1.0 - lam) * fam.kl(m[0], m[2]).unwrap();
            prop_assert!(lhs < rhs + 1e-12);
        }

        #[test]
        fn inner_minimizer_vs_golden((fam, m) in fam_and_means(2), w1 in 0.0f64..1.0, w2 in 0.0f64..1.0) {
            prop_assume!(w1 + w2 > 1e-6);
            let (mu1, mu2) = if m[0] >= m[1] { (m[0], m[1]) } else { (m[1], m[0]) };
            let x = fam.inner_minimizer(w1, mu1, w2, mu2).unwrap();
            prop_assert!(x >= mu2 && x <= mu1);
            let f = |x: f64| w1 * fam.d_upper(mu1, x).unwrap() + w2 * fam.d_lower(mu2, x).unwrap();
            let g = crate::oracle::golden_section_min(f, mu2, mu1, 1e-13);
            // Objective values first (flat minima), then arguments. Poisson KL
            // loses about `mu * eps` to cancellation.
            let noise = 1e-14 * (1.0 + mu1.abs());
            prop_assert!(f(x) <= f(g) + noise);
            prop_assert!((x - g).abs() < 1e-8 * (1.0 + (mu1 - mu2)) || f(x) - f(g) < noise);
        }

        #[test]
        fn gaussian_mle_translation(sum in -100.0f64..100.0, count in 1u64..1000, c in -10.0f64..10.0) {
            let a = G1.mle(sum + c * count as f64, count).unwrap();
            let b = G1.mle(sum, count).unwrap() + c;
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn projections_monotone_on_grid() {
        for fam in [BERN, G1, POIS] {
            let (lo, hi) = match fam {
                DistributionFamily::Gaussian { .. } => (-3.0, 3.0),
                _ => {
                    let (a, b) = fam.mean_domain();
                    (a, b.min(20.0))
                }
            };
            let grid: Vec<f64> = (0..=400).map(|k| lo + (hi - lo) * k as f64 / 400.0).collect();
            for &mu in grid.iter().step_by(37) {
                let up: Vec<f64> = grid.iter().map(|&x| fam.d_upper(mu, x).unwrap()).collect();
                let low: Vec<f64> = grid.iter().map(|&x| fam.d_lower(mu, x).unwrap()).collect();
                assert!(up.windows(2).all(|w| w[1] <= w[0]), "{fam:?} d_upper");
                assert!(low.windows(2).all(|w| w[1] >= w[0]), "{fam:?} d_lower");
            }
        }
    }
}
