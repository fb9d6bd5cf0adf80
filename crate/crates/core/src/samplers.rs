//! Arm-selection rules and the GLLR stopping rule.
//!
//! All samplers share the same forced-exploration floor: while some arm has
//! `T(i) <= ceil(sqrt(t / K))`, the least-sampled such arm is pulled. Beyond
//! that, TCB and ITCB move toward the arm whose extra sample raises the
//! (penalized) empirical transport cost, and the top-two baselines mix a
//! leader and a challenger with a fixed probability `beta`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

use crate::complexity::{Allocation, PlugIn};
use crate::error::{BaiError, Result};
use crate::gllr::ExperimentState;
use crate::model::{argmax_first, BanditInstance, DistributionFamily};

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Tcb,
    Itcb,
    TtSprt,
    EbTci,
    T3c,
    TsTci,
    Uniform,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 7] = [
        Self::Tcb,
        Self::Itcb,
        Self::TtSprt,
        Self::EbTci,
        Self::T3c,
        Self::TsTci,
        Self::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tcb => "TCB",
            Self::Itcb => "ITCB",
            Self::TtSprt => "TT-SPRT",
            Self::EbTci => "EB-TCI",
            Self::T3c => "T3C",
            Self::TsTci => "TS-TCI",
            Self::Uniform => "Uniform",
        }
    }

    /// Whether the rule takes a leader-probability `beta`.
    pub fn is_top_two(self) -> bool {
        matches!(self, Self::TtSprt | Self::EbTci | Self::T3c | Self::TsTci)
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = BaiError;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "tcb" => Self::Tcb,
            "itcb" => Self::Itcb,
            "ttsprt" => Self::TtSprt,
            "ebtci" => Self::EbTci,
            "t3c" => Self::T3c,
            "tstci" => Self::TsTci,
            "uniform" => Self::Uniform,
            _ => return Err(BaiError::InvalidConfig(format!("unknown algorithm '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Leader probability, top-two baselines only.
    pub beta: Option<f64>,
    pub delta: f64,
    pub alpha: f64,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, beta: Option<f64>, delta: f64, alpha: f64) -> Result<Self> {
        match (kind.is_top_two(), beta) {
            (true, None) => {
                return Err(BaiError::InvalidConfig(format!("{kind} requires beta")));
            }
            (false, Some(_)) => {
                return Err(BaiError::InvalidConfig(format!("{kind} does not take beta")));
            }
            (true, Some(b)) if !(b > 0.0 && b < 1.0) => {
                return Err(BaiError::InvalidConfig(format!("beta must lie in (0, 1), got {b}")));
            }
            _ => {}
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(BaiError::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(BaiError::InvalidConfig(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            kind,
            beta,
            delta,
            alpha,
        })
    }

    /// A β-agnostic sampler with the default `alpha`.
    pub fn plain(kind: SamplerKind, delta: f64) -> Result<Self> {
        Self::new(kind, None, delta, DEFAULT_ALPHA)
    }
}

/// Outcome of the stopping test at the current round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCheck {
    pub stopped: bool,
    pub terminal_decision: Option<usize>,
    pub gllr_value: f64,
    pub threshold_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDecision {
    /// Arm pulled this round; `None` once stopped.
    pub next_arm: Option<usize>,
    pub stopped: bool,
    pub terminal_decision: Option<usize>,
    pub gllr_value: f64,
    pub threshold_value: f64,
}

/// Arms with `T(i) <= ceil(sqrt(t / K))`.
pub fn underexplored_set(state: &ExperimentState) -> Vec<usize> {
    let k = state.n_arms() as f64;
    let floor = (state.t() as f64 / k).sqrt().ceil() as u64;
    (0..state.n_arms()).filter(|&i| state.count(i) <= floor).collect()
}

/// Least-sampled under-explored arm, if any (lowest index on ties).
pub fn forced_exploration_arm(state: &ExperimentState) -> Option<usize> {
    underexplored_set(state)
        .into_iter()
        .min_by_key(|&i| (state.count(i), i))
}

/// `log(t^(1+alpha) (K-1) / delta) + log(1 + 1/alpha)`. Infinite at `t = 0`,
/// where no stopping check is made.
pub fn threshold(t: u64, delta: f64, alpha: f64, k: usize) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    (1.0 + alpha) * (t as f64).ln() + ((k - 1) as f64).ln() - delta.ln() + (1.0 / alpha).ln_1p()
}

/// GLLR stopping rule: stop once `Λ_t(top, challenger) > threshold`.
pub fn check_stop(state: &ExperimentState, config: &SamplerConfig) -> Result<StopCheck> {
    if !state.is_warmed_up() {
        return Ok(StopCheck {
            stopped: false,
            terminal_decision: None,
            gllr_value: 0.0,
            threshold_value: f64::INFINITY,
        });
    }
    let top = state.top_arm()?;
    let (_, gllr_value) = state.challenger_with_value()?;
    let threshold_value = threshold(state.t(), config.delta, config.alpha, state.n_arms());
    let stopped = gllr_value > threshold_value;
    Ok(StopCheck {
        stopped,
        terminal_decision: stopped.then_some(top),
        gllr_value,
        threshold_value,
    })
}

/// TCB arm selection.
pub fn tcb_select(state: &ExperimentState) -> Result<usize> {
    if let Some(arm) = forced_exploration_arm(state) {
        return Ok(arm);
    }
    let plug = PlugIn::new(state)?;
    let top = plug.top();
    let contender = plug.min_cost_arm();
    let via_contender = plug.gamma(Allocation::after_pull(plug.counts(), contender).weights());
    let via_top = plug.gamma(Allocation::after_pull(plug.counts(), top).weights());
    Ok(if via_contender > via_top { contender } else { top })
}

/// ITCB arm selection: TCB with the penalized cost `Φ_t`.
pub fn itcb_select(state: &ExperimentState) -> Result<usize> {
    if let Some(arm) = forced_exploration_arm(state) {
        return Ok(arm);
    }
    let plug = PlugIn::new(state)?;
    let top = plug.top();
    let contender = plug.penalized_min_cost_arm();
    let via_contender = plug.phi(Allocation::after_pull(plug.counts(), contender).weights());
    let via_top = plug.phi(Allocation::after_pull(plug.counts(), top).weights());
    Ok(if via_contender > via_top { contender } else { top })
}

/// One draw from each arm's posterior (Beta(1,1) prior for Bernoulli, flat
/// prior for Gaussian, Gamma(1,1) prior for Poisson).
pub fn posterior_sample<R: Rng + ?Sized>(state: &ExperimentState, rng: &mut R) -> Vec<f64> {
    let fam = state.family();
    state
        .arms()
        .iter()
        .map(|a| {
            let n = a.count as f64;
            match fam {
                DistributionFamily::Bernoulli => Beta::new(1.0 + a.sum, 1.0 + n - a.sum)
                    .expect("positive shapes")
                    .sample(rng),
                DistributionFamily::Gaussian { variance } => Normal::new(a.sum / n, (variance / n).sqrt())
                    .expect("warmed up")
                    .sample(rng),
                DistributionFamily::Poisson { .. } => Gamma::new(1.0 + a.sum, 1.0 / (1.0 + n))
                    .expect("positive shape")
                    .sample(rng),
            }
        })
        .collect()
}

/// Pairwise transport cost with counts as weights; zero when `j` already
/// looks at least as good as `leader`.
fn count_transport(state: &ExperimentState, mles: &[f64], leader: usize, j: usize) -> f64 {
    if mles[j] >= mles[leader] {
        return 0.0;
    }
    let fam = state.family();
    let (wl, wj) = (state.count(leader) as f64, state.count(j) as f64);
    let x = (wl * mles[leader] + wj * mles[j]) / (wl + wj);
    wl * fam.divergence(mles[leader], x) + wj * fam.divergence(mles[j], x)
}

/// Leader and challenger of a top-two baseline.
pub fn leader_and_challenger<R: Rng + ?Sized>(
    state: &ExperimentState,
    kind: SamplerKind,
    rng: &mut R,
) -> Result<(usize, usize)> {
    let mles = state.mles()?;
    let leader = match kind {
        SamplerKind::TtSprt | SamplerKind::EbTci => argmax_first(&mles),
        SamplerKind::T3c | SamplerKind::TsTci => argmax_first(&posterior_sample(state, rng)),
        _ => {
            return Err(BaiError::InvalidConfig(format!("{kind} is not a top-two rule")));
        }
    };
    let gaps: Vec<f64> = match kind {
        SamplerKind::TtSprt | SamplerKind::EbTci => (0..state.n_arms())
            .map(|j| state.constrained_loglik_gap(j))
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };
    let score = |j: usize| -> f64 {
        let ln_count = (state.count(j) as f64).ln();
        match kind {
            SamplerKind::TtSprt => gaps[leader] - gaps[j],
            SamplerKind::EbTci => gaps[leader] - gaps[j] + ln_count,
            SamplerKind::T3c => count_transport(state, &mles, leader, j),
            SamplerKind::TsTci => count_transport(state, &mles, leader, j) + ln_count,
            _ => unreachable!(),
        }
    };
    let mut best: Option<(usize, f64)> = None;
    for j in (0..state.n_arms()).filter(|&j| j != leader) {
        let v = score(j);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((j, v));
        }
    }
    Ok((leader, best.expect("at least two arms").0))
}

/// Top-two baseline selection: the leader with probability `beta`, else the
/// challenger.
pub fn baseline_select<R: Rng + ?Sized>(
    state: &ExperimentState,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<usize> {
    let beta = config
        .beta
        .ok_or_else(|| BaiError::InvalidConfig(format!("{} requires beta", config.kind)))?;
    if let Some(arm) = forced_exploration_arm(state) {
        return Ok(arm);
    }
    let (leader, challenger) = leader_and_challenger(state, config.kind, rng)?;
    Ok(if rng.random::<f64>() < beta { leader } else { challenger })
}

/// Next arm under `config`'s rule.
pub fn select<R: Rng + ?Sized>(state: &ExperimentState, config: &SamplerConfig, rng: &mut R) -> Result<usize> {
    match config.kind {
        SamplerKind::Tcb => tcb_select(state),
        SamplerKind::Itcb => itcb_select(state),
        SamplerKind::Uniform => Ok((0..state.n_arms())
            .min_by_key(|&i| (state.count(i), i))
            .expect("at least one arm")),
        _ => baseline_select(state, config, rng),
    }
}

/// A single sequential experiment against a simulated instance.
#[derive(Debug, Clone)]
pub struct BaiRun<'a> {
    instance: &'a BanditInstance,
    config: SamplerConfig,
    state: ExperimentState,
    stopping: bool,
    terminal: Option<StepDecision>,
}

impl<'a> BaiRun<'a> {
    pub fn new(instance: &'a BanditInstance, config: SamplerConfig) -> Self {
        Self {
            instance,
            config,
            state: ExperimentState::new(instance.family(), instance.n_arms()),
            stopping: true,
            terminal: None,
        }
    }

    /// Sample forever; the stopping rule is never evaluated.
    pub fn without_stopping(mut self) -> Self {
        self.stopping = false;
        self
    }

    pub fn state(&self) -> &ExperimentState {
        &self.state
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn is_stopped(&self) -> bool {
        self.terminal.is_some()
    }

    /// One round: stopping check, arm selection, reward, state update. Once
    /// stopped, returns the same terminal decision without sampling.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepDecision> {
        if let Some(done) = self.terminal {
            return Ok(done);
        }
        let check = if self.stopping {
            check_stop(&self.state, &self.config)?
        } else {
            StopCheck {
                stopped: false,
                terminal_decision: None,
                gllr_value: 0.0,
                threshold_value: f64::INFINITY,
            }
        };
        if check.stopped {
            let done = StepDecision {
                next_arm: None,
                stopped: true,
                terminal_decision: check.terminal_decision,
                gllr_value: check.gllr_value,
                threshold_value: check.threshold_value,
            };
            self.terminal = Some(done);
            return Ok(done);
        }
        let arm = select(&self.state, &self.config, rng)?;
        let reward = self.instance.sample(arm, rng)?;
        self.state.update(arm, reward);
        Ok(StepDecision {
            next_arm: Some(arm),
            stopped: false,
            terminal_decision: None,
            gllr_value: check.gllr_value,
            threshold_value: check.threshold_value,
        })
    }
}
