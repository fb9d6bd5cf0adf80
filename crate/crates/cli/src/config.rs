//! Experiment manifests.
//!
//! A manifest is a TOML file. Top-level keys set run-wide defaults; each
//! `[[instance]]` table names a preset or spells out a custom instance, and
//! each `[[algorithm]]` table picks a sampler with optional per-algorithm
//! `beta`, `delta` and `alpha`. Command-line flags override the file.
//!
//! ```toml
//! seed = 7
//! trials = 500
//! delta = 0.1
//!
//! [[instance]]
//! preset = "bernoulli-benchmark"
//!
//! [[instance]]
//! id = "two-arm"
//! family = "gaussian"
//! variance = 1.0
//! means = [1.0, 0.0]
//!
//! [[algorithm]]
//! name = "TCB"
//!
//! [[algorithm]]
//! name = "TT-SPRT"
//! beta = 0.5
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use tcb_core::instances;
use tcb_core::model::{BanditInstance, DistributionFamily, DEFAULT_POISSON_MAX_MEAN};
use tcb_core::samplers::{SamplerConfig, SamplerKind, DEFAULT_ALPHA};

pub const DEFAULT_TRIALS: u64 = 100;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_BETAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
    pub horizon: Option<u64>,
    pub checkpoints: Option<Vec<u64>>,
    pub betas: Option<Vec<f64>>,
    #[serde(default, rename = "instance")]
    pub instances: Vec<InstanceSpec>,
    #[serde(default, rename = "algorithm")]
    pub algorithms: Vec<AlgorithmSpec>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub id: Option<String>,
    pub preset: Option<String>,
    pub family: Option<String>,
    pub means: Option<Vec<f64>>,
    pub variance: Option<f64>,
    pub max_mean: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub name: String,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
}

/// Flag values; every `Some` wins over the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub parallelism: Option<usize>,
    pub out: Option<PathBuf>,
    pub horizon: Option<u64>,
    pub instances: Vec<String>,
    pub algorithms: Vec<String>,
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub seed: u64,
    pub trials: u64,
    pub parallelism: usize,
    pub out: PathBuf,
    pub horizon: u64,
    pub checkpoints: Option<Vec<u64>>,
    pub betas: Vec<f64>,
    pub delta: f64,
    pub alpha: f64,
    pub instances: Vec<(String, BanditInstance)>,
    pub algorithms: Vec<Algorithm>,
}

/// A sampler choice whose `beta` may still be open (the sweep supplies it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Algorithm {
    pub kind: SamplerKind,
    pub beta: Option<f64>,
    pub delta: f64,
    pub alpha: f64,
}

impl Algorithm {
    /// The full sampler configuration; top-two rules need `beta` by now.
    pub fn config(&self) -> Result<SamplerConfig> {
        SamplerConfig::new(self.kind, self.beta, self.delta, self.alpha).with_context(|| format!("algorithm {}", self.kind))
    }
}

impl ManifestFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

fn family_from(spec: &InstanceSpec) -> Result<DistributionFamily> {
    let name = spec.family.as_deref().unwrap_or("bernoulli").to_ascii_lowercase();
    let fam = match name.as_str() {
        "bernoulli" => {
            if spec.variance.is_some() || spec.max_mean.is_some() {
                bail!("bernoulli instances take neither variance nor max_mean");
            }
            DistributionFamily::Bernoulli
        }
        "gaussian" => {
            if spec.max_mean.is_some() {
                bail!("gaussian instances do not take max_mean");
            }
            DistributionFamily::gaussian(spec.variance.unwrap_or(1.0))?
        }
        "poisson" => {
            if spec.variance.is_some() {
                bail!("poisson instances do not take variance");
            }
            DistributionFamily::poisson(spec.max_mean.unwrap_or(DEFAULT_POISSON_MAX_MEAN))?
        }
        other => bail!("unknown family '{other}' (expected bernoulli, gaussian or poisson)"),
    };
    Ok(fam)
}

fn build_instance(spec: &InstanceSpec, index: usize) -> Result<(String, BanditInstance)> {
    if let Some(preset) = &spec.preset {
        if spec.family.is_some() || spec.means.is_some() || spec.variance.is_some() || spec.max_mean.is_some() {
            bail!("instance '{preset}': a preset cannot also set family, means, variance or max_mean");
        }
        let inst = instances::by_name(preset).with_context(|| {
            format!("unknown preset '{preset}' (known: {})", instances::PRESET_NAMES.join(", "))
        })?;
        return Ok((spec.id.clone().unwrap_or_else(|| preset.clone()), inst));
    }
    let id = spec.id.clone().unwrap_or_else(|| format!("instance{}", index + 1));
    let means = spec
        .means
        .clone()
        .with_context(|| format!("instance '{id}': needs either preset or means"))?;
    let fam = family_from(spec).with_context(|| format!("instance '{id}'"))?;
    let inst = BanditInstance::new(fam, means).with_context(|| format!("instance '{id}'"))?;
    Ok((id, inst))
}

fn check_positive(name: &str, v: u64) -> Result<u64> {
    if v == 0 {
        bail!("{name} must be at least 1");
    }
    Ok(v)
}

impl Experiment {
    /// Merge a manifest with flag overrides and validate every field.
    pub fn resolve(file: ManifestFile, flags: Overrides) -> Result<Self> {
        let seed = flags.seed.or(file.seed).unwrap_or(0);
        let trials = check_positive("trials", flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS))?;
        let horizon = check_positive("horizon", flags.horizon.or(file.horizon).unwrap_or(DEFAULT_HORIZON))?;
        let parallelism = flags
            .parallelism
            .or(file.parallelism)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from));
        if parallelism == 0 {
            bail!("parallelism must be at least 1");
        }
        let out = flags.out.or(file.out).unwrap_or_else(|| PathBuf::from("."));
        let delta = flags.delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
        let alpha = flags.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(delta > 0.0 && delta < 1.0) {
            bail!("delta must lie in (0, 1), got {delta}");
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            bail!("alpha must be positive, got {alpha}");
        }

        let betas = file.betas.unwrap_or_else(|| DEFAULT_BETAS.to_vec());
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            bail!("betas must lie in (0, 1), got {b}");
        }

        if let Some(cp) = &file.checkpoints {
            if cp.is_empty() || cp[0] == 0 || cp.windows(2).any(|w| w[0] >= w[1]) {
                bail!("checkpoints must be positive and strictly increasing");
            }
            if let Some(&last) = cp.last().filter(|&&c| c > horizon) {
                bail!("checkpoint {last} exceeds horizon {horizon}");
            }
        }

        let inst_specs: Vec<InstanceSpec> = if flags.instances.is_empty() {
            file.instances
        } else {
            flags
                .instances
                .iter()
                .map(|p| InstanceSpec {
                    preset: Some(p.clone()),
                    ..Default::default()
                })
                .collect()
        };
        let instances = inst_specs
            .iter()
            .enumerate()
            .map(|(i, s)| build_instance(s, i))
            .collect::<Result<Vec<_>>>()?;
        if instances.is_empty() {
            bail!("no instances configured");
        }
        let mut ids: Vec<&str> = instances.iter().map(|(id, _)| id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            bail!("duplicate instance id '{}'", w[0]);
        }

        let algo_specs: Vec<AlgorithmSpec> = if flags.algorithms.is_empty() {
            file.algorithms
        } else {
            flags
                .algorithms
                .iter()
                .map(|n| AlgorithmSpec {
                    name: n.clone(),
                    ..Default::default()
                })
                .collect()
        };
        let algorithms = algo_specs
            .iter()
            .map(|a| {
                let kind: SamplerKind = a.name.parse()?;
                let beta = if kind.is_top_two() { flags.beta.or(a.beta) } else { a.beta };
                let delta = flags.delta.or(a.delta).unwrap_or(delta);
                let alpha = flags.alpha.or(a.alpha).unwrap_or(alpha);
                // Validate everything except a still-missing beta.
                SamplerConfig::new(kind, beta.or(kind.is_top_two().then_some(0.5)), delta, alpha)
                    .with_context(|| format!("algorithm '{}'", a.name))?;
                Ok(Algorithm {
                    kind,
                    beta,
                    delta,
                    alpha,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            seed,
            trials,
            parallelism,
            out,
            horizon,
            checkpoints: file.checkpoints,
            betas,
            delta,
            alpha,
            instances,
            algorithms,
        })
    }

    pub fn require_algorithms(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            bail!("no algorithms configured");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<Experiment> {
        Experiment::resolve(ManifestFile::parse(text)?, Overrides::default())
    }

    #[test]
    fn presets_and_custom() {
        let e = resolve(
            r#"
            seed = 3
            [[instance]]
            preset = "nu1"
            [[instance]]
            id = "g"
            family = "gaussian"
            variance = 2.0
            means = [0.0, 1.0]
            [[algorithm]]
            name = "tcb"
            [[algorithm]]
            name = "EB-TCI"
            beta = 0.4
            delta = 0.01
            "#,
        )
        .unwrap();
        assert_eq!(e.seed, 3);
        assert_eq!(e.instances[0].0, "nu1");
        assert_eq!(e.instances[1].1.family(), DistributionFamily::Gaussian { variance: 2.0 });
        assert_eq!(e.instances[1].1.best_arm(), 1);
        assert_eq!(e.algorithms[1].beta, Some(0.4));
        assert_eq!(e.algorithms[1].delta, 0.01);
        assert_eq!(e.algorithms[0].delta, DEFAULT_DELTA);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ManifestFile::parse("sede = 1").is_err());
        assert!(ManifestFile::parse("[[instance]]\npreset = \"nu1\"\ncolour = 1").is_err());
    }

    #[test]
    fn invalid_fields_rejected() {
        let base = "[[instance]]\npreset = \"nu1\"\n";
        assert!(resolve(&format!("delta = 1.5\n{base}")).is_err());
        assert!(resolve(&format!("trials = 0\n{base}")).is_err());
        assert!(resolve(&format!("betas = [0.0]\n{base}")).is_err());
        assert!(resolve(&format!("horizon = 10\ncheckpoints = [5, 20]\n{base}")).is_err());
        assert!(resolve(&format!("{base}[[algorithm]]\nname = \"TT-SPRT\"\nbeta = 1.0\n")).is_err());
        assert!(resolve(&format!("{base}[[algorithm]]\nname = \"TCB\"\nbeta = 0.5\n")).is_err());
        let open = resolve(&format!("{base}[[algorithm]]\nname = \"TT-SPRT\"\n")).unwrap();
        assert!(open.algorithms[0].config().is_err());
        assert!(resolve(&format!("{base}[[algorithm]]\nname = \"nope\"\n")).is_err());
        assert!(resolve("[[instance]]\nmeans = [0.5, 0.5]\n").is_err());
        assert!(resolve("[[instance]]\npreset = \"nu1\"\nmeans = [0.5, 0.4]\n").is_err());
        assert!(resolve("").is_err());
    }

    #[test]
    fn tie_message() {
        let err = resolve("[[instance]]\nmeans = [0.5, 0.5, 0.1]\n").unwrap_err();
        assert!(format!("{err:#}").contains("ambiguous best arm"));
    }

    #[test]
    fn flags_win() {
        let file = ManifestFile::parse(
            "seed = 1\ndelta = 0.2\n[[instance]]\npreset = \"nu1\"\n[[algorithm]]\nname = \"TCB\"\ndelta = 0.3\n",
        )
        .unwrap();
        let flags = Overrides {
            seed: Some(9),
            delta: Some(0.05),
            instances: vec!["nu4".into()],
            ..Default::default()
        };
        let e = Experiment::resolve(file, flags).unwrap();
        assert_eq!(e.seed, 9);
        assert_eq!(e.algorithms[0].delta, 0.05);
        assert_eq!(e.instances.len(), 1);
        assert_eq!(e.instances[0].0, "nu4");
    }
}
