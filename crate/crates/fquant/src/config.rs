//! Experiment configuration: one TOML document per experiment, parsed
//! strictly (unknown keys are rejected, naming the key) and validated
//! against the module preconditions before any work starts.

use serde::Deserialize;
use std::path::Path;

use crate::allocation::Modulus;
use crate::error::{Error, Result};
use crate::procsim::{JumpLaw, ProcessSpec};
use crate::ratelab::natural_modulus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ScalarPierce,
    HaarCurve,
    CppCurve,
    Regularity,
    Report,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub family: String,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    pub hurst: Option<f64>,
    pub alpha: Option<f64>,
    pub rate: Option<f64>,
    pub lambda: Option<f64>,
    pub jump_law: Option<JumpLawSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpLawSection {
    pub family: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub rate: Option<f64>,
    pub prob_hi: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    #[serde(default = "default_two")]
    pub r: f64,
    #[serde(default = "default_two")]
    pub p: f64,
    #[serde(default = "default_two")]
    pub rho: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

impl Default for ExponentsSection {
    fn default() -> Self {
        Self { r: 2.0, p: 2.0, rho: 2.0, delta: 0.5 }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BudgetsSection {
    /// Explicit budget list.
    pub list: Option<Vec<u64>>,
    /// Budgets `2^k` for each exponent `k`.
    pub log2: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    #[serde(default = "default_train")]
    pub train: usize,
    #[serde(default = "default_eval")]
    pub eval: usize,
    #[serde(default = "default_eval")]
    pub regularity: usize,
}

impl Default for PathsSection {
    fn default() -> Self {
        Self { train: default_train(), eval: default_eval(), regularity: default_eval() }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Dyadic grid level; defaults per experiment when absent.
    pub level: Option<u32>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PhiSection {
    pub exponent: Option<f64>,
    #[serde(default = "default_one")]
    pub coeff: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RegularitySection {
    /// Ladder rungs `h = T * 2^k`; `k` must be negative.
    pub h_log2: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScalarSection {
    /// `gaussian` or `uniform`.
    pub law: Option<String>,
    pub sizes: Option<Vec<usize>>,
}

fn default_horizon() -> f64 {
    1.0
}
fn default_two() -> f64 {
    2.0
}
fn default_one() -> f64 {
    1.0
}
fn default_delta() -> f64 {
    0.5
}
fn default_train() -> usize {
    100_000
}
fn default_eval() -> usize {
    20_000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out_dir: Option<String>,
    #[serde(default)]
    pub process: Option<ProcessSection>,
    #[serde(default)]
    pub exponents: ExponentsSection,
    #[serde(default)]
    pub budgets: BudgetsSection,
    #[serde(default)]
    pub paths: PathsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub phi: PhiSection,
    #[serde(default)]
    pub regularity: RegularitySection,
    #[serde(default)]
    pub scalar: ScalarSection,
}

impl ExperimentConfig {
    pub fn from_str_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)?;
        Ok((Self::from_str_toml(&text)?, text))
    }

    /// Resolved budget list (strictly increasing).
    pub fn budget_list(&self) -> Result<Vec<u64>> {
        let list = match (&self.budgets.list, &self.budgets.log2) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "budgets: give either `list` or `log2`, not both".into(),
                ))
            }
            (Some(list), None) => list.clone(),
            (None, Some(exps)) => exps.iter().map(|&k| 1u64 << k.min(62)).collect(),
            (None, None) => return Err(Error::Config("budgets: missing `list` or `log2`".into())),
        };
        if list.is_empty() {
            return Err(Error::Config("budgets: empty list".into()));
        }
        if list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("budgets: must be strictly increasing".into()));
        }
        Ok(list)
    }

    /// The process spec, when the experiment needs one.
    pub fn process_spec(&self) -> Result<ProcessSpec> {
        let section = self
            .process
            .as_ref()
            .ok_or_else(|| Error::Config("process: section required".into()))?;
        let spec = match section.family.as_str() {
            "brownian" => ProcessSpec::Brownian,
            "fbm" => ProcessSpec::Fbm {
                hurst: section
                    .hurst
                    .ok_or_else(|| Error::Config("process.hurst: required for fbm".into()))?,
            },
            "stable" => ProcessSpec::Stable {
                alpha: section
                    .alpha
                    .ok_or_else(|| Error::Config("process.alpha: required for stable".into()))?,
            },
            "gamma" => ProcessSpec::GammaSubordinator {
                rate: section
                    .rate
                    .ok_or_else(|| Error::Config("process.rate: required for gamma".into()))?,
            },
            "poisson" => ProcessSpec::Poisson {
                lambda: section
                    .lambda
                    .ok_or_else(|| Error::Config("process.lambda: required for poisson".into()))?,
            },
            "compound-poisson" => ProcessSpec::CompoundPoisson {
                lambda: section.lambda.ok_or_else(|| {
                    Error::Config("process.lambda: required for compound-poisson".into())
                })?,
                jump_law: section
                    .jump_law
                    .as_ref()
                    .ok_or_else(|| {
                        Error::Config("process.jump_law: required for compound-poisson".into())
                    })?
                    .to_law()?,
            },
            other => {
                return Err(Error::Config(format!("process.family: unknown family {other:?}")))
            }
        };
        spec.validate().map_err(|e| Error::Config(format!("process: {e}")))?;
        Ok(spec)
    }

    pub fn horizon(&self) -> f64 {
        self.process.as_ref().map_or(1.0, |p| p.horizon)
    }

    /// Modulus for haar-curve allocation: [phi] when given, the family's
    /// natural modulus otherwise.
    pub fn modulus(&self) -> Result<Modulus> {
        if let Some(b) = self.phi.exponent {
            return Modulus::power(self.phi.coeff, b)
                .map_err(|e| Error::Config(format!("phi: {e}")));
        }
        let spec = self.process_spec()?;
        natural_modulus(spec, self.exponents.p)
            .ok_or_else(|| Error::Config("phi.exponent: required for jump families".into()))
    }

    /// Ladder rungs in time units.
    pub fn h_ladder(&self) -> Result<Vec<f64>> {
        let horizon = self.horizon();
        let exps = self
            .regularity
            .h_log2
            .clone()
            .unwrap_or_else(|| (-9..=-3).collect::<Vec<i32>>());
        if exps.iter().any(|&k| k >= 0) {
            return Err(Error::Config("regularity.h_log2: exponents must be negative".into()));
        }
        let mut ladder: Vec<f64> = exps.iter().map(|&k| horizon * 2f64.powi(k)).collect();
        ladder.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        Ok(ladder)
    }

    fn validate(&self) -> Result<()> {
        let ex = &self.exponents;
        if !(ex.r > 0.0) {
            return Err(Error::Config(format!("exponents.r: must be positive, got {}", ex.r)));
        }
        if !(ex.p > 0.0) {
            return Err(Error::Config(format!("exponents.p: must be positive, got {}", ex.p)));
        }
        if !(ex.rho > 0.0) {
            return Err(Error::Config(format!("exponents.rho: must be positive, got {}", ex.rho)));
        }
        if !(ex.delta > 0.0) {
            return Err(Error::Config(format!(
                "exponents.delta: must be positive, got {}",
                ex.delta
            )));
        }
        if let Some(level) = self.grid.level {
            if !(1..=26).contains(&level) {
                return Err(Error::Config(format!("grid.level: must be in 1..=26, got {level}")));
            }
        }
        match self.kind {
            ExperimentKind::ScalarPierce => {
                let law = self.scalar.law.as_deref().unwrap_or("gaussian");
                if !matches!(law, "gaussian" | "uniform") {
                    return Err(Error::Config(format!("scalar.law: unknown law {law:?}")));
                }
            }
            ExperimentKind::HaarCurve => {
                self.process_spec()?;
                self.budget_list()?;
                self.modulus()?;
            }
            ExperimentKind::CppCurve => {
                let spec = self.process_spec()?;
                if !matches!(
                    spec,
                    ProcessSpec::Poisson { .. } | ProcessSpec::CompoundPoisson { .. }
                ) {
                    return Err(Error::Config(
                        "process.family: cpp-curve needs poisson or compound-poisson".into(),
                    ));
                }
                if ex.r < 1.0 {
                    return Err(Error::Config(format!(
                        "exponents.r: cpp-curve needs r >= 1, got {}",
                        ex.r
                    )));
                }
                if ex.p < 1.0 || ex.p > ex.r {
                    return Err(Error::Config(format!(
                        "exponents.p: cpp-curve needs 1 <= p <= r, got p={} with r={}",
                        ex.p, ex.r
                    )));
                }
                let budgets = self.budget_list()?;
                if budgets.iter().any(|&n| n < 2) {
                    return Err(Error::Config("budgets: cpp-curve budgets must be >= 2".into()));
                }
            }
            ExperimentKind::Regularity => {
                self.process_spec()?;
                self.h_ladder()?;
            }
            ExperimentKind::Report => {
                let spec = self.process_spec()?;
                self.budget_list()?;
                self.h_ladder()?;
                let jumpy = matches!(
                    spec,
                    ProcessSpec::Poisson { .. } | ProcessSpec::CompoundPoisson { .. }
                );
                if jumpy && (ex.p < 1.0 || ex.p > ex.r) {
                    return Err(Error::Config(format!(
                        "exponents.p: report on a jump family needs 1 <= p <= r, got p={}",
                        ex.p
                    )));
                }
                if !jumpy {
                    self.modulus()?;
                }
            }
        }
        Ok(())
    }
}

impl JumpLawSection {
    fn to_law(&self) -> Result<JumpLaw> {
        let missing =
            |k: &str| Error::Config(format!("process.jump_law.{k}: required for this family"));
        let law = match self.family.as_str() {
            "gaussian" => JumpLaw::Gaussian {
                mean: self.mean.ok_or_else(|| missing("mean"))?,
                std: self.std.ok_or_else(|| missing("std"))?,
            },
            "uniform" => JumpLaw::Uniform {
                lo: self.lo.ok_or_else(|| missing("lo"))?,
                hi: self.hi.ok_or_else(|| missing("hi"))?,
            },
            "exponential" => {
                JumpLaw::Exponential { rate: self.rate.ok_or_else(|| missing("rate"))? }
            }
            "two-point" => JumpLaw::TwoPoint {
                lo: self.lo.ok_or_else(|| missing("lo"))?,
                hi: self.hi.ok_or_else(|| missing("hi"))?,
                prob_hi: self.prob_hi.ok_or_else(|| missing("prob_hi"))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "process.jump_law.family: unknown family {other:?}"
                )))
            }
        };
        law.validate().map_err(|e| Error::Config(format!("process.jump_law: {e}")))?;
        Ok(law)
    }
}
