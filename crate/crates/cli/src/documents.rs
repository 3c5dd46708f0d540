//! Declarative scenario and grid documents (TOML).
//!
//! A law table names a `family` plus its parameters:
//!
//! | family            | keys (defaults)                                              |
//! |-------------------|--------------------------------------------------------------|
//! | `normal`          | `p`, `c0` (0.5), `mean` (0), `covariance` (`"structured"`), `covariance_seed` (1) |
//! | `student-t`       | `p`, `df`, `c0` (0.5)                                        |
//! | `cauchy`          | `p`, `c0` (0.5)                                              |
//! | `gaussian-copula` | `p`, `rate`, `c0` (0.5)                                      |
//! | `clayton-copula`  | `p`, `xi`, `rate`                                            |
//! | `uniform-norms`   | none                                                         |
//!
//! `covariance` is `"structured"`, `"case-one"` (variances in [0.1, 0.5]) or
//! `"case-two"` (variances in [1.5, 2.5]); the random cases are drawn once
//! from `covariance_seed`.
//!
//! A scenario document has `tau` and two law tables `[ic]` and `[ooc]`. A
//! grid document has `horizon`, a `limits` list of limits files (relative
//! paths resolve against the grid file) and one or more `[[scenario]]`
//! tables, each with a `label`, `tau`, `ic` and `ooc`.

use std::fs;
use std::path::{Path, PathBuf};

use driftwatch_core::sampling::{covariance_structured, random_pd_covariance, RandomCovarianceSpec};
use driftwatch_core::{ChangeScenario, DistributionSpec, RngStream};
use serde::Deserialize;

use crate::error::{CliError, Result};

fn default_c0() -> f64 {
    0.5
}

fn default_covariance_seed() -> u64 {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceKind {
    #[default]
    Structured,
    CaseOne,
    CaseTwo,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawDoc {
    Normal {
        p: usize,
        #[serde(default = "default_c0")]
        c0: f64,
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        covariance: CovarianceKind,
        #[serde(default = "default_covariance_seed")]
        covariance_seed: u64,
    },
    StudentT {
        p: usize,
        df: f64,
        #[serde(default = "default_c0")]
        c0: f64,
    },
    Cauchy {
        p: usize,
        #[serde(default = "default_c0")]
        c0: f64,
    },
    GaussianCopula {
        p: usize,
        rate: f64,
        #[serde(default = "default_c0")]
        c0: f64,
    },
    ClaytonCopula {
        p: usize,
        xi: f64,
        rate: f64,
    },
    UniformNorms,
}

impl LawDoc {
    pub fn build(&self) -> Result<DistributionSpec> {
        Ok(match *self {
            LawDoc::Normal { p, c0, mean, covariance, covariance_seed } => {
                let cov = match covariance {
                    CovarianceKind::Structured => covariance_structured(p, c0)?,
                    CovarianceKind::CaseOne | CovarianceKind::CaseTwo => {
                        let spec = if covariance == CovarianceKind::CaseOne {
                            RandomCovarianceSpec::case_one(p)
                        } else {
                            RandomCovarianceSpec::case_two(p)
                        };
                        random_pd_covariance(&spec, &mut RngStream::new(covariance_seed, 0).rng())?
                    }
                };
                DistributionSpec::normal(vec![mean; p], cov)?
            }
            LawDoc::StudentT { p, df, c0 } => DistributionSpec::student_t(df, covariance_structured(p, c0)?)?,
            LawDoc::Cauchy { p, c0 } => DistributionSpec::student_t(1.0, covariance_structured(p, c0)?)?,
            LawDoc::GaussianCopula { p, rate, c0 } => DistributionSpec::structured_gaussian_copula(p, c0, rate)?,
            LawDoc::ClaytonCopula { p, xi, rate } => DistributionSpec::clayton_copula(p, xi, rate)?,
            LawDoc::UniformNorms => DistributionSpec::UniformNorms,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub tau: usize,
    pub ic: LawDoc,
    pub ooc: LawDoc,
}

impl ScenarioDoc {
    pub fn build(&self) -> Result<ChangeScenario> {
        Ok(ChangeScenario::new(self.ic.build()?, self.ooc.build()?, self.tau)?)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridScenario {
    pub label: String,
    pub tau: usize,
    pub ic: LawDoc,
    pub ooc: LawDoc,
}

impl GridScenario {
    pub fn build(&self) -> Result<ChangeScenario> {
        Ok(ChangeScenario::new(self.ic.build()?, self.ooc.build()?, self.tau)?)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub horizon: usize,
    pub limits: Vec<PathBuf>,
    pub scenario: Vec<GridScenario>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::format(path, e))
}

pub fn read_scenario(path: &Path) -> Result<ChangeScenario> {
    read_toml::<ScenarioDoc>(path)?.build()
}

/// Reads a grid document; limits paths are returned resolved.
pub fn read_grid(path: &Path) -> Result<GridDoc> {
    let mut grid: GridDoc = read_toml(path)?;
    if grid.limits.is_empty() || grid.scenario.is_empty() {
        return Err(CliError::format(path, "a grid needs at least one limits file and one scenario"));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for l in &mut grid.limits {
        if l.is_relative() {
            *l = base.join(&*l);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_family() {
        let doc: ScenarioDoc = toml::from_str(
            r#"
            tau = 50
            ic = { family = "normal", p = 4 }
            ooc = { family = "normal", p = 4, mean = 1.5, covariance = "case-two" }
            "#,
        )
        .unwrap();
        let s = doc.build().unwrap();
        assert_eq!(s.tau, 50);
        match &s.ooc {
            DistributionSpec::Normal { mean, cov } => {
                assert_eq!(mean, &vec![1.5; 4]);
                assert!((0..4).all(|i| (1.5..=2.5).contains(&cov.entries()[(i, i)])));
            }
            other => panic!("{other:?}"),
        }
        for law in [
            r#"family = "student-t"
p = 3
df = 5"#,
            r#"family = "cauchy"
p = 3"#,
            r#"family = "gaussian-copula"
p = 3
rate = 2.0"#,
            r#"family = "clayton-copula"
p = 3
xi = 2.0
rate = 0.5"#,
            r#"family = "uniform-norms""#,
        ] {
            let l: LawDoc = toml::from_str(law).unwrap();
            l.build().unwrap();
        }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_laws() {
        assert!(toml::from_str::<LawDoc>("family = \"normal\"\np = 3\nsigma = 2").is_err());
        assert!(toml::from_str::<LawDoc>("family = \"lognormal\"\np = 3").is_err());
        let bad: LawDoc = toml::from_str("family = \"clayton-copula\"\np = 3\nxi = -1.0\nrate = 1.0").unwrap();
        assert!(bad.build().is_err());
        let mismatch: ScenarioDoc = toml::from_str(
            "tau = 5\nic = { family = \"normal\", p = 3 }\nooc = { family = \"normal\", p = 4 }",
        )
        .unwrap();
        assert!(mismatch.build().is_err());
    }
}
