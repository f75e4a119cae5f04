//! JSON descriptors for instances: norms, densities, parameters and finite
//! spaces. These are the wire formats the command-line front end parses;
//! they live in the library so tests can exercise them directly.

use crate::comparison::{CdParams, EffectiveDim};
use crate::localization::{FiniteAsymSpace, SpaceError};
use crate::needle1d::{AsymLine, DensityError, NeedleDensity};
use crate::norms::{AsymmetricNorm, NormError, SpdMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("bad extended real: {0}")]
    BadExtended(String),
    #[error("bad norm descriptor: {0}")]
    BadNorm(String),
    #[error("bad density descriptor: {0}")]
    BadDensity(String),
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("bad space: {0}")]
    BadSpace(String),
}

impl From<NormError> for ParseError {
    fn from(e: NormError) -> Self {
        ParseError::BadNorm(e.to_string())
    }
}

impl From<DensityError> for ParseError {
    fn from(e: DensityError) -> Self {
        ParseError::BadDensity(e.to_string())
    }
}

impl From<SpaceError> for ParseError {
    fn from(e: SpaceError) -> Self {
        ParseError::BadSpace(e.to_string())
    }
}

/// An extended real in JSON: a number, or the strings
/// `"inf"` / `"+inf"` / `"-inf"` / `"pi"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtRealSpec {
    Num(f64),
    Word(String),
}

impl ExtRealSpec {
    pub fn to_f64(&self) -> Result<f64, ParseError> {
        match self {
            ExtRealSpec::Num(v) => Ok(*v),
            ExtRealSpec::Word(w) => parse_ext_real(w),
        }
    }
}

/// Parses `"inf"`, `"-inf"`, `"pi"` and plain numbers.
pub fn parse_ext_real(s: &str) -> Result<f64, ParseError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        "pi" => Ok(std::f64::consts::PI),
        other => other
            .parse::<f64>()
            .map_err(|_| ParseError::BadExtended(s.to_string())),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum NormSpec {
    Euclidean { a: Vec<Vec<f64>> },
    Randers { a: Vec<Vec<f64>>, b: Vec<f64> },
    Table { values: Vec<f64> },
}

impl NormSpec {
    pub fn build(&self) -> Result<AsymmetricNorm, ParseError> {
        Ok(match self {
            NormSpec::Euclidean { a } => AsymmetricNorm::euclidean(
                SpdMatrix::from_rows(a).map_err(ParseError::from)?,
            ),
            NormSpec::Randers { a, b } => AsymmetricNorm::randers(
                SpdMatrix::from_rows(a).map_err(ParseError::from)?,
                b.clone(),
            )?,
            NormSpec::Table { values } => AsymmetricNorm::table(values.clone())?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum DensitySpec {
    Uniform { domain: [f64; 2] },
    SinPower { kappa: f64, exponent: f64 },
    Gaussian { k: f64, #[serde(default)] center: f64 },
    ExpTilt { rate: f64, domain: [ExtRealSpec; 2] },
    Grid { xs: Vec<f64>, ys: Vec<f64> },
}

impl DensitySpec {
    pub fn build(&self) -> Result<NeedleDensity, ParseError> {
        Ok(match self {
            DensitySpec::Uniform { domain } => NeedleDensity::uniform(domain[0], domain[1])?,
            DensitySpec::SinPower { kappa, exponent } => {
                NeedleDensity::sin_power(*kappa, *exponent)?
            }
            DensitySpec::Gaussian { k, center } => {
                NeedleDensity::gaussian_centered(*k, *center)?
            }
            DensitySpec::ExpTilt { rate, domain } => {
                NeedleDensity::exp_tilt(*rate, domain[0].to_f64()?, domain[1].to_f64()?)?
            }
            DensitySpec::Grid { xs, ys } => NeedleDensity::from_grid(xs.clone(), ys.clone())?,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsSpec {
    pub k: f64,
    pub n: ExtRealSpec,
    #[serde(default = "default_topdim")]
    pub n_top: u32,
}

fn default_topdim() -> u32 {
    1
}

impl ParamsSpec {
    pub fn build(&self) -> Result<CdParams, ParseError> {
        let n = self.n.to_f64()?;
        let eff = if n.is_infinite() && n > 0.0 {
            EffectiveDim::Infinite
        } else if n.is_finite() {
            EffectiveDim::Finite(n)
        } else {
            return Err(ParseError::BadParams("N must be finite or +inf".into()));
        };
        CdParams::new(self.k, eff, self.n_top)
            .map_err(|e| ParseError::BadParams(e.to_string()))
    }
}

/// Localization instance: `{"points": [...], "d": [[...]], "m": [...],
/// "f": [...]}`. Labels default to indices when omitted.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizeSpec {
    #[serde(default)]
    pub points: Vec<String>,
    pub d: Vec<Vec<f64>>,
    pub m: Vec<f64>,
    pub f: Vec<f64>,
}

impl LocalizeSpec {
    pub fn build(&self, metric_repair: bool) -> Result<(FiniteAsymSpace, Vec<f64>), ParseError> {
        let labels = if self.points.is_empty() {
            (0..self.d.len()).map(|i| i.to_string()).collect()
        } else {
            self.points.clone()
        };
        let space = if metric_repair {
            FiniteAsymSpace::with_metric_repair(labels, self.d.clone(), self.m.clone())?
        } else {
            FiniteAsymSpace::new(labels, self.d.clone(), self.m.clone())?
        };
        if self.f.len() != space.len() {
            return Err(ParseError::BadSpace("f must match the point count".into()));
        }
        Ok((space, self.f.clone()))
    }
}

/// Needle-check instance: density, parameters and requested checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NeedleCheckSpec {
    pub density: DensitySpec,
    pub params: ParamsSpec,
    #[serde(default = "default_checks")]
    pub checks: Vec<String>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Mollification widths to exercise, if any.
    #[serde(default)]
    pub mollify_eps: Vec<f64>,
}

fn default_checks() -> Vec<String> {
    vec!["cd".into(), "differential".into()]
}

fn default_trials() -> usize {
    10_000
}

/// Asymmetric-line descriptor for needle instances.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymLineSpec {
    pub backward_factor: f64,
}

impl AsymLineSpec {
    pub fn build(&self) -> AsymLine {
        AsymLine::new(self.backward_factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn randers_descriptor_round_trip() {
        let json = r#"{"form":"randers","a":[[1.0,0.0],[0.0,1.0]],"b":[0.5,0.0]}"#;
        let spec: NormSpec = serde_json::from_str(json).unwrap();
        let norm = spec.build().unwrap();
        assert!((norm.evaluate(&[1.0, 0.0]) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn density_descriptor_with_infinite_end() {
        let json = r#"{"form":"exp-tilt","rate":1.0,"domain":[0.0,"inf"]}"#;
        let spec: DensitySpec = serde_json::from_str(json).unwrap();
        let d = spec.build().unwrap();
        assert!(d.domain().1.is_infinite());
    }

    #[test]
    fn params_descriptor_accepts_inf() {
        let json = r#"{"k":1.0,"n":"inf"}"#;
        let spec: ParamsSpec = serde_json::from_str(json).unwrap();
        let p = spec.build().unwrap();
        assert_eq!(p.n_eff(), EffectiveDim::Infinite);
    }

    #[test]
    fn localize_descriptor_parses_matrix() {
        let json = r#"{"d":[[0.0,1.0],[2.0,0.0]],"m":[0.5,0.5],"f":[1.0,-1.0]}"#;
        let spec: LocalizeSpec = serde_json::from_str(json).unwrap();
        let (space, f) = spec.build(false).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(f, vec![1.0, -1.0]);
    }

    #[test]
    fn ext_real_words() {
        assert_eq!(parse_ext_real("pi").unwrap(), std::f64::consts::PI);
        assert!(parse_ext_real("inf").unwrap().is_infinite());
        assert!(parse_ext_real("bogus").is_err());
    }
}
