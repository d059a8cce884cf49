//! Run configuration: which map to study and how hard to look at it.
//!
//! Configurations are JSON. Every field has a default, so `{}` is a valid
//! configuration describing the reference toy map.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::henon::HenonMap3D;
use crate::unimodal::{solve_fixed_point, UnimodalMap};

/// Deepest renormalization tower a configuration may request.
pub const MAX_DEPTH: usize = 10;

/// Accumulation point of the cascade of `toy-affine(0.1, 0.001, mu)`.
pub const REFERENCE_MU: f64 = 1.561_509_064_467_65;

/// A named one-parameter family member.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// `(f*(x), x, 0)` for the renormalization fixed point `f*`.
    Degenerate,
    /// `(1 - mu x² - b1 y, x, b2 z)`.
    ToyAffine { b1: f64, b2: f64, mu: f64 },
    /// `toy-affine` with `eta z` added to `ε` and `eta x y` added to `δ`.
    PerturbedToy { b1: f64, b2: f64, mu: f64, eta: f64 },
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], &s[i + 1..s.len() - 1]),
            Some(_) => return Err(Error::Invalid(format!("unbalanced parentheses in {s:?}"))),
            None => (s, ""),
        };
        let args = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Invalid(format!("bad number {a:?} in {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() != n {
                return Err(Error::Invalid(format!(
                    "{name} takes {n} parameters, got {}",
                    args.len()
                )));
            }
            Ok(())
        };
        match name.trim() {
            "degenerate" => {
                arity(0)?;
                Ok(Family::Degenerate)
            }
            "toy-affine" => {
                arity(3)?;
                Ok(Family::ToyAffine {
                    b1: args[0],
                    b2: args[1],
                    mu: args[2],
                })
            }
            "perturbed-toy" => {
                arity(4)?;
                Ok(Family::PerturbedToy {
                    b1: args[0],
                    b2: args[1],
                    mu: args[2],
                    eta: args[3],
                })
            }
            other => Err(Error::Invalid(format!(
                "unknown family {other:?}; expected degenerate, toy-affine or perturbed-toy"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Family::Degenerate => write!(f, "degenerate"),
            Family::ToyAffine { b1, b2, mu } => write!(f, "toy-affine({b1},{b2},{mu})"),
            Family::PerturbedToy { b1, b2, mu, eta } => {
                write!(f, "perturbed-toy({b1},{b2},{mu},{eta})")
            }
        }
    }
}

/// The map of a run: a named family member or explicit field coefficients in
/// the JSON layout of [`HenonMap3D`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MapSpec {
    Named(String),
    Explicit(Box<HenonMap3D>),
}

// Untagged enums buffer their input, which loses arbitrary-precision numbers,
// so the choice is made on a parsed JSON value instead.
impl<'de> Deserialize<'de> for MapSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(MapSpec::Named(s)),
            v @ serde_json::Value::Object(_) => serde_json::from_value(v)
                .map(|m| MapSpec::Explicit(Box::new(m)))
                .map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "map must be a family name or an object of coefficients, got {other}"
            ))),
        }
    }
}

impl Default for MapSpec {
    fn default() -> Self {
        MapSpec::Named(
            Family::ToyAffine {
                b1: 0.1,
                b2: 0.001,
                mu: REFERENCE_MU,
            }
            .to_string(),
        )
    }
}

impl MapSpec {
    pub fn family(&self) -> Result<Option<Family>> {
        match self {
            MapSpec::Named(s) => s.parse().map(Some),
            MapSpec::Explicit(_) => Ok(None),
        }
    }

    /// Builds the map. The degenerate family solves for the fixed point at
    /// the given degree and tolerance.
    pub fn build(&self, degree: usize, tol: f64) -> Result<HenonMap3D> {
        match self {
            MapSpec::Explicit(m) => Ok((**m).clone()),
            MapSpec::Named(s) => Ok(match s.parse::<Family>()? {
                Family::Degenerate => {
                    let fp = solve_fixed_point(degree, tol)?;
                    HenonMap3D::degenerate(fp.map.f)
                }
                Family::ToyAffine { b1, b2, mu } => HenonMap3D::toy_affine(b1, b2, mu),
                Family::PerturbedToy { b1, b2, mu, eta } => {
                    HenonMap3D::perturbed_toy(b1, b2, mu, eta)
                }
            }),
        }
    }
}

/// Tolerances of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Newton tolerance of the fixed-point solver.
    pub fixed_point: f64,
    /// Largest diameter of the `vⁿ` piece accepted as the tip.
    pub tip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fixed_point: 1e-6,
            tip: 1e-2,
        }
    }
}

/// Sizes of the sample sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Probes {
    /// Level of the pieces written by `pieces`.
    pub pieces_level: usize,
    /// Level of the Cantor-set samples used by the cone certificate.
    pub cone_level: usize,
    /// Points of the tip orbit added to the cone samples.
    pub tip_steps: usize,
    /// Orbit length of the Lyapunov and Birkhoff estimates.
    pub lyapunov_steps: usize,
    /// Orbit length of the line-field probe.
    pub line_field_orbit: usize,
    /// Random points of `I³` checked against the universal Jacobian law.
    pub random_probes: usize,
}

impl Default for Probes {
    fn default() -> Self {
        Self {
            pieces_level: 3,
            cone_level: 6,
            tip_steps: 256,
            lyapunov_steps: 1 << 14,
            line_field_orbit: 32,
            random_probes: 64,
        }
    }
}

/// A complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapSpec,
    /// Depth of the renormalization tower.
    pub depth: usize,
    /// Degree of the fixed-point ansatz.
    pub degree: usize,
    /// Aperture of the cone field.
    pub gamma: f64,
    pub tolerances: Tolerances,
    pub probes: Probes,
    pub out: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            map: MapSpec::default(),
            depth: 5,
            degree: 20,
            gamma: 0.1,
            tolerances: Tolerances::default(),
            probes: Probes::default(),
            out: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Parses and validates JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(Error::Invalid(format!(
                "depth {} is outside 1..={MAX_DEPTH}",
                self.depth
            )));
        }
        if self.degree < 2 {
            return Err(Error::Invalid(format!("degree {} is below 2", self.degree)));
        }
        for (name, v) in [
            ("tolerances.fixed_point", self.tolerances.fixed_point),
            ("tolerances.tip", self.tolerances.tip),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("{name} = {v} must be positive")));
            }
        }
        let p = &self.probes;
        for (name, v) in [
            ("probes.pieces_level", p.pieces_level),
            ("probes.cone_level", p.cone_level),
            ("probes.tip_steps", p.tip_steps),
            ("probes.lyapunov_steps", p.lyapunov_steps),
            ("probes.line_field_orbit", p.line_field_orbit),
            ("probes.random_probes", p.random_probes),
        ] {
            if v == 0 {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        self.map.family()?;
        Ok(())
    }

    pub fn build_map(&self) -> Result<HenonMap3D> {
        self.map.build(self.degree, self.tolerances.fixed_point)
    }

    /// The fixed point at the configured degree and tolerance.
    pub fn fixed_point(&self) -> Result<UnimodalMap> {
        Ok(solve_fixed_point(self.degree, self.tolerances.fixed_point)?.map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_reference_toy() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(
            cfg.map.family().unwrap(),
            Some(Family::ToyAffine {
                b1: 0.1,
                b2: 0.001,
                mu: REFERENCE_MU
            })
        );
    }

    #[test]
    fn family_names_round_trip() {
        for s in [
            "degenerate",
            "toy-affine(0.1,0.001,1.5)",
            "perturbed-toy(0.1,0.001,1.5,0.003)",
        ] {
            let f: Family = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        let spaced: Family = " toy-affine( 0.1 , 0.001, 1.5 ) ".parse().unwrap();
        assert_eq!(spaced.to_string(), "toy-affine(0.1,0.001,1.5)");
    }

    #[test]
    fn bad_families_are_rejected() {
        for s in [
            "toy-affine(0.1,0.001)",
            "henon(1.4,0.3)",
            "toy-affine(0.1,x,1)",
            "degenerate(1",
        ] {
            assert!(s.parse::<Family>().is_err(), "{s}");
        }
    }

    #[test]
    fn validation_limits() {
        assert!(RunConfig::from_json(r#"{"depth": 11}"#).is_err());
        assert!(RunConfig::from_json(r#"{"depth": 0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"gamma": -1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"tolerances": {"tip": 0}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"map": "perturbed-toy(0.1,0.001,1.5,0.003)", "depth": 10}"#
        )
        .is_ok());
    }

    #[test]
    fn explicit_coefficients_round_trip() {
        let map = HenonMap3D::perturbed_toy(0.1, 0.001, 1.5, 0.003);
        let cfg = RunConfig {
            map: MapSpec::Explicit(Box::new(map.clone())),
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        let built = back.build_map().unwrap();
        for w in [[0.1, 0.2, 0.3], [-0.7, 0.4, -1.0]] {
            let (a, b) = (map.apply(w), built.apply(w));
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-15);
            }
        }
    }
}
