//! Radial pair kernels and scalar time modulations, addressable by name.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A radial kernel `k(x, y) = k(|x − y|)`.
///
/// | preset              | formula                                   |
/// |---------------------|-------------------------------------------|
/// | `gaussian(s)`       | `exp(−|x−y|² / s²)`                        |
/// | `constant(c)`       | `c`                                       |
/// | `cosine-window(r)`  | `(1 + cos(π|x−y|/r))/2` if `|x−y| < r`, else 0 |
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PairKernel {
    Gaussian { sigma: f64 },
    Constant { value: f64 },
    CosineWindow { radius: f64 },
}

impl PairKernel {
    #[inline]
    pub fn eval_dist2(&self, r2: f64) -> f64 {
        match *self {
            PairKernel::Gaussian { sigma } => (-r2 / (sigma * sigma)).exp(),
            PairKernel::Constant { value } => value,
            PairKernel::CosineWindow { radius } => {
                let r = r2.sqrt();
                if r < radius {
                    0.5 * (1.0 + (std::f64::consts::PI * r / radius).cos())
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let r2 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        self.eval_dist2(r2)
    }

    /// `sup |k|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            PairKernel::Gaussian { .. } | PairKernel::CosineWindow { .. } => 1.0,
            PairKernel::Constant { value } => value.abs(),
        }
    }
}

pub(crate) fn parse_call(s: &str) -> Result<(&str, Vec<f64>)> {
    let s = s.trim();
    let bad = || Error::Validation(format!("cannot parse `{s}`: expected name(args)"));
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let name = s[..open].trim();
    let args = if inner.trim().is_empty() {
        Vec::new()
    } else {
        inner
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?
    };
    Ok((name, args))
}

impl FromStr for PairKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        let one = |what: &str| -> Result<f64> {
            match args.as_slice() {
                [a] if a.is_finite() => Ok(*a),
                _ => Err(Error::Validation(format!(
                    "`{name}` takes one finite argument ({what})"
                ))),
            }
        };
        let kernel = match name {
            "gaussian" => PairKernel::Gaussian {
                sigma: one("sigma")?,
            },
            "constant" => PairKernel::Constant { value: one("c")? },
            "cosine-window" => PairKernel::CosineWindow { radius: one("r")? },
            other => {
                return Err(Error::Validation(format!(
                    "unknown kernel preset `{other}`"
                )))
            }
        };
        match kernel {
            PairKernel::Gaussian { sigma: p } | PairKernel::CosineWindow { radius: p }
                if p <= 0.0 =>
            {
                Err(Error::Validation(format!(
                    "kernel width in `{s}` must be positive"
                )))
            }
            k => Ok(k),
        }
    }
}

impl fmt::Display for PairKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairKernel::Gaussian { sigma } => write!(f, "gaussian({sigma})"),
            PairKernel::Constant { value } => write!(f, "constant({value})"),
            PairKernel::CosineWindow { radius } => write!(f, "cosine-window({radius})"),
        }
    }
}

impl Serialize for PairKernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Scalar time factor `g(t)` multiplying a field.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Modulation {
    /// `g ≡ 1`
    #[default]
    Unit,
    /// `g(t) = 1 + a sin(f t)`
    Oscillating { amplitude: f64, frequency: f64 },
}

impl Modulation {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Modulation::Unit => 1.0,
            Modulation::Oscillating {
                amplitude,
                frequency,
            } => 1.0 + amplitude * (frequency * t).sin(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match *self {
            Modulation::Unit => 1.0,
            Modulation::Oscillating { amplitude, .. } => 1.0 + amplitude.abs(),
        }
    }

    /// `sup |g'|`.
    pub fn sup_abs_derivative(&self) -> f64 {
        match *self {
            Modulation::Unit => 0.0,
            Modulation::Oscillating {
                amplitude,
                frequency,
            } => (amplitude * frequency).abs(),
        }
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "unit" {
            return Ok(Modulation::Unit);
        }
        match parse_call(s)? {
            ("unit", a) if a.is_empty() => Ok(Modulation::Unit),
            ("oscillating", a) if a.len() == 2 && a.iter().all(|v| v.is_finite()) => {
                Ok(Modulation::Oscillating {
                    amplitude: a[0],
                    frequency: a[1],
                })
            }
            _ => Err(Error::Validation(format!(
                "unknown modulation `{s}`: expected `unit` or `oscillating(a, f)`"
            ))),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Unit => write!(f, "unit"),
            Modulation::Oscillating {
                amplitude,
                frequency,
            } => write!(f, "oscillating({amplitude}, {frequency})"),
        }
    }
}

impl Serialize for Modulation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_print() {
        for s in ["gaussian(0.3)", "constant(2)", "cosine-window(0.5)"] {
            let k: PairKernel = s.parse().unwrap();
            assert_eq!(k.to_string().parse::<PairKernel>().unwrap(), k);
        }
        assert_eq!(
            " gaussian( 1 ) ".parse::<PairKernel>().unwrap(),
            PairKernel::Gaussian { sigma: 1.0 }
        );
        assert!("gaussian(-1)".parse::<PairKernel>().is_err());
        assert!("gaussian".parse::<PairKernel>().is_err());
        assert!("laplace(1)".parse::<PairKernel>().is_err());
        assert!("constant(1,2)".parse::<PairKernel>().is_err());
    }

    #[test]
    fn kernel_values() {
        let g = PairKernel::Gaussian { sigma: 1.0 };
        assert_eq!(g.eval(&[0.0], &[1.0]), (-1.0f64).exp());
        let c = PairKernel::CosineWindow { radius: 2.0 };
        assert_eq!(c.eval(&[0.0], &[0.0]), 1.0);
        assert!((c.eval(&[0.0], &[1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(c.eval(&[0.0], &[2.0]), 0.0);
        assert_eq!(PairKernel::Constant { value: -3.0 }.sup_abs(), 3.0);
    }

    #[test]
    fn modulation_parse() {
        assert_eq!("unit".parse::<Modulation>().unwrap(), Modulation::Unit);
        let m: Modulation = "oscillating(0.5, 2)".parse().unwrap();
        assert_eq!(m.sup_abs(), 1.5);
        assert_eq!(m.sup_abs_derivative(), 1.0);
        assert!("oscillating(1)".parse::<Modulation>().is_err());
    }
}
