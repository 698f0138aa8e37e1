//! Right-hand sides `f(u)` of `div(A∇u) = f(u)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Nonlinearity {
    Zero,
    Exp,
    /// `u^q` for `u ≥ 0`, extended by 0 for `u < 0`; `0 < q < 1`.
    Power { q: f64 },
    /// `e^{a u}`.
    ExpScaled { a: f64 },
}

impl Nonlinearity {
    pub fn power(q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("power exponent q = {q} must lie in (0, 1)")));
        }
        Ok(Nonlinearity::Power { q })
    }

    pub fn exp_scaled(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("exponential scale a = {a} must be positive")));
        }
        Ok(Nonlinearity::ExpScaled { a })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Exp => u.exp(),
            Nonlinearity::Power { q } => {
                if u > 0.0 {
                    u.powf(q)
                } else {
                    0.0
                }
            }
            Nonlinearity::ExpScaled { a } => (a * u).exp(),
        }
    }

    /// `f'(u)`; for the power law the one-sided value 0 is used at `u ≤ 0`.
    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match *self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Exp => u.exp(),
            Nonlinearity::Power { q } => {
                if u > 0.0 {
                    q * u.powf(q - 1.0)
                } else {
                    0.0
                }
            }
            Nonlinearity::ExpScaled { a } => a * (a * u).exp(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Zero => write!(f, "zero"),
            Nonlinearity::Exp => write!(f, "exp"),
            Nonlinearity::Power { q } => write!(f, "power:{q}"),
            Nonlinearity::ExpScaled { a } => write!(f, "exp-scaled:{a}"),
        }
    }
}

impl std::str::FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| {
            v.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("bad number `{v}`")))
        };
        match s.split_once(':') {
            None if s == "zero" => Ok(Nonlinearity::Zero),
            None if s == "exp" => Ok(Nonlinearity::Exp),
            Some(("power", v)) => Nonlinearity::power(parse(v)?),
            Some(("exp-scaled", v)) => Nonlinearity::exp_scaled(parse(v)?),
            _ => Err(Error::InvalidParameter(format!(
                "unknown nonlinearity `{s}` (expected zero, exp, power:<q>, exp-scaled:<a>)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_dead_zone_convention() {
        let f = Nonlinearity::power(0.5).unwrap();
        assert_eq!(f.eval(-3.0), 0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert!((f.eval(4.0) - 2.0).abs() < 1e-15);
        assert!((f.derivative(4.0) - 0.25).abs() < 1e-15);
        assert!(Nonlinearity::power(1.0).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["zero", "exp", "power:0.3", "exp-scaled:2"] {
            let f: Nonlinearity = s.parse().unwrap();
            assert_eq!(f.to_string().parse::<Nonlinearity>().unwrap(), f);
        }
        assert!("cubic".parse::<Nonlinearity>().is_err());
    }

    #[test]
    fn scaled_exponential() {
        let f = Nonlinearity::exp_scaled(2.0).unwrap();
        assert!((f.eval(0.5) - 1f64.exp()).abs() < 1e-15);
        assert!((f.derivative(0.5) - 2.0 * 1f64.exp()).abs() < 1e-14);
    }
}
