//! Extended reals and the open parameter interval `]a, b[`.
//!
//! Infinite endpoints are carried as tags and never enter arithmetic as
//! floating-point infinities; every interval computation branches on the tag.

use std::cmp::Ordering;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number, `-inf` or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Maps `f64` infinities onto the tags; NaN is rejected.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::InvalidArgument("NaN is not an extended real".into()))
        } else if v == f64::INFINITY {
            Ok(ExtReal::PosInf)
        } else if v == f64::NEG_INFINITY {
            Ok(ExtReal::NegInf)
        } else {
            Ok(ExtReal::Finite(v))
        }
    }

    /// Reciprocal with the conventions `(+inf)^-1 = 0` and `0^-1 = +inf`.
    /// Only defined for non-negative values.
    pub fn reciprocal_nonneg(self) -> Result<Self> {
        match self {
            ExtReal::PosInf => Ok(ExtReal::ZERO),
            ExtReal::Finite(0.0) => Ok(ExtReal::PosInf),
            ExtReal::Finite(v) if v > 0.0 => Ok(ExtReal::Finite(1.0 / v)),
            other => Err(Error::InvalidArgument(format!(
                "reciprocal of negative value {other}"
            ))),
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// `x < self` for a finite `x`.
    pub fn gt_f64(self, x: f64) -> bool {
        self > ExtReal::Finite(x)
    }

    /// `x > self` for a finite `x`.
    pub fn lt_f64(self, x: f64) -> bool {
        self < ExtReal::Finite(x)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (PosInf, _) | (_, NegInf) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl std::str::FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(ExtReal::PosInf),
            "-inf" | "-infinity" => Ok(ExtReal::NegInf),
            t => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("not an extended real: `{t}`")))?;
                ExtReal::from_f64(v)
            }
        }
    }
}

/// Finite values serialize as JSON numbers, infinities as `"inf"` / `"-inf"`.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInf => s.serialize_str("inf"),
            ExtReal::NegInf => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                ExtReal::from_f64(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(ExtVisitor)
    }
}

/// The open multiplier interval `]a, b[` with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterInterval {
    a: ExtReal,
    b: ExtReal,
}

impl ParameterInterval {
    pub fn new(a: ExtReal, b: ExtReal) -> Result<Self> {
        if a < b && a != ExtReal::PosInf && b != ExtReal::NegInf {
            Ok(Self { a, b })
        } else {
            Err(Error::InvalidProblem(format!(
                "parameter interval requires a < b, got ]{a}, {b}["
            )))
        }
    }

    pub fn whole_line() -> Self {
        Self {
            a: ExtReal::NegInf,
            b: ExtReal::PosInf,
        }
    }

    pub fn positive_half_line() -> Self {
        Self {
            a: ExtReal::ZERO,
            b: ExtReal::PosInf,
        }
    }

    pub fn a(&self) -> ExtReal {
        self.a
    }

    pub fn b(&self) -> ExtReal {
        self.b
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda.is_finite() && self.a.lt_f64(lambda) && self.b.gt_f64(lambda)
    }

    /// `]b^-1, a^-1[`, the multiplier range of the role-swapped problem.
    /// Requires `a >= 0`.
    pub fn reciprocal(&self) -> Result<Self> {
        if self.a < ExtReal::ZERO {
            return Err(Error::DualInapplicable {
                a: self.a.to_string(),
            });
        }
        Self::new(self.b.reciprocal_nonneg()?, self.a.reciprocal_nonneg()?)
    }

    pub fn reparam(&self) -> Reparam {
        match (self.a, self.b) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => Reparam::Affine { a, b },
            (ExtReal::Finite(a), ExtReal::PosInf) => Reparam::UpperOpen { a },
            (ExtReal::NegInf, ExtReal::Finite(b)) => Reparam::LowerOpen { b },
            _ => Reparam::Tangent,
        }
    }
}

/// Map from the unit parameter `t` in `]0, 1[` onto `]a, b[`, increasing in `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reparam {
    /// `a + t (b - a)`
    Affine { a: f64, b: f64 },
    /// `a + t / (1 - t)`
    UpperOpen { a: f64 },
    /// `b - (1 - t) / t`
    LowerOpen { b: f64 },
    /// `tan(pi (t - 1/2))`
    Tangent,
}

impl Reparam {
    pub fn lambda(&self, t: f64) -> f64 {
        match *self {
            Reparam::Affine { a, b } => a + t * (b - a),
            Reparam::UpperOpen { a } => a + t / (1.0 - t),
            Reparam::LowerOpen { b } => b - (1.0 - t) / t,
            Reparam::Tangent => (std::f64::consts::PI * (t - 0.5)).tan(),
        }
    }

    /// Inverse map, used to place a known multiplier in `t`-space.
    pub fn t_of(&self, lambda: f64) -> f64 {
        match *self {
            Reparam::Affine { a, b } => (lambda - a) / (b - a),
            Reparam::UpperOpen { a } => {
                let s = lambda - a;
                s / (1.0 + s)
            }
            Reparam::LowerOpen { b } => {
                let s = b - lambda;
                1.0 / (1.0 + s)
            }
            Reparam::Tangent => lambda.atan() / std::f64::consts::PI + 0.5,
        }
    }
}

impl std::ops::Neg for ExtReal {
    type Output = Self;

    fn neg(self) -> Self {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_branches_on_tags() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e308));
        assert!(ExtReal::Finite(1e308) < ExtReal::PosInf);
        assert_eq!(ExtReal::NegInf.max(ExtReal::ZERO), ExtReal::ZERO);
        assert_eq!(ExtReal::PosInf.min(ExtReal::Finite(25.0)), ExtReal::Finite(25.0));
    }

    #[test]
    fn reciprocal_conventions() {
        let i = ParameterInterval::positive_half_line().reciprocal().unwrap();
        assert_eq!(i.a(), ExtReal::ZERO);
        assert_eq!(i.b(), ExtReal::PosInf);
        let j = ParameterInterval::new(ExtReal::Finite(2.0), ExtReal::Finite(4.0))
            .unwrap()
            .reciprocal()
            .unwrap();
        assert_eq!((j.a(), j.b()), (ExtReal::Finite(0.25), ExtReal::Finite(0.5)));
        assert!(matches!(
            ParameterInterval::whole_line().reciprocal(),
            Err(Error::DualInapplicable { .. })
        ));
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(ParameterInterval::new(ExtReal::ZERO, ExtReal::ZERO).is_err());
        assert!(ParameterInterval::new(ExtReal::PosInf, ExtReal::PosInf).is_err());
    }

    #[test]
    fn reparam_round_trips_and_is_increasing() {
        let maps = [
            ParameterInterval::new(ExtReal::Finite(-1.0), ExtReal::Finite(3.0)).unwrap(),
            ParameterInterval::positive_half_line(),
            ParameterInterval::new(ExtReal::NegInf, ExtReal::Finite(2.0)).unwrap(),
            ParameterInterval::whole_line(),
        ];
        for interval in maps {
            let p = interval.reparam();
            let mut prev = f64::NEG_INFINITY;
            for k in 1..100 {
                let t = k as f64 / 100.0;
                let l = p.lambda(t);
                assert!(interval.contains(l));
                assert!(l > prev);
                prev = l;
                assert!((p.t_of(l) - t).abs() < 1e-12);
            }
        }
        assert_eq!(ParameterInterval::positive_half_line().reparam().lambda(0.5), 1.0);
    }

    #[test]
    fn serde_uses_string_infinities() {
        let v = serde_json::to_string(&[ExtReal::Finite(0.0), ExtReal::PosInf, ExtReal::NegInf]).unwrap();
        assert_eq!(v, r#"[0.0,"inf","-inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(r#"[0, 2.5, "inf", "-inf"]"#).unwrap();
        assert_eq!(
            back,
            vec![ExtReal::ZERO, ExtReal::Finite(2.5), ExtReal::PosInf, ExtReal::NegInf]
        );
    }
}
