//! The proportion sequence `p_n` splitting each branch interval into its
//! left (affine) and right (smooth) parts.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum ProportionSchedule {
    /// `p_n = 1 − β·2^{−n}`.
    GeometricToOne { beta: Rational },
    Constant { p: Rational },
    /// `p_1, …, p_len`; indices past the end are an error.
    Table(Vec<Rational>),
}

/// What can be said about a schedule relative to an expansion constant λ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certification {
    /// `p_1/(1 − p_1) ≥ λ`.
    pub first_ratio_ok: bool,
    /// The kind guarantees `∏ p_n > 0` analytically.
    pub product_positive: bool,
    pub certified: bool,
}

impl ProportionSchedule {
    pub fn geometric(beta: Rational) -> Result<Self> {
        // p_1 = 1 − β/2 must stay in (0,1)
        if beta <= Rational::zero() || beta >= rational::int(2) {
            return Err(Error::Domain(format!(
                "beta must lie in (0, 2) so that every p_n is in (0, 1), got {}",
                rational::to_string(&beta)
            )));
        }
        Ok(Self::GeometricToOne { beta })
    }

    pub fn constant(p: Rational) -> Result<Self> {
        check_open_unit(&p, 1)?;
        Ok(Self::Constant { p })
    }

    pub fn table(values: Vec<Rational>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empty proportion table".into()));
        }
        for (i, p) in values.iter().enumerate() {
            check_open_unit(p, i as u32 + 1)?;
        }
        Ok(Self::Table(values))
    }

    /// Parses a table file: one rational per line or comma separated; `#` starts a comment.
    pub fn parse_table(text: &str) -> Result<Self> {
        let values = text
            .lines()
            .map(|line| line.split('#').next().unwrap_or(""))
            .flat_map(|line| line.split(','))
            .map(str::trim)
            .filter(|tok| !tok.is_empty())
            .map(rational::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::table(values)
    }

    pub fn p(&self, n: u32) -> Result<Rational> {
        if n == 0 {
            return Err(Error::Domain("proportions are indexed from n = 1".into()));
        }
        match self {
            Self::GeometricToOne { beta } => {
                Ok(Rational::one() - beta * rational::pow(&rational::int(2), -(n as i64)))
            }
            Self::Constant { p } => Ok(p.clone()),
            Self::Table(values) => values
                .get(n as usize - 1)
                .cloned()
                .ok_or(Error::ScheduleExhausted { index: n, len: values.len() }),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::GeometricToOne { .. } => "geometric-to-one",
            Self::Constant { .. } => "constant",
            Self::Table(_) => "explicit-table",
        }
    }

    /// Number of defined terms, `None` when infinite.
    pub fn defined_terms(&self) -> Option<usize> {
        match self {
            Self::Table(values) => Some(values.len()),
            _ => None,
        }
    }

    /// Whether `p_n → 1`. Only the geometric kind guarantees it.
    pub fn tends_to_one(&self) -> bool {
        matches!(self, Self::GeometricToOne { .. })
    }

    /// Non-decreasing in `n` (every kind here is; tables are checked).
    pub fn is_non_decreasing(&self) -> bool {
        match self {
            Self::Table(values) => values.windows(2).all(|w| w[0] <= w[1]),
            _ => true,
        }
    }

    pub fn certify(&self, lambda: &Rational) -> Certification {
        let first_ratio_ok = match self.p(1) {
            Ok(p1) => {
                let ratio = &p1 / (Rational::one() - &p1);
                &ratio >= lambda
            }
            Err(_) => false,
        };
        // Σ β·2^{−n} < ∞ gives ∏ p_n > 0; a constant p < 1 gives ∏ = 0 and a
        // finite table says nothing about the infinite product.
        let product_positive = matches!(self, Self::GeometricToOne { .. });
        Certification {
            first_ratio_ok,
            product_positive,
            certified: first_ratio_ok && product_positive,
        }
    }

    /// Parameter echo for JSON reports.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            Self::GeometricToOne { beta } => serde_json::json!({
                "kind": self.kind_name(),
                "beta": rational::to_string(beta),
            }),
            Self::Constant { p } => serde_json::json!({
                "kind": self.kind_name(),
                "p": rational::to_string(p),
            }),
            Self::Table(values) => serde_json::json!({
                "kind": self.kind_name(),
                "table": values.iter().map(rational::to_string).collect::<Vec<_>>(),
            }),
        }
    }
}

fn check_open_unit(p: &Rational, n: u32) -> Result<()> {
    if *p <= Rational::zero() || *p >= Rational::one() {
        return Err(Error::Domain(format!(
            "p_{n} = {} is outside (0, 1)",
            rational::to_string(p)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn geometric_values() {
        let s = ProportionSchedule::geometric(ratio(1, 2)).unwrap();
        assert_eq!(s.p(1).unwrap(), ratio(3, 4));
        assert_eq!(s.p(3).unwrap(), ratio(15, 16));
        // cross-check p_1 = 1 − 1/4
        assert_eq!(s.p(1).unwrap(), int(1) - ratio(1, 4));
    }

    #[test]
    fn constant_and_table() {
        let s = ProportionSchedule::constant(ratio(4, 5)).unwrap();
        assert_eq!(s.p(7).unwrap(), ratio(4, 5));
        let t = ProportionSchedule::parse_table("3/4, 0.8\n# tail\n9/10").unwrap();
        assert_eq!(t.p(2).unwrap(), ratio(4, 5));
        assert_eq!(
            t.p(4).unwrap_err(),
            Error::ScheduleExhausted { index: 4, len: 3 }
        );
        assert!(ProportionSchedule::constant(int(1)).is_err());
        assert!(ProportionSchedule::table(vec![ratio(1, 2), int(0)]).is_err());
    }

    #[test]
    fn certification() {
        let lambda = int(2);
        let good = ProportionSchedule::geometric(ratio(1, 2)).unwrap().certify(&lambda);
        assert!(good.certified);
        let weak = ProportionSchedule::geometric(int(1)).unwrap().certify(&lambda);
        assert!(!weak.first_ratio_ok);
        let constant = ProportionSchedule::constant(ratio(9, 10)).unwrap().certify(&lambda);
        assert!(constant.first_ratio_ok && !constant.product_positive && !constant.certified);
    }

    #[test]
    fn beta_range() {
        assert!(ProportionSchedule::geometric(int(2)).is_err());
        assert!(ProportionSchedule::geometric(int(0)).is_err());
        assert!(ProportionSchedule::geometric(ratio(3, 2)).is_ok());
    }
}
