//! Value types shared across the crate: proportions, observed rate pairs and
//! the normalised potential-outcome response table.

use std::collections::HashSet;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equality tolerance for rates stored as binary floating point.
pub const RATE_TOLERANCE: f64 = 1e-12;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Proportion(f64);

impl Proportion {
    pub const ZERO: Proportion = Proportion(0.0);
    pub const ONE: Proportion = Proportion(1.0);

    pub fn new(x: f64) -> Result<Self> {
        Self::named("proportion", x)
    }

    /// Like [`Proportion::new`] but reports `field` on rejection.
    pub fn named(field: &'static str, x: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&x) {
            Ok(Proportion(x))
        } else {
            Err(Error::OutOfRange { field, value: x })
        }
    }

    /// Accepts values that overshoot `[0, 1]` by at most [`RATE_TOLERANCE`]
    /// (floating-point residue from arithmetic) and snaps them to the boundary.
    pub(crate) fn clamped(field: &'static str, x: f64) -> Result<Self> {
        if !(-RATE_TOLERANCE..=1.0 + RATE_TOLERANCE).contains(&x) {
            return Err(Error::OutOfRange { field, value: x });
        }
        Ok(Proportion(x.clamp(0.0, 1.0)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Proportion(1.0 - self.0)
    }
}

impl<'de> Deserialize<'de> for Proportion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Proportion::new(x).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Proportion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<Proportion> for f64 {
    fn from(p: Proportion) -> f64 {
        p.0
    }
}

/// Construct a [`Proportion`], rejecting anything outside `[0, 1]`.
pub fn make_proportion(x: f64) -> Result<Proportion> {
    Proportion::new(x)
}

/// Observed success rates of a two-arm study: `r_j` under treatment `x_j`
/// and `r_k` under treatment `x_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r_j: Proportion,
    pub r_k: Proportion,
}

impl RatePair {
    pub fn new(r_j: f64, r_k: f64) -> Result<Self> {
        Ok(RatePair { r_j: Proportion::named("r_j", r_j)?, r_k: Proportion::named("r_k", r_k)? })
    }

    pub fn swapped(self) -> Self {
        RatePair { r_j: self.r_k, r_k: self.r_j }
    }

    /// Failure rates `(1 - r_j, 1 - r_k)`.
    pub fn complemented(self) -> Self {
        RatePair { r_j: self.r_j.complement(), r_k: self.r_k.complement() }
    }
}

/// Joint distribution of two binary potential outcomes.
///
/// `s`: both respond, `t`: neither responds, `u`: only the `k` outcome is a
/// success, `v`: only the `j` outcome is a success.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseTable {
    pub s: Proportion,
    pub t: Proportion,
    pub u: Proportion,
    pub v: Proportion,
}

impl ResponseTable {
    pub fn new(s: f64, t: f64, u: f64, v: f64) -> Result<Self> {
        let table = ResponseTable {
            s: Proportion::named("s", s)?,
            t: Proportion::named("t", t)?,
            u: Proportion::named("u", u)?,
            v: Proportion::named("v", v)?,
        };
        let total = s + t + u + v;
        if (total - 1.0).abs() > RATE_TOLERANCE {
            return Err(Error::invalid("response_table", format!("s + t + u + v = {total}, expected 1")));
        }
        Ok(table)
    }

    /// Success rate under `x_k`: `s + u`.
    pub fn r_k(&self) -> f64 {
        self.s.0 + self.u.0
    }

    /// Success rate under `x_j`: `s + v`.
    pub fn r_j(&self) -> f64 {
        self.s.0 + self.v.0
    }

    /// Proportion of individuals whose two potential outcomes differ.
    pub fn alpha(&self) -> f64 {
        self.u.0 + self.v.0
    }

    pub fn rates(&self) -> RatePair {
        RatePair { r_j: Proportion(self.r_j().min(1.0)), r_k: Proportion(self.r_k().min(1.0)) }
    }
}

/// Normalise integer counts `(S, T, U, V)` into a [`ResponseTable`].
pub fn response_table_from_counts(s: u64, t: u64, u: u64, v: u64) -> Result<ResponseTable> {
    let exact = ExactResponseTable::from_counts(s, t, u, v)?;
    Ok(exact.to_f64())
}

/// Exact-rational response table, used by enumeration oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExactResponseTable {
    pub s: Ratio<u64>,
    pub t: Ratio<u64>,
    pub u: Ratio<u64>,
    pub v: Ratio<u64>,
}

impl ExactResponseTable {
    pub fn from_counts(s: u64, t: u64, u: u64, v: u64) -> Result<Self> {
        let total = s + t + u + v;
        if total == 0 {
            return Err(Error::EmptyTable);
        }
        Ok(ExactResponseTable {
            s: Ratio::new(s, total),
            t: Ratio::new(t, total),
            u: Ratio::new(u, total),
            v: Ratio::new(v, total),
        })
    }

    pub fn r_k(&self) -> Ratio<u64> {
        self.s + self.u
    }

    pub fn r_j(&self) -> Ratio<u64> {
        self.s + self.v
    }

    pub fn alpha(&self) -> Ratio<u64> {
        self.u + self.v
    }

    pub fn to_f64(&self) -> ResponseTable {
        let f = |r: Ratio<u64>| Proportion(*r.numer() as f64 / *r.denom() as f64);
        ResponseTable { s: f(self.s), t: f(self.t), u: f(self.u), v: f(self.v) }
    }
}

/// A clinical sample of `n` individuals, optionally labelled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CohortIndex {
    n: usize,
    labels: Option<Vec<String>>,
}

impl CohortIndex {
    pub fn anonymous(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "cohort must contain at least one individual"));
        }
        Ok(CohortIndex { n, labels: None })
    }

    pub fn labelled(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("labels", "cohort must contain at least one individual"));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for label in &labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::invalid("labels", format!("duplicate label {label:?}")));
            }
        }
        Ok(CohortIndex { n: labels.len(), labels: Some(labels) })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Label of individual `i`, falling back to its 1-based position.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(labels) => labels[i].clone(),
            None => (i + 1).to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn proportion_bounds() {
        assert_eq!(make_proportion(0.435).unwrap().value(), 0.435);
        assert_eq!(make_proportion(0.0).unwrap().value(), 0.0);
        assert!(matches!(make_proportion(1.2), Err(Error::OutOfRange { .. })));
        assert!(make_proportion(-1e-15).is_err());
        assert!(make_proportion(f64::NAN).is_err());
    }

    #[test]
    fn table_from_counts() {
        let t = response_table_from_counts(1, 1, 1, 1).unwrap();
        assert_eq!(t, ResponseTable::new(0.25, 0.25, 0.25, 0.25).unwrap());

        let t = response_table_from_counts(0, 0, 5, 5).unwrap();
        assert_eq!((t.s.value(), t.t.value(), t.u.value(), t.v.value()), (0.0, 0.0, 0.5, 0.5));
        assert_eq!(t.alpha(), 1.0);

        let t = ExactResponseTable::from_counts(3, 1, 2, 4).unwrap();
        assert_eq!(t.r_k(), Ratio::new(1, 2));
        assert_eq!(t.r_j(), Ratio::new(7, 10));
        assert_eq!(t.alpha(), Ratio::new(3, 5));

        assert_eq!(response_table_from_counts(0, 0, 0, 0), Err(Error::EmptyTable));
    }

    #[test]
    fn table_rejects_bad_total() {
        assert!(ResponseTable::new(0.5, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn cohort_labels() {
        assert!(CohortIndex::anonymous(0).is_err());
        let c = CohortIndex::labelled(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.label(1), "b");
        assert!(CohortIndex::labelled(vec!["a".into(), "a".into()]).is_err());
        assert_eq!(CohortIndex::anonymous(3).unwrap().label(0), "1");
    }

    proptest! {
        #[test]
        fn complement_identities(s in 0u64..50, t in 0u64..50, u in 0u64..50, v in 0u64..50) {
            prop_assume!(s + t + u + v > 0);
            let table = ExactResponseTable::from_counts(s, t, u, v).unwrap();
            let one = Ratio::from_integer(1);
            prop_assert_eq!((table.s + table.u) + (table.t + table.v), one);
            prop_assert_eq!((table.s + table.v) + (table.t + table.u), one);

            let f = table.to_f64();
            prop_assert!(((f.r_k()) + (f.t.value() + f.v.value()) - 1.0).abs() <= RATE_TOLERANCE);
            let rates = f.rates();
            let alpha = f.alpha();
            prop_assert!(alpha + RATE_TOLERANCE >= (rates.r_j.value() - rates.r_k.value()).abs());
            prop_assert!(alpha <= (rates.r_j.value() + rates.r_k.value()).min(1.0) + RATE_TOLERANCE);
        }

        #[test]
        fn counts_scale_invariant(s in 0u64..40, t in 0u64..40, u in 0u64..40, v in 0u64..40, k in 1u64..20) {
            prop_assume!(s + t + u + v > 0);
            prop_assert_eq!(
                response_table_from_counts(s, t, u, v).unwrap(),
                response_table_from_counts(k * s, k * t, k * u, k * v).unwrap()
            );
        }
    }
}
