//! Brute-force enumeration of integer response tables.
//!
//! For a sample of `n` individuals every joint potential-outcome configuration
//! collapses to counts `(S, T, U, V)` with `S + T + U + V = n`. The oracle
//! walks all of them (`C(n + 3, 3)` quadruples), keeps the ones matching the
//! observed rates, and reads off the extreme success rates. It never looks at
//! the closed forms and never takes an assignment probability.

use std::collections::BTreeMap;

use num_rational::Ratio;
use serde::Serialize;

use super::BoundsResult;
use crate::domain::{Proportion, RatePair};
use crate::error::{Error, Result};
use crate::exec::{map_ordered, Execution};

/// Largest `n` the oracle accepts. Cost grows as `n^3 / 6`.
pub const ORACLE_CAP: u64 = 10_000;

const INTEGRALITY_TOLERANCE: f64 = 1e-9;

/// Extremes over the feasible tables for one constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OracleExtremes {
    /// Largest `S + U + V` (someone responds to at least one arm).
    pub max_any: u64,
    /// Smallest `S` (responds to both arms).
    pub min_both: u64,
    /// Smallest `T`; always equals `n - max_any`.
    pub min_neither: u64,
    pub tables: u64,
}

impl OracleExtremes {
    fn single(s: u64, t: u64, u: u64, v: u64) -> Self {
        OracleExtremes { max_any: s + u + v, min_both: s, min_neither: t, tables: 1 }
    }

    fn merge(&mut self, other: OracleExtremes) {
        self.max_any = self.max_any.max(other.max_any);
        self.min_both = self.min_both.min(other.min_both);
        self.min_neither = self.min_neither.min(other.min_neither);
        self.tables += other.tables;
    }
}

/// Oracle answer for one `(n, rates, alpha)` query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleOutcome {
    pub n: u64,
    pub bounds: BoundsResult,
    pub upper_exact: Ratio<u64>,
    pub lower_exact: Ratio<u64>,
    pub feasible_tables: u64,
}

fn integral(field: &'static str, n: u64, x: f64) -> Result<u64> {
    let scaled = n as f64 * x;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > INTEGRALITY_TOLERANCE {
        return Err(Error::NonIntegralRates { field, value: x, scaled });
    }
    Ok(rounded as u64)
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    if n > ORACLE_CAP {
        return Err(Error::invalid("n", format!("{n} exceeds the oracle cap {ORACLE_CAP}")));
    }
    Ok(())
}

/// Enumerate all tables of size `n`, calling `visit(s, t, u, v)` on each.
/// The outer loop over `S` is split across `exec`; each slice folds into its
/// own accumulator and slices are merged in order.
fn enumerate<A, F, M>(n: u64, exec: Execution, init: impl Fn() -> A + Sync + Send, visit: F, merge: M) -> A
where
    A: Send,
    F: Fn(&mut A, u64, u64, u64, u64) + Sync + Send,
    M: Fn(&mut A, A),
{
    let parts = map_ordered(exec, (0..=n).collect(), |s| {
        let mut acc = init();
        for u in 0..=n - s {
            for v in 0..=n - s - u {
                let t = n - s - u - v;
                visit(&mut acc, s, t, u, v);
            }
        }
        acc
    });
    let mut total = init();
    for part in parts {
        merge(&mut total, part);
    }
    total
}

/// Oracle bounds from integer counts: `k_successes = n r_k`,
/// `j_successes = n r_j`, and optionally `affected = n alpha`.
pub fn oracle_bounds_counts(
    n: u64,
    j_successes: u64,
    k_successes: u64,
    affected: Option<u64>,
) -> Result<OracleOutcome> {
    check_n(n)?;
    let found = enumerate(
        n,
        Execution::default(),
        || None::<OracleExtremes>,
        |acc, s, t, u, v| {
            if s + u == k_successes && s + v == j_successes && affected.is_none_or(|a| u + v == a) {
                let e = OracleExtremes::single(s, t, u, v);
                match acc {
                    Some(acc) => acc.merge(e),
                    None => *acc = Some(e),
                }
            }
        },
        |total, part| match (total.as_mut(), part) {
            (Some(t), Some(p)) => t.merge(p),
            (None, p) => *total = p,
            (_, None) => {}
        },
    );
    let e = found.ok_or(Error::InfeasibleConstraints { n })?;
    let upper_exact = Ratio::new(e.max_any, n);
    let lower_exact = Ratio::new(e.min_both, n);
    let as_f64 = |r: Ratio<u64>| *r.numer() as f64 / *r.denom() as f64;
    Ok(OracleOutcome {
        n,
        bounds: BoundsResult {
            upper: Proportion::clamped("upper", as_f64(upper_exact))?,
            lower: Proportion::clamped("lower", as_f64(lower_exact))?,
            alpha_used: affected.map(|a| Proportion::clamped("alpha", a as f64 / n as f64)).transpose()?,
        },
        upper_exact,
        lower_exact,
        feasible_tables: e.tables,
    })
}

/// Oracle bounds for real-valued rates; each of `n r_j`, `n r_k` (and
/// `n alpha`) must be an integer within `1e-9`.
pub fn oracle_bounds(n: u64, rates: RatePair, alpha: Option<Proportion>) -> Result<OracleOutcome> {
    check_n(n)?;
    let j = integral("r_j", n, rates.r_j.value())?;
    let k = integral("r_k", n, rates.r_k.value())?;
    let a = alpha.map(|a| integral("alpha", n, a.value())).transpose()?;
    oracle_bounds_counts(n, j, k, a)
}

/// Extremes for every feasible constraint set at a fixed `n`, from a single
/// pass over all tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleGrid {
    pub n: u64,
    /// Keyed by `(n r_j, n r_k)`.
    pub unconstrained: BTreeMap<(u64, u64), OracleExtremes>,
    /// Keyed by `(n r_j, n r_k, n alpha)`.
    pub constrained: BTreeMap<(u64, u64, u64), OracleExtremes>,
}

type GridMaps = (BTreeMap<(u64, u64), OracleExtremes>, BTreeMap<(u64, u64, u64), OracleExtremes>);

/// Enumerate every table of size `n` once and bucket it by the rates (and
/// affected count) it produces.
pub fn oracle_grid(n: u64, exec: Execution) -> Result<OracleGrid> {
    check_n(n)?;
    fn put<K: Ord>(map: &mut BTreeMap<K, OracleExtremes>, key: K, e: OracleExtremes) {
        map.entry(key).and_modify(|x| x.merge(e)).or_insert(e);
    }
    let (unconstrained, constrained) = enumerate(
        n,
        exec,
        GridMaps::default,
        |(un, con), s, t, u, v| {
            let e = OracleExtremes::single(s, t, u, v);
            put(un, (s + v, s + u), e);
            put(con, (s + v, s + u, u + v), e);
        },
        |(un, con), (pun, pcon)| {
            for (k, e) in pun {
                put(un, k, e);
            }
            for (k, e) in pcon {
                put(con, k, e);
            }
        },
    );
    Ok(OracleGrid { n, unconstrained, constrained })
}
