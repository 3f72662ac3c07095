//! Expected cell sizes for a randomized trial versus deliberately assigning
//! every volunteer the treatment they do not prefer.
//!
//! Cells are indexed `(assigned, preferred)`: `n_jk` is the expected number of
//! people who prefer `x_k` but receive `x_j`. The off-diagonal cells are the
//! informative ones after transport; the diagonal cells can be sourced from an
//! observational study of the wider population.

use serde::Serialize;

use crate::domain::Proportion;
use crate::error::{Error, Result};

const CELL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportScenario {
    pub n: u64,
    /// Randomization probability for arm `k`.
    pub p: Proportion,
    /// Fraction of individuals preferring arm `k`.
    pub q: Proportion,
    pub n_star: Option<u64>,
}

impl TransportScenario {
    pub fn new(n: u64, p: f64, q: f64, n_star: Option<u64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if n_star == Some(0) {
            return Err(Error::invalid("n_star", "must be at least 1"));
        }
        Ok(TransportScenario { n, p: Proportion::named("p", p)?, q: Proportion::named("q", q)?, n_star })
    }
}

/// Expected counts per assignment-by-preference cell. Diagonal cells are
/// `None` when they come from an external observational study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSizes {
    pub n_jj: Option<f64>,
    pub n_jk: f64,
    pub n_kj: f64,
    pub n_kk: Option<f64>,
}

impl CellSizes {
    pub fn total(&self) -> f64 {
        self.n_jj.unwrap_or(0.0) + self.n_jk + self.n_kj + self.n_kk.unwrap_or(0.0)
    }

    pub fn diagonal_is_external(&self) -> bool {
        self.n_jj.is_none() && self.n_kk.is_none()
    }

    /// Preference share for `x_k` implied by the cells, if determined.
    fn implied_q(&self) -> Option<f64> {
        match (self.n_jj, self.n_kk) {
            (Some(_), Some(kk)) => {
                let total = self.total();
                (total > 0.0).then(|| (self.n_jk + kk) / total)
            }
            _ => {
                let total = self.n_jk + self.n_kj;
                (total > 0.0).then(|| self.n_jk / total)
            }
        }
    }
}

/// `n_jj = (1-p)(1-q)n`, `n_jk = (1-p)qn`, `n_kj = p(1-q)n`, `n_kk = pqn`.
pub fn randomized_cells(sc: &TransportScenario) -> CellSizes {
    let n = sc.n as f64;
    let (p, q) = (sc.p.value(), sc.q.value());
    CellSizes {
        n_jj: Some((1.0 - p) * (1.0 - q) * n),
        n_jk: (1.0 - p) * q * n,
        n_kj: p * (1.0 - q) * n,
        n_kk: Some(p * q * n),
    }
}

/// `n_jk = q n*`, `n_kj = (1-q) n*`; diagonal cells are external.
pub fn opposites_cells(sc: &TransportScenario) -> Result<CellSizes> {
    let n_star = sc.n_star.ok_or(Error::MissingNStar)? as f64;
    let q = sc.q.value();
    Ok(CellSizes { n_jj: None, n_jk: q * n_star, n_kj: (1.0 - q) * n_star, n_kk: None })
}

/// Smallest integer strictly greater than `max{p, 1-p} n`.
pub fn min_nstar_for_dominance(n: u64, p: Proportion) -> u64 {
    let threshold = p.value().max(1.0 - p.value()) * n as f64;
    let nearest = threshold.round();
    if (threshold - nearest).abs() <= CELL_TOLERANCE * n.max(1) as f64 {
        nearest as u64 + 1
    } else {
        threshold.ceil() as u64
    }
}

/// Whether the opposites design has at least as many people in both
/// informative cells as the randomized design. Equality counts as dominance.
pub fn dominance_check(randomized: &CellSizes, opposites: &CellSizes) -> Result<bool> {
    if let (Some(qr), Some(qo)) = (randomized.implied_q(), opposites.implied_q()) {
        if (qr - qo).abs() > CELL_TOLERANCE {
            return Err(Error::MismatchedQ { randomized: qr, opposites: qo });
        }
    }
    let geq = |a: f64, b: f64| a + CELL_TOLERANCE >= b;
    Ok(geq(opposites.n_jk, randomized.n_jk) && geq(opposites.n_kj, randomized.n_kj))
}
