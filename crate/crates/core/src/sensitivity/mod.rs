//! Partial-identification bounds on success rates when treatment effects are
//! heterogeneous.
//!
//! Given observed arm-level success rates `(r_j, r_k)`, the best achievable
//! success rate `U` picks, for every individual, whichever treatment works;
//! the worst `L` picks whichever fails. Neither is identified, but both are
//! bounded by optimising over all response tables `(s, t, u, v)` consistent
//! with the observed rates. Optionally the affected proportion `alpha = u + v`
//! is fixed as a hypothesis, which pins the table down completely.
//!
//! The closed forms are written once over [`num_traits::Num`] so the same code
//! path serves `f64` callers and exact-rational oracle comparisons.

mod confounding;
mod oracle;

use num_traits::Num;
use serde::Serialize;

use crate::domain::{Proportion, RatePair, RATE_TOLERANCE};
use crate::error::{Error, Result};

pub use confounding::{
    check_conditional_no_confounding, ConfoundingVerdict, Discrepancy, MarginalCheck, PotentialOutcomeCohort,
    DEFAULT_TOLERANCE,
};
pub use oracle::{
    oracle_bounds, oracle_bounds_counts, oracle_grid, OracleExtremes, OracleGrid, OracleOutcome, ORACLE_CAP,
};

/// Best and worst achievable success rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsResult {
    pub upper: Proportion,
    pub lower: Proportion,
    pub alpha_used: Option<Proportion>,
}

/// Closed interval of affected proportions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaDomain {
    pub lo: Proportion,
    pub hi: Proportion,
}

impl AlphaDomain {
    pub fn contains(&self, alpha: f64) -> bool {
        alpha >= self.lo.value() - RATE_TOLERANCE && alpha <= self.hi.value() + RATE_TOLERANCE
    }
}

fn min<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

fn two<T: Num>() -> T {
    T::one() + T::one()
}

/// `min{r_j + r_k, 1}`, or `min{(r_j + r_k + alpha) / 2, 1}` when `alpha` is
/// given.
pub fn upper_bound<T: Num + PartialOrd + Copy>(r_j: T, r_k: T, alpha: Option<T>) -> T {
    match alpha {
        None => min(r_j + r_k, T::one()),
        Some(a) => min((r_j + r_k + a) / two(), T::one()),
    }
}

/// The failure-side mirror of [`upper_bound`]:
/// `1 - upper_bound(1 - r_j, 1 - r_k, alpha)`.
pub fn lower_bound<T: Num + PartialOrd + Copy>(r_j: T, r_k: T, alpha: Option<T>) -> T {
    T::one() - upper_bound(T::one() - r_j, T::one() - r_k, alpha)
}

/// Bounds with no restriction on the affected proportion.
pub fn bounds_unconstrained(rates: RatePair) -> BoundsResult {
    let (rj, rk) = (rates.r_j.value(), rates.r_k.value());
    BoundsResult {
        upper: Proportion::clamped("upper", upper_bound(rj, rk, None)).expect("bounded"),
        lower: Proportion::clamped("lower", lower_bound(rj, rk, None)).expect("bounded"),
        alpha_used: None,
    }
}

/// Bounds when the affected proportion is hypothesised to be `alpha`.
///
/// `alpha` must lie in [`feasible_alpha_domain`]; outside it no response
/// table reproduces the observed rates.
pub fn bounds_with_alpha(rates: RatePair, alpha: Proportion) -> Result<BoundsResult> {
    let domain = feasible_alpha_domain(rates);
    if !domain.contains(alpha.value()) {
        return Err(Error::AlphaInfeasible {
            alpha: alpha.value(),
            lo: domain.lo.value(),
            hi: domain.hi.value(),
        });
    }
    let (rj, rk, a) = (rates.r_j.value(), rates.r_k.value(), alpha.value());
    Ok(BoundsResult {
        upper: Proportion::clamped("upper", upper_bound(rj, rk, Some(a)))?,
        lower: Proportion::clamped("lower", lower_bound(rj, rk, Some(a)))?,
        alpha_used: Some(alpha),
    })
}

/// `[|r_j - r_k|, min{r_j + r_k, 1}]`, the interval over which `U(alpha)`
/// is stated.
///
/// When `r_j + r_k > 1` the upper end is not attainable; see
/// [`feasible_alpha_domain`] for the sharp interval.
pub fn alpha_domain(rates: RatePair) -> AlphaDomain {
    let (rj, rk) = (rates.r_j.value(), rates.r_k.value());
    AlphaDomain {
        lo: Proportion::clamped("alpha_lo", (rj - rk).abs()).expect("bounded"),
        hi: Proportion::clamped("alpha_hi", (rj + rk).min(1.0)).expect("bounded"),
    }
}

/// The set of `alpha = u + v` reachable by some response table with the
/// given rates: `[|r_j - r_k|, min{r_j + r_k, 2 - r_j - r_k}]`.
///
/// This is the intersection of the `U` and `L` domains.
pub fn feasible_alpha_domain(rates: RatePair) -> AlphaDomain {
    let (rj, rk) = (rates.r_j.value(), rates.r_k.value());
    AlphaDomain {
        lo: Proportion::clamped("alpha_lo", (rj - rk).abs()).expect("bounded"),
        hi: Proportion::clamped("alpha_hi", (rj + rk).min(2.0 - rj - rk)).expect("bounded"),
    }
}

/// Worst-case success rate after excluding a fraction of the sample and
/// losing a further fraction to withdrawal: `max{sr - (excluded + withdrawn), 0}`.
pub fn attrition_adjusted_rate(
    sr: Proportion,
    excluded: Proportion,
    withdrawn: Proportion,
) -> Result<Proportion> {
    let total = excluded.value() + withdrawn.value();
    if total > 1.0 + RATE_TOLERANCE {
        return Err(Error::BadAttrition { total });
    }
    Proportion::clamped("success_rate", (sr.value() - total).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn rates(rj: f64, rk: f64) -> RatePair {
        RatePair::new(rj, rk).unwrap()
    }

    fn p(x: f64) -> Proportion {
        Proportion::new(x).unwrap()
    }

    #[test]
    fn crohns_unconstrained() {
        let b = bounds_unconstrained(rates(0.435, 0.465));
        assert!((b.upper.value() - 0.9).abs() <= RATE_TOLERANCE);
        assert_eq!(b.lower.value(), 0.0);
        assert_eq!(b.alpha_used, None);

        let exact = upper_bound(Ratio::new(87i64, 200), Ratio::new(93, 200), None);
        assert_eq!(exact, Ratio::new(9, 10));
    }

    #[test]
    fn saturated_and_split_arms() {
        let b = bounds_unconstrained(rates(1.0, 1.0));
        assert_eq!((b.upper.value(), b.lower.value()), (1.0, 1.0));
        // matches enumeration at n = 10 (see oracle tests)
        let b = bounds_unconstrained(rates(0.4, 0.6));
        assert_eq!((b.upper.value(), b.lower.value()), (1.0, 0.0));
    }

    #[test]
    fn alpha_examples() {
        let b = bounds_with_alpha(rates(0.435, 0.465), p(0.03)).unwrap();
        assert!((b.upper.value() - 0.465).abs() <= RATE_TOLERANCE);
        let b = bounds_with_alpha(rates(0.5, 0.5), p(0.0)).unwrap();
        assert_eq!((b.upper.value(), b.lower.value()), (0.5, 0.5));
        let b = bounds_with_alpha(rates(0.435, 0.465), p(0.9)).unwrap();
        assert!((b.upper.value() - 0.9).abs() <= RATE_TOLERANCE);
        assert_eq!(b.alpha_used, Some(p(0.9)));
    }

    #[test]
    fn alpha_outside_domain_is_rejected() {
        assert!(matches!(
            bounds_with_alpha(rates(0.435, 0.465), p(0.01)),
            Err(Error::AlphaInfeasible { .. })
        ));
        assert!(matches!(
            bounds_with_alpha(rates(0.435, 0.465), p(0.95)),
            Err(Error::AlphaInfeasible { .. })
        ));
        // inside the stated U-domain but unreachable: both arms at 0.7 leave
        // at most 60% of individuals affected
        assert!(bounds_with_alpha(rates(0.7, 0.7), p(0.8)).is_err());
        assert!(bounds_with_alpha(rates(0.7, 0.7), p(0.6)).is_ok());
    }

    #[test]
    fn domains() {
        let d = alpha_domain(rates(0.435, 0.465));
        assert!((d.lo.value() - 0.03).abs() < 1e-12 && (d.hi.value() - 0.9).abs() < 1e-12);
        let d = alpha_domain(rates(0.0, 0.0));
        assert_eq!((d.lo.value(), d.hi.value()), (0.0, 0.0));
        let d = alpha_domain(rates(0.7, 0.7));
        assert_eq!((d.lo.value(), d.hi.value()), (0.0, 1.0));
        let d = feasible_alpha_domain(rates(0.7, 0.7));
        assert!((d.hi.value() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn attrition() {
        let r = attrition_adjusted_rate(p(0.96), p(0.0), p(2.0 / 28.0)).unwrap();
        assert!((r.value() - (0.96 - 2.0 / 28.0)).abs() < 1e-15);
        assert!((r.value() - 0.889).abs() < 5e-4);
        assert_eq!(attrition_adjusted_rate(p(0.5), p(0.0), p(0.0)).unwrap().value(), 0.5);
        assert_eq!(attrition_adjusted_rate(p(0.1), p(0.1), p(0.1)).unwrap().value(), 0.0);
        assert!(matches!(attrition_adjusted_rate(p(0.5), p(0.6), p(0.6)), Err(Error::BadAttrition { .. })));
    }

    fn grid_pair() -> impl Strategy<Value = (i64, i64, i64)> {
        (1i64..=60).prop_flat_map(|n| (Just(n), 0..=n, 0..=n))
    }

    proptest! {
        #[test]
        fn endpoint_identities((n, a, b) in grid_pair()) {
            let rj = Ratio::new(a, n);
            let rk = Ratio::new(b, n);
            let one = Ratio::from_integer(1);
            let lo = if rj > rk { rj - rk } else { rk - rj };
            let hi = min(rj + rk, one);
            let big = if rj > rk { rj } else { rk };
            let small = if rj > rk { rk } else { rj };
            prop_assert_eq!(upper_bound(rj, rk, Some(lo)), big);
            prop_assert_eq!(upper_bound(rj, rk, Some(hi)), hi);
            prop_assert_eq!(lower_bound(rj, rk, Some(lo)), small);
        }

        #[test]
        fn monotone_in_alpha(rj in 0.0f64..=1.0, rk in 0.0f64..=1.0, s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            let r = rates(rj, rk);
            let d = feasible_alpha_domain(r);
            let (a1, a2) = if s < t { (s, t) } else { (t, s) };
            let lerp = |x: f64| p(d.lo.value() + x * (d.hi.value() - d.lo.value()));
            let b1 = bounds_with_alpha(r, lerp(a1)).unwrap();
            let b2 = bounds_with_alpha(r, lerp(a2)).unwrap();
            prop_assert!(b1.upper.value() <= b2.upper.value() + 1e-15);
            prop_assert!(b1.lower.value() + 1e-15 >= b2.lower.value());
        }

        #[test]
        fn symmetric_and_dual(rj in 0.0f64..=1.0, rk in 0.0f64..=1.0) {
            let r = rates(rj, rk);
            prop_assert_eq!(bounds_unconstrained(r), bounds_unconstrained(r.swapped()));
            let b = bounds_unconstrained(r);
            let c = bounds_unconstrained(r.complemented());
            prop_assert!((b.lower.value() - (1.0 - c.upper.value())).abs() <= RATE_TOLERANCE);
            prop_assert!(b.lower.value() <= rj.min(rk) + RATE_TOLERANCE);
            prop_assert!(rj.max(rk) <= b.upper.value() + RATE_TOLERANCE);
        }
    }
}
