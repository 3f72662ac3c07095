//! What-if checker for marginal and conditional no-confounding.
//!
//! Works on fully specified potential outcomes over ordered treatment arms
//! `0..arms`. Marginal no-confounding compares `E(Y_x)` with `E(Y | X = x)`;
//! conditional no-confounding compares `E(Y_{x+k} | X = x)` with
//! `E(Y | X = x + k)` for every observed `x` and non-zero shift `k`.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Binary potential outcomes for every individual under every arm, plus the
/// arm each individual actually took.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PotentialOutcomeCohort {
    arms: usize,
    /// `outcomes[i][x]` is `Y_x` for individual `i`.
    outcomes: Vec<Vec<Option<bool>>>,
    assigned: Option<Vec<usize>>,
}

impl PotentialOutcomeCohort {
    pub fn new(arms: usize, outcomes: Vec<Vec<Option<bool>>>, assigned: Option<Vec<usize>>) -> Result<Self> {
        if arms < 2 {
            return Err(Error::invalid("arms", "need at least two treatment arms"));
        }
        if outcomes.is_empty() {
            return Err(Error::invalid("outcomes", "cohort is empty"));
        }
        if let Some(i) = outcomes.iter().position(|row| row.len() != arms) {
            return Err(Error::invalid(
                "outcomes",
                format!("individual {i} has {} entries, expected {arms}", outcomes[i].len()),
            ));
        }
        if let Some(a) = &assigned {
            if a.len() != outcomes.len() {
                return Err(Error::invalid(
                    "assigned",
                    format!("length {} does not match cohort size {}", a.len(), outcomes.len()),
                ));
            }
            if let Some(i) = a.iter().position(|&x| x >= arms) {
                return Err(Error::invalid(
                    "assigned",
                    format!("individual {i} assigned to arm {} of {arms}", a[i]),
                ));
            }
        }
        Ok(PotentialOutcomeCohort { arms, outcomes, assigned })
    }

    /// Two-arm cohort with arm 0 = `x_j` and arm 1 = `x_k`. `assigned_k[i]`
    /// is true when individual `i` took `x_k`.
    pub fn two_arm(y_j: &[bool], y_k: &[bool], assigned_k: Option<&[bool]>) -> Result<Self> {
        if y_j.len() != y_k.len() {
            return Err(Error::invalid("y_k", "length differs from y_j"));
        }
        let outcomes = y_j.iter().zip(y_k).map(|(&j, &k)| vec![Some(j), Some(k)]).collect();
        let assigned = assigned_k.map(|a| a.iter().map(|&k| usize::from(k)).collect());
        Self::new(2, outcomes, assigned)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn arms(&self) -> usize {
        self.arms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub arm: usize,
    /// `E(Y_x)` over the whole cohort.
    pub interventional: f64,
    /// `E(Y | X = x)`.
    pub observational: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    /// The planned arm `x` being conditioned on.
    pub condition: usize,
    pub shift: i64,
    /// `E(Y_{x+k} | X = x)`.
    pub left: f64,
    /// `E(Y | X = x + k)`.
    pub right: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfoundingVerdict {
    pub marginal_holds: bool,
    pub conditional_holds: bool,
    pub marginal: Vec<MarginalCheck>,
    pub discrepancies: Vec<Discrepancy>,
}

fn mean(values: impl Iterator<Item = bool>) -> Option<f64> {
    let (hits, total) = values.fold((0u64, 0u64), |(h, t), y| (h + u64::from(y), t + 1));
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Check marginal and conditional no-confounding with absolute `tolerance`.
///
/// Arms nobody took have no observational mean and are skipped.
pub fn check_conditional_no_confounding(
    cohort: &PotentialOutcomeCohort,
    tolerance: f64,
) -> Result<ConfoundingVerdict> {
    let assigned = cohort.assigned.as_ref().ok_or(Error::MissingAssignment)?;
    let mut y = Vec::with_capacity(cohort.len());
    for (i, row) in cohort.outcomes.iter().enumerate() {
        let mut full = Vec::with_capacity(cohort.arms);
        for (arm, value) in row.iter().enumerate() {
            full.push(value.ok_or(Error::MissingPotentialOutcome { individual: i, arm })?);
        }
        y.push(full);
    }

    let observed: Vec<Option<f64>> = (0..cohort.arms)
        .map(|x| mean(y.iter().zip(assigned).filter(|(_, &a)| a == x).map(|(row, _)| row[x])))
        .collect();

    let mut marginal = Vec::new();
    for (x, obs) in observed.iter().enumerate() {
        let Some(obs) = *obs else { continue };
        let interventional = mean(y.iter().map(|row| row[x])).expect("cohort is non-empty");
        marginal.push(MarginalCheck {
            arm: x,
            interventional,
            observational: obs,
            holds: (interventional - obs).abs() <= tolerance,
        });
    }

    let mut discrepancies = Vec::new();
    for x in 0..cohort.arms {
        if observed[x].is_none() {
            continue;
        }
        for target in 0..cohort.arms {
            if target == x {
                continue;
            }
            let Some(right) = observed[target] else { continue };
            let left = mean(y.iter().zip(assigned).filter(|(_, &a)| a == x).map(|(row, _)| row[target]))
                .expect("arm x is observed");
            discrepancies.push(Discrepancy {
                condition: x,
                shift: target as i64 - x as i64,
                left,
                right,
                holds: (left - right).abs() <= tolerance,
            });
        }
    }

    Ok(ConfoundingVerdict {
        marginal_holds: marginal.iter().all(|m| m.holds),
        conditional_holds: discrepancies.iter().all(|d| d.holds),
        marginal,
        discrepancies,
    })
}
