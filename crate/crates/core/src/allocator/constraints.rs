//! The feasible polytope: nonnegativity, the total power budget, per-user
//! SINR rows and per-target sensing-SNR rows, all linear in `P`.

use serde::Serialize;

use super::barrier::{self, Concave, Row};
use crate::channel::ChannelRealization;
use crate::error::{ConstraintFamily, Error, Result};
use crate::power::PowerVector;

/// One row `coeffs · P >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstraintRow {
    pub family: ConstraintFamily,
    /// User, target or BS index the row belongs to (0 for the budget row).
    pub index: usize,
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl ConstraintRow {
    pub fn slack(&self, powers: &[f64]) -> f64 {
        self.coeffs.iter().zip(powers).map(|(a, p)| a * p).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearConstraintSet {
    pub cells: usize,
    pub budget: f64,
    /// `ζ^c_i` per user.
    pub sinr_thresholds: Vec<f64>,
    /// `ζ^s_i` per target.
    pub sensing_thresholds: Vec<f64>,
    pub rows: Vec<ConstraintRow>,
}

impl LinearConstraintSet {
    /// Build every row from thresholds already mapped to SINR / SNR form.
    pub fn new(
        realization: &ChannelRealization,
        budget: f64,
        sinr_thresholds: Vec<f64>,
        sensing_thresholds: Vec<f64>,
    ) -> Result<Self> {
        let cells = realization.cells();
        if sinr_thresholds.len() != cells || sensing_thresholds.len() != cells {
            return Err(Error::domain(
                "LinearConstraintSet::new",
                "one threshold per cell required",
            ));
        }
        if !(budget > 0.0) || !budget.is_finite() {
            return Err(Error::domain(
                "LinearConstraintSet::new",
                "budget must be positive and finite",
            ));
        }
        if sinr_thresholds
            .iter()
            .chain(&sensing_thresholds)
            .any(|z| !(*z >= 0.0) || !z.is_finite())
        {
            return Err(Error::domain(
                "LinearConstraintSet::new",
                "thresholds must be finite and >= 0",
            ));
        }
        let mut rows = Vec::with_capacity(3 * cells + 1);
        for l in 0..cells {
            let mut coeffs = vec![0.0; cells];
            coeffs[l] = 1.0;
            rows.push(ConstraintRow {
                family: ConstraintFamily::Nonnegativity,
                index: l,
                coeffs,
                rhs: 0.0,
            });
        }
        rows.push(ConstraintRow {
            family: ConstraintFamily::Budget,
            index: 0,
            coeffs: vec![-1.0; cells],
            rhs: -budget,
        });
        for (i, &zeta) in sinr_thresholds.iter().enumerate() {
            let coeffs = (0..cells)
                .map(|l| {
                    if l == i {
                        realization.rho[i][i]
                    } else {
                        -zeta * realization.rho[l][i]
                    }
                })
                .collect();
            rows.push(ConstraintRow {
                family: ConstraintFamily::Rate,
                index: i,
                coeffs,
                rhs: zeta * realization.sigma_c2[i],
            });
        }
        for (i, &zeta) in sensing_thresholds.iter().enumerate() {
            rows.push(ConstraintRow {
                family: ConstraintFamily::Sensing,
                index: i,
                coeffs: realization.sensing_column(i),
                rhs: zeta * realization.sigma_s2[i],
            });
        }
        Ok(LinearConstraintSet {
            cells,
            budget,
            sinr_thresholds,
            sensing_thresholds,
            rows,
        })
    }

    pub fn slacks(&self, powers: &PowerVector) -> Vec<f64> {
        self.rows.iter().map(|r| r.slack(powers.as_slice())).collect()
    }

    pub(crate) fn barrier_rows(&self) -> Vec<Row> {
        self.rows
            .iter()
            .map(|r| Row {
                coeffs: r.coeffs.clone(),
                rhs: r.rhs,
            })
            .collect()
    }

    /// Rows scaled to unit normal, so a slack reads as a distance to the
    /// hyperplane. Rows with a zero normal are dropped if vacuous.
    fn normalized_rows(&self) -> std::result::Result<Vec<(usize, Row)>, ConstraintFamily> {
        let mut out = Vec::with_capacity(self.rows.len());
        for (j, r) in self.rows.iter().enumerate() {
            let norm = r.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                if r.rhs > 0.0 {
                    return Err(r.family);
                }
                continue;
            }
            out.push((
                j,
                Row {
                    coeffs: r.coeffs.iter().map(|a| a / norm).collect(),
                    rhs: r.rhs / norm,
                },
            ));
        }
        Ok(out)
    }
}

/// Per-row slack of a point, or the outcome of the existence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Raw slacks `coeffs · P - rhs`, in row order.
    pub slacks: Vec<f64>,
    pub min_slack: f64,
    pub worst_family: ConstraintFamily,
    /// For the existence test: the point maximizing the smallest normalized
    /// slack (a Chebyshev center of the polytope).
    pub center: Option<PowerVector>,
}

/// Tolerance on slacks when declaring a point or a region feasible.
pub const SLACK_TOL: f64 = 1e-9;

/// Slacks of `powers` against every row, or, with `None`, decide whether
/// the polytope is nonempty by maximizing the smallest normalized slack.
pub fn feasibility_check(constraints: &LinearConstraintSet, powers: Option<&PowerVector>) -> Result<FeasibilityReport> {
    match powers {
        Some(p) => {
            let slacks = constraints.slacks(p);
            let (worst, min_slack) = worst_row(&slacks);
            Ok(FeasibilityReport {
                feasible: min_slack >= -SLACK_TOL,
                min_slack,
                worst_family: constraints.rows[worst].family,
                slacks,
                center: None,
            })
        }
        None => chebyshev_center(constraints),
    }
}

fn worst_row(slacks: &[f64]) -> (usize, f64) {
    slacks
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, s)| if s < acc.1 { (j, s) } else { acc })
}

fn blame_rank(family: ConstraintFamily) -> u8 {
    match family {
        ConstraintFamily::Nonnegativity => 0,
        ConstraintFamily::Budget => 1,
        ConstraintFamily::Rate => 2,
        ConstraintFamily::Sensing => 3,
    }
}

/// Objective `s` over the lifted variable `(P, s)`.
struct LastCoordinate;

impl Concave for LastCoordinate {
    fn value(&self, x: &[f64]) -> f64 {
        x[x.len() - 1]
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        g[x.len() - 1] = 1.0;
        g
    }
    fn neg_hessian(&self, x: &[f64]) -> Vec<f64> {
        vec![0.0; x.len() * x.len()]
    }
}

fn chebyshev_center(constraints: &LinearConstraintSet) -> Result<FeasibilityReport> {
    let cells = constraints.cells;
    let normalized = match constraints.normalized_rows() {
        Ok(rows) => rows,
        Err(family) => {
            return Ok(FeasibilityReport {
                feasible: false,
                slacks: vec![],
                min_slack: f64::NEG_INFINITY,
                worst_family: family,
                center: None,
            })
        }
    };
    // a_j·P - s >= b_j
    let lifted: Vec<Row> = normalized
        .iter()
        .map(|(_, r)| {
            let mut coeffs = r.coeffs.clone();
            coeffs.push(-1.0);
            Row { coeffs, rhs: r.rhs }
        })
        .collect();
    let mut x0 = vec![constraints.budget / (cells as f64 + 1.0); cells];
    let s0 = normalized
        .iter()
        .map(|(_, r)| r.slack(&x0))
        .fold(f64::INFINITY, f64::min);
    x0.push(s0 - 1.0 - s0.abs());

    let out = barrier::maximize(&LastCoordinate, &lifted, &x0)?;
    let raw = &out.x[..cells];
    let normalized_slacks: Vec<f64> = normalized.iter().map(|(_, r)| r.slack(raw)).collect();
    let point = PowerVector::from_unchecked(raw.to_vec());
    let (_, min_normalized) = worst_row(&normalized_slacks);
    // at the Chebyshev center several rows tie; blame demand rows first
    let worst_family = normalized
        .iter()
        .zip(&normalized_slacks)
        .filter(|(_, s)| **s <= min_normalized + 1e-7 * (1.0 + min_normalized.abs()))
        .map(|((j, _), _)| constraints.rows[*j].family)
        .max_by_key(|f| blame_rank(*f))
        .unwrap_or(ConstraintFamily::Budget);
    Ok(FeasibilityReport {
        feasible: min_normalized >= -SLACK_TOL,
        slacks: constraints.slacks(&point),
        min_slack: min_normalized,
        worst_family,
        center: Some(point),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn realization(cells: usize) -> ChannelRealization {
        let m: Vec<Vec<f64>> = (0..cells)
            .map(|l| (0..cells).map(|i| if l == i { 1.0 } else { 0.1 }).collect())
            .collect();
        ChannelRealization::new(m.clone(), m, vec![1.0; cells], vec![1.0; cells]).unwrap()
    }

    #[test]
    fn zero_thresholds_are_feasible_everywhere_in_budget() {
        let ch = realization(3);
        let set = LinearConstraintSet::new(&ch, 3.0, vec![0.0; 3], vec![0.0; 3]).unwrap();
        for p in [vec![1.0, 1.0, 1.0], vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]] {
            let report = feasibility_check(&set, Some(&PowerVector::new(p).unwrap())).unwrap();
            assert!(report.feasible);
        }
        let report = feasibility_check(&set, None).unwrap();
        assert!(report.feasible && report.min_slack > 0.0);
    }

    #[test]
    fn over_budget_point_violates_budget_row() {
        let ch = realization(2);
        let set = LinearConstraintSet::new(&ch, 1.0, vec![0.0; 2], vec![0.0; 2]).unwrap();
        let report = feasibility_check(&set, Some(&PowerVector::new(vec![1.0, 0.5]).unwrap())).unwrap();
        assert!(!report.feasible);
        assert_eq!(report.worst_family, ConstraintFamily::Budget);
    }

    #[test]
    fn sensing_demand_above_budget_bound_is_infeasible() {
        // Σ P g <= P_th · max(g) = 2, demand 2.5
        let ch = realization(2);
        let set = LinearConstraintSet::new(&ch, 2.0, vec![0.0; 2], vec![2.5, 0.0]).unwrap();
        let report = feasibility_check(&set, None).unwrap();
        assert!(!report.feasible);
        assert_eq!(report.worst_family, ConstraintFamily::Sensing);
    }

    #[test]
    fn center_is_strictly_interior() {
        let ch = realization(3);
        let set = LinearConstraintSet::new(&ch, 10.0, vec![1.0; 3], vec![1.5; 3]).unwrap();
        let report = feasibility_check(&set, None).unwrap();
        assert!(report.feasible);
        assert!(report.slacks.iter().all(|s| *s > 0.0));
    }
}
