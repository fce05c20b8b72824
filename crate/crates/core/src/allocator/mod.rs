//! Sum-rate maximization under power-budget, rate and detection constraints.
//!
//! The difference-of-logs objective is handled by replacing each
//! `-ln x_i` (interference plus noise at user `i`) with
//! `max_{t>0} -t x_i + ln t + 1`. For fixed `t` the objective is concave in
//! `P` and the rate and detection requirements are linear rows, so each
//! subproblem is solved exactly by a barrier method; `t` is then refreshed
//! in closed form. Rate and detection thresholds are turned into SINR and
//! sensing-SNR thresholds through their monotone inverses.

mod barrier;
mod baselines;
mod constraints;

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

pub use baselines::{epa, rpa, RPA_MAX_ATTEMPTS};
pub use constraints::{feasibility_check, ConstraintRow, FeasibilityReport, LinearConstraintSet, SLACK_TOL};

use crate::channel::ChannelRealization;
use crate::config::ScenarioConfig;
use crate::detection::{detection_threshold, pod_closed_form};
use crate::error::{Error, Result};
use crate::power::PowerVector;
use crate::rng::{self, Domain};
use crate::specfun::{inv_marcum_q_a, marcum_q, Probability};
use barrier::Concave;

/// Achievable rate of user `i` in bits/s/Hz.
pub fn user_rate(powers: &PowerVector, realization: &ChannelRealization, i: usize) -> f64 {
    let signal = powers[i] * realization.rho[i][i];
    (1.0 + signal / interference_plus_noise(powers.as_slice(), realization, i)).log2()
}

pub fn sum_rate(powers: &PowerVector, realization: &ChannelRealization) -> f64 {
    (0..realization.cells())
        .map(|i| user_rate(powers, realization, i))
        .sum()
}

fn interference_plus_noise(powers: &[f64], realization: &ChannelRealization, i: usize) -> f64 {
    let interference: f64 = (0..powers.len())
        .filter(|&l| l != i)
        .map(|l| powers[l] * realization.rho[l][i])
        .sum();
    interference + realization.sigma_c2[i]
}

/// SINR threshold equivalent to a rate floor: `2^R - 1`.
pub fn rate_to_sinr_threshold(rate: f64) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::domain(
            "rate_to_sinr_threshold",
            format!("rate {rate} must be finite and >= 0"),
        ));
    }
    Ok(rate.exp2() - 1.0)
}

/// Sensing SNR `Σ_l P_l g_l / σ²` needed for the large-`N` detection
/// probability to reach `xi`. Zero when `xi` is already met at zero power.
pub fn pod_to_snr_threshold(xi: f64, cells: usize, delta: f64, samples: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::domain(
            "pod_to_snr_threshold",
            format!("xi = {xi} must lie in [0, 1)"),
        ));
    }
    let order = u32::try_from(cells).map_err(|_| Error::domain("pod_to_snr_threshold", "too many cells"))?;
    let b = (2.0 * delta).sqrt();
    if xi <= marcum_q(order, 0.0, b)?.value() {
        return Ok(0.0);
    }
    let a = inv_marcum_q_a(order, b, xi)?;
    Ok(a * a / (2.0 * samples as f64))
}

/// Auxiliary multipliers `t_i > 0` of the log surrogate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SurrogateState(pub Vec<f64>);

/// Maximizer of the surrogate in `t_i`: `1 / (Σ_{l≠i} P_l ρ_{l,i} + σ²_i)`.
pub fn t_update(powers: &PowerVector, realization: &ChannelRealization, i: usize) -> f64 {
    1.0 / interference_plus_noise(powers.as_slice(), realization, i)
}

pub fn t_update_all(powers: &PowerVector, realization: &ChannelRealization) -> SurrogateState {
    SurrogateState(
        (0..realization.cells())
            .map(|i| t_update(powers, realization, i))
            .collect(),
    )
}

/// `Σ_i [log2(Σ_l P_l ρ_{l,i} + σ²_i) + (-t_i x_i + ln t_i + 1)/ln 2]` with
/// `x_i` the interference plus noise at user `i`. A lower bound on the sum
/// rate, tight at `t = t_update(P)`.
pub fn surrogate_objective(powers: &PowerVector, t: &SurrogateState, realization: &ChannelRealization) -> f64 {
    Surrogate { t: &t.0, realization }.value(powers.as_slice())
}

struct Surrogate<'a> {
    t: &'a [f64],
    realization: &'a ChannelRealization,
}

impl Surrogate<'_> {
    fn received(&self, x: &[f64], i: usize) -> f64 {
        x.iter()
            .enumerate()
            .map(|(l, p)| p * self.realization.rho[l][i])
            .sum::<f64>()
            + self.realization.sigma_c2[i]
    }
}

impl Concave for Surrogate<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        (0..x.len())
            .map(|i| {
                let total = self.received(x, i);
                let rest = interference_plus_noise(x, self.realization, i);
                let t = self.t[i];
                total.log2() + (-t * rest + t.ln() + 1.0) / LN_2
            })
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut g = vec![0.0; n];
        for i in 0..n {
            let total = self.received(x, i);
            for (l, gl) in g.iter_mut().enumerate() {
                let rho = self.realization.rho[l][i];
                *gl += rho / (total * LN_2);
                if l != i {
                    *gl -= self.t[i] * rho / LN_2;
                }
            }
        }
        g
    }

    fn neg_hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            let total = self.received(x, i);
            let w = 1.0 / (total * total * LN_2);
            for l in 0..n {
                for m in 0..n {
                    h[l * n + m] += w * self.realization.rho[l][i] * self.realization.rho[m][i];
                }
            }
        }
        h
    }
}

/// Optimum of one surrogate subproblem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubproblemSolution {
    pub powers: PowerVector,
    pub objective: f64,
    pub kkt_residual: f64,
    pub newton_steps: usize,
}

/// Maximize the surrogate for fixed `t` over the constraint polytope.
///
/// A warm start on or outside the boundary is pulled toward the Chebyshev
/// center until it is strictly interior.
pub fn solve_subproblem(
    t: &SurrogateState,
    constraints: &LinearConstraintSet,
    realization: &ChannelRealization,
    warm_start: &PowerVector,
) -> Result<SubproblemSolution> {
    let start = interior_start(constraints, warm_start, None)?;
    solve_from_interior(t, constraints, realization, &start)
}

fn solve_from_interior(
    t: &SurrogateState,
    constraints: &LinearConstraintSet,
    realization: &ChannelRealization,
    start: &PowerVector,
) -> Result<SubproblemSolution> {
    let f = Surrogate { t: &t.0, realization };
    let out = barrier::maximize(&f, &constraints.barrier_rows(), start.as_slice())?;
    let powers = PowerVector::from_unchecked(out.x);
    Ok(SubproblemSolution {
        objective: f.value(powers.as_slice()),
        powers,
        kkt_residual: out.kkt_residual,
        newton_steps: out.newton_steps,
    })
}

/// Strictly interior point near `point`, blending toward the center.
fn interior_start(
    constraints: &LinearConstraintSet,
    point: &PowerVector,
    center: Option<&PowerVector>,
) -> Result<PowerVector> {
    let slacks = constraints.slacks(point);
    if slacks.iter().all(|s| *s > 0.0) {
        return Ok(point.clone());
    }
    let owned;
    let center = match center {
        Some(c) => c,
        None => {
            let report = feasibility_check(constraints, None)?;
            if !report.feasible {
                return Err(Error::Infeasible {
                    family: report.worst_family,
                    min_slack: report.min_slack,
                });
            }
            owned = report.center.expect("existence test returns a center");
            &owned
        }
    };
    let center_slacks = constraints.slacks(center);
    if center_slacks.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Infeasible {
            family: constraints.rows[argmin(&center_slacks)].family,
            min_slack: center_slacks[argmin(&center_slacks)],
        });
    }
    // smallest θ making (1-θ)·slack + θ·center_slack positive, plus margin
    let mut theta: f64 = 1e-3;
    for (s, c) in slacks.iter().zip(&center_slacks) {
        if *s <= 0.0 {
            theta = theta.max(2.0 * -s / (c - s) + 1e-3);
        }
    }
    let theta = theta.min(1.0);
    let blended = point
        .as_slice()
        .iter()
        .zip(center.as_slice())
        .map(|(p, c)| (1.0 - theta) * p + theta * c)
        .collect();
    Ok(PowerVector::from_unchecked(blended))
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (j, &s)| if s < acc.1 { (j, s) } else { acc })
        .0
}

/// Outcome of an allocation scheme on one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationResult {
    pub powers: PowerVector,
    pub per_user_rate: Vec<f64>,
    pub sum_rate: f64,
    pub per_target_pod: Vec<Probability>,
    pub feasible: bool,
    pub outer_iterations: usize,
    pub objective_trace: Vec<f64>,
    pub kkt_residual: f64,
    /// Which multi-start branch produced the result (0 is EPA or the center).
    pub start_index: Option<usize>,
    pub slacks: Vec<f64>,
}

/// A scenario evaluated on one snapshot: constraint rows, GLRT threshold.
#[derive(Debug, Clone)]
pub struct Instance<'a> {
    pub config: &'a ScenarioConfig,
    pub realization: &'a ChannelRealization,
    pub delta: f64,
    pub constraints: LinearConstraintSet,
}

impl<'a> Instance<'a> {
    pub fn new(config: &'a ScenarioConfig, realization: &'a ChannelRealization) -> Result<Self> {
        if realization.cells() != config.cells {
            return Err(Error::config("cells", "does not match the channel realization"));
        }
        let delta = detection_threshold(config.cells, config.pfa_target)?;
        let sinr = config
            .rate_thresholds
            .iter()
            .map(|&r| rate_to_sinr_threshold(r))
            .collect::<Result<Vec<_>>>()?;
        let sensing = config
            .pod_thresholds
            .iter()
            .map(|&xi| pod_to_snr_threshold(xi, config.cells, delta, config.samples))
            .collect::<Result<Vec<_>>>()?;
        let constraints = LinearConstraintSet::new(realization, config.power_budget(), sinr, sensing)?;
        Ok(Instance {
            config,
            realization,
            delta,
            constraints,
        })
    }

    /// Rates, detection probabilities and feasibility of `powers`.
    pub fn evaluate(&self, powers: PowerVector) -> Result<AllocationResult> {
        let cells = self.config.cells;
        let per_user_rate: Vec<f64> = (0..cells).map(|i| user_rate(&powers, self.realization, i)).collect();
        let per_target_pod = (0..cells)
            .map(|i| {
                pod_closed_form(
                    &powers,
                    &self.realization.sensing_column(i),
                    self.realization.sigma_s2[i],
                    self.config.samples,
                    self.delta,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let report = feasibility_check(&self.constraints, Some(&powers))?;
        Ok(AllocationResult {
            sum_rate: per_user_rate.iter().sum(),
            per_user_rate,
            per_target_pod,
            feasible: report.feasible,
            outer_iterations: 0,
            objective_trace: vec![],
            kkt_residual: f64::NAN,
            start_index: None,
            slacks: report.slacks,
            powers,
        })
    }

    pub fn is_feasible(&self, powers: &PowerVector) -> bool {
        self.constraints.slacks(powers).iter().all(|s| *s >= -SLACK_TOL)
    }
}

/// Alternating optimization from one start: refresh `t`, re-solve for `P`,
/// until the true sum rate improves by less than `tol`.
fn ascend(
    instance: &Instance<'_>,
    start: PowerVector,
    center: &PowerVector,
    tol: f64,
    max_outer: usize,
) -> Result<(PowerVector, Vec<f64>, f64)> {
    let realization = instance.realization;
    let mut current = start;
    let mut trace = vec![sum_rate(&current, realization)];
    let mut kkt = f64::NAN;
    for _ in 0..max_outer {
        let t = t_update_all(&current, realization);
        let warm = interior_start(&instance.constraints, &current, Some(center))?;
        let sol = solve_from_interior(&t, &instance.constraints, realization, &warm)?;
        kkt = sol.kkt_residual;
        let rate = sum_rate(&sol.powers, realization);
        let previous = *trace.last().expect("trace starts nonempty");
        if rate < previous {
            // barrier suboptimality only; the current point is already stationary
            break;
        }
        trace.push(rate);
        current = sol.powers;
        if rate - previous < tol {
            break;
        }
    }
    Ok((current, trace, kkt))
}

/// Random strictly feasible starting point for multi-start branch `index`.
fn random_start(instance: &Instance<'_>, center: &PowerVector, index: u64) -> PowerVector {
    use rand::Rng;
    use rand_distr::{Distribution, Exp1};
    let mut stream = rng::substream(instance.config.seed, Domain::MultiStart, index);
    let cells = instance.config.cells;
    let budget = instance.constraints.budget;
    let draw = |stream: &mut rng::Stream| -> PowerVector {
        let weights: Vec<f64> = (0..cells).map(|_| Exp1.sample(stream)).collect();
        let total: f64 = weights.iter().sum();
        let u = 1.0 - stream.random::<f64>();
        PowerVector::from_unchecked(weights.iter().map(|w| u * budget * w / total).collect())
    };
    for _ in 0..2000 {
        let p = draw(&mut stream);
        if instance.constraints.slacks(&p).iter().all(|s| *s > 0.0) {
            return p;
        }
    }
    // shrink a random point toward the center until strictly feasible
    let p = draw(&mut stream);
    let mut theta = 0.5;
    loop {
        let q = PowerVector::from_unchecked(
            p.as_slice()
                .iter()
                .zip(center.as_slice())
                .map(|(a, c)| c + theta * (a - c))
                .collect(),
        );
        if theta < 1e-6 || instance.constraints.slacks(&q).iter().all(|s| *s > 0.0) {
            return q;
        }
        theta *= 0.5;
    }
}

/// The proposed allocation: alternating surrogate maximization from EPA
/// (when feasible, otherwise the Chebyshev center) and `starts` random
/// feasible points, keeping the best sum rate. Ties go to the lowest start
/// index.
pub fn optimize_ppa(
    config: &ScenarioConfig,
    realization: &ChannelRealization,
    tol: f64,
    max_outer: usize,
) -> Result<AllocationResult> {
    let instance = Instance::new(config, realization)?;
    let report = feasibility_check(&instance.constraints, None)?;
    if !report.feasible {
        return Err(Error::Infeasible {
            family: report.worst_family,
            min_slack: report.min_slack,
        });
    }
    let center = report.center.expect("existence test returns a center");
    if instance.constraints.slacks(&center).iter().any(|s| !(*s > 0.0)) {
        // nonempty but without interior: nothing for the barrier to work with
        return Err(Error::Infeasible {
            family: report.worst_family,
            min_slack: report.min_slack,
        });
    }

    let equal = PowerVector::equal(config.cells, instance.constraints.budget);
    let mut starts = vec![if instance.is_feasible(&equal) {
        equal
    } else {
        center.clone()
    }];
    starts.extend((1..=config.solver.starts as u64).map(|k| random_start(&instance, &center, k)));

    let branches = starts
        .into_par_iter()
        .map(|s| ascend(&instance, s, &center, tol, max_outer))
        .collect::<Vec<_>>();

    let mut best: Option<(usize, PowerVector, Vec<f64>, f64)> = None;
    for (k, branch) in branches.into_iter().enumerate() {
        let (p, trace, kkt) = branch?;
        let rate = *trace.last().expect("nonempty trace");
        let better = match &best {
            None => true,
            Some((_, _, t, _)) => rate > *t.last().expect("nonempty trace"),
        };
        if better {
            best = Some((k, p, trace, kkt));
        }
    }
    let (k, powers, trace, kkt) = best.expect("at least one start");
    let mut result = instance.evaluate(powers)?;
    result.outer_iterations = trace.len() - 1;
    result.objective_trace = trace;
    result.kkt_residual = kkt;
    result.start_index = Some(k);
    Ok(result)
}

/// [`optimize_ppa`] with the scenario's own tolerance and iteration cap.
pub fn optimize_ppa_default(config: &ScenarioConfig, realization: &ChannelRealization) -> Result<AllocationResult> {
    optimize_ppa(config, realization, config.solver.outer_tol, config.solver.max_outer)
}
