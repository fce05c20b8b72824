//! Logarithmic-barrier interior point method for a smooth concave objective
//! over a polytope `{x : a_j·x >= b_j}`.
//!
//! For each barrier weight `μ = 1, 0.1, …, 1e-9` the centering problem
//! `min -f(x) - μ Σ ln(a_j·x - b_j)` is solved by damped Newton steps with
//! a backtracking line search that keeps every slack strictly positive.

use crate::error::{Error, Result};

pub(crate) const MU_START: f64 = 1.0;
pub(crate) const MU_END: f64 = 1e-9;
pub(crate) const MU_FACTOR: f64 = 10.0;
pub(crate) const NEWTON_CAP: usize = 500;

/// Gradient tolerance for one centering step, relative to the objective
/// gradient scale.
const CENTERING_TOL: f64 = 1e-9;

/// Newton decrement below which a centering step cannot make progress.
const DECREMENT_FLOOR: f64 = 1e-18;

/// Smooth concave objective to be maximized.
pub(crate) trait Concave {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Negated Hessian (positive semidefinite), row-major `n × n`.
    fn neg_hessian(&self, x: &[f64]) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

impl Row {
    #[inline]
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.coeffs, x) - self.rhs
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BarrierOutcome {
    pub x: Vec<f64>,
    pub newton_steps: usize,
    /// `max(‖∇f + Σ λ_j a_j‖∞, max_j λ_j s_j)`, the smaller of the values
    /// for barrier multipliers `μ / s_j` and least-squares multipliers.
    pub kkt_residual: f64,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `H d = rhs` for symmetric positive definite `H` (row-major),
/// adding a small diagonal shift if the factorization breaks down.
pub(crate) fn cholesky_solve(h: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = (0..n)
        .map(|i| h[i * n + i].abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for _ in 0..8 {
        if let Some(d) = try_cholesky(h, rhs, shift) {
            return Some(d);
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    None
}

fn try_cholesky(h: &[f64], rhs: &[f64], shift: f64) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = h[i * n + j] + if i == j { shift } else { 0.0 };
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut z = rhs.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    Some(z)
}

/// Maximize `f` over the rows starting from a strictly feasible `x0`.
pub(crate) fn maximize<F: Concave>(f: &F, rows: &[Row], x0: &[f64]) -> Result<BarrierOutcome> {
    if rows.iter().any(|r| !(r.slack(x0) > 0.0)) {
        return Err(Error::domain("barrier", "start point is not strictly feasible"));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut steps = 0usize;
    let mut mu = MU_START;
    let mut kkt;
    loop {
        loop {
            let slacks: Vec<f64> = rows.iter().map(|r| r.slack(&x)).collect();
            let fgrad = f.gradient(&x);
            // gradient of the minimized barrier function
            let mut grad: Vec<f64> = fgrad.iter().map(|g| -g).collect();
            let mut hess = f.neg_hessian(&x);
            for (r, &s) in rows.iter().zip(&slacks) {
                let w = mu / s;
                let w2 = w / s;
                for i in 0..n {
                    grad[i] -= w * r.coeffs[i];
                    for j in 0..n {
                        hess[i * n + j] += w2 * r.coeffs[i] * r.coeffs[j];
                    }
                }
            }
            let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            let scale = 1.0 + fgrad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            kkt = grad_inf.max(mu);
            if grad_inf <= CENTERING_TOL * scale {
                break;
            }
            let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
            let d = cholesky_solve(&hess, &neg)
                .ok_or_else(|| Error::domain("barrier", "Newton system is not positive definite"))?;
            let decrement = -dot(&grad, &d);
            if !(decrement > DECREMENT_FLOOR) {
                break;
            }

            // largest step that keeps slacks positive
            let mut step = 1.0f64;
            for (r, &s) in rows.iter().zip(&slacks) {
                let ad = dot(&r.coeffs, &d);
                if ad < 0.0 {
                    step = step.min(0.99 * s / -ad);
                }
            }
            let psi = |y: &[f64]| -> f64 {
                let mut v = -f.value(y);
                for r in rows {
                    let s = r.slack(y);
                    if !(s > 0.0) {
                        return f64::INFINITY;
                    }
                    v -= mu * s.ln();
                }
                v
            };
            let psi0 = psi(&x);
            let mut accepted = false;
            if decrement <= 1e-12 * (1.0 + psi0.abs()) {
                // Armijo test is below rounding of psi here; take the
                // Newton step as long as it stays interior
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                accepted = trial != x && psi(&trial).is_finite();
                if accepted {
                    x = trial;
                }
                step = 0.0;
            }
            while step > 1e-16 {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                let v = psi(&trial);
                if v <= psi0 - 0.25 * step * decrement {
                    x = trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            steps += 1;
            if steps > NEWTON_CAP {
                return Err(Error::MaxIterations { cap: NEWTON_CAP });
            }
            if !accepted {
                // no representable descent left at this μ
                break;
            }
        }
        if mu <= MU_END * (1.0 + 1e-9) {
            break;
        }
        mu /= MU_FACTOR;
    }
    let kkt_residual = kkt.min(refined_kkt(f, rows, &x));
    Ok(BarrierOutcome {
        x,
        newton_steps: steps,
        kkt_residual,
    })
}

/// KKT residual of `x` with multipliers fitted by least squares on the
/// nearly active rows. Barrier multipliers `μ/s` lose accuracy once the
/// slacks approach the rounding level of `x`; this estimate does not.
fn refined_kkt<F: Concave>(f: &F, rows: &[Row], x: &[f64]) -> f64 {
    let grad = f.gradient(x);
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let active: Vec<(&Row, f64)> = rows
        .iter()
        .map(|r| (r, r.slack(x)))
        .filter(|(r, s)| *s <= 1e-6 * (scale + r.rhs.abs()))
        .collect();
    let m = active.len();
    let mut lambda = vec![0.0; m];
    if m > 0 {
        // (A Aᵀ) λ = -A ∇f
        let mut gram = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        for (j, (rj, _)) in active.iter().enumerate() {
            rhs[j] = -dot(&rj.coeffs, &grad);
            for (k, (rk, _)) in active.iter().enumerate() {
                gram[j * m + k] = dot(&rj.coeffs, &rk.coeffs);
            }
        }
        if let Some(sol) = cholesky_solve(&gram, &rhs) {
            lambda = sol.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    let mut stationarity = grad.clone();
    let mut complementarity = 0.0f64;
    for ((r, s), l) in active.iter().zip(&lambda) {
        for (st, a) in stationarity.iter_mut().zip(&r.coeffs) {
            *st += l * a;
        }
        complementarity = complementarity.max((l * s).abs());
    }
    stationarity.iter().fold(complementarity, |acc, v| acc.max(v.abs()))
}
