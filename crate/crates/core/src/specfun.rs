//! Scalar special functions for the detection math: log-gamma, the
//! regularized upper incomplete gamma function of integer order, the
//! generalized Marcum-Q function of integer order, and their inverses.
//!
//! Everything here is pure and works on `f64`. Series are summed in log
//! space term by term so that large arguments underflow gracefully instead
//! of producing `0 * inf`.

use serde::Serialize;

use crate::error::{Error, Result};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || !(0.0..=1.0).contains(&value) {
            return Err(Error::domain("Probability::new", format!("{value} is not in [0, 1]")));
        }
        Ok(Probability(value))
    }

    /// Clamp a summed value into `[0, 1]`; absorbs last-bit rounding.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Shift point for the Stirling series.
const STIRLING_MIN: f64 = 15.0;

/// Poisson tail mass below which the Marcum series is truncated.
const SERIES_TAIL: f64 = 1e-14;

/// `ln Γ(x)` for `x > 0`.
///
/// Uses the asymptotic Stirling series for `x >= 15` and the upward
/// recurrence `Γ(x) = Γ(x + n) / (x (x+1) ... (x+n-1))` below that.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            "ln_gamma",
            format!("x = {x} must be positive and finite"),
        ));
    }
    let mut shift = 0.0;
    let mut prod = 1.0;
    let mut z = x;
    while z < STIRLING_MIN {
        prod *= z;
        z += 1.0;
        // keep the product representable for tiny x
        if prod > 1e280 {
            shift += prod.ln();
            prod = 1.0;
        }
    }
    shift += prod.ln();
    Ok(stirling(z) - shift)
}

fn stirling(z: f64) -> f64 {
    // Bernoulli coefficients B_{2k} / (2k (2k-1))
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let zinv = 1.0 / z;
    let z2 = zinv * zinv;
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * z2 + c;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series * zinv
}

/// `ln(n!)` for small integers without going through the Stirling shift.
fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        0.0
    } else {
        // n + 1 >= 3 so this cannot fail
        ln_gamma(f64::from(n) + 1.0).unwrap_or(0.0)
    }
}

/// Regularized upper incomplete gamma function `Γ(L, x) / Γ(L)` for
/// integer order `L >= 1`, evaluated as `e^{-x} Σ_{k<L} x^k / k!`.
pub fn upper_gamma_regularized(order: u32, x: f64) -> Result<Probability> {
    if order < 1 {
        return Err(Error::domain("upper_gamma_regularized", "order must be >= 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::domain(
            "upper_gamma_regularized",
            format!("x = {x} must be nonnegative"),
        ));
    }
    Ok(Probability::clamped(upper_gamma_sum(order, x)))
}

fn upper_gamma_sum(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let ln_x = x.ln();
    let mut ln_term = -x;
    let mut sum = ln_term.exp();
    for k in 1..order {
        ln_term += ln_x - f64::from(k).ln();
        sum += ln_term.exp();
    }
    sum
}

/// Density of the gamma(L, 1) law at `x`, i.e. `-d/dx` of the upper tail.
fn gamma_density(order: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return if order == 1 { 1.0 } else { 0.0 };
    }
    (-x + f64::from(order - 1) * x.ln() - ln_factorial(order - 1)).exp()
}

/// Inverse of [`upper_gamma_regularized`] in `x`: the `x >= 0` whose tail
/// probability equals `p`.
pub fn inv_upper_gamma_regularized(order: u32, p: f64) -> Result<f64> {
    if order < 1 {
        return Err(Error::domain("inv_upper_gamma_regularized", "order must be >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "inv_upper_gamma_regularized",
            format!("p = {p} must lie in (0, 1)"),
        ));
    }
    let tail = |x: f64| upper_gamma_sum(order, x) - p;

    let mut lo = 0.0;
    let mut hi = f64::from(order).max(1.0);
    let mut doublings = 0;
    while tail(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::Accuracy {
                func: "inv_upper_gamma_regularized",
                msg: format!("could not bracket p = {p}"),
            });
        }
    }

    let deriv = |x: f64| -gamma_density(order, x);
    safeguarded_newton(tail, deriv, lo, hi).ok_or_else(|| Error::Accuracy {
        func: "inv_upper_gamma_regularized",
        msg: format!("no convergence for order {order}, p = {p}"),
    })
}

/// Root of a monotone `f` inside `[lo, hi]` where `f(lo)` and `f(hi)` have
/// opposite signs. Newton steps that leave the bracket fall back to bisection.
fn safeguarded_newton(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let f_lo = f(lo);
    let increasing = f_lo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..400 {
        let fx = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(f64::MIN_POSITIVE) {
            return Some(0.5 * (lo + hi));
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() {
            return Some(next);
        }
        x = next;
    }
    None
}

/// Generalized Marcum-Q function `Q_L(a, b)` of integer order: the tail
/// `P{χ'²_{2L}(a²) ≥ b²}` of a noncentral chi-squared law.
///
/// Evaluated as the Poisson mixture
/// `Σ_k e^{-a²/2} (a²/2)^k / k! · Γ(L+k, b²/2)/Γ(L+k)`, with the gamma
/// tails advanced by their one-term recurrence. When the answer is near
/// one (`b² < a² + 2L`) the same mixture of lower tails is summed instead
/// and subtracted from one, so rounding in the large terms does not leak
/// into the result. The sum stops once the remaining mass is below
/// `1e-14`; needing more than `10·a²/2 + 200` terms is reported as an
/// accuracy error.
pub fn marcum_q(order: u32, a: f64, b: f64) -> Result<Probability> {
    if order < 1 {
        return Err(Error::domain("marcum_q", "order must be >= 1"));
    }
    if !(a >= 0.0) || !(b >= 0.0) || a.is_infinite() || b.is_infinite() {
        return Err(Error::domain(
            "marcum_q",
            format!("arguments a = {a}, b = {b} must be finite and nonnegative"),
        ));
    }
    if b == 0.0 {
        return Ok(Probability::ONE);
    }
    let x = 0.5 * b * b;
    if a == 0.0 {
        return Ok(Probability::clamped(upper_gamma_sum(order, x)));
    }
    let lambda = 0.5 * a * a;
    let cap = (10.0 * lambda + 200.0).ceil() as u64;

    let ln_lambda = lambda.ln();
    let ln_x = x.ln();
    let mut ln_weight = -lambda;
    let mut gamma_tail = upper_gamma_sum(order, x);
    // log of e^{-x} x^n / n! for n = order
    let mut ln_increment = -x + f64::from(order) * ln_x - ln_factorial(order);

    let complement = b * b < a * a + 2.0 * f64::from(order);
    let mut sum = 0.0;
    let mut k: u64 = 0;
    loop {
        // lower tails decrease in k, upper tails are bounded by one
        let factor = if complement { 1.0 - gamma_tail } else { gamma_tail };
        sum += ln_weight.exp() * factor;

        // bound on Σ_{j>k} w_j via the geometric ratio λ/(j+1) < 1
        let kf = k as f64;
        if kf + 2.0 > lambda {
            let next_weight = (ln_weight + ln_lambda - (kf + 1.0).ln()).exp();
            let bound = next_weight / (1.0 - lambda / (kf + 2.0));
            let remaining = if complement { bound * factor } else { bound };
            if remaining < SERIES_TAIL {
                break;
            }
        }

        k += 1;
        if k > cap {
            return Err(Error::Accuracy {
                func: "marcum_q",
                msg: format!("series needs more than {cap} terms (L = {order}, a = {a}, b = {b})"),
            });
        }
        ln_weight += ln_lambda - (k as f64).ln();
        gamma_tail = (gamma_tail + ln_increment.exp()).min(1.0);
        ln_increment += ln_x - ((u64::from(order) + k) as f64).ln();
    }
    Ok(Probability::clamped(if complement { 1.0 - sum } else { sum }))
}

/// Inverse of [`marcum_q`] in the noncentrality argument: the `a >= 0`
/// with `Q_L(a, b) = p`.
///
/// `p` must exceed the zero-noncentrality floor `Q_L(0, b)`; otherwise
/// `a = 0` already satisfies it and [`Error::InfeasibleTarget`] is returned.
pub fn inv_marcum_q_a(order: u32, b: f64, p: f64) -> Result<f64> {
    if order < 1 {
        return Err(Error::domain("inv_marcum_q_a", "order must be >= 1"));
    }
    if !(b >= 0.0) || b.is_infinite() {
        return Err(Error::domain(
            "inv_marcum_q_a",
            format!("b = {b} must be finite and nonnegative"),
        ));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("inv_marcum_q_a", format!("p = {p} must lie in (0, 1)")));
    }
    let floor = marcum_q(order, 0.0, b)?.value();
    if p <= floor {
        return Err(Error::InfeasibleTarget { target: p, floor });
    }

    let q = |a: f64| marcum_q(order, a, b).map(Probability::value);
    let mut lo = 0.0;
    let mut hi = b.max(1.0);
    let mut doublings = 0;
    while q(hi)? < p {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Accuracy {
                func: "inv_marcum_q_a",
                msg: format!("could not bracket p = {p}"),
            });
        }
    }

    // dQ_L/da = a (Q_{L+1}(a,b) - Q_L(a,b))
    let f = |a: f64| q(a).map(|v| v - p).unwrap_or(f64::NAN);
    let df = |a: f64| match (marcum_q(order + 1, a, b), marcum_q(order, a, b)) {
        (Ok(up), Ok(here)) => a * (up.value() - here.value()),
        _ => 0.0,
    };
    match safeguarded_newton(f, df, lo, hi) {
        Some(a) if a.is_finite() => Ok(a),
        _ => Err(Error::Accuracy {
            func: "inv_marcum_q_a",
            msg: format!("no convergence for order {order}, b = {b}, p = {p}"),
        }),
    }
}
