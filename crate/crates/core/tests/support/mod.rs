//! Independent reference implementations used as test oracles. Nothing
//! here calls into the library's numerical routines.
#![allow(dead_code)]

use std::sync::OnceLock;

use num_complex::Complex64;

/// `ln k!` for `k < 8192`, by direct summation.
pub fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(8192);
        let mut acc = 0.0f64;
        out.push(0.0);
        for k in 1..8192 {
            acc += (k as f64).ln();
            out.push(acc);
        }
        out
    })
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `e^{-z} I_ν(z)` from the ascending power series, summed in log space.
pub fn bessel_i_scaled(nu: usize, z: f64) -> f64 {
    assert!(z >= 0.0);
    if z == 0.0 {
        return if nu == 0 { 1.0 } else { 0.0 };
    }
    let kmax = (2.0 * z) as usize + 60;
    let lf = ln_factorials();
    let half = (z / 2.0).ln();
    let terms: Vec<f64> = (0..=kmax)
        .map(|k| (2 * k + nu) as f64 * half - lf[k] - lf[k + nu] - z)
        .collect();
    log_sum_exp(&terms).exp()
}

/// Density of `R = √(χ'²_{2L}(a²))` at `x`:
/// `x (x/a)^{L-1} e^{-(x²+a²)/2} I_{L-1}(ax)`, expanded so that `a = 0`
/// needs no special case.
pub fn rice_density(order: usize, a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let nu = order - 1;
    let z = a * x / 2.0;
    let base = x.ln() + 2.0 * nu as f64 * x.ln() - nu as f64 * std::f64::consts::LN_2 - (x * x + a * a) / 2.0;
    if z == 0.0 {
        let lf = ln_factorials();
        return (base - lf[nu]).exp();
    }
    let kmax = (4.0 * z) as usize + 60;
    let lf = ln_factorials();
    let terms: Vec<f64> = (0..=kmax)
        .map(|k| base + 2.0 * k as f64 * z.ln() - lf[k] - lf[k + nu])
        .collect();
    log_sum_exp(&terms).exp()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, (k - g).abs() * h)
}

/// Adaptive 15-point Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = kronrod(f, lo, hi);
        if err <= tol || depth == 0 {
            return v;
        }
        let mid = 0.5 * (lo + hi);
        rec(f, lo, mid, tol / 2.0, depth - 1) + rec(f, mid, hi, tol / 2.0, depth - 1)
    }
    rec(f, lo, hi, tol, 40)
}

/// `Q_L(a, b)` as the tail integral of the Rice-type density.
pub fn marcum_q_quadrature(order: usize, a: f64, b: f64) -> f64 {
    let top = a.max(b) + 40.0;
    // split at the mode region so the adaptive rule sees the peak
    let f = |x: f64| rice_density(order, a, x);
    let mut knots = vec![b];
    for k in [a - 2.0, a, a + 2.0, a + 6.0] {
        if k > b && k < top {
            knots.push(k);
        }
    }
    knots.push(top);
    knots.windows(2).map(|w| integrate(&f, w[0], w[1], 1e-14)).sum()
}

/// CDF of the central chi-squared law with `2L` degrees of freedom.
pub fn chi2_even_cdf(half_dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..half_dof {
        term *= h / k as f64;
        sum += term;
    }
    1.0 - (-h).exp() * sum
}

/// Upper tail of the same law, summed directly so small tails keep their
/// relative precision.
pub fn chi2_even_sf(half_dof: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let h = x / 2.0;
    let lf = ln_factorials();
    let terms: Vec<f64> = (0..half_dof).map(|k| k as f64 * h.ln() - lf[k] - h).collect();
    log_sum_exp(&terms).exp()
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the KS statistic (Stephens' finite-n correction
/// of the asymptotic 1.628).
pub fn ks_critical_1pct(n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    1.628 / (rn + 0.12 + 0.11 / rn)
}

/// Bisection for a root of a monotone function on `[lo, hi]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse of a complex Hermitian positive definite matrix by Gauss-Jordan
/// elimination with partial pivoting (row-major).
pub fn invert(a: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut m = a.to_vec();
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| m[r * n + col].norm().total_cmp(&m[s * n + col].norm()))
            .unwrap();
        for j in 0..n {
            m.swap(col * n + j, piv * n + j);
            inv.swap(col * n + j, piv * n + j);
        }
        let d = m[col * n + col];
        for j in 0..n {
            m[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                for j in 0..n {
                    let (mc, ic) = (m[col * n + j], inv[col * n + j]);
                    m[r * n + j] -= f * mc;
                    inv[r * n + j] -= f * ic;
                }
            }
        }
    }
    inv
}

/// `yᴴX(XᴴX)⁻¹Xᴴy / σ²` from explicit normal equations. `columns[l]` is
/// column `l` of `X`.
pub fn glrt_normal_equations(y: &[Complex64], columns: &[Vec<Complex64>], sigma2: f64) -> f64 {
    let l = columns.len();
    let mut gram = vec![Complex64::new(0.0, 0.0); l * l];
    for i in 0..l {
        for j in 0..l {
            gram[i * l + j] = columns[i].iter().zip(&columns[j]).map(|(a, b)| a.conj() * b).sum();
        }
    }
    let xy: Vec<Complex64> = columns
        .iter()
        .map(|c| c.iter().zip(y).map(|(a, b)| a.conj() * b).sum())
        .collect();
    let inv = invert(&gram, l);
    let mut q = Complex64::new(0.0, 0.0);
    for i in 0..l {
        for j in 0..l {
            q += xy[i].conj() * inv[i * l + j] * xy[j];
        }
    }
    q.re / sigma2
}

/// A two-cell instance stated from scratch: `rho[l][i]`, `g[l][i]`,
/// noise powers, and the SINR / sensing-SNR thresholds.
#[derive(Debug, Clone)]
pub struct TwoCell {
    pub rho: [[f64; 2]; 2],
    pub g: [[f64; 2]; 2],
    pub sigma_c2: [f64; 2],
    pub sigma_s2: [f64; 2],
    pub budget: f64,
    pub sinr: [f64; 2],
    pub snr: [f64; 2],
}

impl TwoCell {
    pub fn sum_rate(&self, p: [f64; 2]) -> f64 {
        (0..2)
            .map(|i| {
                let j = 1 - i;
                (1.0 + p[i] * self.rho[i][i] / (p[j] * self.rho[j][i] + self.sigma_c2[i])).log2()
            })
            .sum()
    }

    /// Smallest slack over all rows (nonnegative iff feasible).
    pub fn min_slack(&self, p: [f64; 2]) -> f64 {
        let mut s = p[0].min(p[1]).min(self.budget - p[0] - p[1]);
        for i in 0..2 {
            let j = 1 - i;
            s = s.min(p[i] * self.rho[i][i] - self.sinr[i] * (p[j] * self.rho[j][i] + self.sigma_c2[i]));
            s = s.min(p[0] * self.g[0][i] + p[1] * self.g[1][i] - self.snr[i] * self.sigma_s2[i]);
        }
        s
    }

    /// `Σ_i log2(received_i) + (-t_i x_i + ln t_i + 1)/ln 2` with `x_i`
    /// the interference plus noise at user `i`.
    pub fn surrogate(&self, p: [f64; 2], t: [f64; 2]) -> f64 {
        (0..2)
            .map(|i| {
                let j = 1 - i;
                let rest = p[j] * self.rho[j][i] + self.sigma_c2[i];
                let total = p[i] * self.rho[i][i] + rest;
                total.log2() + (-t[i] * rest + t[i].ln() + 1.0) / std::f64::consts::LN_2
            })
            .sum()
    }

    fn scan<F: Fn([f64; 2]) -> f64>(&self, f: &F, lo: [f64; 2], hi: [f64; 2], n: usize) -> Option<([f64; 2], f64)> {
        let mut best: Option<([f64; 2], f64)> = None;
        for a in 0..=n {
            let p0 = lo[0] + (hi[0] - lo[0]) * a as f64 / n as f64;
            for b in 0..=n {
                let p1 = lo[1] + (hi[1] - lo[1]) * b as f64 / n as f64;
                let p = [p0, p1];
                if self.min_slack(p) < 0.0 {
                    continue;
                }
                let v = f(p);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((p, v));
                }
            }
        }
        best
    }

    /// Sum-rate maximum by [`TwoCell::grid_maximum`].
    pub fn grid_optimum(&self) -> Option<([f64; 2], f64)> {
        self.grid_maximum(|p| self.sum_rate(p))
    }

    /// Exhaustive search of `f` on the `2000²` grid over `[0, P_th]²`, then
    /// a few zoomed grids around the best point so the answer is not
    /// limited by the coarse spacing. `None` if no grid point is feasible.
    pub fn grid_maximum<F: Fn([f64; 2]) -> f64>(&self, f: F) -> Option<([f64; 2], f64)> {
        let n = 2000;
        let (mut p, mut v) = self.scan(&f, [0.0, 0.0], [self.budget, self.budget], n)?;
        let mut h = self.budget / n as f64;
        for _ in 0..6 {
            let lo = [(p[0] - 2.0 * h).max(0.0), (p[1] - 2.0 * h).max(0.0)];
            let hi = [(p[0] + 2.0 * h).min(self.budget), (p[1] + 2.0 * h).min(self.budget)];
            if let Some((q, w)) = self.scan(&f, lo, hi, 400) {
                if w >= v {
                    p = q;
                    v = w;
                }
            }
            h /= 100.0;
        }
        Some((p, v))
    }
}
