//! Householder QR for tall complex matrices, enough to evaluate projection
//! quadratic forms `yᴴ X (XᴴX)⁻¹ Xᴴ y` without forming an inverse.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major `rows × cols` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl ColMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ColMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// `self · v` for a length-`cols` vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.column(j)) {
                *o += x * vj;
            }
        }
        out
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `aᴴ b`
fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Householder factorization `X = Q R` of a tall matrix.
#[derive(Debug, Clone)]
pub struct Qr {
    rows: usize,
    cols: usize,
    /// Unit reflector vectors; reflector `k` acts on rows `k..`.
    reflectors: Vec<Vec<Complex64>>,
    /// Upper-triangular factor, column-major `cols × cols`.
    r: ColMatrix,
}

impl Qr {
    pub fn new(x: &ColMatrix) -> Self {
        let (rows, cols) = (x.rows, x.cols);
        assert!(rows >= cols, "QR needs a tall matrix");
        let mut a = x.clone();
        let mut reflectors = Vec::with_capacity(cols);
        for k in 0..cols {
            let col = &a.column(k)[k..];
            let norm = norm_sqr(col).sqrt();
            let mut v = col.to_vec();
            if norm == 0.0 {
                reflectors.push(vec![Complex64::new(0.0, 0.0); rows - k]);
                continue;
            }
            let phase = if v[0].norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                v[0] / v[0].norm()
            };
            let alpha = -phase * norm;
            v[0] -= alpha;
            let vnorm = norm_sqr(&v).sqrt();
            v.iter_mut().for_each(|z| *z /= vnorm);
            for j in k..cols {
                let tail = &mut a.column_mut(j)[k..];
                let s = dot(&v, tail) * 2.0;
                for (t, &vi) in tail.iter_mut().zip(&v) {
                    *t -= vi * s;
                }
            }
            reflectors.push(v);
        }
        let mut r = ColMatrix::zeros(cols, cols);
        for j in 0..cols {
            r.column_mut(j)[..=j].copy_from_slice(&a.column(j)[..=j]);
        }
        Qr {
            rows,
            cols,
            reflectors,
            r,
        }
    }

    pub fn r(&self) -> &ColMatrix {
        &self.r
    }

    /// Overwrite `y` with `Qᴴ y`.
    pub fn apply_qh(&self, y: &mut [Complex64]) {
        assert_eq!(y.len(), self.rows);
        for (k, v) in self.reflectors.iter().enumerate() {
            let tail = &mut y[k..];
            let s = dot(v, tail) * 2.0;
            for (t, &vi) in tail.iter_mut().zip(v) {
                *t -= vi * s;
            }
        }
    }

    /// `‖P y‖²` where `P` projects onto the column space of `X`.
    pub fn projection_norm_sqr(&self, y: &[Complex64]) -> f64 {
        let mut w = y.to_vec();
        self.apply_qh(&mut w);
        norm_sqr(&w[..self.cols])
    }

    /// Singular values of `X` (those of `R`), largest first.
    pub fn singular_values(&self) -> Vec<f64> {
        jacobi_singular_values(&self.r)
    }

    /// Fail when the smallest singular value is below `rows · ε · largest`.
    pub fn check_rank(&self) -> Result<()> {
        let sv = self.singular_values();
        let largest = sv.first().copied().unwrap_or(0.0);
        let smallest = sv.last().copied().unwrap_or(0.0);
        if largest == 0.0 || smallest < self.rows as f64 * f64::EPSILON * largest {
            return Err(Error::RankDeficient { smallest, largest });
        }
        Ok(())
    }
}

/// One-sided (Hestenes) Jacobi on the columns of a small square matrix.
fn jacobi_singular_values(m: &ColMatrix) -> Vec<f64> {
    let mut a = m.clone();
    let n = a.cols;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = norm_sqr(a.column(p));
                let beta = norm_sqr(a.column(q));
                let gamma = dot(a.column(p), a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate column q so the pair's inner product is real
                let unphase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..a.rows {
                    let ap = a.data[p * a.rows + k];
                    let aq = a.data[q * a.rows + k] * unphase;
                    a.data[p * a.rows + k] = ap * c - aq * s;
                    a.data[q * a.rows + k] = ap * s + aq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| norm_sqr(a.column(j)).sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sample_matrix() -> ColMatrix {
        let mut x = ColMatrix::zeros(5, 2);
        let vals = [
            c(1.0, 0.5),
            c(-0.3, 0.2),
            c(0.7, -1.1),
            c(0.0, 0.4),
            c(2.0, 0.1),
            c(0.2, 0.9),
            c(1.5, -0.2),
            c(-0.8, 0.3),
            c(0.6, 0.6),
            c(-1.0, -0.5),
        ];
        x.data.copy_from_slice(&vals);
        x
    }

    #[test]
    fn r_reproduces_column_norms_and_q_is_unitary() {
        let x = sample_matrix();
        let qr = Qr::new(&x);
        // |R[0,0]| = ‖x_0‖, and Qᴴ preserves norms
        assert!((qr.r().column(0)[0].norm() - norm_sqr(x.column(0)).sqrt()).abs() < 1e-12);
        let y: Vec<Complex64> = (0..5).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let mut w = y.clone();
        qr.apply_qh(&mut w);
        assert!((norm_sqr(&w) - norm_sqr(&y)).abs() < 1e-10);
        // Qᴴ x_j = R e_j
        for j in 0..2 {
            let mut w = x.column(j).to_vec();
            qr.apply_qh(&mut w);
            for (k, wk) in w.iter().enumerate() {
                let expected = if k <= j { qr.r().column(j)[k] } else { c(0.0, 0.0) };
                assert!((wk - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let x = sample_matrix();
        let sv = Qr::new(&x).singular_values();
        let a = norm_sqr(x.column(0));
        let b = norm_sqr(x.column(1));
        let g = dot(x.column(0), x.column(1)).norm_sqr();
        let disc = ((a - b) * (a - b) + 4.0 * g).sqrt();
        let hi = 0.5 * (a + b + disc);
        let lo = 0.5 * (a + b - disc);
        assert!((sv[0] * sv[0] - hi).abs() < 1e-10);
        assert!((sv[1] * sv[1] - lo).abs() < 1e-10);
    }

    #[test]
    fn rank_check_flags_dependent_columns() {
        let mut x = sample_matrix();
        let first = x.column(0).to_vec();
        x.column_mut(1)
            .iter_mut()
            .zip(&first)
            .for_each(|(d, s)| *d = s * c(0.0, 2.0));
        assert!(matches!(Qr::new(&x).check_rank(), Err(Error::RankDeficient { .. })));
        assert!(Qr::new(&sample_matrix()).check_rank().is_ok());
        assert!(Qr::new(&ColMatrix::zeros(4, 2)).check_rank().is_err());
    }
}
