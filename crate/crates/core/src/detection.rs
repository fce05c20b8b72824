//! GLRT target detection at one BS: symbol blocks, the projection test
//! statistic, the threshold for a false-alarm target, detection
//! probabilities in exact and large-`N` form, and Monte Carlo estimators.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelRealization;
use crate::config::{Modulation, ScenarioConfig};
use crate::error::{Error, Result};
use crate::linalg::{ColMatrix, Qr};
use crate::power::PowerVector;
use crate::rng::{self, Domain};
use crate::specfun::{inv_upper_gamma_regularized, marcum_q, upper_gamma_regularized, Probability};

/// `N × L` block whose column `l` is `√P_l · x_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    pub matrix: ColMatrix,
    pub modulation: Modulation,
}

impl SymbolBlock {
    pub fn samples(&self) -> usize {
        self.matrix.rows
    }

    pub fn cells(&self) -> usize {
        self.matrix.cols
    }

    /// Average per-sample power of column `l`.
    pub fn column_power(&self, l: usize) -> f64 {
        let col = self.matrix.column(l);
        col.iter().map(|z| z.norm_sqr()).sum::<f64>() / col.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// One length-`N` observation together with the hypothesis that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSample {
    pub y: Vec<Complex64>,
    pub truth: Hypothesis,
}

/// Threshold, order, sample count and noise level of one BS detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionSetup {
    pub cells: usize,
    pub samples: usize,
    pub delta: f64,
    pub sigma_s2: f64,
    #[serde(skip)]
    pub modulation: Modulation,
}

impl DetectionSetup {
    /// Detector of BS `target` under the scenario's false-alarm target.
    pub fn for_target(config: &ScenarioConfig, target: usize) -> Result<Self> {
        Ok(DetectionSetup {
            cells: config.cells,
            samples: config.samples,
            delta: detection_threshold(config.cells, config.pfa_target)?,
            sigma_s2: config.sigma_s2()[target],
            modulation: config.modulation,
        })
    }
}

fn order_of(cells: usize) -> Result<u32> {
    u32::try_from(cells)
        .ok()
        .filter(|&l| l >= 1)
        .ok_or_else(|| Error::domain("detection", format!("cell count {cells} out of range")))
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * scale, im * scale)
}

/// Draw an `N × L` symbol block with column powers `powers`.
pub fn generate_symbols<R: Rng + ?Sized>(
    powers: &PowerVector,
    samples: usize,
    modulation: Modulation,
    rng: &mut R,
) -> Result<SymbolBlock> {
    let cells = powers.len();
    if samples < cells {
        return Err(Error::domain(
            "generate_symbols",
            format!("need N >= L, got N = {samples}, L = {cells}"),
        ));
    }
    let mut matrix = ColMatrix::zeros(samples, cells);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for l in 0..cells {
        let amp = powers[l].sqrt();
        for z in matrix.column_mut(l) {
            let symbol = match modulation {
                Modulation::Qpsk => {
                    let bits: u8 = rng.random_range(0..4);
                    let re = if bits & 1 == 0 { h } else { -h };
                    let im = if bits & 2 == 0 { h } else { -h };
                    Complex64::new(re, im)
                }
                Modulation::Gaussian => complex_normal(rng, 1.0),
            };
            *z = symbol * amp;
        }
    }
    Ok(SymbolBlock { matrix, modulation })
}

/// Draw `y` under the given hypothesis: noise only, or `X h_s` plus noise.
pub fn generate_observation<R: Rng + ?Sized>(
    block: &SymbolBlock,
    h_s: &[Complex64],
    sigma_s2: f64,
    truth: Hypothesis,
    rng: &mut R,
) -> HypothesisSample {
    let mut y: Vec<Complex64> = (0..block.samples()).map(|_| complex_normal(rng, sigma_s2)).collect();
    if truth == Hypothesis::H1 {
        for (yi, s) in y.iter_mut().zip(block.matrix.mul_vec(h_s)) {
            *yi += s;
        }
    }
    HypothesisSample { y, truth }
}

/// The GLRT statistic `yᴴ X (XᴴX)⁻¹ Xᴴ y / σ²`, via Householder QR of `X`.
pub fn glrt_statistic(y: &[Complex64], block: &SymbolBlock, sigma_s2: f64) -> Result<f64> {
    let qr = Qr::new(&block.matrix);
    qr.check_rank()?;
    glrt_with(&qr, y, sigma_s2)
}

fn glrt_with(qr: &Qr, y: &[Complex64], sigma_s2: f64) -> Result<f64> {
    if !(sigma_s2 > 0.0) {
        return Err(Error::domain("glrt_statistic", "noise power must be positive"));
    }
    Ok(qr.projection_norm_sqr(y) / sigma_s2)
}

/// Threshold `δ` with `Γ(L, δ)/Γ(L) = pfa_target`.
pub fn detection_threshold(cells: usize, pfa_target: f64) -> Result<f64> {
    inv_upper_gamma_regularized(order_of(cells)?, pfa_target)
}

/// False-alarm probability at threshold `delta`.
pub fn false_alarm_probability(cells: usize, delta: f64) -> Result<Probability> {
    upper_gamma_regularized(order_of(cells)?, delta)
}

/// Detection probability using the realized Gram matrix:
/// `Q_L(√(2‖X h_s‖²/σ²), √(2δ))`.
pub fn pod_exact(h_s: &[Complex64], block: &SymbolBlock, sigma_s2: f64, delta: f64) -> Result<Probability> {
    if h_s.len() != block.cells() {
        return Err(Error::domain("pod_exact", "h_s must have one entry per BS"));
    }
    if !(delta >= 0.0) || !(sigma_s2 > 0.0) {
        return Err(Error::domain("pod_exact", "need delta >= 0 and sigma_s2 > 0"));
    }
    let energy: f64 = block.matrix.mul_vec(h_s).iter().map(|z| z.norm_sqr()).sum();
    marcum_q(
        order_of(block.cells())?,
        (2.0 * energy / sigma_s2).sqrt(),
        (2.0 * delta).sqrt(),
    )
}

/// Large-`N` detection probability
/// `Q_L(√(2N Σ_l P_l g_l / σ²), √(2δ))` for a target whose two-round
/// gains from each BS are `g_col`.
pub fn pod_closed_form(
    powers: &PowerVector,
    g_col: &[f64],
    sigma_s2: f64,
    samples: usize,
    delta: f64,
) -> Result<Probability> {
    if g_col.len() != powers.len() {
        return Err(Error::domain(
            "pod_closed_form",
            "gain column must have one entry per BS",
        ));
    }
    if g_col.iter().any(|g| !(*g >= 0.0)) || !(sigma_s2 > 0.0) || !(delta >= 0.0) {
        return Err(Error::domain(
            "pod_closed_form",
            "need gains >= 0, sigma_s2 > 0, delta >= 0",
        ));
    }
    let snr: f64 = powers.as_slice().iter().zip(g_col).map(|(p, g)| p * g).sum::<f64>() / sigma_s2;
    pod_from_snr(powers.len(), snr, samples, delta)
}

/// `Q_L(√(2N·snr), √(2δ))`.
pub fn pod_from_snr(cells: usize, snr: f64, samples: usize, delta: f64) -> Result<Probability> {
    let a = (2.0 * samples as f64 * snr.max(0.0)).sqrt();
    marcum_q(order_of(cells)?, a, (2.0 * delta).sqrt())
}

/// Two-round coefficients toward target `i`. Only the magnitudes are
/// modeled; phases are taken as zero.
pub fn sensing_coefficients(realization: &ChannelRealization, target: usize) -> Vec<Complex64> {
    realization
        .sensing_column(target)
        .into_iter()
        .map(|g| Complex64::new(g.sqrt(), 0.0))
        .collect()
}

/// Empirical false-alarm and detection rates with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionEstimate {
    pub trials: u64,
    pub pfa_hat: f64,
    pub pod_hat: f64,
    pub pfa_stderr: f64,
    pub pod_stderr: f64,
}

/// `√(p(1-p)/n)`.
pub fn binomial_stderr(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Monte Carlo detection experiment at BS `target`.
///
/// Trial `t` draws its symbols and both noise vectors from substream `t`
/// of `seed`, so the result does not depend on the rayon schedule.
pub fn simulate_detection(
    setup: &DetectionSetup,
    powers: &PowerVector,
    realization: &ChannelRealization,
    target: usize,
    trials: u64,
    seed: u64,
) -> Result<DetectionEstimate> {
    if trials == 0 {
        return Err(Error::domain("simulate_detection", "trials must be >= 1"));
    }
    let h_s = sensing_coefficients(realization, target);
    let (false_alarms, detections) = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64)> {
            let mut stream = rng::substream(seed, Domain::Detection, t);
            let block = generate_symbols(powers, setup.samples, setup.modulation, &mut stream)?;
            let qr = Qr::new(&block.matrix);
            qr.check_rank()?;
            let h0 = generate_observation(&block, &h_s, setup.sigma_s2, Hypothesis::H0, &mut stream);
            let h1 = generate_observation(&block, &h_s, setup.sigma_s2, Hypothesis::H1, &mut stream);
            let fa = glrt_with(&qr, &h0.y, setup.sigma_s2)? >= setup.delta;
            let det = glrt_with(&qr, &h1.y, setup.sigma_s2)? >= setup.delta;
            Ok((u64::from(fa), u64::from(det)))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let pfa_hat = false_alarms as f64 / trials as f64;
    let pod_hat = detections as f64 / trials as f64;
    Ok(DetectionEstimate {
        trials,
        pfa_hat,
        pod_hat,
        pfa_stderr: binomial_stderr(pfa_hat, trials),
        pod_stderr: binomial_stderr(pod_hat, trials),
    })
}

/// Raw GLRT statistics from `trials` independent experiments under the
/// given hypothesis (`h_s` is ignored under H0).
pub fn sample_statistics(
    setup: &DetectionSetup,
    powers: &PowerVector,
    h_s: &[Complex64],
    truth: Hypothesis,
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng::substream(seed, Domain::Detection, t);
            let block = generate_symbols(powers, setup.samples, setup.modulation, &mut stream)?;
            let obs = generate_observation(&block, h_s, setup.sigma_s2, truth, &mut stream);
            glrt_statistic(&obs.y, &block, setup.sigma_s2)
        })
        .collect()
}
