//! Fisher information and Cramér–Rao bounds for unquantized and one-bit
//! measurements, including the per-component weight function of one-bit
//! sampling, expected information under the random uniform / random Gaussian
//! threshold strategies, and the unknown-noise-variance extension.
//!
//! Parameter ordering is always: all spatial frequencies, all Doppler
//! frequencies, all magnitudes, all phases, then sigma when estimated.

use libm::{erf, erfc};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::sampling::{apply_f, apply_operator, MaskSet, ThresholdSet};
use crate::scene::{build_ground_truth, steering_vectors, TargetScene};
use crate::{CMatrix, CVector};

/// Layout of the estimated parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamOrdering {
    pub k: usize,
    pub has_sigma: bool,
}

impl ParamOrdering {
    pub fn dim(&self) -> usize {
        4 * self.k + usize::from(self.has_sigma)
    }

    /// Human-readable name of parameter `i` under this ordering.
    pub fn name(&self, i: usize) -> String {
        let k = self.k;
        match i {
            _ if i < k => format!("nsf[{i}]"),
            _ if i < 2 * k => format!("ndf[{}]", i - k),
            _ if i < 3 * k => format!("mag[{}]", i - 2 * k),
            _ if i < 4 * k => format!("phase[{}]", i - 3 * k),
            _ => "sigma".to_string(),
        }
    }
}

/// A Fisher information matrix with its CRB diagonal.
#[derive(Debug, Clone)]
pub struct FimResult {
    pub matrix: DMatrix<f64>,
    pub crb_diag: Vec<f64>,
    pub ordering: ParamOrdering,
    /// Set when the matrix was inverted by pseudo-inverse because its
    /// condition number exceeds 1e12.
    pub singular: bool,
}

impl FimResult {
    fn new(matrix: DMatrix<f64>, ordering: ParamOrdering) -> Self {
        let (crb_diag, singular) = crb_from_fim(&matrix);
        FimResult { matrix, crb_diag, ordering, singular }
    }
}

// ── Scalar functions ─────────────────────────────────────────────────

/// `Φ(x) = (1/√π) ∫_{-∞}^x e^{-t²} dt = (1 + erf(x)) / 2`. Not the standard
/// normal CDF: the argument is already scaled by `σ`, not `σ/√2`.
pub fn phi(x: f64) -> f64 {
    0.5 * (1.0 + erf(x))
}

fn ln_erfc(a: f64) -> f64 {
    if a < 25.0 {
        erfc(a).ln()
    } else {
        // asymptotic series: erfc(a) ~ e^{-a²}/(a√π) (1 - 1/(2a²) + 3/(4a⁴))
        let a2 = a * a;
        -a2 - (a * PI.sqrt()).ln() + (-0.5 / a2 + 0.75 / (a2 * a2)).ln_1p()
    }
}

/// One-bit information weight `ω(x) = e^{-2x²} / (2π Φ(x)(1-Φ(x)))`, an even
/// function maximized at `ω(0) = 2/π`. The tail `1-Φ(|x|)` is computed as
/// `erfc(|x|)/2` to avoid cancellation, and the whole expression moves to the
/// log domain once its factors underflow.
pub fn weight_omega(x: f64) -> f64 {
    let a = x.abs();
    let cap = 2.0 / PI;
    let value = if a <= 8.0 {
        let tail = 0.5 * erfc(a); // 1 - Φ(a), accurate for all a >= 0
        (-2.0 * a * a).exp() / (2.0 * PI * (1.0 - tail) * tail)
    } else {
        // ln ω = -2a² - ln(2π) - ln Φ(a) - ln(erfc(a)/2)
        let ln_phi = (-0.5 * erfc(a)).ln_1p(); // ln(1 - erfc(a)/2)
        let ln_one_minus_phi = ln_erfc(a) - std::f64::consts::LN_2;
        (-2.0 * a * a - (2.0 * PI).ln() - ln_phi - ln_one_minus_phi).exp()
    };
    value.min(cap)
}

/// Gaussian approximation of the weight function: `ω̃(x) = (2/π) e^{-x²}`.
pub fn approx_omega(x: f64) -> f64 {
    (2.0 / PI) * (-x * x).exp()
}

/// Expected `ω̃` weight for a uniform threshold on `[h_min, h_max]` applied
/// to a signal component `v`: `(2σ/(√π Δ)) (Φ((v-h_min)/σ) - Φ((v-h_max)/σ))`.
/// Degenerates to `ω̃((v - h)/σ)` as the interval shrinks to a point.
pub fn rut_expected_weight(v: f64, h_min: f64, h_max: f64, sigma: f64) -> f64 {
    let delta = h_max - h_min;
    if delta <= 1e-12 * (1.0 + h_min.abs().max(h_max.abs())) {
        return approx_omega((v - 0.5 * (h_min + h_max)) / sigma);
    }
    let lo = phi((v - h_max) / sigma);
    let hi = phi((v - h_min) / sigma);
    (2.0 * sigma / (PI.sqrt() * delta)) * (hi - lo)
}

/// Expected `ω̃` weight for a Gaussian threshold with deviation `sigma_t`
/// centered on the signal: `2σ / (π √(2σ_t² + σ²))`, independent of the
/// signal value.
pub fn rgt_expected_weight(sigma: f64, sigma_t: f64) -> f64 {
    2.0 * sigma / (PI * (2.0 * sigma_t * sigma_t + sigma * sigma).sqrt())
}

// ── Model derivatives ────────────────────────────────────────────────

fn steering_derivative(nsf: f64, mn: usize) -> CVector {
    CVector::from_fn(mn, |p, _| {
        Complex64::new(0.0, TAU * p as f64) * Complex64::from_polar(1.0, TAU * p as f64 * nsf)
    })
}

/// Complex Jacobian of `F_q(X(θ))` for the pulse at position `pos`, columns
/// ordered (nsf, ndf, mag, phase) per target.
fn complex_jacobian(scene: &TargetScene, masks: &MaskSet, s: &CMatrix, pos: usize) -> CMatrix {
    let cfg = &masks.config;
    let k = scene.k();
    let lr = cfg.l * masks.rx[pos].len();
    let pulse = masks.pulses[pos] as f64;
    let mut jac = CMatrix::zeros(lr, 4 * k);
    for (t, target) in scene.targets.iter().enumerate() {
        let (_, _, c) = steering_vectors(target.nsf, cfg);
        let dc = steering_derivative(target.nsf, cfg.mn());
        let g = apply_operator(&c, pos, masks, s);
        let gd = apply_operator(&dc, pos, masks, s);
        let doppler = Complex64::from_polar(1.0, TAU * pulse * target.ndf);
        let beta = target.beta();
        let phase_only = Complex64::from_polar(1.0, target.phase);
        for row in 0..lr {
            jac[(row, t)] = beta * doppler * gd[row];
            jac[(row, k + t)] = beta * Complex64::new(0.0, TAU * pulse) * doppler * g[row];
            jac[(row, 2 * k + t)] = phase_only * doppler * g[row];
            jac[(row, 3 * k + t)] = Complex64::new(0.0, 1.0) * beta * doppler * g[row];
        }
    }
    jac
}

/// Real/imaginary part derivatives of `F_q(X(θ))` with respect to the `4K`
/// parameters, as two real `LR x 4K` matrices.
pub fn model_jacobian(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    q: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let pos = masks.pulse_position(q).ok_or(Error::PulseNotSelected(q))?;
    let jac = complex_jacobian(scene, masks, s, pos);
    let jr = DMatrix::from_fn(jac.nrows(), jac.ncols(), |i, j| jac[(i, j)].re);
    let ji = DMatrix::from_fn(jac.nrows(), jac.ncols(), |i, j| jac[(i, j)].im);
    Ok((jr, ji))
}

// ── FIM assembly ─────────────────────────────────────────────────────

fn noise_free_signal(scene: &TargetScene, masks: &MaskSet, s: &CMatrix) -> Result<Vec<CVector>> {
    let x = build_ground_truth(scene, &masks.config);
    masks.pulses.iter().map(|&q| apply_f(&x, q, masks, s)).collect()
}

fn require_positive_sigma(scene: &TargetScene) -> Result<f64> {
    if scene.sigma > 0.0 {
        Ok(scene.sigma)
    } else {
        Err(Error::InvalidConfig("FIM requires sigma > 0".into()))
    }
}

/// Accumulate `(2/σ²) Σ_q Σ_n [w_r ∂r ∂r^T + w_i ∂i ∂i^T]` with
/// per-component weights supplied by `weights(pos, n) -> (w_r, w_i)`.
fn assemble_fim<F>(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    mut weights: F,
) -> Result<DMatrix<f64>>
where
    F: FnMut(usize, usize) -> (f64, f64),
{
    let sigma = require_positive_sigma(scene)?;
    let dim = 4 * scene.k();
    let mut fim = DMatrix::zeros(dim, dim);
    for pos in 0..masks.pulses.len() {
        let jac = complex_jacobian(scene, masks, s, pos);
        let lr = jac.nrows();
        let mut jr = DMatrix::zeros(lr, dim);
        let mut ji = DMatrix::zeros(lr, dim);
        for i in 0..lr {
            let (wr, wi) = weights(pos, i);
            let (sr, si) = (wr.sqrt(), wi.sqrt());
            for j in 0..dim {
                jr[(i, j)] = sr * jac[(i, j)].re;
                ji[(i, j)] = si * jac[(i, j)].im;
            }
        }
        fim += jr.transpose() * &jr + ji.transpose() * &ji;
    }
    fim *= 2.0 / (sigma * sigma);
    Ok(fim)
}

/// FIM of the unquantized measurements.
pub fn fim_unquantized(scene: &TargetScene, masks: &MaskSet, s: &CMatrix) -> Result<FimResult> {
    let fim = assemble_fim(scene, masks, s, |_, _| (1.0, 1.0))?;
    Ok(FimResult::new(fim, ParamOrdering { k: scene.k(), has_sigma: false }))
}

/// Which weight function enters the one-bit FIM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Exact,
    Approx,
}

/// One-bit FIM: the unquantized FIM with per-component weights
/// `ω((r_q - h^r_q)/σ)` and `ω((i_q - h^i_q)/σ)`.
pub fn fim_onebit_with(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    thresholds: &ThresholdSet,
    kind: WeightKind,
) -> Result<FimResult> {
    let sigma = require_positive_sigma(scene)?;
    let signal = noise_free_signal(scene, masks, s)?;
    if thresholds.h.len() != masks.pulses.len() {
        return Err(Error::DimensionMismatch("one threshold vector per pulse required".into()));
    }
    let w = |x: f64| match kind {
        WeightKind::Exact => weight_omega(x),
        WeightKind::Approx => approx_omega(x),
    };
    let fim = assemble_fim(scene, masks, s, |pos, n| {
        let sv = signal[pos][n];
        let hv = thresholds.h[pos][n];
        (w((sv.re - hv.re) / sigma), w((sv.im - hv.im) / sigma))
    })?;
    Ok(FimResult::new(fim, ParamOrdering { k: scene.k(), has_sigma: false }))
}

/// One-bit FIM with the exact weight function.
pub fn fim_onebit(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    thresholds: &ThresholdSet,
) -> Result<FimResult> {
    fim_onebit_with(scene, masks, s, thresholds, WeightKind::Exact)
}

/// One-bit FIM with sigma unknown: the `(4K+1)`-dimensional matrix with the
/// sigma row/column appended last.
pub fn fim_onebit_unknown_sigma(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    thresholds: &ThresholdSet,
) -> Result<FimResult> {
    let sigma = require_positive_sigma(scene)?;
    let theta = fim_onebit(scene, masks, s, thresholds)?;
    let k = scene.k();
    let dim = 4 * k + 1;
    let signal = noise_free_signal(scene, masks, s)?;
    let mut cross = DVector::zeros(4 * k);
    let mut i_sigma = 0.0;
    for pos in 0..masks.pulses.len() {
        let jac = complex_jacobian(scene, masks, s, pos);
        for n in 0..jac.nrows() {
            let sv = signal[pos][n];
            let hv = thresholds.h[pos][n];
            let xr = (sv.re - hv.re) / sigma;
            let xi = (sv.im - hv.im) / sigma;
            let (wr, wi) = (weight_omega(xr), weight_omega(xi));
            for j in 0..4 * k {
                cross[j] -= (2.0 / (sigma * sigma))
                    * (wr * xr * jac[(n, j)].re + wi * xi * jac[(n, j)].im);
            }
            i_sigma += (2.0 / (sigma * sigma)) * (wr * xr * xr + wi * xi * xi);
        }
    }
    let mut fim = DMatrix::zeros(dim, dim);
    fim.view_mut((0, 0), (4 * k, 4 * k)).copy_from(&theta.matrix);
    for j in 0..4 * k {
        fim[(j, 4 * k)] = cross[j];
        fim[(4 * k, j)] = cross[j];
    }
    fim[(4 * k, 4 * k)] = i_sigma;
    Ok(FimResult::new(fim, ParamOrdering { k, has_sigma: true }))
}

/// Unquantized FIM with sigma unknown: block diagonal with `I(σ) = 4LRP/σ²`,
/// so `CRB(σ) = σ²/(4LRP)` and the θ block is unchanged.
pub fn fim_unquantized_unknown_sigma(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
) -> Result<FimResult> {
    let sigma = require_positive_sigma(scene)?;
    let theta = fim_unquantized(scene, masks, s)?;
    let k = scene.k();
    let dim = 4 * k + 1;
    let cfg = &masks.config;
    let lrp = (cfg.l * cfg.r * masks.pulses.len()) as f64;
    let mut fim = DMatrix::zeros(dim, dim);
    fim.view_mut((0, 0), (4 * k, 4 * k)).copy_from(&theta.matrix);
    fim[(4 * k, 4 * k)] = 4.0 * lrp / (sigma * sigma);
    Ok(FimResult::new(fim, ParamOrdering { k, has_sigma: true }))
}

/// Expected one-bit FIM over random uniform thresholds on `[h_min, h_max]`,
/// using the `ω̃` approximation of the weight function.
pub fn expected_fim_rut(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    h_min: f64,
    h_max: f64,
) -> Result<FimResult> {
    if h_min > h_max {
        return Err(Error::InvalidConfig(format!("h_min={h_min} exceeds h_max={h_max}")));
    }
    let sigma = require_positive_sigma(scene)?;
    let signal = noise_free_signal(scene, masks, s)?;
    let fim = assemble_fim(scene, masks, s, |pos, n| {
        let sv = signal[pos][n];
        (
            rut_expected_weight(sv.re, h_min, h_max, sigma),
            rut_expected_weight(sv.im, h_min, h_max, sigma),
        )
    })?;
    Ok(FimResult::new(fim, ParamOrdering { k: scene.k(), has_sigma: false }))
}

/// Expected one-bit FIM over random Gaussian thresholds centered on the
/// signal with deviations `sigma_r`/`sigma_i`, using the `ω̃` approximation.
/// The weight is constant: with `σ_r² = κσ²` it reduces to `2/(π√(2κ+1))`.
pub fn expected_fim_rgt(
    scene: &TargetScene,
    masks: &MaskSet,
    s: &CMatrix,
    sigma_r: f64,
    sigma_i: f64,
) -> Result<FimResult> {
    if sigma_r < 0.0 || sigma_i < 0.0 {
        return Err(Error::InvalidConfig("threshold deviations must be >= 0".into()));
    }
    let sigma = require_positive_sigma(scene)?;
    let wr = rgt_expected_weight(sigma, sigma_r);
    let wi = rgt_expected_weight(sigma, sigma_i);
    let fim = assemble_fim(scene, masks, s, |_, _| (wr, wi))?;
    Ok(FimResult::new(fim, ParamOrdering { k: scene.k(), has_sigma: false }))
}

/// Diagonal of the inverse FIM. Falls back to the pseudo-inverse (and flags
/// it) when the condition number exceeds 1e12.
pub fn crb_from_fim(matrix: &DMatrix<f64>) -> (Vec<f64>, bool) {
    let n = matrix.nrows();
    if n == 0 {
        return (vec![], false);
    }
    let sym = (matrix + matrix.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lam_max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let singular = !(lam_min > lam_max / 1e12) || lam_max <= 0.0;
    let cutoff = lam_max / 1e12;
    let mut crb = vec![0.0; n];
    for (i, item) in crb.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..n {
            let lam = eig.eigenvalues[j];
            if lam > cutoff && lam > 0.0 {
                let v = eig.eigenvectors[(i, j)];
                acc += v * v / lam;
            }
        }
        *item = acc;
    }
    (crb, singular)
}
