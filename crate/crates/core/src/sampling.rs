//! Compressive masks, the per-pulse measurement operator and its adjoint,
//! one-bit quantization, threshold generation, and the minimal sign-consistent
//! perturbation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::RadarConfig;
use crate::{CMatrix, CVector};

/// Per-pulse transmit/receive antenna selections and the selected pulse set.
///
/// All indices are zero-based and sorted. `tx[i]`/`rx[i]` belong to pulse
/// `pulses[i]`; the pulse set always contains `0` and `q - 1` so the CPI span
/// is preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSet {
    pub config: RadarConfig,
    pub tx: Vec<Vec<usize>>,
    pub rx: Vec<Vec<usize>>,
    pub pulses: Vec<usize>,
}

impl MaskSet {
    /// Position of pulse `q` within the selected set, if selected.
    pub fn pulse_position(&self, q: usize) -> Option<usize> {
        self.pulses.binary_search(&q).ok()
    }
}

/// One-bit threshold vectors, one per selected pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdStrategy {
    Zero,
    Rut,
    Rgt,
}

#[derive(Debug, Clone)]
pub struct ThresholdSet {
    pub h: Vec<CVector>,
    pub strategy: ThresholdStrategy,
    pub dac_bits: Option<u32>,
}

impl ThresholdSet {
    pub fn zero(pulses: usize, len: usize) -> Self {
        Self {
            h: (0..pulses).map(|_| CVector::zeros(len)).collect(),
            strategy: ThresholdStrategy::Zero,
            dac_bits: None,
        }
    }
}

/// One-bit data vectors with entries `±1 ± j`, one per selected pulse.
#[derive(Debug, Clone)]
pub struct OneBitData {
    pub z: Vec<CVector>,
}

fn sorted_random_subset(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut items: Vec<usize> = (0..n).collect();
    let (chosen, _) = items.partial_shuffle(rng, k);
    let mut out = chosen.to_vec();
    out.sort_unstable();
    out
}

/// Draw uniformly random size-`T`/`R` antenna subsets for each selected pulse
/// and a uniformly random size-`P` pulse set containing the first and last
/// pulse.
pub fn draw_masks(config: &RadarConfig, seed: u64) -> Result<MaskSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut pulses = if config.q == 2 || config.p == config.q {
        (0..config.q).collect::<Vec<_>>()
    } else {
        let interior: Vec<usize> = (1..config.q - 1).collect();
        let mut items = interior;
        let (chosen, _) = items.partial_shuffle(&mut rng, config.p - 2);
        let mut set = chosen.to_vec();
        set.push(0);
        set.push(config.q - 1);
        set
    };
    pulses.sort_unstable();
    pulses.dedup();

    let mut tx = Vec::with_capacity(pulses.len());
    let mut rx = Vec::with_capacity(pulses.len());
    for _ in &pulses {
        tx.push(sorted_random_subset(&mut rng, config.m, config.t));
        rx.push(sorted_random_subset(&mut rng, config.n, config.r));
    }
    Ok(MaskSet { config: *config, tx, rx, pulses })
}

/// Action of the per-pulse measurement matrix `M_q` on a virtual-array vector,
/// computed without materializing the `LR x MN` matrix.
pub(crate) fn apply_operator(v: &CVector, pos: usize, masks: &MaskSet, s: &CMatrix) -> CVector {
    let cfg = &masks.config;
    let (m, n, l) = (cfg.m, cfg.n, cfg.l);
    debug_assert_eq!(v.len(), m * n);
    debug_assert_eq!(s.nrows(), m);
    debug_assert_eq!(s.ncols(), l);

    // v = vec(G) for an N x M matrix G; select rows/columns, multiply by the
    // selected waveforms, and vectorize the resulting R x L block.
    let tx = &masks.tx[pos];
    let rx = &masks.rx[pos];
    let g = DMatrix::from_column_slice(n, m, v.as_slice());
    let mut sel = CMatrix::zeros(rx.len(), tx.len());
    for (j, &mj) in tx.iter().enumerate() {
        for (i, &ni) in rx.iter().enumerate() {
            sel[(i, j)] = g[(ni, mj)];
        }
    }
    let s_sel = CMatrix::from_fn(tx.len(), l, |i, j| s[(tx[i], j)]);
    let y = sel * s_sel;
    CVector::from_column_slice(y.as_slice())
}

/// Adjoint action `M_q^H v`, mapping an `LR` measurement back to the
/// `MN` virtual array.
pub(crate) fn apply_operator_adjoint(
    v: &CVector,
    pos: usize,
    masks: &MaskSet,
    s: &CMatrix,
) -> CVector {
    let cfg = &masks.config;
    let (m, n, l) = (cfg.m, cfg.n, cfg.l);
    let tx = &masks.tx[pos];
    let rx = &masks.rx[pos];
    debug_assert_eq!(v.len(), l * rx.len());

    let vm = DMatrix::from_column_slice(rx.len(), l, v.as_slice());
    let s_sel = CMatrix::from_fn(tx.len(), l, |i, j| s[(tx[i], j)]);
    let w = vm * s_sel.adjoint(); // R x T
    let mut out = CVector::zeros(m * n);
    for (j, &mj) in tx.iter().enumerate() {
        for (i, &ni) in rx.iter().enumerate() {
            out[mj * n + ni] = w[(i, j)];
        }
    }
    out
}

/// `F_q(X) = M_q X e_q`: the compressed measurement of pulse `q`.
pub fn apply_f(x: &CMatrix, q: usize, masks: &MaskSet, s: &CMatrix) -> Result<CVector> {
    let pos = masks.pulse_position(q).ok_or(Error::PulseNotSelected(q))?;
    let cfg = &masks.config;
    if x.nrows() != cfg.mn() || x.ncols() != cfg.q {
        return Err(Error::DimensionMismatch(format!(
            "X is {}x{}, expected {}x{}",
            x.nrows(),
            x.ncols(),
            cfg.mn(),
            cfg.q
        )));
    }
    if s.nrows() != cfg.m || s.ncols() != cfg.l {
        return Err(Error::DimensionMismatch("waveform matrix has wrong shape".into()));
    }
    let col = CVector::from_column_slice(x.column(q).as_slice());
    Ok(apply_operator(&col, pos, masks, s))
}

/// Adjoint of `apply_f`: returns `M_q^H v`.
pub fn apply_f_adjoint(v: &CVector, q: usize, masks: &MaskSet, s: &CMatrix) -> Result<CVector> {
    let pos = masks.pulse_position(q).ok_or(Error::PulseNotSelected(q))?;
    let cfg = &masks.config;
    if v.len() != cfg.l * masks.rx[pos].len() {
        return Err(Error::DimensionMismatch(format!(
            "measurement has length {}, expected {}",
            v.len(),
            cfg.l * masks.rx[pos].len()
        )));
    }
    if s.nrows() != cfg.m || s.ncols() != cfg.l {
        return Err(Error::DimensionMismatch("waveform matrix has wrong shape".into()));
    }
    Ok(apply_operator_adjoint(v, pos, masks, s))
}

/// Per-pulse Gram matrix `M_q^H M_q` (size `MN x MN`), assembled from the
/// Kronecker identity `(Γ_t^T S̃* S̃^T Γ_t) ⊗ (Γ_r^T Γ_r)` so the dense
/// operator is never formed.
pub fn gram_matrix(pos: usize, masks: &MaskSet, s: &CMatrix) -> CMatrix {
    let cfg = &masks.config;
    let (m, n) = (cfg.m, cfg.n);
    let tx = &masks.tx[pos];
    let rx = &masks.rx[pos];

    let s_sel = CMatrix::from_fn(tx.len(), cfg.l, |i, j| s[(tx[i], j)]);
    let kt = (&s_sel * s_sel.adjoint()).conjugate(); // S̃* S̃^T, T x T

    let mut rx_indicator = vec![false; n];
    for &i in rx {
        rx_indicator[i] = true;
    }

    let mut gram = CMatrix::zeros(m * n, m * n);
    for (ti, &mi) in tx.iter().enumerate() {
        for (tj, &mj) in tx.iter().enumerate() {
            let val = kt[(ti, tj)];
            for (ni, &on) in rx_indicator.iter().enumerate() {
                if on {
                    gram[(mi * n + ni, mj * n + ni)] = val;
                }
            }
        }
    }
    gram
}

fn sign_pm(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Element-wise one-bit quantization of `y - h`:
/// `sign(Re) + j sign(Im)` with the convention `sign(0) = +1`.
pub fn one_bit_quantize(y: &CVector, h: &CVector) -> Result<CVector> {
    if y.len() != h.len() {
        return Err(Error::DimensionMismatch(format!(
            "signal length {} vs threshold length {}",
            y.len(),
            h.len()
        )));
    }
    Ok(CVector::from_fn(y.len(), |i, _| {
        let d = y[i] - h[i];
        Complex64::new(sign_pm(d.re), sign_pm(d.im))
    }))
}

/// Quantize every selected pulse against its threshold.
pub fn quantize_all(ys: &[CVector], thresholds: &ThresholdSet) -> Result<OneBitData> {
    if ys.len() != thresholds.h.len() {
        return Err(Error::DimensionMismatch("pulse count mismatch".into()));
    }
    let z = ys
        .iter()
        .zip(&thresholds.h)
        .map(|(y, h)| one_bit_quantize(y, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(OneBitData { z })
}

/// Random uniform threshold: every real and imaginary component i.i.d.
/// `U[h_min, h_max]` (one shared range for both parts).
pub fn gen_threshold_rut(
    h_min: f64,
    h_max: f64,
    pulses: usize,
    len: usize,
    seed: u64,
) -> Result<ThresholdSet> {
    if h_min > h_max {
        return Err(Error::InvalidConfig(format!("h_min={h_min} exceeds h_max={h_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(h_min, h_max)
        .map_err(|e| Error::InvalidConfig(format!("bad RUT range: {e}")))?;
    let h = (0..pulses)
        .map(|_| {
            CVector::from_fn(len, |_, _| {
                let re = dist.sample(&mut rng);
                let im = dist.sample(&mut rng);
                Complex64::new(re, im)
            })
        })
        .collect();
    Ok(ThresholdSet { h, strategy: ThresholdStrategy::Rut, dac_bits: None })
}

/// Random Gaussian threshold: real parts `N(mean_r, sigma_r^2)` and imaginary
/// parts `N(mean_i, sigma_i^2)`, independent. Means are passed as complex
/// vectors carrying the real/imaginary anchors per pulse.
pub fn gen_threshold_rgt(
    means: &[CVector],
    sigma_r: f64,
    sigma_i: f64,
    seed: u64,
) -> Result<ThresholdSet> {
    if sigma_r < 0.0 || sigma_i < 0.0 {
        return Err(Error::InvalidConfig("threshold deviations must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm_r = Normal::new(0.0, sigma_r.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let norm_i = Normal::new(0.0, sigma_i.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let h = means
        .iter()
        .map(|mean| {
            CVector::from_fn(mean.len(), |i, _| {
                let re = mean[i].re + if sigma_r > 0.0 { norm_r.sample(&mut rng) } else { 0.0 };
                let im = mean[i].im + if sigma_i > 0.0 { norm_i.sample(&mut rng) } else { 0.0 };
                Complex64::new(re, im)
            })
        })
        .collect();
    Ok(ThresholdSet { h, strategy: ThresholdStrategy::Rgt, dac_bits: None })
}

/// Round every threshold component to the nearest of `2^bits` uniformly
/// spaced levels spanning `[lo, hi]` (endpoints included). Idempotent.
pub fn dac_quantize(t: &ThresholdSet, bits: u32, lo: f64, hi: f64) -> ThresholdSet {
    assert!(bits >= 1, "DAC bit depth must be >= 1");
    assert!(lo < hi, "DAC range must be non-empty");
    let levels = (1u64 << bits) - 1;
    let step = (hi - lo) / levels as f64;
    let snap = |v: f64| -> f64 {
        let k = ((v - lo) / step).round().clamp(0.0, levels as f64);
        lo + k * step
    };
    let h = t
        .h
        .iter()
        .map(|hq| CVector::from_fn(hq.len(), |i, _| Complex64::new(snap(hq[i].re), snap(hq[i].im))))
        .collect();
    ThresholdSet { h, strategy: t.strategy, dac_bits: Some(bits) }
}

fn minimal_part(s1: f64, s2: f64) -> f64 {
    if s2 * s1 >= 0.0 || s1.abs() >= s2.abs() {
        0.0
    } else {
        s2
    }
}

/// Minimal sparse perturbation `a3` such that `a1 + a3` stays sign-consistent
/// with the quantization of `a1 + a2`, computed component-wise: a part of
/// `a2` is kept only where it is both opposed to and larger than the
/// matching part of `a1`.
pub fn minimal_perturbation(a1: &CVector, a2: &CVector) -> Result<CVector> {
    if a1.len() != a2.len() {
        return Err(Error::DimensionMismatch(format!(
            "length {} vs {}",
            a1.len(),
            a2.len()
        )));
    }
    Ok(CVector::from_fn(a1.len(), |i, _| {
        Complex64::new(minimal_part(a1[i].re, a2[i].re), minimal_part(a1[i].im, a2[i].im))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_waveforms, RadarConfig};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn cfg(m: usize, n: usize, q: usize, l: usize, t: usize, r: usize, p: usize) -> RadarConfig {
        RadarConfig { m, n, q, l, t, r, p }
    }

    fn random_cvector(rng: &mut ChaCha8Rng, len: usize) -> CVector {
        CVector::from_fn(len, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// Dense `M_q` built index-by-index from the Kronecker definition: the
    /// oracle for the operator, adjoint, and Gram implementations.
    fn dense_mq(pos: usize, masks: &MaskSet, s: &CMatrix) -> CMatrix {
        let cfg = &masks.config;
        let tx = &masks.tx[pos];
        let rx = &masks.rx[pos];
        // Γ_t: T x M selection, Γ_r: R x N selection
        let gamma_t = DMatrix::from_fn(tx.len(), cfg.m, |i, j| {
            Complex64::new(if tx[i] == j { 1.0 } else { 0.0 }, 0.0)
        });
        let gamma_r = DMatrix::from_fn(rx.len(), cfg.n, |i, j| {
            Complex64::new(if rx[i] == j { 1.0 } else { 0.0 }, 0.0)
        });
        let s_sel = &gamma_t * s; // T x L
        let left = s_sel.transpose() * gamma_t; // L x M
        left.kronecker(&gamma_r)
    }

    #[test]
    fn masks_full_selection_is_identity_sets() {
        let config = cfg(3, 2, 4, 3, 3, 2, 4);
        let masks = draw_masks(&config, 5).unwrap();
        assert_eq!(masks.pulses, vec![0, 1, 2, 3]);
        for t in &masks.tx {
            assert_eq!(*t, vec![0, 1, 2]);
        }
        for r in &masks.rx {
            assert_eq!(*r, vec![0, 1]);
        }
    }

    #[test]
    fn masks_pulse_set_keeps_endpoints() {
        let config = cfg(6, 6, 36, 64, 4, 5, 20);
        for seed in 0..20 {
            let masks = draw_masks(&config, seed).unwrap();
            assert_eq!(masks.pulses.len(), 20);
            assert!(masks.pulses.contains(&0));
            assert!(masks.pulses.contains(&35));
            let mut sorted = masks.pulses.clone();
            sorted.dedup();
            assert_eq!(sorted.len(), 20);
        }
    }

    #[test]
    fn masks_tx_cardinality() {
        let config = cfg(6, 6, 8, 64, 4, 5, 8);
        let masks = draw_masks(&config, 3).unwrap();
        for t in &masks.tx {
            assert_eq!(t.len(), 4);
            assert!(t.iter().all(|&i| i < 6));
            assert!(t.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn masks_reject_single_pulse() {
        let config = cfg(2, 2, 4, 2, 2, 2, 1);
        assert!(draw_masks(&config, 0).is_err());
    }

    #[test]
    fn apply_f_zero_input() {
        let config = cfg(2, 2, 3, 2, 2, 2, 3);
        let masks = draw_masks(&config, 0).unwrap();
        let s = generate_waveforms(2, 2, 0).unwrap();
        let x = CMatrix::zeros(4, 3);
        let y = apply_f(&x, 1, &masks, &s).unwrap();
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn apply_f_identity_configuration() {
        // T=M, R=N, L=M with S=I: M_q = I, so F_q(X) is column q of X.
        let config = cfg(2, 3, 4, 2, 2, 3, 4);
        let masks = draw_masks(&config, 1).unwrap();
        let s = CMatrix::identity(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = CMatrix::from_fn(6, 4, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        for q in 0..4 {
            let y = apply_f(&x, q, &masks, &s).unwrap();
            let col = CVector::from_column_slice(x.column(q).as_slice());
            assert_relative_eq!((y - col).norm(), 0.0, epsilon = 1e-14);
            let v = random_cvector(&mut rng, 6);
            let back = apply_f_adjoint(&v, q, &masks, &s).unwrap();
            assert_relative_eq!((back - v).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn apply_f_matches_dense_kronecker_oracle() {
        let config = cfg(3, 2, 5, 4, 2, 2, 3);
        let masks = draw_masks(&config, 9).unwrap();
        let s = generate_waveforms(3, 4, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = CMatrix::from_fn(6, 5, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        for (pos, &q) in masks.pulses.iter().enumerate() {
            let mq = dense_mq(pos, &masks, &s);
            let direct = &mq * CVector::from_column_slice(x.column(q).as_slice());
            let fast = apply_f(&x, q, &masks, &s).unwrap();
            assert!((direct - &fast).norm() <= 1e-12);

            let v = random_cvector(&mut rng, fast.len());
            let adj_direct = mq.adjoint() * &v;
            let adj_fast = apply_f_adjoint(&v, q, &masks, &s).unwrap();
            assert!((adj_direct - adj_fast).norm() <= 1e-12);

            let gram = gram_matrix(pos, &masks, &s);
            let gram_direct = mq.adjoint() * &mq;
            assert!((gram - gram_direct).norm() <= 1e-12);
        }
    }

    #[test]
    fn apply_f_rejects_unselected_pulse() {
        let config = cfg(2, 2, 6, 2, 2, 2, 3);
        let masks = draw_masks(&config, 3).unwrap();
        let s = generate_waveforms(2, 2, 0).unwrap();
        let x = CMatrix::zeros(4, 6);
        let q_out = (0..6).find(|q| masks.pulse_position(*q).is_none()).unwrap();
        assert!(matches!(
            apply_f(&x, q_out, &masks, &s),
            Err(Error::PulseNotSelected(_))
        ));
    }

    #[test]
    fn adjoint_identity_holds_for_random_inputs() {
        let config = cfg(3, 3, 6, 5, 2, 2, 4);
        let masks = draw_masks(&config, 21).unwrap();
        let s = generate_waveforms(3, 5, 22).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..100 {
            let q = masks.pulses[trial % masks.pulses.len()];
            let x = CMatrix::from_fn(9, 6, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let v = random_cvector(&mut rng, config.l * config.r);
            let fx = apply_f(&x, q, &masks, &s).unwrap();
            let adj = apply_f_adjoint(&v, q, &masks, &s).unwrap();
            let lhs: Complex64 = fx.dotc(&v); // <F_q(X), v>
            let col = CVector::from_column_slice(x.column(q).as_slice());
            let rhs: Complex64 = col.dotc(&adj);
            let scale = fx.norm() * v.norm() + 1e-12;
            assert!((lhs - rhs).norm() <= 1e-10 * scale, "trial {trial}");
        }
    }

    #[test]
    fn quantizer_basic_and_tie_break() {
        let y = CVector::from_vec(vec![Complex64::new(1.0, 1.0)]);
        let h = CVector::zeros(1);
        let z = one_bit_quantize(&y, &h).unwrap();
        assert_eq!(z[0], Complex64::new(1.0, 1.0));

        let y0 = CVector::zeros(1);
        let z0 = one_bit_quantize(&y0, &h).unwrap();
        assert_eq!(z0[0], Complex64::new(1.0, 1.0), "sign(0) = +1");

        let y2 = CVector::from_vec(vec![Complex64::new(0.3, -2.0)]);
        let h2 = CVector::from_vec(vec![Complex64::new(0.5, 1.0)]);
        let z2 = one_bit_quantize(&y2, &h2).unwrap();
        assert_eq!(z2[0], Complex64::new(-1.0, -1.0));
    }

    #[test]
    fn quantizer_is_sign_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let y = random_cvector(&mut rng, 16);
            let h = random_cvector(&mut rng, 16);
            let z = one_bit_quantize(&y, &h).unwrap();
            for i in 0..16 {
                let d = y[i] - h[i];
                assert!(d.re * z[i].re >= 0.0);
                assert!(d.im * z[i].im >= 0.0);
            }
        }
    }

    #[test]
    fn rut_zero_range_gives_zero_threshold() {
        let t = gen_threshold_rut(0.0, 0.0, 2, 8, 1).unwrap();
        assert!(t.h.iter().all(|h| h.iter().all(|v| v.norm() == 0.0)));
    }

    #[test]
    fn rut_moments() {
        let t = gen_threshold_rut(-1.0, 1.0, 1, 50_000, 2).unwrap();
        let mut mean = 0.0;
        let mut var = 0.0;
        let mut count = 0.0;
        for v in t.h[0].iter() {
            for part in [v.re, v.im] {
                mean += part;
                var += part * part;
                count += 1.0;
            }
        }
        mean /= count;
        var = var / count - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn rut_rejects_inverted_range() {
        assert!(gen_threshold_rut(1.0, -1.0, 1, 4, 0).is_err());
    }

    #[test]
    fn rgt_zero_deviation_returns_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let means = vec![random_cvector(&mut rng, 10)];
        let t = gen_threshold_rgt(&means, 0.0, 0.0, 9).unwrap();
        assert_relative_eq!((&t.h[0] - &means[0]).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rgt_moments() {
        let means = vec![CVector::zeros(50_000)];
        let t = gen_threshold_rgt(&means, 2.0, 1.0, 5).unwrap();
        let (mut var_r, mut var_i) = (0.0, 0.0);
        for v in t.h[0].iter() {
            var_r += v.re * v.re;
            var_i += v.im * v.im;
        }
        var_r /= 50_000.0;
        var_i /= 50_000.0;
        assert!((var_r - 4.0).abs() < 0.12, "var_r {var_r}");
        assert!((var_i - 1.0).abs() < 0.03, "var_i {var_i}");
    }

    #[test]
    fn dac_grid_membership_and_idempotence() {
        let t = gen_threshold_rut(-1.0, 1.0, 2, 64, 6).unwrap();
        let q1 = dac_quantize(&t, 1, -1.0, 1.0);
        for h in &q1.h {
            for v in h.iter() {
                assert!(v.re == -1.0 || v.re == 1.0);
                assert!(v.im == -1.0 || v.im == 1.0);
            }
        }
        let q12 = dac_quantize(&t, 12, -4.0, 4.0);
        let again = dac_quantize(&q12, 12, -4.0, 4.0);
        for (a, b) in q12.h.iter().zip(&again.h) {
            assert_eq!(a, b, "DAC quantization must be idempotent");
        }
        // grid-spacing bound from the spec arithmetic
        let mut max_err: f64 = 0.0;
        for (orig, quant) in t.h.iter().zip(&q12.h) {
            for (o, qv) in orig.iter().zip(quant.iter()) {
                max_err = max_err.max((o.re - qv.re).abs()).max((o.im - qv.im).abs());
            }
        }
        assert!(max_err <= 9.77e-4, "max rounding error {max_err}");
    }

    #[test]
    fn minimal_perturbation_basics() {
        let zero = CVector::zeros(3);
        let a1 = CVector::from_vec(vec![
            Complex64::new(2.0, 2.0),
            Complex64::new(-1.0, 0.5),
            Complex64::new(0.1, -0.1),
        ]);
        let a3 = minimal_perturbation(&a1, &zero).unwrap();
        assert!(a3.iter().all(|v| v.norm() == 0.0));

        // noise smaller than the signal never flips
        let a1b = CVector::from_vec(vec![Complex64::new(2.0, 2.0)]);
        let a2b = CVector::from_vec(vec![Complex64::new(-1.0, -1.0)]);
        let a3b = minimal_perturbation(&a1b, &a2b).unwrap();
        assert_eq!(a3b[0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn minimal_perturbation_preserves_signs_and_sparsity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 1000;
        let a1 = random_cvector(&mut rng, n);
        let a2 = random_cvector(&mut rng, n);
        let a3 = minimal_perturbation(&a1, &a2).unwrap();
        let mut nnz_a3 = 0;
        let mut nnz_a2 = 0;
        for i in 0..n {
            let full = a1[i] + a2[i];
            let kept = a1[i] + a3[i];
            assert!(kept.re * full.re >= 0.0, "real sign flipped at {i}");
            assert!(kept.im * full.im >= 0.0, "imaginary sign flipped at {i}");
            if a3[i].re != 0.0 || a3[i].im != 0.0 {
                nnz_a3 += 1;
            }
            if a2[i].re != 0.0 || a2[i].im != 0.0 {
                nnz_a2 += 1;
            }
        }
        assert!(nnz_a3 <= nnz_a2);
    }
}
