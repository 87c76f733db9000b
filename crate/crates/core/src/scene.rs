//! Radar scenes: steering/Doppler vectors, the ground-truth low-rank data
//! matrix, orthonormal transmit waveforms, and noisy unquantized measurements.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::sampling::{apply_f, MaskSet};
use crate::{CMatrix, CVector};

/// Array geometry and compression sizes.
///
/// `m`/`n` transmit/receive antenna counts, `q` pulses per CPI, `l` samples
/// per PRI, and the compressed selections `t ≤ m`, `r ≤ n`, `2 ≤ p ≤ q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadarConfig {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "R")]
    pub r: usize,
    #[serde(rename = "P")]
    pub p: usize,
}

impl RadarConfig {
    /// Uncompressed configuration: all antennas and pulses selected.
    pub fn full(m: usize, n: usize, q: usize, l: usize) -> Self {
        Self { m, n, q, l, t: m, r: n, p: q }
    }

    /// Virtual array length `m * n`.
    pub fn mn(&self) -> usize {
        self.m * self.n
    }

    /// Length of one vectorized per-pulse measurement, `l * r`.
    pub fn lr(&self) -> usize {
        self.l * self.r
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.m, self.n, self.q, self.l, self.t, self.r, self.p];
        if positive.iter().any(|&v| v == 0) {
            return Err(Error::InvalidConfig("all counts must be >= 1".into()));
        }
        if self.t > self.m {
            return Err(Error::InvalidConfig(format!("T={} exceeds M={}", self.t, self.m)));
        }
        if self.r > self.n {
            return Err(Error::InvalidConfig(format!("R={} exceeds N={}", self.r, self.n)));
        }
        if self.p > self.q {
            return Err(Error::InvalidConfig(format!("P={} exceeds Q={}", self.p, self.q)));
        }
        if self.p < 2 {
            return Err(Error::InvalidConfig(
                "P must be >= 2 so the pulse set can contain the first and last PRI".into(),
            ));
        }
        if self.l < self.m {
            return Err(Error::InvalidConfig(format!(
                "L={} is smaller than M={}; orthonormal waveform rows are impossible",
                self.l, self.m
            )));
        }
        Ok(())
    }
}

/// A point target: normalized spatial frequency, normalized Doppler
/// frequency, and the polar reflection coefficient.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Target {
    pub nsf: f64,
    pub ndf: f64,
    pub mag: f64,
    pub phase: f64,
}

impl Target {
    pub fn new(nsf: f64, ndf: f64, mag: f64, phase: f64) -> Self {
        Self { nsf, ndf, mag, phase }
    }

    /// Complex reflection coefficient `mag * exp(j * phase)`.
    pub fn beta(&self) -> Complex64 {
        Complex64::from_polar(self.mag, self.phase)
    }
}

/// A set of targets plus the per-complex-sample noise standard deviation.
///
/// Complex noise convention: `CN(0, sigma^2)` means the real and imaginary
/// parts are each `N(0, sigma^2 / 2)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetScene {
    pub targets: Vec<Target>,
    pub sigma: f64,
}

impl TargetScene {
    pub fn new(targets: Vec<Target>, sigma: f64) -> Self {
        Self { targets, sigma }
    }

    pub fn k(&self) -> usize {
        self.targets.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig("sigma must be finite and >= 0".into()));
        }
        for (i, a) in self.targets.iter().enumerate() {
            if a.mag < 0.0 {
                return Err(Error::InvalidConfig(format!("target {i} has negative magnitude")));
            }
            for b in &self.targets[i + 1..] {
                if a.nsf == b.nsf && a.ndf == b.ndf {
                    return Err(Error::InvalidConfig(
                        "targets must have distinct (nsf, ndf) pairs".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Scene file schema used by the CLI: radar dimensions flattened next to the
/// target list and noise level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(flatten)]
    pub config: RadarConfig,
    pub targets: Vec<Target>,
    pub sigma: f64,
}

impl SceneSpec {
    pub fn scene(&self) -> TargetScene {
        TargetScene::new(self.targets.clone(), self.sigma)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.scene().validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SceneSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// SNR convention for unit-magnitude reflection coefficients:
/// `sigma = 10^(-snr_db / 20)`.
pub fn sigma_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

fn unit_phasor(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

/// Transmit, receive, and virtual-array steering vectors for one normalized
/// spatial frequency.
///
/// `a[m] = exp(j 2π N m nsf)`, `b[n] = exp(j 2π n nsf)` (zero-based indices),
/// and `c = a ⊗ b`, so the virtual array phase ramps uniformly over `MN`
/// elements.
pub fn steering_vectors(nsf: f64, config: &RadarConfig) -> (CVector, CVector, CVector) {
    let a = CVector::from_fn(config.m, |i, _| unit_phasor(TAU * config.n as f64 * i as f64 * nsf));
    let b = CVector::from_fn(config.n, |i, _| unit_phasor(TAU * i as f64 * nsf));
    let c = a.kronecker(&b);
    (a, b, CVector::from_column_slice(c.as_slice()))
}

/// Doppler vector with conjugated-column convention: `d[q] = exp(-j 2π q ndf)`
/// so that row `q` of `d^H` is `exp(+j 2π q ndf)`.
pub fn doppler_vector(ndf: f64, q: usize) -> CVector {
    CVector::from_fn(q, |i, _| unit_phasor(-TAU * i as f64 * ndf))
}

/// Ground-truth data matrix `X = Σ_k β_k c(nsf_k) d^H(ndf_k)`, of size
/// `MN x Q` and rank at most `K`.
pub fn build_ground_truth(scene: &TargetScene, config: &RadarConfig) -> CMatrix {
    let mn = config.mn();
    let mut x = CMatrix::zeros(mn, config.q);
    for target in &scene.targets {
        let (_, _, c) = steering_vectors(target.nsf, config);
        let d = doppler_vector(target.ndf, config.q);
        let beta = target.beta();
        // rank-1 update: beta * c * d^H
        for col in 0..config.q {
            let dh = d[col].conj();
            for row in 0..mn {
                x[(row, col)] += beta * c[row] * dh;
            }
        }
    }
    x
}

/// Generate an `M x L` waveform matrix with exactly orthonormal rows
/// (`S S^H = I_M`), deterministic for a given seed.
pub fn generate_waveforms(m: usize, l: usize, seed: u64) -> Result<CMatrix> {
    if l < m {
        return Err(Error::InvalidConfig(format!(
            "code length L={l} must be at least M={m} for orthonormal rows"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    };
    // QR of the conjugate transpose: thin Q has orthonormal columns, so its
    // adjoint has orthonormal rows.
    let gh = CMatrix::from_fn(l, m, |_, _| draw());
    let q = gh.qr().q();
    Ok(q.adjoint())
}

/// Noisy unquantized per-pulse measurements `y_q = F_q(X) + w_q` for every
/// selected pulse, with `w_q ~ CN(0, sigma^2)` i.i.d. per component.
pub fn simulate_received(
    x: &CMatrix,
    masks: &MaskSet,
    s: &CMatrix,
    sigma: f64,
    seed: u64,
) -> Result<Vec<CVector>> {
    if sigma < 0.0 {
        return Err(Error::InvalidConfig("sigma must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let part_std = sigma / std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(masks.pulses.len());
    for &q in &masks.pulses {
        let mut y = apply_f(x, q, masks, s)?;
        if sigma > 0.0 {
            for v in y.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *v += Complex64::new(part_std * re, part_std * im);
            }
        }
        out.push(y);
    }
    Ok(out)
}
