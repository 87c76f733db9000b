//! Frequency extraction from recovered Toeplitz blocks: Vandermonde
//! decomposition by signal-subspace rotation, model-order selection from the
//! eigenvalue spectrum, angle/Doppler pairing by assignment on fitted
//! energies, and joint amplitude estimation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::solver::psd_project;
use crate::{CMatrix, CVector};

/// Frequencies (sorted ascending, in `(-1/2, 1/2]`) and their powers.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyEstimate {
    pub freqs: Vec<f64>,
    pub powers: Vec<f64>,
}

/// One estimated target: paired frequencies and complex amplitude.
#[derive(Debug, Clone, Copy)]
pub struct EstimatedTarget {
    pub nsf: f64,
    pub ndf: f64,
    pub beta: Complex64,
}

#[derive(Debug, Clone, Default)]
pub struct TargetEstimate {
    pub targets: Vec<EstimatedTarget>,
}

/// Wrap a frequency to the half-open interval `(-1/2, 1/2]`.
pub fn wrap_frequency(f: f64) -> f64 {
    let mut w = f - f.round();
    if w <= -0.5 {
        w += 1.0;
    }
    w
}

fn vandermonde_column(n: usize, f: f64) -> CVector {
    CVector::from_fn(n, |i, _| Complex64::from_polar(1.0, TAU * i as f64 * f))
}

/// Hermitian eigendecomposition sorted by descending eigenvalue.
fn sorted_eigen(t: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let herm = (t + t.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigendecomposition failed".into()))?;
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Decompose a PSD Toeplitz matrix as `Σ_k p_k w(f_k) w(f_k)^H` with `k`
/// terms: eigendecompose, rotate the `k`-dimensional signal subspace against
/// its one-row shift to read off the frequencies, then fit the powers by
/// nonnegative least squares on the Vandermonde Gram system.
///
/// Rejects orders the spectrum cannot support: `k` above the numerical rank,
/// or no spectral drop after position `k` (a flat full-rank spectrum carries
/// no identifiable frequencies).
pub fn vandermonde_decompose(t: &CMatrix, k: usize) -> Result<FrequencyEstimate> {
    let n = t.nrows();
    if t.ncols() != n {
        return Err(Error::DimensionMismatch("Toeplitz input must be square".into()));
    }
    if k == 0 {
        return Ok(FrequencyEstimate { freqs: vec![], powers: vec![] });
    }
    if k > n - 1 {
        return Err(Error::RankDeficiency(format!(
            "order {k} is not identifiable from a {n}x{n} Toeplitz matrix"
        )));
    }
    let (values, vectors) = sorted_eigen(t)?;
    let lam_max = values[0];
    if !(lam_max > 0.0) {
        return Err(Error::RankDeficiency("matrix has no positive eigenvalue".into()));
    }
    if values[n - 1] < -1e-8 * lam_max {
        return Err(Error::RankDeficiency(format!(
            "matrix is not PSD within tolerance (min eigenvalue {:.3e})",
            values[n - 1]
        )));
    }
    let floor = lam_max * 1e-12 * n as f64;
    if values[k - 1] <= floor {
        return Err(Error::RankDeficiency(format!(
            "order {k} exceeds the numerical rank of the matrix"
        )));
    }
    if values[k] >= (1.0 - 1e-6) * values[k - 1] {
        return Err(Error::RankDeficiency(format!(
            "no spectral drop after position {k}; frequencies are not identifiable"
        )));
    }

    // shift-invariance of the signal subspace
    let signal = vectors.view((0, 0), (n, k)).into_owned();
    let upper = signal.view((0, 0), (n - 1, k)).into_owned();
    let lower = signal.view((1, 0), (n - 1, k)).into_owned();
    let normal = upper.adjoint() * &upper;
    let rhs = upper.adjoint() * &lower;
    let rotation = normal
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("signal subspace is degenerate".into()))?;
    let schur = rotation
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, triangular) = schur.unpack();
    let mut freqs: Vec<f64> =
        (0..k).map(|i| wrap_frequency(triangular[(i, i)].arg() / TAU)).collect();

    // powers: min || Σ p_k w_k w_k^H - T ||_F over p >= 0
    let atoms: Vec<CVector> = freqs.iter().map(|&f| vandermonde_column(n, f)).collect();
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs_p = nalgebra::DVector::zeros(k);
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] = atoms[a].dotc(&atoms[b]).norm_sqr();
        }
        rhs_p[a] = (atoms[a].adjoint() * t * &atoms[a])[(0, 0)].re;
    }
    let mut powers = nnls(&gram, &rhs_p)?;

    // sort ascending by frequency
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| freqs[a].partial_cmp(&freqs[b]).unwrap());
    freqs = order.iter().map(|&i| freqs[i]).collect();
    powers = order.iter().map(|&i| powers[i]).collect();
    Ok(FrequencyEstimate { freqs, powers })
}

/// Lawson–Hanson active-set nonnegative least squares on the normal system
/// `min 1/2 p^T G p - g^T p  s.t.  p >= 0` with `G` symmetric PSD.
fn nnls(gram: &DMatrix<f64>, rhs: &nalgebra::DVector<f64>) -> Result<Vec<f64>> {
    let k = rhs.len();
    let mut passive = vec![false; k];
    let mut p = nalgebra::DVector::zeros(k);
    let scale = rhs.amax().max(1e-300);
    let tol = 1e-12 * scale;

    for _ in 0..(4 * k + 8) {
        let grad = rhs - gram * &p;
        let mut best = None;
        let mut best_val = tol;
        for i in 0..k {
            if !passive[i] && grad[i] > best_val {
                best_val = grad[i];
                best = Some(i);
            }
        }
        let Some(enter) = best else { break };
        passive[enter] = true;

        loop {
            let idx: Vec<usize> = (0..k).filter(|&i| passive[i]).collect();
            let gsub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| gram[(idx[a], idx[b])]);
            let rsub = nalgebra::DVector::from_fn(idx.len(), |a, _| rhs[idx[a]]);
            let sol = gsub
                .clone()
                .cholesky()
                .map(|c| c.solve(&rsub))
                .or_else(|| gsub.lu().solve(&rsub))
                .ok_or_else(|| Error::Numerical("singular NNLS subsystem".into()))?;
            if sol.iter().all(|&v| v > 0.0) {
                p.fill(0.0);
                for (a, &i) in idx.iter().enumerate() {
                    p[i] = sol[a];
                }
                break;
            }
            // step toward the subproblem solution until a coordinate hits zero
            let mut alpha = f64::INFINITY;
            for (a, &i) in idx.iter().enumerate() {
                if sol[a] <= 0.0 {
                    let denom = p[i] - sol[a];
                    if denom > 0.0 {
                        alpha = alpha.min(p[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (a, &i) in idx.iter().enumerate() {
                p[i] += alpha * (sol[a] - p[i]);
                if p[i] <= tol {
                    p[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    Ok(p.iter().copied().collect())
}

/// Model order from the eigenvalue spectrum of the recovered blocked matrix:
/// the smallest count whose cumulative eigenvalue fraction reaches
/// `min(0.5 + snr_db/50, 0.9)`.
pub fn estimate_model_order(eigenvalues_desc: &[f64], snr_db: f64) -> usize {
    let total: f64 = eigenvalues_desc.iter().map(|&v| v.max(0.0)).sum();
    if total <= 0.0 {
        return 0;
    }
    let threshold = (0.5 + snr_db / 50.0).min(0.9);
    let mut acc = 0.0;
    for (i, &v) in eigenvalues_desc.iter().enumerate() {
        acc += v.max(0.0);
        if acc / total >= threshold {
            return i + 1;
        }
    }
    eigenvalues_desc.len()
}

/// Minimum-cost assignment (Hungarian algorithm with potentials) for a
/// square cost matrix; returns the column assigned to each row.
fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn atom_inner(x: &CMatrix, nsf: f64, ndf: f64) -> Complex64 {
    // <X, c d^H> = c^H X d
    let (mn, q) = (x.nrows(), x.ncols());
    let c = vandermonde_column(mn, nsf);
    let d = CVector::from_fn(q, |i, _| Complex64::from_polar(1.0, -TAU * i as f64 * ndf));
    (c.adjoint() * x * &d)[(0, 0)]
}

/// Pair one Doppler frequency to each spatial frequency by maximizing the
/// total per-pair fitted energy of `X` over all assignments, then refit the
/// amplitudes jointly. Repeated entries in either frequency list act as
/// distinct assignment slots.
pub fn pair_frequencies(
    nsf_set: &[f64],
    ndf_set: &[f64],
    x_hat: &CMatrix,
) -> Result<TargetEstimate> {
    if nsf_set.len() != ndf_set.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} spatial vs {} Doppler frequencies",
            nsf_set.len(),
            ndf_set.len()
        )));
    }
    let k = nsf_set.len();
    if k == 0 {
        return Ok(TargetEstimate::default());
    }
    let (mn, q) = (x_hat.nrows(), x_hat.ncols());
    let scale = (mn * q) as f64;
    // fitted energy of the single-atom least-squares fit per candidate pair
    let mut cost = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let energy = atom_inner(x_hat, nsf_set[i], ndf_set[j]).norm_sqr() / scale;
            cost[(i, j)] = -energy;
        }
    }
    let assignment = min_cost_assignment(&cost);
    let pairs: Vec<(f64, f64)> = (0..k).map(|i| (nsf_set[i], ndf_set[assignment[i]])).collect();
    let betas = estimate_amplitudes(&pairs, x_hat)?;
    let mut targets: Vec<EstimatedTarget> = pairs
        .iter()
        .zip(betas)
        .map(|(&(nsf, ndf), beta)| EstimatedTarget { nsf, ndf, beta })
        .collect();
    targets.sort_by(|a, b| a.nsf.partial_cmp(&b.nsf).unwrap());
    Ok(TargetEstimate { targets })
}

/// Joint least squares of `vec(X)` on the vectorized atoms of the given
/// frequency pairs. Falls back to a ridge-regularized solve when the atom
/// Gram matrix is ill-conditioned.
pub fn estimate_amplitudes(pairs: &[(f64, f64)], x_hat: &CMatrix) -> Result<Vec<Complex64>> {
    let k = pairs.len();
    if k == 0 {
        return Ok(vec![]);
    }
    let (mn, q) = (x_hat.nrows(), x_hat.ncols());
    let c: Vec<CVector> = pairs.iter().map(|&(nsf, _)| vandermonde_column(mn, nsf)).collect();
    let d: Vec<CVector> = pairs
        .iter()
        .map(|&(_, ndf)| {
            CVector::from_fn(q, |i, _| Complex64::from_polar(1.0, -TAU * i as f64 * ndf))
        })
        .collect();
    let mut gram = CMatrix::zeros(k, k);
    let mut rhs = CVector::zeros(k);
    for a in 0..k {
        for b in 0..k {
            // <atom_b, atom_a> = (c_a^H c_b)(d_b^H d_a)
            gram[(a, b)] = c[a].dotc(&c[b]) * d[b].dotc(&d[a]);
        }
        rhs[a] = atom_inner(x_hat, pairs[a].0, pairs[a].1);
    }
    let solved = gram.clone().cholesky().map(|ch| ch.solve(&rhs));
    let betas = match solved {
        Some(sol) => sol,
        None => {
            let trace = gram.trace().re.max(f64::MIN_POSITIVE);
            log::warn!(
                "atom Gram matrix is not positive definite (trace {trace:.3e}); \
                 applying ridge 1e-8"
            );
            let ridge = CMatrix::identity(k, k) * Complex64::new(1e-8 * trace / k as f64, 0.0);
            (gram + ridge)
                .cholesky()
                .map(|ch| ch.solve(&rhs))
                .ok_or_else(|| Error::Numerical("amplitude system is singular".into()))?
        }
    };
    Ok(betas.iter().copied().collect())
}

/// Decompose at the largest supported order up to `k`, then pad with the
/// strongest frequencies so exactly `k` assignment slots come back. Shared
/// frequencies (rank-deficient blocks below the requested order) reappear as
/// replicated slots.
fn decompose_padded(t: &CMatrix, k: usize) -> Result<Vec<f64>> {
    let mut order = k;
    loop {
        match vandermonde_decompose(t, order) {
            Ok(est) => {
                let mut freqs = est.freqs.clone();
                if freqs.len() < k && !freqs.is_empty() {
                    let mut by_power: Vec<usize> = (0..est.freqs.len()).collect();
                    by_power.sort_by(|&a, &b| est.powers[b].partial_cmp(&est.powers[a]).unwrap());
                    let mut cycle = by_power.iter().cycle();
                    while freqs.len() < k {
                        freqs.push(est.freqs[*cycle.next().unwrap()]);
                    }
                }
                return Ok(freqs);
            }
            Err(Error::RankDeficiency(_)) if order > 1 => order -= 1,
            Err(e) => return Err(e),
        }
    }
}

/// Full extraction pipeline from a solver state: clamp the recovered Toeplitz
/// blocks to PSD, decompose each, flip the Doppler sign convention, and pair.
pub fn extract_targets(
    u1: &CVector,
    u2: &CVector,
    x_hat: &CMatrix,
    k: usize,
) -> Result<TargetEstimate> {
    if k == 0 {
        return Ok(TargetEstimate::default());
    }
    let t1 = psd_project(&crate::solver::toeplitz(u1))?;
    let t2 = psd_project(&crate::solver::toeplitz(u2))?;
    let nsf = decompose_padded(&t1, k)?;
    // columns of X carry exp(+j 2π q ndf), so the second Toeplitz block's
    // frequencies are the negated normalized Doppler frequencies
    let ndf: Vec<f64> = decompose_padded(&t2, k)?.iter().map(|&f| wrap_frequency(-f)).collect();
    pair_frequencies(&nsf, &ndf, x_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_ground_truth, RadarConfig, Target, TargetScene};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toeplitz_from_spectrum(n: usize, freqs: &[f64], powers: &[f64]) -> CMatrix {
        let mut t = CMatrix::zeros(n, n);
        for (&f, &p) in freqs.iter().zip(powers) {
            let w = vandermonde_column(n, f);
            t += &w * w.adjoint() * Complex64::new(p, 0.0);
        }
        t
    }

    #[test]
    fn decompose_single_zero_frequency() {
        let t = toeplitz_from_spectrum(6, &[0.0], &[1.0]);
        let est = vandermonde_decompose(&t, 1).unwrap();
        assert_relative_eq!(est.freqs[0], 0.0, epsilon = 1e-9);
        assert_relative_eq!(est.powers[0], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn decompose_two_frequencies_roundtrip() {
        let t = toeplitz_from_spectrum(8, &[0.1, -0.3], &[1.0, 2.0]);
        let est = vandermonde_decompose(&t, 2).unwrap();
        assert_relative_eq!(est.freqs[0], -0.3, epsilon = 1e-8);
        assert_relative_eq!(est.freqs[1], 0.1, epsilon = 1e-8);
        assert_relative_eq!(est.powers[0], 2.0, epsilon = 1e-6);
        assert_relative_eq!(est.powers[1], 1.0, epsilon = 1e-6);
        let recon = toeplitz_from_spectrum(8, &est.freqs, &est.powers);
        assert!((recon - t).norm() <= 1e-6 * 3.0);
    }

    #[test]
    fn decompose_rejects_flat_spectrum() {
        let t = CMatrix::identity(6, 6) * Complex64::new(2.0, 0.0);
        assert!(matches!(vandermonde_decompose(&t, 1), Err(Error::RankDeficiency(_))));
    }

    #[test]
    fn decompose_rejects_order_beyond_rank() {
        let t = toeplitz_from_spectrum(8, &[0.2, -0.15], &[1.0, 1.5]);
        assert!(matches!(vandermonde_decompose(&t, 3), Err(Error::RankDeficiency(_))));
        assert!(matches!(vandermonde_decompose(&t, 8), Err(Error::RankDeficiency(_))));
    }

    #[test]
    fn decompose_random_roundtrips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..40 {
            let k = 1 + (trial % 4);
            let n = (2 * k + 2).max(6) + (trial % 3);
            // frequencies separated by at least 1.5/n
            let mut freqs: Vec<f64> = Vec::new();
            while freqs.len() < k {
                let f = rng.random::<f64>() - 0.5;
                if freqs.iter().all(|&g| (wrap_frequency(f - g)).abs() >= 1.5 / n as f64) {
                    freqs.push(f);
                }
            }
            let powers: Vec<f64> = (0..k).map(|_| 0.2 + 1.8 * rng.random::<f64>()).collect();
            let t = toeplitz_from_spectrum(n, &freqs, &powers);
            let est = vandermonde_decompose(&t, k).unwrap();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| freqs[a].partial_cmp(&freqs[b]).unwrap());
            for (slot, &src) in order.iter().enumerate() {
                assert!(
                    wrap_frequency(est.freqs[slot] - freqs[src]).abs() <= 1e-7,
                    "trial {trial}: {} vs {}",
                    est.freqs[slot],
                    freqs[src]
                );
                let expect = powers[src];
                assert!(
                    (est.powers[slot] - expect).abs() <= 1e-5 * expect,
                    "trial {trial}: power {} vs {}",
                    est.powers[slot],
                    expect
                );
            }
        }
    }

    #[test]
    fn model_order_rule_cases() {
        assert_eq!(estimate_model_order(&[1.0, 0.0, 0.0, 0.0], 10.0), 1);
        assert_eq!(estimate_model_order(&[1.0, 1.0, 1.0, 1.0], 40.0), 4);
        assert_eq!(estimate_model_order(&[], 20.0), 0);
        assert_eq!(estimate_model_order(&[0.0, 0.0], 20.0), 0);
        // threshold clamps at 0.9
        assert_eq!(estimate_model_order(&[0.95, 0.05], 100.0), 1);
    }

    #[test]
    fn model_order_ignores_appended_zeros() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = 1 + (rng.random::<u32>() % 6) as usize;
            let mut eigs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let snr = 50.0 * rng.random::<f64>();
            let base = estimate_model_order(&eigs, snr);
            eigs.push(0.0);
            assert_eq!(estimate_model_order(&eigs, snr), base);
        }
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in 2..=5usize {
            for _ in 0..20 {
                let cost = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
                let fast = min_cost_assignment(&cost);
                let fast_total: f64 = (0..n).map(|i| cost[(i, fast[i])]).sum();
                let mut perm: Vec<usize> = (0..n).collect();
                let mut best = f64::INFINITY;
                permute(&mut perm, 0, &mut |p| {
                    let total: f64 = (0..n).map(|i| cost[(i, p[i])]).sum();
                    if total < best {
                        best = total;
                    }
                });
                assert_relative_eq!(fast_total, best, epsilon = 1e-12);
            }
        }
    }

    fn permute(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
        if start == items.len() {
            visit(items);
            return;
        }
        for i in start..items.len() {
            items.swap(start, i);
            permute(items, start + 1, visit);
            items.swap(start, i);
        }
    }

    #[test]
    fn pairing_single_target() {
        let config = RadarConfig::full(3, 3, 6, 3);
        let target = Target::new(0.12, -0.31, 0.8, 1.2);
        let scene = TargetScene::new(vec![target], 0.0);
        let x = build_ground_truth(&scene, &config);
        let est = pair_frequencies(&[0.12], &[-0.31], &x).unwrap();
        assert_eq!(est.targets.len(), 1);
        let beta = est.targets[0].beta;
        assert_relative_eq!((beta - target.beta()).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn pairing_two_separated_targets() {
        let config = RadarConfig::full(3, 3, 8, 3);
        let t1 = Target::new(-0.2, 0.35, 1.0, 0.4);
        let t2 = Target::new(0.3, -0.1, 0.7, 2.0);
        let scene = TargetScene::new(vec![t1, t2], 0.0);
        let x = build_ground_truth(&scene, &config);
        // candidates presented unpaired and out of order
        let est = pair_frequencies(&[-0.2, 0.3], &[-0.1, 0.35], &x).unwrap();
        assert_eq!(est.targets.len(), 2);
        let a = est.targets[0];
        let b = est.targets[1];
        assert_relative_eq!(a.nsf, -0.2, epsilon = 1e-12);
        assert_relative_eq!(a.ndf, 0.35, epsilon = 1e-12);
        assert!((a.beta - t1.beta()).norm() <= 1e-6);
        assert_relative_eq!(b.nsf, 0.3, epsilon = 1e-12);
        assert_relative_eq!(b.ndf, -0.1, epsilon = 1e-12);
        assert!((b.beta - t2.beta()).norm() <= 1e-6);
    }

    #[test]
    fn pairing_recovers_shared_spatial_frequency() {
        // two targets in the same direction, distinct Doppler
        let config = RadarConfig::full(6, 6, 36, 6);
        let t3 = Target::new(0.3036, -0.2268, 1.0, 0.7);
        let t4 = Target::new(0.3036, -0.4330, 1.0, 2.9);
        let scene = TargetScene::new(vec![t3, t4], 0.0);
        let x = build_ground_truth(&scene, &config);
        let est = pair_frequencies(&[0.3036, 0.3036], &[-0.2268, -0.4330], &x).unwrap();
        assert_eq!(est.targets.len(), 2);
        let mut ndfs: Vec<f64> = est.targets.iter().map(|t| t.ndf).collect();
        ndfs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(ndfs[0], -0.4330, epsilon = 1e-12);
        assert_relative_eq!(ndfs[1], -0.2268, epsilon = 1e-12);
        for t in &est.targets {
            assert_relative_eq!(t.beta.norm(), 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn amplitude_estimation_cases() {
        let config = RadarConfig::full(3, 3, 6, 3);
        assert!(estimate_amplitudes(&[], &CMatrix::zeros(9, 6)).unwrap().is_empty());

        // X = 2j * atom → beta = 2j
        let scene = TargetScene::new(
            vec![Target::new(0.11, 0.21, 2.0, std::f64::consts::FRAC_PI_2)],
            0.0,
        );
        let x = build_ground_truth(&scene, &config);
        let betas = estimate_amplitudes(&[(0.11, 0.21)], &x).unwrap();
        assert!((betas[0] - Complex64::new(0.0, 2.0)).norm() <= 1e-10);

        // noise-free multi-target joint fit is exact
        let t1 = Target::new(-0.25, 0.05, 1.3, 0.2);
        let t2 = Target::new(0.15, 0.4, 0.5, 4.0);
        let scene = TargetScene::new(vec![t1, t2], 0.0);
        let x = build_ground_truth(&scene, &config);
        let betas = estimate_amplitudes(&[(-0.25, 0.05), (0.15, 0.4)], &x).unwrap();
        assert!((betas[0] - t1.beta()).norm() <= 1e-8);
        assert!((betas[1] - t2.beta()).norm() <= 1e-8);
    }

    #[test]
    fn extraction_pipeline_from_exact_blocks() {
        // build u1, u2, X for a 2-target scene and extract end to end
        let config = RadarConfig::full(4, 4, 12, 4);
        let t1 = Target::new(-0.31, 0.22, 1.0, 1.0);
        let t2 = Target::new(0.18, -0.4, 0.6, 2.5);
        let scene = TargetScene::new(vec![t1, t2], 0.0);
        let x = build_ground_truth(&scene, &config);
        let mn = config.mn();
        // first-row vectors of the canonical certificate blocks
        let u1 = CVector::from_fn(mn, |l, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &scene.targets {
                acc += Complex64::from_polar(t.mag, -TAU * l as f64 * t.nsf);
            }
            acc
        });
        let u2 = CVector::from_fn(config.q, |l, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in &scene.targets {
                // columns of X carry +ndf, so T(u2) carries -ndf
                acc += Complex64::from_polar(t.mag, TAU * l as f64 * t.ndf);
            }
            acc
        });
        let est = extract_targets(&u1, &u2, &x, 2).unwrap();
        assert_eq!(est.targets.len(), 2);
        let a = est.targets[0];
        let b = est.targets[1];
        assert!((a.nsf - t1.nsf).abs() <= 1e-7);
        assert!((a.ndf - t1.ndf).abs() <= 1e-7);
        assert!((a.beta - t1.beta()).norm() <= 1e-5);
        assert!((b.nsf - t2.nsf).abs() <= 1e-7);
        assert!((b.ndf - t2.ndf).abs() <= 1e-7);
        assert!((b.beta - t2.beta()).norm() <= 1e-5);
    }

    #[test]
    fn extraction_pads_rank_deficient_spatial_block() {
        // two targets share the spatial frequency: T(u1) has rank 1 but the
        // extraction must still return two paired targets
        let config = RadarConfig::full(4, 4, 12, 4);
        let t3 = Target::new(0.3036, -0.2268, 1.0, 0.7);
        let t4 = Target::new(0.3036, -0.4330, 1.0, 2.9);
        let scene = TargetScene::new(vec![t3, t4], 0.0);
        let x = build_ground_truth(&scene, &config);
        let mn = config.mn();
        let u1 =
            CVector::from_fn(mn, |l, _| Complex64::from_polar(2.0, -TAU * l as f64 * 0.3036));
        let u2 = CVector::from_fn(config.q, |l, _| {
            Complex64::from_polar(1.0, TAU * l as f64 * -0.2268)
                + Complex64::from_polar(1.0, TAU * l as f64 * -0.4330)
        });
        let est = extract_targets(&u1, &u2, &x, 2).unwrap();
        assert_eq!(est.targets.len(), 2);
        let mut ndfs: Vec<f64> = est.targets.iter().map(|t| t.ndf).collect();
        ndfs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ndfs[0] + 0.4330).abs() <= 1e-6);
        assert!((ndfs[1] + 0.2268).abs() <= 1e-6);
        for t in &est.targets {
            assert!((t.nsf - 0.3036).abs() <= 1e-6);
            assert!((t.beta.norm() - 1.0).abs() <= 1e-4);
        }
    }

    #[test]
    fn wrap_frequency_range() {
        assert_relative_eq!(wrap_frequency(0.5), 0.5);
        assert_relative_eq!(wrap_frequency(-0.5), 0.5);
        assert_relative_eq!(wrap_frequency(0.75), -0.25);
        assert_relative_eq!(wrap_frequency(1.0), 0.0);
        for f in [-3.7, -0.49, 0.0, 0.2, 1.31] {
            let w = wrap_frequency(f);
            assert!(w > -0.5 && w <= 0.5);
            let diff = (f - w) - (f - w).round();
            assert!(diff.abs() < 1e-12);
        }
    }
}
