use num_complex::Complex64;
use obmimo::sampling::*;
use obmimo::scene::*;
use obmimo::solver::*;
use obmimo::spectral::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    // ---- criterion 1: minimal-perturbation nonzero fraction vs SNR
    let config = RadarConfig::full(3, 3, 8, 3);
    for snr in [0.0, 10.0, 20.0, 30.0] {
        let sigma = sigma_from_snr_db(snr);
        let part = sigma / std::f64::consts::SQRT_2;
        let mut total_slots = 0usize;
        let mut nonzero = 0usize;
        for draw in 0..500u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + draw);
            // K=4 random unit-amplitude scene
            let targets: Vec<Target> = (0..4)
                .map(|_| Target::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    1.0,
                    std::f64::consts::TAU * rng.random::<f64>(),
                ))
                .collect();
            let scene = TargetScene::new(targets, sigma);
            let x = build_ground_truth(&scene, &config);
            let a1 = obmimo::CVector::from_column_slice(x.as_slice());
            let a2 = obmimo::CVector::from_fn(a1.len(), |_, _| {
                Complex64::new(part * StandardNormal.sample(&mut rng), part * StandardNormal.sample(&mut rng))
            });
            let a3 = minimal_perturbation(&a1, &a2).unwrap();
            for v in a3.iter() {
                if v.re != 0.0 { nonzero += 1; }
                if v.im != 0.0 { nonzero += 1; }
                total_slots += 2;
            }
        }
        println!("criterion1 snr={snr}: fraction = {:.4}", nonzero as f64 / total_slots as f64);
    }

    // ---- criterion 7: noise-free K=1/K=2 at MN=16, Q=12, L=M, full masks
    for (k, targets) in [
        (1usize, vec![Target::new(0.21, -0.13, 1.0, 0.9)]),
        (2, vec![Target::new(-0.31, 0.40, 1.0, 2.2), Target::new(0.22, -0.14, 1.0, 0.7)]),
    ] {
        let config = RadarConfig { m: 4, n: 4, q: 12, l: 4, t: 4, r: 4, p: 12 };
        let scene = TargetScene::new(targets.clone(), 0.0);
        let x_true = build_ground_truth(&scene, &config);
        let s = generate_waveforms(config.m, config.l, 100 + k as u64).unwrap();
        let masks = draw_masks(&config, 200 + k as u64).unwrap();
        let ys = simulate_received(&x_true, &masks, &s, 0.0, 300 + k as u64).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for y in &ys { for v in y.iter() { lo = lo.min(v.re).min(v.im); hi = hi.max(v.re).max(v.im); } }
        let th = gen_threshold_rut(lo, hi, masks.pulses.len(), config.lr(), 400 + k as u64).unwrap();
        let data = quantize_all(&ys, &th).unwrap();
        for (mu, rho) in [(20.0, 2.0), (20.0, 1.0), (50.0, 2.0)] {
            let params = SolverParams { mu, lambda: 25.0 * mu, rho, tol: 1e-6, max_iters: 1000 };
            let prob = OneBitProblem { z: &data.z, h: &th.h, masks: &masks, s: &s };
            let t0 = std::time::Instant::now();
            let r = solve_1b_anm_l1(&prob, &params).unwrap();
            let est = extract_targets(&r.state.u1, &r.state.u2, &r.state.x, k).unwrap();
            // match greedily by nsf
            let mut worst_f = 0.0f64;
            let mut worst_amp = 0.0f64;
            for t in &targets {
                let best = est.targets.iter().min_by(|a, b| {
                    let da = (a.nsf - t.nsf).abs() + (a.ndf - t.ndf).abs();
                    let db = (b.nsf - t.nsf).abs() + (b.ndf - t.ndf).abs();
                    da.partial_cmp(&db).unwrap()
                }).unwrap();
                worst_f = worst_f.max((best.nsf - t.nsf).abs()).max((best.ndf - t.ndf).abs());
                worst_amp = worst_amp.max((best.beta.norm() - t.mag).abs() / t.mag);
            }
            println!("criterion7 K={k} mu={mu} rho={rho}: conv={} iters={} max_freq_err={:.2e} max_amp_err={:.3} ({:.2}s)",
                r.converged, r.iterations, worst_f, worst_amp, t0.elapsed().as_secs_f64());
        }
    }
}
