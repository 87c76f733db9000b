//! Monte Carlo experiment harness: per-trial pipeline (scene, masks, noise,
//! thresholds, solve, extract, score), detection and error metrics, data
//! volume accounting, and deterministic CSV emission.
//!
//! Result CSVs are byte-deterministic for a fixed configuration and master
//! seed, serial or parallel; wall-clock timings go to a separate file that is
//! excluded from that contract.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

use crate::crb::{fim_onebit, FimResult};
use crate::error::{Error, Result};
use crate::sampling::{
    dac_quantize, draw_masks, gen_threshold_rgt, gen_threshold_rut, quantize_all, MaskSet,
    OneBitData, ThresholdSet, ThresholdStrategy,
};
use crate::scene::{
    build_ground_truth, generate_waveforms, sigma_from_snr_db, RadarConfig, Target, TargetScene,
};
use crate::seeds::{derive, rng, Purpose};
use crate::solver::{solve_1b_anm_l1, OneBitProblem, SolveResult, SolverParams};
use crate::spectral::{estimate_model_order, extract_targets, wrap_frequency, TargetEstimate};
use crate::{CMatrix, CVector};

// ── Experiment configuration ─────────────────────────────────────────

fn default_lambda() -> f64 {
    50.0
}
fn default_rho() -> f64 {
    0.5
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iters() -> usize {
    1000
}
fn default_kappa() -> f64 {
    5.0
}
fn default_true() -> bool {
    true
}
fn default_min_sep() -> f64 {
    1.5
}
fn default_mag_range() -> [f64; 2] {
    [1.0, 1.0]
}

/// Solver settings with the experiment defaults; `mu` falls back to the
/// SNR-dependent rule when absent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverSettings {
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            mu: None,
            lambda: default_lambda(),
            rho: default_rho(),
            tol: default_tol(),
            max_iters: default_max_iters(),
        }
    }
}

impl SolverSettings {
    pub fn params_for_snr(&self, snr_db: f64) -> SolverParams {
        let defaults = SolverParams::for_snr_db(snr_db);
        SolverParams {
            mu: self.mu.unwrap_or(defaults.mu),
            lambda: self.lambda,
            rho: self.rho,
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

/// Threshold strategy settings. `kappa` scales the RGT deviation as
/// `sigma_r² = kappa · sigma²`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdSettings {
    pub strategy: ThresholdStrategy,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub dac_bits: Option<u32>,
}

impl Default for ThresholdSettings {
    fn default() -> Self {
        Self { strategy: ThresholdStrategy::Rut, kappa: default_kappa(), dac_bits: None }
    }
}

/// Per-trial random scene specification: `k` targets with wrapped frequency
/// separation of at least `min_sep_bins` resolution bins in each dimension.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SceneGenSpec {
    pub k: usize,
    #[serde(default = "default_min_sep")]
    pub min_sep_bins: f64,
    #[serde(default = "default_mag_range")]
    pub mag_range: [f64; 2],
}

/// Full experiment description, read from JSON by the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub radar: RadarConfig,
    #[serde(default)]
    pub targets: Option<Vec<Target>>,
    #[serde(default)]
    pub scene_gen: Option<SceneGenSpec>,
    /// Redraw target phases each trial (fixed-target scenes only).
    #[serde(default = "default_true")]
    pub randomize_phase: bool,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub threshold: ThresholdSettings,
    pub master_seed: u64,
    /// Extract with the true target count; otherwise apply the eigenvalue
    /// model-order rule.
    #[serde(default = "default_true")]
    pub known_order: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidConfig("snr_db grid must be nonempty".into()));
        }
        match (&self.targets, &self.scene_gen) {
            (None, None) => {
                Err(Error::InvalidConfig("either targets or scene_gen is required".into()))
            }
            (Some(_), Some(_)) => {
                Err(Error::InvalidConfig("targets and scene_gen are mutually exclusive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

// ── Detection and metrics ────────────────────────────────────────────

/// Greedy nearest matching between truth and estimates in the wrapped
/// frequency plane. Success requires every truth matched with both frequency
/// errors under one resolution bin (`1/MN`, `1/Q`).
pub fn detection_success(
    truth: &[Target],
    estimate: &TargetEstimate,
    config: &RadarConfig,
) -> (bool, Vec<(usize, usize)>) {
    let est = &estimate.targets;
    let mut available_t: Vec<usize> = (0..truth.len()).collect();
    let mut available_e: Vec<usize> = (0..est.len()).collect();
    let mut matches = Vec::new();
    while !available_t.is_empty() && !available_e.is_empty() {
        let mut best = (0usize, 0usize, f64::INFINITY);
        for (ti, &t) in available_t.iter().enumerate() {
            for (ei, &e) in available_e.iter().enumerate() {
                let dn = wrap_frequency(truth[t].nsf - est[e].nsf);
                let dd = wrap_frequency(truth[t].ndf - est[e].ndf);
                let d = dn * dn + dd * dd;
                if d < best.2 {
                    best = (ti, ei, d);
                }
            }
        }
        let t = available_t.remove(best.0);
        let e = available_e.remove(best.1);
        matches.push((t, e));
    }
    let bin_nsf = 1.0 / config.mn() as f64;
    let bin_ndf = 1.0 / config.q as f64;
    let success = matches.len() == truth.len()
        && matches.iter().all(|&(t, e)| {
            wrap_frequency(truth[t].nsf - est[e].nsf).abs() < bin_nsf
                && wrap_frequency(truth[t].ndf - est[e].ndf).abs() < bin_ndf
        });
    (success, matches)
}

/// Mean squared errors over matched pairs: wrapped differences for the two
/// frequencies and the phase, plain difference for the magnitude.
pub fn matched_squared_errors(
    truth: &[Target],
    estimate: &TargetEstimate,
    matches: &[(usize, usize)],
) -> Option<[f64; 4]> {
    if matches.is_empty() {
        return None;
    }
    let mut acc = [0.0f64; 4];
    for &(t, e) in matches {
        let tr = truth[t];
        let es = estimate.targets[e];
        let dn = wrap_frequency(tr.nsf - es.nsf);
        let dd = wrap_frequency(tr.ndf - es.ndf);
        let dm = tr.mag - es.beta.norm();
        let mut dp = tr.phase - es.beta.arg();
        dp = dp - (dp / std::f64::consts::TAU).round() * std::f64::consts::TAU;
        acc[0] += dn * dn;
        acc[1] += dd * dd;
        acc[2] += dm * dm;
        acc[3] += dp * dp;
    }
    let n = matches.len() as f64;
    Some([acc[0] / n, acc[1] / n, acc[2] / n, acc[3] / n])
}

// ── Data volume ──────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataVolumeReport {
    pub onebit_bits: u64,
    pub classic_bits: u64,
    pub cs16_bits: u64,
    pub ratio_vs_classic: f64,
    pub ratio_vs_cs16: f64,
}

/// Bits per CPI for the one-bit system against the classic 16-bit full-array
/// system and the 16-bit compressed system with identical masks.
pub fn data_volume_report(config: &RadarConfig) -> DataVolumeReport {
    let onebit = 2 * (config.l * config.r * config.p) as u64;
    let classic = 2 * (config.l * config.n * config.q) as u64 * 16;
    let cs16 = 2 * (config.l * config.r * config.p) as u64 * 16;
    DataVolumeReport {
        onebit_bits: onebit,
        classic_bits: classic,
        cs16_bits: cs16,
        ratio_vs_classic: onebit as f64 / classic as f64,
        ratio_vs_cs16: onebit as f64 / cs16 as f64,
    }
}

// ── Trial pipeline ───────────────────────────────────────────────────

/// Thresholds, data, and the RUT range actually used for one trial.
pub struct TrialData {
    pub thresholds: ThresholdSet,
    pub data: OneBitData,
    pub ys: Vec<CVector>,
}

fn signal_range(ys: &[CVector]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for y in ys {
        for v in y.iter() {
            lo = lo.min(v.re).min(v.im);
            hi = hi.max(v.re).max(v.im);
        }
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

/// Draw thresholds per the configured strategy and quantize. The RGT strategy
/// anchors its means on a first-pass RUT reconstruction.
#[allow(clippy::too_many_arguments)]
pub fn threshold_and_quantize(
    ys: &[CVector],
    masks: &MaskSet,
    s: &CMatrix,
    settings: &ThresholdSettings,
    params: &SolverParams,
    sigma: f64,
    thr_seed: u64,
    first_pass_seed: u64,
) -> Result<TrialData> {
    let pulses = masks.pulses.len();
    let lr = masks.config.lr();
    let thresholds = match settings.strategy {
        ThresholdStrategy::Zero => ThresholdSet::zero(pulses, lr),
        ThresholdStrategy::Rut => {
            let (lo, hi) = signal_range(ys);
            let t = gen_threshold_rut(lo, hi, pulses, lr, thr_seed)?;
            match settings.dac_bits {
                Some(bits) if hi > lo => dac_quantize(&t, bits, lo, hi),
                _ => t,
            }
        }
        ThresholdStrategy::Rgt => {
            // first pass: RUT thresholds and a full solve to estimate the
            // signal components
            let (lo, hi) = signal_range(ys);
            let rut = gen_threshold_rut(lo, hi, pulses, lr, first_pass_seed)?;
            let z_rut = quantize_all(ys, &rut)?;
            let prob = OneBitProblem { z: &z_rut.z, h: &rut.h, masks, s };
            let first = solve_1b_anm_l1(&prob, params)?;
            let means: Vec<CVector> = masks
                .pulses
                .iter()
                .map(|&q| crate::sampling::apply_f(&first.state.x, q, masks, s))
                .collect::<Result<Vec<_>>>()?;
            let sigma_t = (settings.kappa.max(0.0) * sigma * sigma).sqrt();
            let t = gen_threshold_rgt(&means, sigma_t, sigma_t, thr_seed)?;
            match settings.dac_bits {
                Some(bits) => {
                    let (mlo, mhi) = signal_range(&means);
                    let lo = mlo - 4.0 * sigma_t;
                    let hi = mhi + 4.0 * sigma_t;
                    if hi > lo {
                        dac_quantize(&t, bits, lo, hi)
                    } else {
                        t
                    }
                }
                None => t,
            }
        }
    };
    let data = quantize_all(ys, &thresholds)?;
    Ok(TrialData { thresholds, data, ys: ys.to_vec() })
}

fn draw_scene(
    cfg: &ExperimentConfig,
    sigma: f64,
    snr_idx: u64,
    trial_idx: u64,
) -> Result<TargetScene> {
    if let Some(targets) = &cfg.targets {
        let mut targets = targets.clone();
        if cfg.randomize_phase {
            let mut r = rng(cfg.master_seed, Purpose::PhaseDraw, snr_idx, trial_idx);
            for t in targets.iter_mut() {
                t.phase = std::f64::consts::TAU * r.random::<f64>();
            }
        }
        return Ok(TargetScene::new(targets, sigma));
    }
    let spec = cfg.scene_gen.as_ref().expect("validated");
    let mut r = rng(cfg.master_seed, Purpose::SceneGen, snr_idx, trial_idx);
    let sep_nsf = spec.min_sep_bins / cfg.radar.mn() as f64;
    let sep_ndf = spec.min_sep_bins / cfg.radar.q as f64;
    let mag = Uniform::new_inclusive(spec.mag_range[0], spec.mag_range[1])
        .map_err(|e| Error::InvalidConfig(format!("bad mag_range: {e}")))?;
    let mut targets: Vec<Target> = Vec::with_capacity(spec.k);
    let mut guard = 0;
    while targets.len() < spec.k {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::InvalidConfig(
                "scene_gen separation constraints are infeasible".into(),
            ));
        }
        let nsf = r.random::<f64>() - 0.5;
        let ndf = r.random::<f64>() - 0.5;
        if targets.iter().all(|t| {
            wrap_frequency(t.nsf - nsf).abs() >= sep_nsf
                && wrap_frequency(t.ndf - ndf).abs() >= sep_ndf
        }) {
            let m = mag.sample(&mut r);
            let phase = std::f64::consts::TAU * r.random::<f64>();
            targets.push(Target::new(nsf, ndf, m, phase));
        }
    }
    Ok(TargetScene::new(targets, sigma))
}

/// Everything recorded about a single trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub trial: usize,
    pub success: bool,
    pub matched: usize,
    /// `[nsf, ndf, mag, phase]` mean squared errors; `None` with no matches.
    pub mse: Option<[f64; 4]>,
    pub recovery_err: f64,
    pub iterations: usize,
    pub converged: bool,
    pub crb: Option<[f64; 4]>,
    pub crb_singular: bool,
    pub seconds: f64,
    pub estimates: Vec<(f64, f64, f64, f64)>,
}

/// Mean of the CRB diagonal per parameter group (nsf, ndf, mag, phase).
fn crb_group_means(fim: &FimResult) -> [f64; 4] {
    let k = fim.ordering.k;
    let mut out = [0.0f64; 4];
    for group in 0..4 {
        let mut acc = 0.0;
        for t in 0..k {
            acc += fim.crb_diag[group * k + t];
        }
        out[group] = acc / k as f64;
    }
    out
}

/// Run one (snr, trial) cell of the experiment.
pub fn run_trial(
    cfg: &ExperimentConfig,
    s: &CMatrix,
    snr_idx: usize,
    trial_idx: usize,
) -> TrialRecord {
    let start = std::time::Instant::now();
    let snr_db = cfg.snr_db[snr_idx];
    let sigma = sigma_from_snr_db(snr_db);
    let (si, ti) = (snr_idx as u64, trial_idx as u64);

    let failed = |seconds: f64| TrialRecord {
        snr_db,
        trial: trial_idx,
        success: false,
        matched: 0,
        mse: None,
        recovery_err: 1.0,
        iterations: 0,
        converged: false,
        crb: None,
        crb_singular: true,
        seconds,
        estimates: vec![],
    };

    let outcome: Result<TrialRecord> = (|| {
        let scene = draw_scene(cfg, sigma, si, ti)?;
        let masks = draw_masks(&cfg.radar, derive(cfg.master_seed, Purpose::Masks, si, ti))?;
        let x_true = build_ground_truth(&scene, &cfg.radar);
        let ys = crate::scene::simulate_received(
            &x_true,
            &masks,
            s,
            sigma,
            derive(cfg.master_seed, Purpose::Noise, si, ti),
        )?;
        let params = cfg.solver.params_for_snr(snr_db);
        let trial_data = threshold_and_quantize(
            &ys,
            &masks,
            s,
            &cfg.threshold,
            &params,
            sigma,
            derive(cfg.master_seed, Purpose::Threshold, si, ti),
            derive(cfg.master_seed, Purpose::ThresholdFirstPass, si, ti),
        )?;
        let prob = OneBitProblem {
            z: &trial_data.data.z,
            h: &trial_data.thresholds.h,
            masks: &masks,
            s,
        };
        let result: SolveResult = solve_1b_anm_l1(&prob, &params)?;

        let k_hat = if cfg.known_order {
            scene.k()
        } else {
            let eig = result.state.h_big.clone().symmetric_eigen();
            let mut eigs: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
            eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
            estimate_model_order(&eigs, snr_db)
        };
        let estimate =
            extract_targets(&result.state.u1, &result.state.u2, &result.state.x, k_hat)
                .unwrap_or_default();

        let (success, matches) = detection_success(&scene.targets, &estimate, &cfg.radar);
        let mse = matched_squared_errors(&scene.targets, &estimate, &matches);
        let recovery_err = (&result.state.x - &x_true).norm() / x_true.norm().max(1e-300);

        let crb_result = fim_onebit(&scene, &masks, s, &trial_data.thresholds);
        let (crb, crb_singular) = match crb_result {
            Ok(f) => {
                let flag = f.singular;
                (Some(crb_group_means(&f)), flag)
            }
            Err(_) => (None, true),
        };

        Ok(TrialRecord {
            snr_db,
            trial: trial_idx,
            success,
            matched: matches.len(),
            mse,
            recovery_err,
            iterations: result.iterations,
            converged: result.converged,
            crb,
            crb_singular,
            seconds: 0.0,
            estimates: estimate
                .targets
                .iter()
                .map(|t| (t.nsf, t.ndf, t.beta.norm(), t.beta.arg()))
                .collect(),
        })
    })();

    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok(mut record) => {
            record.seconds = seconds;
            record
        }
        Err(_) => failed(seconds),
    }
}

/// Aggregate metrics for one SNR grid point.
#[derive(Debug, Clone)]
pub struct SnrAggregate {
    pub snr_db: f64,
    pub psd: f64,
    /// MSE over successful trials only (the reported protocol).
    pub mse: [f64; 4],
    /// MSE over all trials with at least one matched pair.
    pub mse_all: [f64; 4],
    pub recovery_err: f64,
    pub crb: [f64; 4],
    pub mean_iters: f64,
    pub mean_seconds: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    let mut n = 0usize;
    for v in values {
        acc += v;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        acc / n as f64
    }
}

fn aggregate(records: &[TrialRecord], snr_db: f64) -> SnrAggregate {
    let here: Vec<&TrialRecord> = records.iter().filter(|r| r.snr_db == snr_db).collect();
    let trials = here.len() as f64;
    let psd = here.iter().filter(|r| r.success).count() as f64 / trials;
    let mut mse = [f64::NAN; 4];
    let mut mse_all = [f64::NAN; 4];
    let mut crb = [f64::NAN; 4];
    for i in 0..4 {
        mse[i] = mean(here.iter().filter(|r| r.success).filter_map(|r| r.mse.map(|m| m[i])));
        mse_all[i] = mean(here.iter().filter_map(|r| r.mse.map(|m| m[i])));
        crb[i] = mean(here.iter().filter_map(|r| r.crb.map(|c| c[i])));
    }
    SnrAggregate {
        snr_db,
        psd,
        mse,
        mse_all,
        recovery_err: mean(here.iter().map(|r| r.recovery_err)),
        crb,
        mean_iters: mean(here.iter().map(|r| r.iterations as f64)),
        mean_seconds: mean(here.iter().map(|r| r.seconds)),
    }
}

/// Run the whole experiment grid. Trials execute in parallel; records are
/// reduced in `(snr, trial)` order so the output files do not depend on the
/// schedule. Returns the per-SNR aggregates.
pub fn run_monte_carlo(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<SnrAggregate>> {
    cfg.validate()?;
    let s = generate_waveforms(
        cfg.radar.m,
        cfg.radar.l,
        derive(cfg.master_seed, Purpose::Waveforms, 0, 0),
    )?;
    let cells: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|si| (0..cfg.trials).map(move |ti| (si, ti)))
        .collect();
    let records: Vec<TrialRecord> =
        cells.par_iter().map(|&(si, ti)| run_trial(cfg, &s, si, ti)).collect();

    std::fs::create_dir_all(out_dir)?;
    write_trials_csv(&records, &out_dir.join("trials.csv"))?;
    write_estimates_csv(&records, &out_dir.join("estimates.csv"))?;
    write_timings_csv(&records, &out_dir.join("timings.csv"))?;
    let aggregates: Vec<SnrAggregate> =
        cfg.snr_db.iter().map(|&snr| aggregate(&records, snr)).collect();
    write_aggregate_csv(&aggregates, &out_dir.join("aggregate.csv"))?;
    Ok(aggregates)
}

// ── CSV writers ──────────────────────────────────────────────────────

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

fn write_trials_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "snr_db,trial,success,matched,mse_nsf,mse_ndf,mse_mag,mse_phase,\
         recovery_err,iterations,converged,crb_nsf,crb_ndf,crb_mag,crb_phase,crb_singular\n",
    );
    for r in records {
        let m = r.mse.unwrap_or([f64::NAN; 4]);
        let c = r.crb.unwrap_or([f64::NAN; 4]);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.snr_db),
            r.trial,
            u8::from(r.success),
            r.matched,
            fmt_f64(m[0]),
            fmt_f64(m[1]),
            fmt_f64(m[2]),
            fmt_f64(m[3]),
            fmt_f64(r.recovery_err),
            r.iterations,
            u8::from(r.converged),
            fmt_f64(c[0]),
            fmt_f64(c[1]),
            fmt_f64(c[2]),
            fmt_f64(c[3]),
            u8::from(r.crb_singular),
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_estimates_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("snr_db,trial,k,nsf_hat,ndf_hat,mag_hat,phase_hat\n");
    for r in records {
        for (k, &(nsf, ndf, mag, phase)) in r.estimates.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_f64(r.snr_db),
                r.trial,
                k,
                fmt_f64(nsf),
                fmt_f64(ndf),
                fmt_f64(mag),
                fmt_f64(phase)
            );
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_timings_csv(records: &[TrialRecord], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("snr_db,trial,seconds\n");
    for r in records {
        let _ = writeln!(out, "{},{},{:.6}", fmt_f64(r.snr_db), r.trial, r.seconds);
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_aggregate_csv(aggregates: &[SnrAggregate], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "snr_db,psd,mse_nsf,mse_ndf,mse_mag,mse_phase,recovery_err,\
         crb_nsf,crb_ndf,crb_mag,crb_phase,mean_iters,\
         mse_nsf_all,mse_ndf_all,mse_mag_all,mse_phase_all\n",
    );
    for a in aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(a.snr_db),
            fmt_f64(a.psd),
            fmt_f64(a.mse[0]),
            fmt_f64(a.mse[1]),
            fmt_f64(a.mse[2]),
            fmt_f64(a.mse[3]),
            fmt_f64(a.recovery_err),
            fmt_f64(a.crb[0]),
            fmt_f64(a.crb[1]),
            fmt_f64(a.crb[2]),
            fmt_f64(a.crb[3]),
            fmt_f64(a.mean_iters),
            fmt_f64(a.mse_all[0]),
            fmt_f64(a.mse_all[1]),
            fmt_f64(a.mse_all[2]),
            fmt_f64(a.mse_all[3]),
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}
