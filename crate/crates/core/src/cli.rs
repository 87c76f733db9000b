//! Command-line interface: scene simulation, one-bit data dumps, solving,
//! CRB tables, Monte Carlo experiments, and data-volume reports.
//!
//! Exit codes: 0 on success, 2 on configuration or input errors, 3 on
//! numerical failures.

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::crb::{
    expected_fim_rgt, expected_fim_rut, fim_onebit, fim_onebit_unknown_sigma, fim_unquantized,
    fim_unquantized_unknown_sigma, FimResult,
};
use crate::error::{Error, Result};
use crate::harness::{
    data_volume_report, run_monte_carlo, threshold_and_quantize, ExperimentConfig,
    SolverSettings, ThresholdSettings,
};
use crate::sampling::{draw_masks, MaskSet, ThresholdSet, ThresholdStrategy};
use crate::scene::{generate_waveforms, SceneSpec};
use crate::seeds::{derive, Purpose};
use crate::solver::{solve_1b_anm_l1, OneBitProblem, SolveResult};
use crate::spectral::{estimate_model_order, extract_targets};
use crate::{CMatrix, CVector};

#[derive(Parser)]
#[command(
    name = "obmimo",
    about = "One-bit MIMO radar: simulation, gridless estimation, and CRB analysis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scene and dump one-bit data with its thresholds to CSV.
    Simulate(SimulateArgs),
    /// Recover targets from a one-bit data dump.
    Solve(SolveArgs),
    /// Cramér–Rao bound table for a scene.
    Crb(CrbArgs),
    /// Run a Monte Carlo experiment grid from a JSON description.
    Montecarlo(MonteCarloArgs),
    /// Data-volume ratios against 16-bit systems.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scene JSON file.
    #[arg(long)]
    scene: PathBuf,
    /// Master seed for waveforms, masks, noise, and thresholds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Threshold strategy.
    #[arg(long, value_parser = parse_strategy, default_value = "rut")]
    strategy: ThresholdStrategy,
    /// Quantize thresholds to this DAC bit depth.
    #[arg(long)]
    dac_bits: Option<u32>,
    /// RGT deviation scale: sigma_r^2 = kappa * sigma^2.
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
}

#[derive(Args)]
struct SolveArgs {
    /// Scene JSON file (dimensions and, by default, the model order).
    #[arg(long)]
    scene: PathBuf,
    /// One-bit data CSV produced by `simulate`.
    #[arg(long)]
    data: PathBuf,
    /// Master seed; must match the one passed to `simulate`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output estimates CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Solver parameter JSON (fields mu, lambda, rho, tol, max_iters).
    #[arg(long)]
    params: Option<PathBuf>,
    /// SNR in dB for the default data-fit weight (otherwise derived from the
    /// scene noise level).
    #[arg(long)]
    snr: Option<f64>,
    /// Model order override.
    #[arg(long)]
    k: Option<usize>,
    /// Estimate the model order from the recovered eigenvalue spectrum.
    #[arg(long)]
    estimate_order: bool,
    /// Write per-iteration diagnostics to this CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CrbArgs {
    /// Scene JSON file.
    #[arg(long)]
    scene: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Seed for masks (and threshold draws in the unknown-sigma case).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Unquantized bound (default when no strategy flag is given).
    #[arg(long)]
    unquantized: bool,
    /// Expected one-bit bound under random uniform thresholds.
    #[arg(long)]
    rut: bool,
    /// Expected one-bit bound under random Gaussian thresholds.
    #[arg(long)]
    rgt: bool,
    /// One-bit bound with a fixed zero threshold.
    #[arg(long)]
    zero_threshold: bool,
    /// Treat sigma as known (the default).
    #[arg(long)]
    known_sigma: bool,
    /// Estimate sigma jointly: emit the extended parameter vector.
    #[arg(long, conflicts_with = "known_sigma")]
    unknown_sigma: bool,
    /// RGT deviation scale: sigma_r^2 = kappa * sigma^2.
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    /// RUT lower bound (default: noise-free signal minimum).
    #[arg(long)]
    hmin: Option<f64>,
    /// RUT upper bound (default: noise-free signal maximum).
    #[arg(long)]
    hmax: Option<f64>,
}

#[derive(Args)]
struct MonteCarloArgs {
    /// Experiment JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for trials/aggregate/estimates/timings CSVs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Scene JSON file (only the dimensions are used).
    #[arg(long)]
    scene: PathBuf,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_strategy(text: &str) -> std::result::Result<ThresholdStrategy, String> {
    match text {
        "zero" => Ok(ThresholdStrategy::Zero),
        "rut" => Ok(ThresholdStrategy::Rut),
        "rgt" => Ok(ThresholdStrategy::Rgt),
        other => Err(format!("unknown strategy '{other}' (expected zero, rut, or rgt)")),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Crb(args) => cmd_crb(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn read_scene(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path)?;
    SceneSpec::from_json(&text)
}

/// Waveforms and masks derived deterministically from a master seed.
fn setup(spec: &SceneSpec, seed: u64) -> Result<(CMatrix, MaskSet)> {
    let s = generate_waveforms(
        spec.config.m,
        spec.config.l,
        derive(seed, Purpose::Waveforms, 0, 0),
    )?;
    let masks = draw_masks(&spec.config, derive(seed, Purpose::Masks, 0, 0))?;
    Ok((s, masks))
}

fn snr_for_scene(spec: &SceneSpec) -> f64 {
    if spec.sigma > 0.0 {
        -20.0 * spec.sigma.log10()
    } else {
        40.0
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let spec = read_scene(&args.scene)?;
    let (s, masks) = setup(&spec, args.seed)?;
    let scene = spec.scene();
    let x = crate::scene::build_ground_truth(&scene, &spec.config);
    let ys = crate::scene::simulate_received(
        &x,
        &masks,
        &s,
        scene.sigma,
        derive(args.seed, Purpose::Noise, 0, 0),
    )?;
    let settings =
        ThresholdSettings { strategy: args.strategy, kappa: args.kappa, dac_bits: args.dac_bits };
    let params = SolverSettings::default().params_for_snr(snr_for_scene(&spec));
    let trial = threshold_and_quantize(
        &ys,
        &masks,
        &s,
        &settings,
        &params,
        scene.sigma,
        derive(args.seed, Purpose::Threshold, 0, 0),
        derive(args.seed, Purpose::ThresholdFirstPass, 0, 0),
    )?;

    let mut out = String::from("q,n,re_z,im_z,re_h,im_h\n");
    for (pos, &q) in masks.pulses.iter().enumerate() {
        let z = &trial.data.z[pos];
        let h = &trial.thresholds.h[pos];
        for n in 0..z.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                q + 1,
                n + 1,
                z[n].re as i8,
                z[n].im as i8,
                h[n].re,
                h[n].im
            );
        }
    }
    std::fs::write(&args.out, out)?;
    Ok(())
}

/// Parse a one-bit dump back into per-pulse sign and threshold vectors.
fn read_onebit_csv(path: &Path, masks: &MaskSet) -> Result<(Vec<CVector>, Vec<CVector>)> {
    let text = std::fs::read_to_string(path)?;
    let lr = masks.config.lr();
    let mut z: Vec<CVector> = masks.pulses.iter().map(|_| CVector::zeros(lr)).collect();
    let mut h: Vec<CVector> = masks.pulses.iter().map(|_| CVector::zeros(lr)).collect();
    let mut seen = vec![vec![false; lr]; masks.pulses.len()];
    for (line_no, line) in text.lines().enumerate() {
        if line_no == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Csv(format!("line {}: expected 6 fields", line_no + 1)));
        }
        let parse_f = |i: usize, name: &str| -> Result<f64> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Csv(format!("line {}: bad {name}", line_no + 1)))
        };
        let q = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Csv(format!("line {}: bad q", line_no + 1)))?;
        let n = fields[1]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Csv(format!("line {}: bad n", line_no + 1)))?;
        if q == 0 || n == 0 || n > lr {
            return Err(Error::Csv(format!("line {}: index out of range", line_no + 1)));
        }
        let pos = masks
            .pulse_position(q - 1)
            .ok_or_else(|| Error::Csv(format!("line {}: pulse {q} is not selected", line_no + 1)))?;
        let (re_z, im_z) = (parse_f(2, "re_z")?, parse_f(3, "im_z")?);
        if re_z.abs() != 1.0 || im_z.abs() != 1.0 {
            return Err(Error::Csv(format!("line {}: signs must be ±1", line_no + 1)));
        }
        z[pos][n - 1] = Complex64::new(re_z, im_z);
        h[pos][n - 1] = Complex64::new(parse_f(4, "re_h")?, parse_f(5, "im_h")?);
        seen[pos][n - 1] = true;
    }
    if !seen.iter().all(|p| p.iter().all(|&b| b)) {
        return Err(Error::Csv("data file does not cover every (q, n) slot".into()));
    }
    Ok((z, h))
}

fn write_trace(path: &Path, result: &SolveResult) -> Result<()> {
    let mut out = String::from("iter,rel_change_x,primal_residual,min_eig_h\n");
    for (i, st) in result.history.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i, st.rel_change_x, st.primal_residual, st.min_eig_h);
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let spec = read_scene(&args.scene)?;
    let (s, masks) = setup(&spec, args.seed)?;
    let (z, h) = read_onebit_csv(&args.data, &masks)?;

    let snr_db = args.snr.unwrap_or_else(|| snr_for_scene(&spec));
    let params = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let settings: SolverSettings = serde_json::from_str(&text)?;
            settings.params_for_snr(snr_db)
        }
        None => SolverSettings::default().params_for_snr(snr_db),
    };
    let prob = OneBitProblem { z: &z, h: &h, masks: &masks, s: &s };
    let result = solve_1b_anm_l1(&prob, &params)?;
    if let Some(trace) = &args.trace {
        write_trace(trace, &result)?;
    }

    let k = if let Some(k) = args.k {
        k
    } else if args.estimate_order {
        let eig = result.state.h_big.clone().symmetric_eigen();
        let mut eigs: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        estimate_model_order(&eigs, snr_db)
    } else {
        spec.targets.len()
    };
    let estimate = extract_targets(&result.state.u1, &result.state.u2, &result.state.x, k)?;

    let mut out = String::from("trial,k,nsf_hat,ndf_hat,mag_hat,phase_hat\n");
    for (i, t) in estimate.targets.iter().enumerate() {
        let _ = writeln!(out, "0,{},{},{},{},{}", i, t.nsf, t.ndf, t.beta.norm(), t.beta.arg());
    }
    std::fs::write(&args.out, out)?;
    Ok(())
}

fn cmd_crb(args: CrbArgs) -> Result<()> {
    let spec = read_scene(&args.scene)?;
    if spec.targets.is_empty() {
        return Err(Error::InvalidConfig("CRB requires at least one target".into()));
    }
    if spec.sigma <= 0.0 {
        return Err(Error::InvalidConfig("CRB requires sigma > 0".into()));
    }
    let strategy_flags = usize::from(args.unquantized)
        + usize::from(args.rut)
        + usize::from(args.rgt)
        + usize::from(args.zero_threshold);
    if strategy_flags > 1 {
        return Err(Error::InvalidConfig(
            "choose at most one of --unquantized, --rut, --rgt, --zero-threshold".into(),
        ));
    }
    let (s, masks) = setup(&spec, args.seed)?;
    let scene = spec.scene();
    let sigma = scene.sigma;
    let sigma_t = (args.kappa.max(0.0)).sqrt() * sigma;

    // noise-free signal drives default RUT ranges and RGT means
    let x = crate::scene::build_ground_truth(&scene, &spec.config);
    let signal: Vec<CVector> = masks
        .pulses
        .iter()
        .map(|&q| crate::sampling::apply_f(&x, q, &masks, &s))
        .collect::<Result<Vec<_>>>()?;
    let (sig_lo, sig_hi) = {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for y in &signal {
            for v in y.iter() {
                lo = lo.min(v.re).min(v.im);
                hi = hi.max(v.re).max(v.im);
            }
        }
        (lo, hi)
    };
    let h_min = args.hmin.unwrap_or(sig_lo);
    let h_max = args.hmax.unwrap_or(sig_hi);

    let fim: FimResult = if args.unknown_sigma {
        if args.unquantized {
            fim_unquantized_unknown_sigma(&scene, &masks, &s)?
        } else {
            // concrete thresholds are required for the one-bit sigma terms
            let thresholds: ThresholdSet = if args.rut {
                crate::sampling::gen_threshold_rut(
                    h_min,
                    h_max,
                    masks.pulses.len(),
                    spec.config.lr(),
                    derive(args.seed, Purpose::Threshold, 0, 0),
                )?
            } else if args.rgt {
                crate::sampling::gen_threshold_rgt(
                    &signal,
                    sigma_t,
                    sigma_t,
                    derive(args.seed, Purpose::Threshold, 0, 0),
                )?
            } else {
                ThresholdSet::zero(masks.pulses.len(), spec.config.lr())
            };
            fim_onebit_unknown_sigma(&scene, &masks, &s, &thresholds)?
        }
    } else if args.rut {
        expected_fim_rut(&scene, &masks, &s, h_min, h_max)?
    } else if args.rgt {
        expected_fim_rgt(&scene, &masks, &s, sigma_t, sigma_t)?
    } else if args.zero_threshold {
        let zero = ThresholdSet::zero(masks.pulses.len(), spec.config.lr());
        fim_onebit(&scene, &masks, &s, &zero)?
    } else {
        fim_unquantized(&scene, &masks, &s)?
    };

    let k = fim.ordering.k;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# ordering: nsf[0..{k}) ndf[{k}..{}) mag[{}..{}) phase[{}..{}){}",
        2 * k,
        2 * k,
        3 * k,
        3 * k,
        4 * k,
        if fim.ordering.has_sigma { format!(" sigma[{}]", 4 * k) } else { String::new() }
    );
    let _ = writeln!(out, "# singular: {}", fim.singular);
    out.push_str("param,index,crb\n");
    for (i, v) in fim.crb_diag.iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", fim.ordering.name(i), i, v);
    }
    std::fs::write(&args.out, out)?;
    Ok(())
}

fn cmd_montecarlo(args: MonteCarloArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    run_monte_carlo(&cfg, &args.out)?;
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let spec = read_scene(&args.scene)?;
    let report = data_volume_report(&spec.config);
    let mut out = String::from("comparison,onebit_bits,reference_bits,ratio\n");
    let _ = writeln!(
        out,
        "vs_classic_16bit,{},{},{}",
        report.onebit_bits, report.classic_bits, report.ratio_vs_classic
    );
    let _ = writeln!(
        out,
        "vs_cs_16bit,{},{},{}",
        report.onebit_bits, report.cs16_bits, report.ratio_vs_cs16
    );
    match &args.out {
        Some(path) => std::fs::write(path, out)?,
        None => print!("{out}"),
    }
    Ok(())
}
