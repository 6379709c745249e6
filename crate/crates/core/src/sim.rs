//! Closed-loop Monte Carlo of the synthesized controller: plant, innovation
//! quantizer, per-step prefix codes, decoder-side Kalman filter and
//! certainty-equivalence control.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::codec::{Codeword, ComponentCoder, DEFAULT_TAIL_EPS};
use crate::di::{solve_di, DiSolution};
use crate::error::{Error, Result};
use crate::lqr::{min_cost, solve_dare, LqrCertainty, PlantModel};
use crate::matrix::{cholesky, discrete_lyapunov, SymMatrix};
use crate::quantizer::{quantize_with_dither, DitherStream};
use crate::sensor::{blind_sensor, realize_sensor, SensorRealization};

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_BATCH: usize = 100;
pub const DIVERGENCE_NORM: f64 = 1e9;
pub const MIN_STEPS: usize = 1000;
pub const MIN_SAMPLES: usize = 10_000;

/// Everything the encoder and decoder agree on ahead of time.
#[derive(Debug, Clone)]
pub struct LoopDesign {
    pub model: PlantModel,
    pub cert: LqrCertainty,
    pub sensor: SensorRealization,
    pub sol: DiSolution,
    pub seed: u64,
}

impl LoopDesign {
    /// Runs the synthesis chain for budget `gamma`.
    pub fn synthesize(model: PlantModel, gamma: f64, seed: u64) -> Result<Self> {
        let cert = solve_dare(&model)?;
        let sol = solve_di(&model, &cert, gamma)?;
        Self::from_parts(model, cert, sol, seed)
    }

    pub fn from_parts(
        model: PlantModel,
        cert: LqrCertainty,
        sol: DiSolution,
        seed: u64,
    ) -> Result<Self> {
        let sensor = match realize_sensor(&model, &sol) {
            Err(Error::ZeroRank) => blind_sensor(&model)?,
            other => other?,
        };
        Ok(Self {
            model,
            cert,
            sensor,
            sol,
            seed,
        })
    }

    pub fn rank(&self) -> usize {
        self.sensor.rank()
    }

    /// Coder for the moment-matched Gaussian innovation model.
    pub fn coder(&self) -> Result<ComponentCoder> {
        ComponentCoder::new(
            &self.sensor.innovation_cov(),
            &self.sensor.delta,
            DEFAULT_TAIL_EPS,
        )
    }
}

/// How the controller obtains the estimate it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// The decoder rebuilds everything from the bit stream and its own copy
    /// of the dither.
    #[default]
    Codewords,
    /// The controller reads the encoder's estimate directly.
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopState {
    pub x: DVector<f64>,
    /// Encoder copy of `x̂_{t|t−1}`.
    pub xhat_enc: DVector<f64>,
    /// Decoder copy of `x̂_{t|t−1}`.
    pub xhat_dec: DVector<f64>,
    pub t: u64,
}

impl LoopState {
    pub fn new(x: DVector<f64>) -> Self {
        let n = x.len();
        Self {
            x,
            xhat_enc: DVector::zeros(n),
            xhat_dec: DVector::zeros(n),
            t: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub theta: Vec<f64>,
    pub cells: Vec<i64>,
    pub q: Vec<f64>,
    /// Filtered estimate `x̂_t` used by the controller.
    pub xhat: DVector<f64>,
    pub u: DVector<f64>,
    pub codeword: Codeword,
    /// `‖x_{t+1}‖²_Q + ‖u_t‖²_R`.
    pub cost_increment: f64,
    /// `−log₂ P(q̃_t | ξ_t)` under the coding model.
    pub info_bits: f64,
}

/// Encoder and decoder coders; each side builds its own books.
#[derive(Debug, Clone)]
pub struct Coders {
    pub encoder: ComponentCoder,
    pub decoder: ComponentCoder,
}

impl Coders {
    pub fn new(design: &LoopDesign) -> Result<Self> {
        let encoder = design.coder()?;
        Ok(Self {
            decoder: encoder.clone(),
            encoder,
        })
    }
}

fn as_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// One plant step. `xi_enc` and `xi_dec` are the dither values regenerated
/// independently at each end; `w` is the process noise.
pub fn step(
    state: &mut LoopState,
    design: &LoopDesign,
    coders: &mut Coders,
    xi_enc: &[f64],
    xi_dec: &[f64],
    w: &DVector<f64>,
    mode: DecodeMode,
) -> Result<StepRecord> {
    let model = &design.model;
    let c = &design.sensor.c;
    let l = &design.sensor.kalman.l;
    let k = &design.cert.k;
    let steps = &design.sensor.delta;

    // Encoder.
    let theta = as_vec(&(c * (&state.x - &state.xhat_enc)));
    let out = quantize_with_dither(&theta, xi_enc, steps)?;
    let (codeword, info_bits) = coders.encoder.encode_measured(&out.cell_indices, xi_enc)?;
    let q_enc = DVector::from_vec(out.reconstructed.clone());
    let xhat_filt_enc = &state.xhat_enc + l * &q_enc;

    // Decoder.
    let xhat_filt = match mode {
        DecodeMode::Oracle => xhat_filt_enc.clone(),
        DecodeMode::Codewords => {
            let (cells, used) = coders.decoder.decode(codeword.bits(), xi_dec)?;
            if used != codeword.len() || cells != out.cell_indices {
                return Err(Error::Desync(state.t as usize));
            }
            let q_dec = DVector::from_vec(crate::quantizer::reconstruct(&cells, xi_dec, steps));
            &state.xhat_dec + l * q_dec
        }
    };
    let u = k * &xhat_filt;

    // Both ends run the same time update.
    let x_next = &model.a * &state.x + &model.b * &u + w;
    let bu = &model.b * &u;
    let next_enc = &model.a * &xhat_filt_enc + &bu;
    let next_dec = &model.a * &xhat_filt + &bu;
    if mode == DecodeMode::Codewords && next_enc != next_dec {
        return Err(Error::Desync(state.t as usize));
    }

    let cost_increment = x_next.dot(&(model.q.as_matrix() * &x_next))
        + u.dot(&(model.r.as_matrix() * &u));
    let norm = x_next.norm();
    if !(norm <= DIVERGENCE_NORM) {
        return Err(Error::NumericalDivergence {
            step: state.t as usize,
            norm,
        });
    }
    state.x = x_next;
    state.xhat_enc = next_enc;
    state.xhat_dec = next_dec;
    state.t += 1;
    Ok(StepRecord {
        theta,
        cells: out.cell_indices,
        q: out.reconstructed,
        xhat: xhat_filt,
        u,
        codeword,
        cost_increment,
        info_bits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Steps run before the `steps` that are averaged.
    pub burn_in: usize,
    pub batch: usize,
    pub mode: DecodeMode,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            batch: DEFAULT_BATCH,
            mode: DecodeMode::Codewords,
        }
    }
}

/// One row of the per-step audit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub cost_increment: f64,
    pub bits: Codeword,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    /// Averaged steps per trial (burn-in excluded).
    pub steps: usize,
    pub trials: usize,
    pub gamma: f64,
    pub rank_r: usize,
    pub avg_cost: f64,
    pub avg_rate_bits: f64,
    /// Average of `−log₂ P(q̃|ξ)`: an estimate of `H(q̃|ξ)`.
    pub avg_info_bits: f64,
    pub di_bits: f64,
    pub upper_bits: f64,
    pub cost_ci_halfwidth: f64,
    pub rate_ci_halfwidth: f64,
    pub info_ci_halfwidth: f64,
    /// Relative Frobenius distance of the empirical state covariance from
    /// the analytic stationary one.
    pub stationary_cov_error: f64,
    pub empirical_x_cov: SymMatrix,
    pub analytic: LoopMoments,
}

/// Stationary second moments of the linear loop.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopMoments {
    pub x_cov: SymMatrix,
    pub u_cov: SymMatrix,
    /// `Tr(QΣₓ) + Tr(RΣᵤ)`.
    pub cost: f64,
    /// `Tr(Θ P_filt) + Tr(W S)`.
    pub theoretical_cost: f64,
}

/// Propagates second moments of `ζ = (x, x̂_{t|t−1})` with the quantization
/// error treated as white noise of covariance `V`.
pub fn analytic_loop_covariance(design: &LoopDesign) -> Result<LoopMoments> {
    let model = &design.model;
    let n = model.state_dim();
    let c = &design.sensor.c;
    let l = &design.sensor.kalman.l;
    let k = &design.cert.k;
    let bk = &model.b * k;
    let acl = &model.a + &bk;
    let lc = l * c;
    let i_lc = DMatrix::<f64>::identity(n, n) - &lc;

    let mut f = DMatrix::zeros(2 * n, 2 * n);
    f.view_mut((0, 0), (n, n)).copy_from(&(&model.a + &bk * &lc));
    f.view_mut((0, n), (n, n)).copy_from(&(&bk * &i_lc));
    f.view_mut((n, 0), (n, n)).copy_from(&(&acl * &lc));
    f.view_mut((n, n), (n, n)).copy_from(&(&acl * &i_lc));

    let r = design.rank();
    let mut g = DMatrix::zeros(2 * n, r + n);
    g.view_mut((0, 0), (n, r)).copy_from(&(&bk * l));
    g.view_mut((n, 0), (n, r)).copy_from(&(&acl * l));
    g.view_mut((0, r), (n, n)).copy_from(&DMatrix::identity(n, n));
    let mut noise = DMatrix::zeros(r + n, r + n);
    for (i, v) in design.sensor.v.iter().enumerate() {
        noise[(i, i)] = *v;
    }
    noise
        .view_mut((r, r), (n, n))
        .copy_from(model.w.as_matrix());
    let drive = SymMatrix::symmetrize(&g * noise * g.transpose());
    let sigma = discrete_lyapunov(&f, &drive, 1e-13, 1_000_000)?;

    let x_cov = SymMatrix::symmetrize(sigma.as_matrix().view((0, 0), (n, n)).into_owned());
    // x̂_t = [LC, I − LC] ζ + L η
    let mut h = DMatrix::zeros(n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(&lc);
    h.view_mut((0, n), (n, n)).copy_from(&i_lc);
    let xhat_cov = sigma
        .congruence(&h)
        .add(&design.sensor.v_matrix().congruence(l));
    let u_cov = xhat_cov.congruence(k);
    let cost = model.q.trace_product(&x_cov) + model.r.trace_product(&u_cov);
    let theoretical_cost =
        design.cert.theta.trace_product(&design.sensor.kalman.p_filt) + min_cost(model, &design.cert);
    Ok(LoopMoments {
        x_cov,
        u_cov,
        cost,
        theoretical_cost,
    })
}

#[derive(Debug, Clone)]
struct TrialStats {
    cost_sum: f64,
    rate_sum: f64,
    info_sum: f64,
    cost_batches: Vec<f64>,
    rate_batches: Vec<f64>,
    info_batches: Vec<f64>,
    x_sum: DVector<f64>,
    xx_sum: DMatrix<f64>,
    trace: Vec<TraceRow>,
}

fn standard_normal_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(rng)))
}

/// Process-noise generator for trial `trial`: ChaCha8 keyed by the seed on
/// its own stream, Gaussian samples by the ziggurat transform.
fn noise_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trial(
    design: &LoopDesign,
    trial: usize,
    steps: usize,
    opts: &SimOptions,
    keep_trace: bool,
) -> Result<TrialStats> {
    let n = design.model.state_dim();
    let chol_w = cholesky(&design.model.w)?;
    let chol_p0 = cholesky(&design.model.p_prior)?;
    let mut rng = noise_rng(design.seed, trial);
    let deltas = design.sensor.delta.clone();
    let mut dither_enc = DitherStream::with_stream(design.seed, trial as u32, deltas.clone());
    let mut dither_dec = DitherStream::with_stream(design.seed, trial as u32, deltas);
    let mut coders = Coders::new(design)?;

    let x0 = &chol_p0 * standard_normal_vec(&mut rng, n);
    let mut state = LoopState::new(x0);
    let mut stats = TrialStats {
        cost_sum: 0.0,
        rate_sum: 0.0,
        info_sum: 0.0,
        cost_batches: Vec::with_capacity(steps / opts.batch),
        rate_batches: Vec::with_capacity(steps / opts.batch),
        info_batches: Vec::with_capacity(steps / opts.batch),
        x_sum: DVector::zeros(n),
        xx_sum: DMatrix::zeros(n, n),
        trace: Vec::new(),
    };
    let (mut bc, mut br, mut bi) = (0.0, 0.0, 0.0);
    for t in 0..opts.burn_in + steps {
        let xi_enc = dither_enc.next_dither();
        let xi_dec = dither_dec.next_dither();
        let w = &chol_w * standard_normal_vec(&mut rng, n);
        let x_before = state.x.clone();
        let rec = step(
            &mut state,
            design,
            &mut coders,
            &xi_enc,
            &xi_dec,
            &w,
            opts.mode,
        )?;
        if t < opts.burn_in {
            continue;
        }
        let bits = rec.codeword.len() as f64;
        stats.cost_sum += rec.cost_increment;
        stats.rate_sum += bits;
        stats.info_sum += rec.info_bits;
        stats.x_sum += &x_before;
        stats.xx_sum += &x_before * x_before.transpose();
        bc += rec.cost_increment;
        br += bits;
        bi += rec.info_bits;
        let m = t - opts.burn_in + 1;
        if m.is_multiple_of(opts.batch) {
            let b = opts.batch as f64;
            stats.cost_batches.push(bc / b);
            stats.rate_batches.push(br / b);
            stats.info_batches.push(bi / b);
            (bc, br, bi) = (0.0, 0.0, 0.0);
        }
        if keep_trace {
            stats.trace.push(TraceRow {
                step: (t - opts.burn_in) as u64,
                cost_increment: rec.cost_increment,
                bits: rec.codeword,
            });
        }
    }
    Ok(stats)
}

/// `3·std/√m` over the batch means.
fn ci_halfwidth(batches: &[f64]) -> f64 {
    let m = batches.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let mean = batches.iter().sum::<f64>() / m as f64;
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    3.0 * var.sqrt() / (m as f64).sqrt()
}

pub fn simulate(design: &LoopDesign, steps: usize, trials: usize) -> Result<SimulationSummary> {
    simulate_with(design, steps, trials, &SimOptions::default()).map(|(s, _)| s)
}

/// Runs `trials` independent trials in parallel; returns the summary and the
/// trace of trial 0 when `trace` is set.
pub fn simulate_traced(
    design: &LoopDesign,
    steps: usize,
    trials: usize,
    opts: &SimOptions,
) -> Result<(SimulationSummary, Vec<TraceRow>)> {
    run(design, steps, trials, opts, true)
}

pub fn simulate_with(
    design: &LoopDesign,
    steps: usize,
    trials: usize,
    opts: &SimOptions,
) -> Result<(SimulationSummary, Vec<TraceRow>)> {
    run(design, steps, trials, opts, false)
}

fn run(
    design: &LoopDesign,
    steps: usize,
    trials: usize,
    opts: &SimOptions,
    trace: bool,
) -> Result<(SimulationSummary, Vec<TraceRow>)> {
    if steps < MIN_STEPS || trials == 0 || steps.saturating_mul(trials) < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{trials} trials of {steps} steps; need at least {MIN_STEPS} steps and {MIN_SAMPLES} samples"
        )));
    }
    if opts.batch == 0 {
        return Err(Error::InsufficientSamples("batch length must be positive".into()));
    }
    let analytic = analytic_loop_covariance(design)?;
    let results: Vec<TrialStats> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(design, i, steps, opts, trace && i == 0))
        .collect::<Result<Vec<_>>>()?;

    let n = design.model.state_dim();
    let total = (steps * trials) as f64;
    let mut x_sum = DVector::zeros(n);
    let mut xx_sum = DMatrix::zeros(n, n);
    let (mut cost, mut rate, mut info) = (0.0, 0.0, 0.0);
    let (mut cb, mut rb, mut ib) = (Vec::new(), Vec::new(), Vec::new());
    let mut trace_rows = Vec::new();
    for s in results {
        cost += s.cost_sum;
        rate += s.rate_sum;
        info += s.info_sum;
        x_sum += s.x_sum;
        xx_sum += s.xx_sum;
        cb.extend(s.cost_batches);
        rb.extend(s.rate_batches);
        ib.extend(s.info_batches);
        if trace_rows.is_empty() {
            trace_rows = s.trace;
        }
    }
    let mean = x_sum / total;
    let emp = SymMatrix::symmetrize(xx_sum / total - &mean * mean.transpose());
    let stationary_cov_error = emp.sub(&analytic.x_cov).frobenius() / analytic.x_cov.frobenius();

    let summary = SimulationSummary {
        steps,
        trials,
        gamma: design.sol.gamma,
        rank_r: design.rank(),
        avg_cost: cost / total,
        avg_rate_bits: rate / total,
        avg_info_bits: info / total,
        di_bits: design.sol.di_bits,
        upper_bits: design.sol.upper_bits(),
        cost_ci_halfwidth: ci_halfwidth(&cb),
        rate_ci_halfwidth: ci_halfwidth(&rb),
        info_ci_halfwidth: ci_halfwidth(&ib),
        stationary_cov_error,
        empirical_x_cov: emp,
        analytic,
    };
    Ok((summary, trace_rows))
}

/// Formats `v` with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.11e}")
    }
}

pub const SUMMARY_HEADER: &str = "steps,trials,gamma,rank_r,avg_cost,avg_rate_bits,avg_info_bits,di_bits,upper_bits,cost_ci_halfwidth,rate_ci_halfwidth,stationary_cov_error,analytic_cost";

pub fn write_summary_csv<W: Write>(s: &SimulationSummary, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        s.steps,
        s.trials,
        fmt_num(s.gamma),
        s.rank_r,
        fmt_num(s.avg_cost),
        fmt_num(s.avg_rate_bits),
        fmt_num(s.avg_info_bits),
        fmt_num(s.di_bits),
        fmt_num(s.upper_bits),
        fmt_num(s.cost_ci_halfwidth),
        fmt_num(s.rate_ci_halfwidth),
        fmt_num(s.stationary_cov_error),
        fmt_num(s.analytic.cost),
    )
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "step,cost_increment,l_t,bits_hex")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.step,
            fmt_num(r.cost_increment),
            r.bits.len(),
            r.bits.to_hex()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_design(a: f64, extra: f64) -> LoopDesign {
        let model = PlantModel::scalar(a, 1.0, 1.0, 1.0, 1.0).unwrap();
        let cert = solve_dare(&model).unwrap();
        let gamma = min_cost(&model, &cert) + extra;
        LoopDesign::synthesize(model, gamma, 3).unwrap()
    }

    #[test]
    fn equilibrium_stays_at_zero() {
        let d = scalar_design(1.0, 1.0);
        let mut coders = Coders::new(&d).unwrap();
        let mut state = LoopState::new(DVector::zeros(1));
        let w = DVector::zeros(1);
        for _ in 0..100 {
            let rec = step(&mut state, &d, &mut coders, &[0.0], &[0.0], &w, DecodeMode::Codewords)
                .unwrap();
            assert_eq!(rec.u[0], 0.0);
            assert_eq!(rec.cost_increment, 0.0);
        }
        assert_eq!(state.x[0], 0.0);
        assert_eq!(state.xhat_dec[0], 0.0);
    }

    #[test]
    fn hand_trace_one_step() {
        let mut d = scalar_design(1.0, 1.0);
        d.sensor.c = DMatrix::from_element(1, 1, 1.0);
        d.sensor.delta = vec![2.0];
        let l = d.sensor.kalman.l[(0, 0)];
        let k = d.cert.k[(0, 0)];
        let mut coders = Coders::new(&d).unwrap();
        let mut state = LoopState::new(DVector::from_element(1, 1.0));
        let rec = step(
            &mut state,
            &d,
            &mut coders,
            &[0.2],
            &[0.2],
            &DVector::zeros(1),
            DecodeMode::Codewords,
        )
        .unwrap();
        assert_eq!(rec.theta, vec![1.0]);
        assert_eq!(rec.cells, vec![1]);
        assert_abs_diff_eq!(rec.q[0], 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(rec.xhat[0], l * 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(rec.u[0], k * l * 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(state.x[0], 1.0 + k * l * 1.8, epsilon = 1e-15);
    }

    #[test]
    fn analytic_cost_meets_budget() {
        for (a, extra) in [(2.0, 1.0), (1.2, 0.5), (0.5, 0.05)] {
            let d = scalar_design(a, extra);
            let m = analytic_loop_covariance(&d).unwrap();
            assert_abs_diff_eq!(m.cost, m.theoretical_cost, epsilon = 1e-8);
            if d.sol.budget_active() {
                assert_abs_diff_eq!(m.theoretical_cost, d.sol.gamma, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn insufficient_samples() {
        let d = scalar_design(2.0, 1.0);
        assert!(matches!(
            simulate(&d, 999, 100),
            Err(Error::InsufficientSamples(_))
        ));
        assert!(matches!(
            simulate(&d, 1000, 5),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn rank_zero_sends_nothing() {
        let d = scalar_design(0.5, 100.0);
        assert_eq!(d.rank(), 0);
        let s = simulate(&d, 2000, 5).unwrap();
        assert_eq!(s.avg_rate_bits, 0.0);
        assert!(s.avg_cost < d.sol.gamma);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num((1.0 + 5f64.sqrt()) / 2.0), "1.61803398875");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1e-9), "1.00000000000e-9");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_num(123456.0), "123456");
    }
}
