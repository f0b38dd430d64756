//! Monte Carlo success curves.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tomoframe_core::certify::{certify_sweep, ConditionVariant, CertifyTolerances, SweepOutcome};
use tomoframe_core::frames::FrameDescriptor;
use tomoframe_core::linalg::frobenius_norm;
use tomoframe_core::reconstruct::{solve_dantzig, solve_equality, solve_lasso, solve_tube, ReconstructionResult};
use tomoframe_core::sampling::{draw_sampling_operator, simulate_measurement, MeasurementRecord, SamplingOperator};
use tomoframe_core::random_rank_r_state;

use crate::config::{ExperimentConfig, FrameSpec, SolverKind, SolverSpec};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    /// `‖σ* − ρ‖₂`.
    pub error: f64,
    pub trace_norm: f64,
    pub final_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub recovered: bool,
    /// A valid certificate was found and `‖σ*‖₁ = 1` to tolerance,
    /// regardless of solver convergence.
    pub certificate_valid: bool,
    /// `certificate_valid` and the solver converged.
    pub certified: bool,
    /// Truncation rank of the accepted certificate.
    pub certified_q: Option<usize>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub m: usize,
    pub trials: usize,
    pub recovered: usize,
    pub certified: usize,
    pub mean_residual: f64,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<TrialOutcome>,
}

impl PointRecord {
    pub fn p_recover(&self) -> f64 {
        self.recovered as f64 / self.trials as f64
    }

    pub fn p_certify(&self) -> f64 {
        self.certified as f64 / self.trials as f64
    }

    fn aggregate(m: usize, outcomes: Vec<TrialOutcome>) -> Self {
        let trials = outcomes.len();
        Self {
            m,
            trials,
            recovered: outcomes.iter().filter(|t| t.recovered).count(),
            certified: outcomes.iter().filter(|t| t.certified).count(),
            mean_residual: outcomes.iter().map(|t| t.final_residual).sum::<f64>() / trials as f64,
            wall_ms: outcomes.iter().map(|t| t.wall_ms).sum(),
            outcomes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub label: String,
    pub config: ExperimentConfig,
    pub points: Vec<PointRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall-clock times; off by default so output is reproducible.
    pub timing: bool,
    /// Keep per-trial outcomes in the record.
    pub keep_outcomes: bool,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `trial` at grid point `m`.
pub fn trial_seed(master: u64, m: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ m as u64) ^ trial as u64)
}

/// Draws `m` settings, or takes the first `m` basis elements for the
/// complete-basis frame.
pub fn draw_operator(spec: &FrameSpec, frame: &FrameDescriptor, m: usize, seed: u64) -> Result<SamplingOperator> {
    if let FrameSpec::CompleteBasis { dim } = spec {
        let elements = frame.finite_elements().expect("matrix units are finite");
        let obs = elements.into_iter().take(m).map(|(_, w)| w).collect();
        return Ok(SamplingOperator::new(*dim, m, obs, true, "complete-basis")?);
    }
    Ok(draw_sampling_operator(frame, m, seed)?)
}

pub fn solve(op: &SamplingOperator, b: &MeasurementRecord, spec: &SolverSpec) -> Result<ReconstructionResult> {
    let cfg = spec.config();
    Ok(match spec.kind {
        SolverKind::Equality => solve_equality(op, b, &cfg)?,
        SolverKind::Tube { delta } => solve_tube(op, b, delta, &cfg)?,
        SolverKind::Dantzig { lambda } => solve_dantzig(op, b, lambda, &cfg)?,
        SolverKind::Lasso { mu } => solve_lasso(op, b, mu, &cfg)?,
    })
}

/// One draw of state, operator and data, followed by reconstruction and
/// the certificate sweep.
pub fn run_trial(config: &ExperimentConfig, frame: &FrameDescriptor, m: usize, trial: usize, opts: RunOptions) -> Result<TrialOutcome> {
    let start = opts.timing.then(Instant::now);
    let seed = trial_seed(config.seed, m, trial);
    let n = frame.dim();
    let rho = random_rank_r_state(n, config.state.rank, splitmix64(seed ^ 1))?;
    let op = draw_operator(&config.frame, frame, m, splitmix64(seed ^ 2))?;
    let b = simulate_measurement(&op, &rho, config.noise.model(), splitmix64(seed ^ 3))?;
    let res = solve(&op, &b, &config.solver)?;
    let error = frobenius_norm(&(&res.sigma_star - rho.matrix()));
    let tol = CertifyTolerances::default();
    let report = match certify_sweep(&op, &res, n, config.certificate, &tol) {
        SweepOutcome::Certified(r) => Some(r),
        SweepOutcome::Exhausted { .. } => None,
    };
    let certificate_valid =
        report.as_ref().is_some_and(|r| if config.certificate == ConditionVariant::Noisy { r.valid } else { r.certifies_state() });
    let certified = res.converged && certificate_valid;
    Ok(TrialOutcome {
        trial,
        seed,
        error,
        trace_norm: res.trace_norm,
        final_residual: res.final_residual,
        iterations: res.iterations,
        converged: res.converged,
        recovered: error <= config.recovery_threshold,
        certificate_valid,
        certified,
        certified_q: report.filter(|_| certified).map(|r| r.q),
        wall_ms: start.map_or(0.0, |t| t.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs every trial of every grid point. Trials run in parallel; results
/// are aggregated in `(m, trial)` order.
pub fn run_success_curve(config: &ExperimentConfig, opts: RunOptions) -> Result<Vec<PointRecord>> {
    let frame = config.validate()?;
    let jobs: Vec<(usize, usize)> = config.m_grid.iter().flat_map(|&m| (0..config.trials).map(move |t| (m, t))).collect();
    let outcomes = jobs.par_iter().map(|&(m, t)| run_trial(config, &frame, m, t, opts)).collect::<Result<Vec<_>>>()?;
    let mut it = outcomes.into_iter();
    Ok(config
        .m_grid
        .iter()
        .map(|&m| {
            let mut point = PointRecord::aggregate(m, it.by_ref().take(config.trials).collect());
            if !opts.keep_outcomes {
                point.outcomes.clear();
            }
            point
        })
        .collect())
}

/// Runs a config and attaches the label and config echo.
pub fn run_experiment(label: &str, config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentRecord> {
    Ok(ExperimentRecord { label: label.to_string(), config: config.clone(), points: run_success_curve(config, opts)? })
}
