//! Trace-norm recovery programs over Hermitian matrices.
//!
//! All solvers work on the real vectorization of the Hermitian space, so
//! iterates are Hermitian by construction. The data constraint is handled
//! through a thin factorization `𝒜 = U S Wᵀ`: the affine set, tube and
//! residuals are then all expressed in the `r = rank 𝒜` coordinates
//! `Wᵀσ`.

use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{self, eigh, eigh_real, unvec_hermitian, vec_hermitian, CMat, RMat, RVec};
use crate::sampling::{MeasurementRecord, SamplingOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Bound on the final feasibility residual and on the fixed-point
    /// residual for a run to count as converged.
    pub tolerance: f64,
    /// Step parameter: the proximal weight `γ` of the splitting methods
    /// (relative to the norm of the least-squares solution) or the primal
    /// step ratio of the Dantzig solver. `None` picks the default.
    pub step: Option<f64>,
    /// Relative eigenvalue threshold used when reporting the rank.
    pub rank_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 5000, tolerance: 1e-7, step: None, rank_tol: 1e-8 }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || !(self.tolerance > 0.0) || !(self.rank_tol > 0.0) {
            return Err(invalid("solver iterations and tolerances must be positive"));
        }
        if let Some(s) = self.step {
            if !(s > 0.0) || !s.is_finite() {
                return Err(invalid("solver step must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub sigma_star: CMat,
    pub trace_norm: f64,
    pub iterations: usize,
    /// Feasibility residual of the program that was solved; for the
    /// equality program `‖𝒜σ* − b̂‖₂` with `b̂` the projection of `b` onto
    /// the range of `𝒜`.
    pub final_residual: f64,
    /// `‖𝒜σ* − b‖₂` against the raw data.
    pub data_residual: f64,
    pub converged: bool,
    /// Numerical rank of `σ*` at the configured tolerance.
    pub rank: usize,
    /// Subgradient witness `G ∈ ∂‖σ*‖₁ ∩ range 𝒜†` recovered from the
    /// splitting iterates (equality program only).
    pub dual_witness: Option<CMat>,
    /// Objective value per iteration (Lasso only).
    pub objective_history: Vec<f64>,
}

/// Thin factorization of the data map restricted to its row space.
#[derive(Debug, Clone)]
struct DataFit {
    /// Orthonormal basis (columns) of the row space of `𝒜`.
    w: RMat,
    s: Vec<f64>,
    /// `Uᵀb`.
    beta: RVec,
    /// `S⁻¹Uᵀb`, the row-space coordinates of the least-squares solution.
    c: RVec,
}

/// Singular values below this fraction of the largest are dropped.
const FIT_REL_TOL: f64 = 1e-6;
/// The Gram route is used only when every kept singular value is at
/// least this fraction of the largest; its singular vectors lose
/// `ε/ratio²` of accuracy.
const GRAM_MIN_RATIO: f64 = 1e-3;

impl DataFit {
    fn new(a: &RMat, b: &RVec) -> Self {
        let (w, s, beta) = Self::gram(a, b).unwrap_or_else(|| Self::jacobi(a, b));
        let c = RVec::from_fn(s.len(), |j, _| beta[j] / s[j]);
        Self { w, s, beta, c }
    }

    /// Eigendecomposition of the Gram matrix on the smaller side. The dense
    /// SVD is avoided: it is unreliable on maps with repeated rows.
    fn gram(a: &RMat, b: &RVec) -> Option<(RMat, Vec<f64>, RVec)> {
        let (rows, cols) = a.shape();
        let wide = rows <= cols;
        let (vals, vecs) = eigh_real(&if wide { a * a.transpose() } else { a.transpose() * a });
        let lmax = vals.first().copied().unwrap_or(0.0).max(0.0);
        let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > FIT_REL_TOL * FIT_REL_TOL * lmax).collect();
        if keep.last().is_some_and(|&k| vals[k] < GRAM_MIN_RATIO * GRAM_MIN_RATIO * lmax) {
            return None;
        }
        let s: Vec<f64> = keep.iter().map(|&k| libm::sqrt(vals[k])).collect();
        let mut w = RMat::zeros(cols, keep.len());
        let beta = if wide {
            let at = a.transpose();
            for (j, &k) in keep.iter().enumerate() {
                w.set_column(j, &(&at * vecs.column(k) / s[j]));
            }
            RVec::from_fn(keep.len(), |j, _| vecs.column(keep[j]).dot(b))
        } else {
            for (j, &k) in keep.iter().enumerate() {
                w.set_column(j, &vecs.column(k));
            }
            let atb = a.transpose() * b;
            RVec::from_fn(keep.len(), |j, _| w.column(j).dot(&atb) / s[j])
        };
        Some((w, s, beta))
    }

    fn jacobi(a: &RMat, b: &RVec) -> (RMat, Vec<f64>, RVec) {
        let (u, sv, wv) = linalg::thin_svd_real(a);
        let smax = sv.first().copied().unwrap_or(0.0);
        let k = sv.iter().filter(|&&x| x > FIT_REL_TOL * smax).count();
        let w = wv.columns(0, k).into_owned();
        let beta = u.columns(0, k).transpose() * b;
        (w, sv[..k].to_vec(), beta)
    }

    fn coords(&self, x: &RVec) -> RVec {
        self.w.transpose() * x
    }

    /// `‖𝒜x − b̂‖₂`.
    fn residual(&self, x: &RVec) -> f64 {
        let xi = self.coords(x);
        libm::sqrt((0..self.s.len()).map(|j| { let e = self.s[j] * xi[j] - self.beta[j]; e * e }).sum())
    }

    /// Projection onto `{x : 𝒜x = b̂}`.
    fn project_affine(&self, y: &RVec) -> RVec {
        let xi = self.coords(y);
        y - &self.w * (xi - &self.c)
    }

    /// Projection onto `{x : ‖S Wᵀx − β‖ ≤ δ}`.
    fn project_tube(&self, y: &RVec, delta: f64) -> RVec {
        let xi = self.coords(y);
        let r: Vec<f64> = (0..self.s.len()).map(|j| self.s[j] * xi[j] - self.beta[j]).collect();
        let norm = libm::sqrt(r.iter().map(|v| v * v).sum());
        if norm <= delta {
            return y.clone();
        }
        let f = |lam: f64| libm::sqrt((0..r.len()).map(|j| { let e = r[j] / (1.0 + lam * self.s[j] * self.s[j]); e * e }).sum());
        let smin = self.s.iter().copied().fold(f64::INFINITY, f64::min);
        let (mut lo, mut hi) = (0.0, (norm / delta - 1.0) / (smin * smin));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > delta {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let lam = hi;
        let target = RVec::from_fn(r.len(), |j, _| (xi[j] + lam * self.s[j] * self.beta[j]) / (1.0 + lam * self.s[j] * self.s[j]));
        y + &self.w * (target - xi)
    }

    /// Projection onto `{x : ‖Wᵀx − c‖ ≤ δ}`, the tube measured after `𝒫_𝓡`.
    fn project_range_ball(&self, y: &RVec, delta: f64) -> RVec {
        let xi = self.coords(y);
        let d = &xi - &self.c;
        let norm = d.norm();
        if norm <= delta {
            return y.clone();
        }
        let target = &self.c + d * (delta / norm);
        y + &self.w * (target - xi)
    }

    fn range_residual(&self, x: &RVec) -> f64 {
        (self.coords(x) - &self.c).norm()
    }

    /// Relative gap between `‖y‖₁` at the feasible point `y ≈ x` and the
    /// dual value of the witness `g` projected onto the row space and
    /// rescaled into the unit operator-norm ball.
    fn duality_gap(&self, y: &RVec, g: &RVec, n: usize) -> f64 {
        let gw = self.coords(g);
        let gr = &self.w * &gw;
        let scale = linalg::operator_norm_hermitian(&unvec_hermitian(gr.as_slice(), n)).max(1.0);
        let dual = gw.dot(&self.c) / scale;
        let primal = linalg::trace_norm_hermitian(&unvec_hermitian(y.as_slice(), n));
        (primal - dual).abs() / primal.max(1.0)
    }

    fn least_squares_norm(&self) -> f64 {
        self.c.norm()
    }
}

fn check_inputs(op: &SamplingOperator, b: &MeasurementRecord, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    check_dim(op.rows(), b.len())
}

/// Eigenvalue soft-thresholding, the proximal map of `t‖·‖₁`.
fn shrink(x: &RVec, n: usize, t: f64) -> RVec {
    let e = eigh(&unvec_hermitian(x.as_slice(), n));
    vec_hermitian(&e.map(|l| if l > t { l - t } else if l < -t { l + t } else { 0.0 }))
}

/// Eigenvalue clamp to `[−t, t]`, the projection onto the operator-norm ball.
fn clamp(x: &RVec, n: usize, t: f64) -> RVec {
    let e = eigh(&unvec_hermitian(x.as_slice(), n));
    vec_hermitian(&e.map(|l| l.clamp(-t, t)))
}

fn finish(op: &SamplingOperator, b: &MeasurementRecord, x: &RVec, iterations: usize, final_residual: f64, converged: bool, cfg: &SolverConfig) -> ReconstructionResult {
    let n = op.dim();
    let sigma = unvec_hermitian(x.as_slice(), n);
    let e = eigh(&sigma);
    let cut = cfg.rank_tol * e.max_abs();
    let rank = e.values.iter().filter(|v| v.abs() > cut && **v != 0.0).count();
    let trace_norm = e.values.iter().map(|v| v.abs()).sum();
    let data_residual = (op.a_matrix() * x - &b.values).norm();
    ReconstructionResult {
        sigma_star: sigma,
        trace_norm,
        iterations,
        final_residual,
        data_residual,
        converged,
        rank,
        dual_witness: None,
        objective_history: Vec::new(),
    }
}

/// Default proximal weight of the splitting methods, relative to the norm
/// of the least-squares solution.
pub const DEFAULT_SPLITTING_STEP: f64 = 0.3;

/// Over-relaxation of the splitting update.
const RELAXATION: f64 = 1.7;
const DUALITY_GAP_TOL: f64 = 1e-6;
const GAP_CHECK_EVERY: usize = 10;

#[derive(Clone, Copy)]
enum Constraint {
    Affine,
    Tube(f64),
    RangeBall(f64),
}

fn douglas_rachford(op: &SamplingOperator, b: &MeasurementRecord, cfg: &SolverConfig, constraint: Constraint) -> Result<ReconstructionResult> {
    check_inputs(op, b, cfg)?;
    let n = op.dim();
    let fit = DataFit::new(op.a_matrix(), &b.values);
    let project = |v: &RVec| match constraint {
        Constraint::Affine => fit.project_affine(v),
        Constraint::Tube(d) => fit.project_tube(v, d),
        Constraint::RangeBall(d) => fit.project_range_ball(v, d),
    };
    let violation = |v: &RVec| match constraint {
        Constraint::Affine => fit.residual(v),
        Constraint::Tube(d) => (fit.residual(v) - d).max(0.0),
        Constraint::RangeBall(d) => (fit.range_residual(v) - d).max(0.0),
    };
    let scale = fit.least_squares_norm();
    let d = n * n;
    if scale == 0.0 || fit.s.is_empty() {
        let x = RVec::zeros(d);
        let res = violation(&x);
        let mut out = finish(op, b, &x, 0, res, res <= cfg.tolerance, cfg);
        out.dual_witness = Some(CMat::zeros(n, n));
        return Ok(out);
    }
    let gamma = cfg.step.unwrap_or(DEFAULT_SPLITTING_STEP) * scale;
    let mut z = RVec::zeros(d);
    let mut x = z.clone();
    let mut iterations = 0;
    let mut converged = false;
    let mut res = f64::INFINITY;
    while iterations < cfg.max_iterations {
        iterations += 1;
        x = shrink(&z, n, gamma);
        let reflected = &x * 2.0 - &z;
        let y = project(&reflected);
        let step = (&x - &y).norm();
        z += (&y - &x) * RELAXATION;
        if step <= cfg.tolerance || iterations % GAP_CHECK_EVERY == 0 {
            res = violation(&x);
            if res <= cfg.tolerance && step <= libm::sqrt(cfg.tolerance) {
                let ok = match constraint {
                    Constraint::Affine => fit.duality_gap(&y, &((&z - &x) / gamma), n) <= DUALITY_GAP_TOL,
                    _ => step <= cfg.tolerance,
                };
                if ok {
                    converged = true;
                    break;
                }
            }
        }
    }
    if !converged {
        res = violation(&x);
    }
    let mut out = finish(op, b, &x, iterations, res, converged, cfg);
    out.dual_witness = Some(unvec_hermitian(((&z - &x) / gamma).as_slice(), n));
    Ok(out)
}

/// `min ‖σ‖₁` subject to `𝒜σ = b̂`.
///
/// Douglas–Rachford splitting between the trace norm (eigenvalue
/// shrinkage) and the affine data set. Returns the shrinkage iterate, which
/// is exactly Hermitian and low rank; convergence requires both
/// `‖x − P_C(2x − z)‖ ≤ tol` and `‖𝒜x − b̂‖ ≤ tol`.
pub fn solve_equality(op: &SamplingOperator, b: &MeasurementRecord, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    douglas_rachford(op, b, cfg, Constraint::Affine)
}

/// How the tube radius of [`solve_tube_with`] is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TubeNorm {
    /// `‖𝒜σ − b̂‖₂ ≤ δ` on the data vector.
    Data,
    /// `‖𝒫_𝓡(σ − ρ̃)‖₂ ≤ δ` on matrices, `ρ̃` the least-squares preimage of `b`.
    Range,
}

/// `min ‖σ‖₁` subject to `‖𝒜σ − b̂‖₂ ≤ δ`; `δ = 0` is [`solve_equality`].
pub fn solve_tube(op: &SamplingOperator, b: &MeasurementRecord, delta: f64, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    solve_tube_with(op, b, delta, TubeNorm::Data, cfg)
}

pub fn solve_tube_with(op: &SamplingOperator, b: &MeasurementRecord, delta: f64, norm: TubeNorm, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(invalid("tube radius must be finite and non-negative"));
    }
    if delta == 0.0 {
        return solve_equality(op, b, cfg);
    }
    let constraint = match norm {
        TubeNorm::Data => Constraint::Tube(delta),
        TubeNorm::Range => Constraint::RangeBall(delta),
    };
    douglas_rachford(op, b, cfg, constraint)
}

fn lipschitz(op: &SamplingOperator) -> f64 {
    let d = op.dim() * op.dim();
    linalg::power_iteration_norm(|x| op.apply_r_vec(x), d, 200, 1e-8)
}

/// Safety margin on the power-iteration estimate of `‖𝒜†𝒜‖`.
const LIPSCHITZ_MARGIN: f64 = 1.01;

/// Ratio of primal to dual step in the Dantzig solver.
pub const DEFAULT_DANTZIG_STEP_RATIO: f64 = 0.1;

/// `min ‖σ‖₁` subject to `‖𝒜†(b − 𝒜σ)‖ ≤ λ`.
///
/// Primal–dual (Chambolle–Pock) iteration with `K = 𝒜†𝒜`; the dual step is
/// the Moreau complement of the projection onto the operator-norm ball of
/// radius `λ` around `𝒜†b`. The reported residual is the constraint excess.
pub fn solve_dantzig(op: &SamplingOperator, b: &MeasurementRecord, lambda: f64, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    check_inputs(op, b, cfg)?;
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let n = op.dim();
    let d = n * n;
    let center = op.a_matrix().transpose() * &b.values;
    let l = lipschitz(op) * LIPSCHITZ_MARGIN;
    let excess = |x: &RVec| {
        let r = &center - op.apply_r_vec(x);
        (linalg::operator_norm_hermitian(&unvec_hermitian(r.as_slice(), n)) - lambda).max(0.0)
    };
    if l == 0.0 {
        let x = RVec::zeros(d);
        let e = excess(&x);
        return Ok(finish(op, b, &x, 0, e, e <= cfg.tolerance, cfg));
    }
    let ratio = cfg.step.unwrap_or(DEFAULT_DANTZIG_STEP_RATIO);
    let tau = ratio * 0.99 / l;
    let sig = 0.99 / (ratio * l);
    let mut x = RVec::zeros(d);
    let mut xbar = x.clone();
    let mut y = RVec::zeros(d);
    let mut iterations = 0;
    let mut converged = false;
    let mut res = f64::INFINITY;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let u = &y + op.apply_r_vec(&xbar) * sig;
        let shifted = &u / sig - &center;
        let proj = clamp(&shifted, n, lambda) + &center;
        y = u - proj * sig;
        let xn = shrink(&(&x - op.apply_r_vec(&y) * tau), n, tau);
        let step = (&xn - &x).norm();
        xbar = &xn * 2.0 - &x;
        x = xn;
        if step <= cfg.tolerance {
            res = excess(&x);
            if res <= cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        res = excess(&x);
    }
    Ok(finish(op, b, &x, iterations, res, converged, cfg))
}

/// `min ½‖𝒜σ − b‖₂² + μ‖σ‖₁` by proximal gradient with step `1/L`.
///
/// `L` is the power-iteration estimate of `‖𝒜†𝒜‖` with a 1% margin. The
/// reported residual is the gradient-mapping norm `L‖x_{k+1} − x_k‖`.
pub fn solve_lasso(op: &SamplingOperator, b: &MeasurementRecord, mu: f64, cfg: &SolverConfig) -> Result<ReconstructionResult> {
    check_inputs(op, b, cfg)?;
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    let n = op.dim();
    let d = n * n;
    let a = op.a_matrix();
    let atb = a.transpose() * &b.values;
    let l = lipschitz(op) * LIPSCHITZ_MARGIN;
    let objective = |x: &RVec| {
        let r = a * x - &b.values;
        0.5 * r.norm_squared() + mu * linalg::trace_norm_hermitian(&unvec_hermitian(x.as_slice(), n))
    };
    let mut x = RVec::zeros(d);
    let mut history = alloc::vec![objective(&x)];
    if l == 0.0 {
        return Ok(finish(op, b, &x, 0, 0.0, true, cfg));
    }
    let mut iterations = 0;
    let mut converged = false;
    let mut res = f64::INFINITY;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let grad = op.apply_r_vec(&x) - &atb;
        let xn = shrink(&(&x - grad / l), n, mu / l);
        res = (&xn - &x).norm() * l;
        x = xn;
        history.push(objective(&x));
        if res <= cfg.tolerance {
            converged = true;
            break;
        }
    }
    let mut out = finish(op, b, &x, iterations, res, converged, cfg);
    out.objective_history = history;
    Ok(out)
}
