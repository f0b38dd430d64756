//! The sampling operator `𝓡σ = (n²/m) Σ_i (w_i, σ) w_i`, its vectorized
//! form `(𝒜σ)_i = (n/√m)(w_i, σ)`, and measurement simulation.
//!
//! For generalized frames one setting contributes several observables; `m`
//! then counts settings while the row count of `𝒜` is the total number of
//! observables.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};

use crate::error::{check_dim, invalid, Error, Result};
use crate::frames::{FrameDescriptor, HermitianObservable};
use crate::linalg::{self, eigh, eigh_real, orthonormal_basis, unvec_hermitian, vec_hermitian, CMat, RMat, RVec};
use crate::states::{DensityMatrix, TangentProjector};

/// Drop tolerance of the Gram–Schmidt pass spanning the range of `𝓡`.
pub const RANGE_DROP_TOL: f64 = 1e-10;

/// An ordered list of sampled observables with the `𝓡`/`𝒜` scalings.
#[derive(Debug, Clone)]
pub struct SamplingOperator {
    dim: usize,
    settings: usize,
    observables: Vec<HermitianObservable>,
    a: RMat,
    normalized: bool,
    frame_kind: String,
}

impl SamplingOperator {
    /// `settings` is the `m` entering the `n²/m` and `n/√m` prefactors.
    pub fn new(dim: usize, settings: usize, observables: Vec<HermitianObservable>, normalized: bool, frame_kind: impl Into<String>) -> Result<Self> {
        if settings == 0 || observables.is_empty() {
            return Err(invalid("sampling operator needs at least one observable"));
        }
        for w in &observables {
            check_dim(dim, w.dim())?;
        }
        let d = dim * dim;
        let scale = dim as f64 / libm::sqrt(settings as f64);
        let mut a = RMat::zeros(observables.len(), d);
        for (i, w) in observables.iter().enumerate() {
            let v = vec_hermitian(w.matrix()) * scale;
            a.set_row(i, &v.transpose());
        }
        Ok(Self { dim, settings, observables, a, normalized, frame_kind: frame_kind.into() })
    }

    /// One setting per observable.
    pub fn from_observables(dim: usize, observables: Vec<HermitianObservable>) -> Result<Self> {
        let m = observables.len();
        Self::new(dim, m, observables, false, "custom")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of measurement settings `m`.
    pub fn settings(&self) -> usize {
        self.settings
    }

    /// Number of rows of `𝒜` (equal to `m` for ordinary frames).
    pub fn rows(&self) -> usize {
        self.observables.len()
    }

    pub fn observables(&self) -> &[HermitianObservable] {
        &self.observables
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn frame_kind(&self) -> &str {
        &self.frame_kind
    }

    /// `𝒜` as a `rows × n²` matrix acting on [`vec_hermitian`] coordinates.
    pub fn a_matrix(&self) -> &RMat {
        &self.a
    }

    /// `n²/m`.
    pub fn r_prefactor(&self) -> f64 {
        (self.dim * self.dim) as f64 / self.settings as f64
    }

    /// `n/√m`.
    pub fn a_prefactor(&self) -> f64 {
        self.dim as f64 / libm::sqrt(self.settings as f64)
    }

    fn check_hermitian(&self, sigma: &CMat) -> Result<()> {
        check_dim(self.dim, sigma.nrows())?;
        check_dim(self.dim, sigma.ncols())?;
        if !linalg::is_hermitian(sigma, 1e-10) {
            return Err(invalid("argument is not Hermitian"));
        }
        Ok(())
    }

    pub fn apply_a(&self, sigma: &CMat) -> Result<RVec> {
        self.check_hermitian(sigma)?;
        Ok(&self.a * vec_hermitian(sigma))
    }

    pub fn apply_a_adjoint(&self, v: &RVec) -> Result<CMat> {
        check_dim(self.rows(), v.len())?;
        Ok(unvec_hermitian((self.a.transpose() * v).as_slice(), self.dim))
    }

    pub fn apply_r(&self, sigma: &CMat) -> Result<CMat> {
        let v = self.apply_a(sigma)?;
        self.apply_a_adjoint(&v)
    }

    /// `𝓡` on vectorized coordinates.
    pub fn apply_r_vec(&self, x: &RVec) -> RVec {
        self.a.transpose() * (&self.a * x)
    }

    /// Orthonormal basis (columns, vectorized) of the span of the `w_i`.
    pub fn range_basis(&self) -> RMat {
        let rows: Vec<RVec> = (0..self.rows()).map(|i| self.a.row(i).transpose()).collect();
        orthonormal_basis(&rows, self.dim * self.dim, RANGE_DROP_TOL)
    }

    /// `𝒫_𝓡 σ`, orthogonal projection onto the span of the `w_i`.
    pub fn project_range(&self, sigma: &CMat) -> Result<CMat> {
        self.check_hermitian(sigma)?;
        let q = self.range_basis();
        let v = vec_hermitian(sigma);
        let p = &q * (q.transpose() * v);
        Ok(unvec_hermitian(p.as_slice(), self.dim))
    }

    /// `‖𝓡‖` as a superoperator.
    pub fn r_operator_norm(&self) -> f64 {
        let a = &self.a;
        let gram = if a.nrows() <= a.ncols() { a * a.transpose() } else { a.transpose() * a };
        linalg::symmetric_operator_norm(&gram)
    }

    /// Operator with observables reordered by `order` (a permutation).
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.rows() {
            return Err(invalid("permutation length mismatch"));
        }
        let mut seen = alloc::vec![false; order.len()];
        for &i in order {
            if i >= order.len() || core::mem::replace(&mut seen[i], true) {
                return Err(invalid("not a permutation"));
            }
        }
        let obs = order.iter().map(|&i| self.observables[i].clone()).collect();
        Self::new(self.dim, self.settings, obs, self.normalized, self.frame_kind.clone())
    }
}

/// `m` i.i.d. settings drawn from `frame`.
pub fn draw_sampling_operator(frame: &FrameDescriptor, m: usize, seed: u64) -> Result<SamplingOperator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_sampling_operator_with(frame, m, &mut rng)
}

pub fn draw_sampling_operator_with<R: Rng + ?Sized>(frame: &FrameDescriptor, m: usize, rng: &mut R) -> Result<SamplingOperator> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let mut obs = Vec::with_capacity(m);
    for _ in 0..m {
        obs.extend(frame.sample_setting(rng)?);
    }
    SamplingOperator::new(frame.dim(), m, obs, frame.normalized(), frame.kind_name())
}

/// Noise added by [`simulate_measurement`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    Exact,
    /// I.i.d. normal noise of the given standard deviation on every entry of `b`.
    Gaussian { std: f64 },
    /// Each expectation value estimated from `count` projective measurements.
    Shots { count: u64 },
}

impl NoiseModel {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Exact => "exact",
            NoiseModel::Gaussian { .. } => "gaussian",
            NoiseModel::Shots { .. } => "shots",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { std } if !(std >= 0.0) || !std.is_finite() => Err(invalid("noise std must be finite and non-negative")),
            NoiseModel::Shots { count: 0 } => Err(invalid("shot count must be positive")),
            _ => Ok(()),
        }
    }
}

/// Data vector `b` in the `𝒜` convention.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub values: RVec,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn exact(values: RVec) -> Self {
        Self { values, noise: NoiseModel::Exact, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `b = 𝒜ρ` plus noise drawn from `noise` with the given seed.
pub fn simulate_measurement(op: &SamplingOperator, rho: &DensityMatrix, noise: NoiseModel, seed: u64) -> Result<MeasurementRecord> {
    noise.validate()?;
    let exact = op.apply_a(rho.matrix())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = match noise {
        NoiseModel::Exact => exact,
        NoiseModel::Gaussian { std } => {
            let normal = Normal::new(0.0, std).map_err(|e| invalid(e.to_string()))?;
            exact.map(|v| v + normal.sample(&mut rng))
        }
        NoiseModel::Shots { count } => {
            let scale = op.a_prefactor();
            let mut out = RVec::zeros(op.rows());
            for (i, w) in op.observables().iter().enumerate() {
                out[i] = scale * shot_estimate(w, rho, count, &mut rng)?;
            }
            out
        }
    };
    Ok(MeasurementRecord { values, noise, seed })
}

/// Mean of `count` eigenvalue outcomes of `w` drawn with Born probabilities.
fn shot_estimate<R: Rng + ?Sized>(w: &HermitianObservable, rho: &DensityMatrix, count: u64, rng: &mut R) -> Result<f64> {
    if linalg::hermitian_defect(w.matrix()) > 1e-12 * linalg::max_abs_entry(w.matrix()).max(1.0) {
        return Err(Error::InvariantViolation(format!("observable {} is not Hermitian", w.label())));
    }
    let e = eigh(w.matrix());
    let probs: Vec<f64> = (0..e.dim())
        .map(|k| {
            let v = e.vectors.column(k);
            (v.adjoint() * rho.matrix() * v)[(0, 0)].re.max(0.0)
        })
        .collect();
    let total: f64 = probs.iter().sum();
    // multinomial counts by sequential conditional binomials
    let mut remaining = count;
    let mut mass = 1.0;
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p / total;
        let c = if k + 1 == probs.len() || p >= mass {
            remaining
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q).map_err(|e| invalid(e.to_string()))?.sample(rng)
        };
        acc += c as f64 * e.values[k];
        remaining -= c;
        mass -= p;
    }
    Ok(acc / count as f64)
}

/// `𝒫_T𝓡𝒫_T` written on an orthonormal Hermitian basis of `T`.
#[derive(Debug, Clone)]
pub struct TangentRestriction {
    /// Basis of `T` as vectorized columns (`n² × dim T`).
    pub basis: RMat,
    /// `𝒜` applied to the basis.
    pub a_basis: RMat,
    /// `(𝒜V)ᵀ(𝒜V)`, the restricted operator.
    pub gram: RMat,
}

pub fn restrict_to_tangent(op: &SamplingOperator, tangent: &TangentProjector) -> Result<TangentRestriction> {
    check_dim(op.dim(), tangent.dim())?;
    let basis_mats = tangent.tangent_basis();
    let d = op.dim() * op.dim();
    let mut basis = RMat::zeros(d, basis_mats.len());
    for (j, b) in basis_mats.iter().enumerate() {
        basis.set_column(j, &vec_hermitian(b));
    }
    let a_basis = op.a_matrix() * &basis;
    let gram = a_basis.transpose() * &a_basis;
    Ok(TangentRestriction { basis, a_basis, gram })
}

/// `c₃ = ‖𝒫_T𝓡𝒫_T − 𝒫_T‖` and the smallest eigenvalue of `𝒫_T𝒫_𝓡𝒫_T` on `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedNorms {
    pub c3: f64,
    pub lower_spectral: f64,
    pub tangent_dim: usize,
}

pub fn projected_operator_norms(op: &SamplingOperator, tangent: &TangentProjector) -> Result<ProjectedNorms> {
    let r = restrict_to_tangent(op, tangent)?;
    Ok(projected_norms_from(op, &r))
}

pub(crate) fn projected_norms_from(op: &SamplingOperator, r: &TangentRestriction) -> ProjectedNorms {
    let dt = r.gram.nrows();
    let mut dev = r.gram.clone();
    for i in 0..dt {
        dev[(i, i)] -= 1.0;
    }
    let c3 = linalg::symmetric_operator_norm(&dev);
    let q = op.range_basis();
    let qv = q.transpose() * &r.basis;
    let (vals, _) = eigh_real(&(qv.transpose() * qv));
    let lower_spectral = vals.last().copied().unwrap_or(0.0).max(0.0);
    ProjectedNorms { c3, lower_spectral, tangent_dim: dt }
}
