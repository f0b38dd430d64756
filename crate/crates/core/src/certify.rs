//! A-posteriori certification of a reconstruction.
//!
//! The candidate dual certificate for a rank-`q` truncation `σ_q` with
//! tangent space `T′` is `Y = 𝓡𝒫_{T′}(𝒫_{T′}𝓡𝒫_{T′})⁺ sgn σ_q`. Its
//! deviation `c₁ = ‖𝒫_{T′}Y − sgn σ_q‖₂` on `T′`, its size
//! `c₂ = ‖𝒫_{T′}^⊥Y‖` off `T′` and the conditioning
//! `c₃ = ‖𝒫_{T′}𝓡𝒫_{T′} − 𝒫_{T′}‖` decide whether the convex program has
//! `σ_q` as its unique solution.

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{self, eigh_real, unvec_hermitian, vec_hermitian, CMat, RVec};
use crate::reconstruct::ReconstructionResult;
use crate::sampling::{projected_norms_from, restrict_to_tangent, SamplingOperator};
use crate::states::{truncate_to_rank, SpectralTruncation, DEFAULT_RANK_TOL};

/// Eigenvalues of `𝒫_{T′}𝓡𝒫_{T′}` below this fraction of the largest are
/// treated as zero in the pseudo-inverse.
pub const PINV_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionVariant {
    /// `(1/n³)(1 − c₂)√((1 − c₃)/m) − c₁ > 0`, `c₂ < 1`, `c₃ < 1`.
    Eq6,
    /// As `Eq6` with `1/n` in place of `1/n³`; normalized frames only.
    Eq10,
    /// `c₁ = 0` (to tolerance) and `c₂ < 1`; no condition on `c₃` beyond
    /// `𝓡` being injective on `T′`.
    Relaxed,
    /// `c₂ ≤ 1/2` and `𝒫_{T′}𝒫_𝓡𝒫_{T′} ≥ (p/2)𝒫_{T′}` with `p = m/n²`.
    Noisy,
}

impl ConditionVariant {
    pub fn name(&self) -> &'static str {
        match self {
            ConditionVariant::Eq6 => "eq6",
            ConditionVariant::Eq10 => "eq10",
            ConditionVariant::Relaxed => "relaxed",
            ConditionVariant::Noisy => "noisy",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "eq6" => Some(ConditionVariant::Eq6),
            "eq10" => Some(ConditionVariant::Eq10),
            "relaxed" | "relaxed_a_b" => Some(ConditionVariant::Relaxed),
            "noisy" => Some(ConditionVariant::Noisy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyTolerances {
    /// Largest `c₁` accepted as zero by the relaxed conditions.
    pub c1_zero_tol: f64,
    /// Accepted deviation of `‖σ*‖₁` from one.
    pub trace_tol: f64,
    /// Largest truncation error `‖σ* − σ*_q‖₂` for which the noiseless
    /// conditions speak about `σ*`; a certificate for `σ*_q` says nothing
    /// about `σ*` otherwise.
    pub truncation_tol: f64,
    /// Smallest lower spectral bound of `𝒫_{T′}𝒫_𝓡𝒫_{T′}` on `T′` accepted
    /// as injectivity of `𝓡` on `T′` by the relaxed conditions.
    pub injectivity_tol: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        Self { c1_zero_tol: 1e-6, trace_tol: 1e-6, truncation_tol: 1e-6, injectivity_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub q: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub variant: ConditionVariant,
    pub valid: bool,
    pub trace_norm_of_solution: f64,
    /// `|‖σ*‖₁ − 1| ≤ trace_tol`.
    pub trace_norm_is_one: bool,
    /// Smallest eigenvalue of `𝒫_{T′}𝒫_𝓡𝒫_{T′}` on `T′`.
    pub spectral_lower: f64,
    /// Frobenius norm of the part of `σ*` discarded by the truncation.
    pub truncation_error: f64,
    /// `‖𝓡‖`, reported as a diagnostic.
    pub r_operator_norm: f64,
    /// Set when `m ≥ n²/2`, outside the regime the conditions are stated for.
    pub many_measurements_warning: bool,
    pub robustness_bound: Option<f64>,
}

impl CertificateReport {
    /// Valid and `‖σ*‖₁ = 1`: the reconstruction is the unique solution and
    /// equals the state.
    pub fn certifies_state(&self) -> bool {
        self.valid && self.trace_norm_is_one
    }
}

/// A certificate together with the quantities it was evaluated from.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub y: CMat,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub spectral_lower: f64,
}

/// `Y = 𝓡𝒫_{T′}(𝒫_{T′}𝓡𝒫_{T′})⁺ sgn σ_q`.
pub fn build_certificate(op: &SamplingOperator, sigma_q: &SpectralTruncation) -> Result<CMat> {
    Ok(certificate(op, sigma_q)?.y)
}

/// Builds `Y` and evaluates `c₁, c₂, c₃` and the lower spectral bound.
pub fn certificate(op: &SamplingOperator, sigma_q: &SpectralTruncation) -> Result<Certificate> {
    check_dim(op.dim(), sigma_q.dim())?;
    let n = op.dim();
    let tangent = sigma_q.tangent()?;
    if tangent.rank() == 0 {
        return Err(invalid("certificate needs a nonzero truncation"));
    }
    let restriction = restrict_to_tangent(op, &tangent)?;
    let (vals, vecs) = eigh_real(&restriction.gram);
    let lmax = vals.first().copied().unwrap_or(0.0);
    if !(lmax > 1e-14) {
        return Err(Error::CertificateUnbuildable);
    }
    let sgn = vec_hermitian(&sigma_q.sign());
    let coords = restriction.basis.transpose() * &sgn;
    // pseudo-inverse of the restricted operator applied to the sign matrix
    let mut u = RVec::zeros(coords.len());
    for (k, &l) in vals.iter().enumerate() {
        if l > PINV_REL_TOL * lmax {
            let v = vecs.column(k);
            u += v * (v.dot(&coords) / l);
        }
    }
    let y_vec = op.a_matrix().transpose() * (&restriction.a_basis * &u);
    let y = unvec_hermitian(y_vec.as_slice(), n);
    let on_t = &restriction.basis * (restriction.basis.transpose() * &y_vec);
    let c1 = (&on_t - &sgn).norm();
    let c2 = linalg::operator_norm_hermitian(&tangent.complement(&y));
    let norms = projected_norms_from(op, &restriction);
    Ok(Certificate { y, c1, c2, c3: norms.c3, spectral_lower: norms.lower_spectral })
}

fn condition_holds(variant: ConditionVariant, cert: &Certificate, epsilon: f64, op: &SamplingOperator, tol: &CertifyTolerances) -> bool {
    let n = op.dim() as f64;
    let m = op.settings() as f64;
    let exact = epsilon <= tol.truncation_tol;
    let theorem = |power: i32| exact && cert.c2 < 1.0 && cert.c3 < 1.0 && (1.0 - cert.c2) * libm::sqrt((1.0 - cert.c3) / m) / libm::pow(n, power as f64) - cert.c1 > 0.0;
    match variant {
        ConditionVariant::Eq6 => theorem(3),
        ConditionVariant::Eq10 => op.normalized() && theorem(1),
        // without injectivity a kernel direction inside T′ leaves the trace norm
        // unchanged to first order
        ConditionVariant::Relaxed => exact && cert.c1 <= tol.c1_zero_tol && cert.c2 < 1.0 && cert.spectral_lower > tol.injectivity_tol,
        ConditionVariant::Noisy => cert.c2 <= 0.5 && cert.spectral_lower >= 0.5 * sampling_fraction(op),
    }
}

/// `p = m/n²`.
pub fn sampling_fraction(op: &SamplingOperator) -> f64 {
    op.settings() as f64 / (op.dim() * op.dim()) as f64
}

/// Truncates `σ*` to rank `q`, builds the certificate and checks `variant`.
///
/// The noiseless variants also require the truncation to be exact up to
/// `truncation_tol`; the noisy variant accounts for it in the bound.
pub fn evaluate_certificate(op: &SamplingOperator, result: &ReconstructionResult, q: usize, variant: ConditionVariant, tol: &CertifyTolerances) -> Result<CertificateReport> {
    if q < 1 {
        return Err(invalid("q must be at least 1"));
    }
    let truncation = truncate_to_rank(&result.sigma_star, q)?;
    evaluate_truncation(op, result.trace_norm, &truncation, variant, tol)
}

pub fn evaluate_truncation(op: &SamplingOperator, trace_norm: f64, truncation: &SpectralTruncation, variant: ConditionVariant, tol: &CertifyTolerances) -> Result<CertificateReport> {
    let cert = certificate(op, truncation)?;
    let n = op.dim();
    Ok(CertificateReport {
        q: truncation.kept_rank,
        c1: cert.c1,
        c2: cert.c2,
        c3: cert.c3,
        variant,
        valid: condition_holds(variant, &cert, truncation.frobenius_error, op, tol),
        trace_norm_of_solution: trace_norm,
        trace_norm_is_one: (trace_norm - 1.0).abs() <= tol.trace_tol,
        spectral_lower: cert.spectral_lower,
        truncation_error: truncation.frobenius_error,
        r_operator_norm: op.r_operator_norm(),
        many_measurements_warning: 2 * op.settings() >= n * n,
        robustness_bound: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Certified(CertificateReport),
    /// No `q ≤ q_max` gave a valid certificate: more measurements are needed.
    Exhausted { tried: usize },
}

impl SweepOutcome {
    pub fn report(&self) -> Option<&CertificateReport> {
        match self {
            SweepOutcome::Certified(r) => Some(r),
            SweepOutcome::Exhausted { .. } => None,
        }
    }
}

/// Tries `q = 1, 2, …, q_max` and returns the first valid report.
///
/// Truncations whose certificate cannot be built count as invalid. The
/// sweep stops at the numerical rank of `σ*`.
pub fn certify_sweep(op: &SamplingOperator, result: &ReconstructionResult, q_max: usize, variant: ConditionVariant, tol: &CertifyTolerances) -> SweepOutcome {
    let q_max = q_max.min(result.sigma_star.nrows());
    for q in 1..=q_max {
        let Ok(truncation) = truncate_to_rank(&result.sigma_star, q) else { continue };
        // ranks past the numerical rank of σ* only add signs of rounding noise
        let largest = truncation.kept_values.first().map_or(0.0, |l| l.abs());
        if truncation.kept_values.last().is_some_and(|l| l.abs() <= DEFAULT_RANK_TOL * largest) {
            return SweepOutcome::Exhausted { tried: q - 1 };
        }
        // the noiseless conditions fail on inexact truncations whatever Y is
        if variant != ConditionVariant::Noisy && truncation.frobenius_error > tol.truncation_tol {
            continue;
        }
        if let Ok(report) = evaluate_truncation(op, result.trace_norm, &truncation, variant, tol) {
            if report.valid {
                return SweepOutcome::Certified(report);
            }
        }
    }
    SweepOutcome::Exhausted { tried: q_max }
}

/// `(4√((2 + p)n/p) + 2)(2δ + ε)`.
pub fn robustness_bound(n: usize, p: f64, delta: f64, epsilon: f64) -> f64 {
    let n = n as f64;
    (4.0 * libm::sqrt((2.0 + p) * n / p) + 2.0) * (2.0 * delta + epsilon)
}

/// Re-checks `report` under the noisy conditions and attaches the
/// robustness bound when they hold.
///
/// `delta` bounds `‖𝒫_𝓡(ρ̃ − ρ)‖₂` for the least-squares preimage `ρ̃` of
/// the data.
pub fn noisy_validity(op: &SamplingOperator, sigma_q: &SpectralTruncation, report: &CertificateReport, delta: f64) -> Result<CertificateReport> {
    if !(delta >= 0.0) {
        return Err(invalid("delta must be non-negative"));
    }
    check_dim(op.dim(), sigma_q.dim())?;
    let p = sampling_fraction(op);
    let mut out = report.clone();
    out.variant = ConditionVariant::Noisy;
    out.valid = report.c2 <= 0.5 && report.spectral_lower >= 0.5 * p;
    out.robustness_bound = out.valid.then(|| robustness_bound(op.dim(), p, delta, sigma_q.frobenius_error));
    Ok(out)
}

/// `‖𝒫_𝓡(ρ̃ − ρ)‖₂` for additive data noise `z`: the norm of the
/// least-squares preimage of `z`.
pub fn range_noise_norm(op: &SamplingOperator, noise: &RVec) -> Result<f64> {
    check_dim(op.rows(), noise.len())?;
    let a = op.a_matrix();
    let (vals, vecs) = eigh_real(&(a * a.transpose()));
    let lmax = vals.first().copied().unwrap_or(0.0);
    let mut sq = 0.0;
    for (k, &l) in vals.iter().enumerate() {
        if l > 1e-12 * lmax {
            sq += { let d = vecs.column(k).dot(noise); d * d } / l;
        }
    }
    Ok(libm::sqrt(sq))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipProbe {
    pub trials: usize,
    /// Smallest observed `‖𝒜σ‖₂` over unit-norm rank-`r` test matrices.
    pub min_gain: f64,
    pub max_gain: f64,
}

impl RipProbe {
    /// Smallest `δ` with `(1 − δ) ≤ ‖𝒜σ‖₂ ≤ (1 + δ)` on the observed sample.
    pub fn distortion(&self) -> f64 {
        (1.0 - self.min_gain).max(self.max_gain - 1.0).max(0.0)
    }

    pub fn delta_min(&self) -> f64 {
        1.0 - self.min_gain
    }

    pub fn delta_max(&self) -> f64 {
        self.max_gain - 1.0
    }
}

/// Empirical distortion of `𝒜` on random rank-`r` Hermitian matrices with
/// Haar eigenvectors, Gaussian eigenvalues and unit Frobenius norm.
pub fn rip_probe(op: &SamplingOperator, r: usize, trials: usize, seed: u64) -> Result<RipProbe> {
    let n = op.dim();
    if trials < 1 || r < 1 || r > n {
        return Err(invalid("rip probe needs trials >= 1 and 1 <= r <= n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for _ in 0..trials {
        let u = linalg::haar_isometry(n, r, &mut rng);
        let mut l: Vec<f64> = (0..r).map(|_| linalg::gaussian(&mut rng)).collect();
        let norm = libm::sqrt(l.iter().map(|x| x * x).sum::<f64>());
        l.iter_mut().for_each(|x| *x /= norm);
        let mut sigma = CMat::zeros(n, n);
        for (k, &lk) in l.iter().enumerate() {
            let v = u.column(k);
            sigma.ger(linalg::real(lk), &v, &v.conjugate(), linalg::ONE);
        }
        let gain = op.apply_a(&linalg::hermitize(&sigma))?.norm();
        lo = lo.min(gain);
        hi = hi.max(gain);
    }
    Ok(RipProbe { trials, min_gain: lo, max_gain: hi })
}
