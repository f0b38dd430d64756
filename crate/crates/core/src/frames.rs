//! Tight frames of Hermitian observables and their diagnostics.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cv::{self, displacement_matrix};
use crate::error::{check_dim, invalid, Error, Result};
use crate::homodyne::HomodyneFrame;
use crate::linalg::{self, complex_gaussian, gaussian, real, vec_hermitian, CMat, RMat};
use crate::states::{self, DensityMatrix};

/// Largest Hilbert-space dimension a tensor-product frame may reach.
pub const MAX_TENSOR_DIM: usize = 1024;

/// Correction applied to the pointwise Wigner observables.
///
/// With the prefactor `√(2π)(2/π)` and the `n^{−1}P_G^{−1/2}` scaling the
/// ensemble resolves twice the identity, see
/// [`POINTWISE_WIGNER_RAW_RESOLUTION`]; the factor `1/√2` restores a tight
/// frame.
pub const POINTWISE_WIGNER_CORRECTION: f64 = FRAC_1_SQRT_2;

/// Constant `c` in `𝔼 n²𝒫_α = c·1` for the uncorrected pointwise Wigner frame.
pub const POINTWISE_WIGNER_RAW_RESOLUTION: f64 = 2.0;

/// A Hermitian frame element with a label recording how it was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianObservable {
    matrix: CMat,
    label: String,
}

impl HermitianObservable {
    /// Accepts `matrix` if it is Hermitian within `1e-12` (relative to its
    /// largest entry) and stores its exactly Hermitian part.
    pub fn new(matrix: CMat, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("observable must be square and non-empty"));
        }
        if !linalg::is_hermitian(&matrix, 1e-12) {
            return Err(invalid("observable is not Hermitian"));
        }
        Ok(Self { matrix: linalg::hermitize(&matrix), label: label.into() })
    }

    pub(crate) fn from_hermitian(matrix: CMat, label: String) -> Self {
        Self { matrix, label }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius_norm(&self.matrix)
    }

    pub fn operator_norm(&self) -> f64 {
        linalg::operator_norm_hermitian(&self.matrix)
    }

    pub fn trace_norm(&self) -> f64 {
        linalg::trace_norm_hermitian(&self.matrix)
    }
}

/// Measure over frame elements.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameKind {
    /// Pauli strings on `qubits` qubits scaled by `n^{−1/2}`.
    Pauli { qubits: usize },
    /// Gaussian Hermitian matrices normalized to unit 2-norm.
    HaarHermitian,
    /// The `n²` Hermitian matrix units.
    MatrixEntry,
    /// Independent local draws combined by a tensor product.
    TensorProduct { local: Box<FrameDescriptor>, copies: usize },
    /// Hermitized `D̃_N(α)/(N+1)` with `α` complex Gaussian of width `sigma`.
    Displacement { cutoff: usize, sigma: f64 },
    /// Hermitized `D_N(α)` normalized to unit 2-norm, `|α|` uniform on
    /// `[0, max_radius]` and `arg α` uniform.
    UniformDisplacement { cutoff: usize, max_radius: f64 },
    /// Truncated displaced parity observables with Gaussian `α` of width `sigma`.
    PointwiseWigner { cutoff: usize, sigma: f64 },
    /// Homodyne phase settings; every draw is a block of observables.
    Homodyne(HomodyneFrame),
}

/// A frame: dimension, measure and normalization flag.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDescriptor {
    dim: usize,
    kind: FrameKind,
    normalized: bool,
}

pub fn pauli_frame(qubits: usize) -> Result<FrameDescriptor> {
    if qubits == 0 {
        return Err(invalid("Pauli frame needs at least one qubit"));
    }
    if qubits > 10 {
        return Err(Error::Resource(format!("{qubits} qubits exceed dimension {MAX_TENSOR_DIM}")));
    }
    Ok(FrameDescriptor { dim: 1 << qubits, kind: FrameKind::Pauli { qubits }, normalized: true })
}

pub fn haar_hermitian_frame(dim: usize) -> Result<FrameDescriptor> {
    if dim < 2 {
        return Err(invalid("Haar-Hermitian frame needs dimension at least 2"));
    }
    Ok(FrameDescriptor { dim, kind: FrameKind::HaarHermitian, normalized: true })
}

pub fn matrix_entry_frame(dim: usize) -> Result<FrameDescriptor> {
    if dim < 2 {
        return Err(invalid("matrix-entry frame needs dimension at least 2"));
    }
    Ok(FrameDescriptor { dim, kind: FrameKind::MatrixEntry, normalized: true })
}

pub fn tensor_product_frame(local: FrameDescriptor, copies: usize) -> Result<FrameDescriptor> {
    if copies == 0 {
        return Err(invalid("tensor product needs at least one copy"));
    }
    if local.is_generalized() {
        return Err(invalid("tensor products of generalized frames are not supported"));
    }
    if copies == 1 {
        return Ok(local);
    }
    let dim = (0..copies)
        .try_fold(1usize, |acc, _| acc.checked_mul(local.dim).filter(|&d| d <= MAX_TENSOR_DIM))
        .ok_or_else(|| Error::Resource(format!("dimension {}^{copies} exceeds {MAX_TENSOR_DIM}", local.dim)))?;
    let normalized = local.normalized;
    Ok(FrameDescriptor { dim, kind: FrameKind::TensorProduct { local: Box::new(local), copies }, normalized })
}

pub fn displacement_frame(cutoff: usize) -> Result<FrameDescriptor> {
    if cutoff < 1 {
        return Err(invalid("displacement frame needs cutoff at least 1"));
    }
    let sigma = cv::displacement_sigma(cutoff);
    Ok(FrameDescriptor { dim: cutoff + 1, kind: FrameKind::Displacement { cutoff, sigma }, normalized: false })
}

pub fn uniform_displacement_frame(cutoff: usize, max_radius: f64) -> Result<FrameDescriptor> {
    if cutoff < 1 || !(max_radius > 0.0) || !max_radius.is_finite() {
        return Err(invalid("uniform displacement frame needs cutoff >= 1 and a positive radius"));
    }
    Ok(FrameDescriptor { dim: cutoff + 1, kind: FrameKind::UniformDisplacement { cutoff, max_radius }, normalized: true })
}

pub fn pointwise_wigner_frame(cutoff: usize) -> Result<FrameDescriptor> {
    if cutoff < 1 {
        return Err(invalid("pointwise Wigner frame needs cutoff at least 1"));
    }
    let sigma = cv::pointwise_wigner_sigma(cutoff);
    Ok(FrameDescriptor { dim: cutoff + 1, kind: FrameKind::PointwiseWigner { cutoff, sigma }, normalized: false })
}

pub fn homodyne_frame_descriptor(frame: HomodyneFrame) -> FrameDescriptor {
    FrameDescriptor { dim: frame.dim(), kind: FrameKind::Homodyne(frame), normalized: false }
}

const PAULI_CHARS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Pauli string `⊗ σ_{c}` (first character acts on the most significant
/// qubit), without the `n^{−1/2}` scale.
pub fn pauli_string(label: &str) -> Result<CMat> {
    let codes: Vec<usize> = label
        .chars()
        .map(|c| PAULI_CHARS.iter().position(|&p| p == c).ok_or_else(|| invalid(format!("bad Pauli letter {c:?}"))))
        .collect::<Result<_>>()?;
    let k = codes.len();
    if k == 0 || k > 10 {
        return Err(invalid("Pauli string length must be in 1..=10"));
    }
    let n = 1usize << k;
    let mut flip = 0usize;
    for (q, &c) in codes.iter().enumerate() {
        if c == 1 || c == 2 {
            flip |= 1 << (k - 1 - q);
        }
    }
    let mut m = CMat::zeros(n, n);
    for r in 0..n {
        let mut v = linalg::ONE;
        for (q, &c) in codes.iter().enumerate() {
            let bit = (r >> (k - 1 - q)) & 1;
            v *= match (c, bit) {
                (2, 0) => Complex64::new(0.0, -1.0),
                (2, _) => Complex64::new(0.0, 1.0),
                (3, 1) => real(-1.0),
                _ => linalg::ONE,
            };
        }
        m[(r, r ^ flip)] = v;
    }
    Ok(m)
}

fn pauli_label(index: usize, qubits: usize) -> String {
    (0..qubits).map(|q| PAULI_CHARS[(index >> (2 * (qubits - 1 - q))) & 3]).collect()
}

fn pauli_element(index: usize, qubits: usize) -> HermitianObservable {
    let label = pauli_label(index, qubits);
    let scale = 1.0 / libm::sqrt((1usize << qubits) as f64);
    let m = pauli_string(&label).expect("generated labels are valid") * real(scale);
    HermitianObservable::from_hermitian(m, label)
}

fn matrix_entry_element(index: usize, n: usize) -> HermitianObservable {
    let mut m = CMat::zeros(n, n);
    if index < n {
        m[(index, index)] = linalg::ONE;
        return HermitianObservable::from_hermitian(m, format!("E({index},{index})"));
    }
    let pair = (index - n) / 2;
    // enumerate i < j row by row
    let (mut i, mut rest) = (0, pair);
    while rest >= n - 1 - i {
        rest -= n - 1 - i;
        i += 1;
    }
    let j = i + 1 + rest;
    let s = FRAC_1_SQRT_2;
    if (index - n) % 2 == 0 {
        m[(i, j)] = real(s);
        m[(j, i)] = real(s);
        HermitianObservable::from_hermitian(m, format!("S({i},{j})"))
    } else {
        m[(i, j)] = Complex64::new(0.0, s);
        m[(j, i)] = Complex64::new(0.0, -s);
        HermitianObservable::from_hermitian(m, format!("A({i},{j})"))
    }
}

/// `(D + D†)/√2` or `i(D − D†)/√2`.
fn hermitian_part(d: &CMat, imaginary: bool) -> CMat {
    let a = d.adjoint();
    let out = if imaginary { (d - a) * Complex64::new(0.0, FRAC_1_SQRT_2) } else { (d + a) * real(FRAC_1_SQRT_2) };
    linalg::hermitize(&out)
}

fn complex_label(prefix: &str, alpha: Complex64, imaginary: bool) -> String {
    format!("{prefix}({:+.6e}{:+.6e}i):{}", alpha.re, alpha.im, if imaginary { "im" } else { "re" })
}

impl FrameDescriptor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FrameKind {
        &self.kind
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// True for generalized frames, whose draws are blocks of observables.
    pub fn is_generalized(&self) -> bool {
        matches!(self.kind, FrameKind::Homodyne(_))
    }

    /// Short identifier used in data files.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            FrameKind::Pauli { .. } => "pauli",
            FrameKind::HaarHermitian => "haar",
            FrameKind::MatrixEntry => "matrix-entry",
            FrameKind::TensorProduct { .. } => "tensor",
            FrameKind::Displacement { .. } => "displacement",
            FrameKind::UniformDisplacement { .. } => "uniform-displacement",
            FrameKind::PointwiseWigner { .. } => "wigner",
            FrameKind::Homodyne(_) => "homodyne",
        }
    }

    /// Gaussian width of the Displacement and PointwiseWigner measures.
    pub fn sigma(&self) -> Option<f64> {
        match self.kind {
            FrameKind::Displacement { sigma, .. } | FrameKind::PointwiseWigner { sigma, .. } => Some(sigma),
            _ => None,
        }
    }

    /// One draw from the frame's measure.
    ///
    /// Generalized frames have no single-observable draws and are rejected;
    /// use [`FrameDescriptor::sample_setting`].
    pub fn sample_observable<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<HermitianObservable> {
        let n = self.dim;
        Ok(match &self.kind {
            FrameKind::Pauli { qubits } => pauli_element(rng.random_range(0..1usize << (2 * qubits)), *qubits),
            FrameKind::HaarHermitian => {
                let mut g = CMat::zeros(n, n);
                for i in 0..n {
                    g[(i, i)] = real(gaussian(rng));
                    for j in (i + 1)..n {
                        let z = complex_gaussian(rng);
                        g[(i, j)] = z;
                        g[(j, i)] = z.conj();
                    }
                }
                let norm = linalg::frobenius_norm(&g);
                HermitianObservable::from_hermitian(g / real(norm), "haar".to_string())
            }
            FrameKind::MatrixEntry => matrix_entry_element(rng.random_range(0..n * n), n),
            FrameKind::TensorProduct { local, copies } => {
                let mut m = CMat::from_element(1, 1, linalg::ONE);
                let mut labels = Vec::with_capacity(*copies);
                for _ in 0..*copies {
                    let w = local.sample_observable(rng)?;
                    m = linalg::kron(&m, w.matrix());
                    labels.push(w.label);
                }
                let sep = if matches!(local.kind, FrameKind::Pauli { .. }) { "" } else { "⊗" };
                HermitianObservable::from_hermitian(linalg::hermitize(&m), labels.join(sep))
            }
            FrameKind::Displacement { cutoff, sigma } => {
                let alpha = Complex64::new(gaussian(rng), gaussian(rng)) * *sigma;
                let imaginary = rng.random::<bool>();
                let d = displacement_matrix(*cutoff, alpha) * real(cv::displacement_scale(alpha, *sigma) / n as f64);
                HermitianObservable::from_hermitian(hermitian_part(&d, imaginary), complex_label("D", alpha, imaginary))
            }
            FrameKind::UniformDisplacement { cutoff, max_radius } => loop {
                let alpha = Complex64::from_polar(rng.random::<f64>() * max_radius, rng.random::<f64>() * 2.0 * PI);
                let imaginary = rng.random::<bool>();
                let h = hermitian_part(&displacement_matrix(*cutoff, alpha), imaginary);
                let norm = linalg::frobenius_norm(&h);
                if norm > 1e-12 {
                    break HermitianObservable::from_hermitian(h / real(norm), complex_label("D", alpha, imaginary));
                }
            },
            FrameKind::PointwiseWigner { cutoff, sigma } => {
                let alpha = Complex64::new(gaussian(rng), gaussian(rng)) * *sigma;
                let m = pointwise_wigner_element(*cutoff, *sigma, alpha);
                HermitianObservable::from_hermitian(m, format!("W({:+.6e}{:+.6e}i)", alpha.re, alpha.im))
            }
            FrameKind::Homodyne(_) => return Err(invalid("generalized frame: draw settings with sample_setting")),
        })
    }

    /// One measurement setting: a single observable for ordinary frames, a
    /// block of observables for generalized ones.
    pub fn sample_setting<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<HermitianObservable>> {
        match &self.kind {
            FrameKind::Homodyne(h) => {
                let thetas = h.sample_angles(rng);
                Ok(h.setting_rows(&thetas))
            }
            _ => Ok(alloc::vec![self.sample_observable(rng)?]),
        }
    }

    /// All elements with their probabilities, for frames with a finite
    /// measure.
    pub fn finite_elements(&self) -> Option<Vec<(f64, HermitianObservable)>> {
        let n = self.dim;
        match &self.kind {
            FrameKind::Pauli { qubits } => {
                let count = 1usize << (2 * qubits);
                Some((0..count).map(|i| (1.0 / count as f64, pauli_element(i, *qubits))).collect())
            }
            FrameKind::MatrixEntry => {
                let p = 1.0 / (n * n) as f64;
                Some((0..n * n).map(|i| (p, matrix_entry_element(i, n))).collect())
            }
            FrameKind::TensorProduct { local, copies } => {
                let base = local.finite_elements()?;
                let total = base.len().checked_pow(*copies as u32)?;
                if total > 1 << 20 {
                    return None;
                }
                let sep = if matches!(local.kind, FrameKind::Pauli { .. }) { "" } else { "⊗" };
                let mut acc: Vec<(f64, CMat, String)> = alloc::vec![(1.0, CMat::from_element(1, 1, linalg::ONE), String::new())];
                for c in 0..*copies {
                    let mut next = Vec::with_capacity(acc.len() * base.len());
                    for (p, m, l) in &acc {
                        for (q, w) in &base {
                            let label = if c == 0 { w.label.clone() } else { format!("{l}{sep}{}", w.label) };
                            next.push((p * q, linalg::kron(m, w.matrix()), label));
                        }
                    }
                    acc = next;
                }
                Some(acc.into_iter().map(|(p, m, l)| (p, HermitianObservable::from_hermitian(linalg::hermitize(&m), l))).collect())
            }
            _ => None,
        }
    }

    /// Human-readable parameter listing.
    pub fn describe(&self) -> Vec<(String, String)> {
        let mut out = alloc::vec![
            ("kind".to_string(), self.kind_name().to_string()),
            ("dim".to_string(), self.dim.to_string()),
            ("normalized".to_string(), self.normalized.to_string()),
        ];
        match &self.kind {
            FrameKind::Pauli { qubits } => out.push(("qubits".into(), qubits.to_string())),
            FrameKind::TensorProduct { local, copies } => {
                out.push(("local".into(), local.kind_name().to_string()));
                out.push(("local_dim".into(), local.dim.to_string()));
                out.push(("copies".into(), copies.to_string()));
            }
            FrameKind::Displacement { cutoff, sigma } | FrameKind::PointwiseWigner { cutoff, sigma } => {
                out.push(("cutoff".into(), cutoff.to_string()));
                out.push(("sigma".into(), format!("{sigma}")));
            }
            FrameKind::UniformDisplacement { cutoff, max_radius } => {
                out.push(("cutoff".into(), cutoff.to_string()));
                out.push(("max_radius".into(), format!("{max_radius}")));
            }
            FrameKind::Homodyne(h) => {
                out.push(("cutoff".into(), h.cutoff().to_string()));
                out.push(("modes".into(), h.modes().to_string()));
                out.push(("zeta_points".into(), h.zeta_grid().len().to_string()));
                out.push(("rows_per_setting".into(), h.rows_per_setting().to_string()));
            }
            FrameKind::HaarHermitian | FrameKind::MatrixEntry => {}
        }
        out
    }
}

/// `w̃_α = c·n^{−1}P_G(α)^{−1/2} Π_N w_α Π_N` with `c` the resolution
/// correction [`POINTWISE_WIGNER_CORRECTION`].
pub fn pointwise_wigner_element(cutoff: usize, sigma: f64, alpha: Complex64) -> CMat {
    pointwise_wigner_element_raw(cutoff, sigma, alpha) * real(POINTWISE_WIGNER_CORRECTION)
}

/// `n^{−1}P_G(α)^{−1/2} Π_N w_α Π_N` without the correction.
pub fn pointwise_wigner_element_raw(cutoff: usize, sigma: f64, alpha: Complex64) -> CMat {
    let n = (cutoff + 1) as f64;
    let scale = 1.0 / (n * libm::sqrt(cv::gaussian_density(alpha, sigma)));
    cv::displaced_parity(cutoff, alpha) * real(scale)
}

/// `‖Σ_α p_α n² 𝒫_α − 1‖` over the exact finite measure.
pub fn finite_resolution_defect(frame: &FrameDescriptor) -> Option<f64> {
    let elements = frame.finite_elements()?;
    let n = frame.dim;
    let d = n * n;
    let mut acc = RMat::zeros(d, d);
    for (p, w) in &elements {
        let v = vec_hermitian(w.matrix());
        acc.ger(p * (n * n) as f64, &v, &v, 1.0);
    }
    Some(identity_defect(acc))
}

fn identity_defect(mut s: RMat) -> f64 {
    for i in 0..s.nrows() {
        s[(i, i)] -= 1.0;
    }
    linalg::symmetric_operator_norm(&s)
}

/// Monte Carlo estimate of `𝔼 n² Σ_{w ∈ setting} 𝒫_w` from `draws`
/// settings, as a matrix on the vectorized Hermitian space.
pub fn monte_carlo_resolution(frame: &FrameDescriptor, draws: usize, seed: u64) -> Result<RMat> {
    monte_carlo_resolution_by(frame.dim, draws, seed, |rng| frame.sample_setting(rng).map(|s| s.into_iter().map(|w| w.matrix).collect()))
}

/// Same as [`monte_carlo_resolution`] for an arbitrary sampler of setting
/// blocks.
pub fn monte_carlo_resolution_by(
    dim: usize,
    draws: usize,
    seed: u64,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> Result<Vec<CMat>>,
) -> Result<RMat> {
    if draws == 0 {
        return Err(invalid("need at least one draw"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dim * dim;
    const BATCH: usize = 256;
    let mut acc = RMat::zeros(d, d);
    let mut batch = RMat::zeros(d, BATCH);
    let mut filled = 0;
    let flush = |acc: &mut RMat, batch: &RMat, filled: usize| {
        let cols = batch.columns(0, filled);
        acc.gemm(1.0, &cols, &cols.transpose(), 1.0);
    };
    for _ in 0..draws {
        for w in sample(&mut rng)? {
            check_dim(dim, w.nrows())?;
            batch.set_column(filled, &vec_hermitian(&w));
            filled += 1;
            if filled == BATCH {
                flush(&mut acc, &batch, filled);
                filled = 0;
            }
        }
    }
    if filled > 0 {
        flush(&mut acc, &batch, filled);
    }
    acc *= (dim * dim) as f64 / draws as f64;
    Ok(acc)
}

/// `‖𝔼̂ n²𝒫 − 1‖` for a Monte Carlo resolution estimate.
pub fn monte_carlo_resolution_defect(frame: &FrameDescriptor, draws: usize, seed: u64) -> Result<f64> {
    Ok(identity_defect(monte_carlo_resolution(frame, draws, seed)?))
}

/// Mean of `‖w‖₂²` over `draws` observables (one per setting).
pub fn mean_squared_norm(frame: &FrameDescriptor, draws: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let setting = frame.sample_setting(&mut rng)?;
        acc += setting.iter().map(|w| linalg::hs_inner(w.matrix(), w.matrix()).re).sum::<f64>();
    }
    Ok(acc / draws as f64)
}

/// Summary of one sampled statistic against a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub max: f64,
    pub mean: f64,
    pub threshold: f64,
    /// Fraction of draws strictly above `threshold` (relative slack `1e-9`).
    pub tail_fraction: f64,
}

impl StatSummary {
    fn from_values(values: &[f64], threshold: f64) -> Self {
        let count = values.len().max(1) as f64;
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / count;
        let cut = threshold * (1.0 + 1e-9);
        let tail = values.iter().filter(|&&v| v > cut).count() as f64 / count;
        Self { max, mean: mean.min(max), threshold, tail_fraction: tail }
    }
}

/// Empirical incoherence statistics of a frame relative to a state.
#[derive(Debug, Clone, PartialEq)]
pub struct IncoherenceReport {
    pub sample_count: usize,
    pub nu: f64,
    pub rank: usize,
    pub dim: usize,
    /// `‖w‖²` against `ν/n`.
    pub operator_norm_sq: StatSummary,
    /// `‖𝒫_T w‖₂²` against `2νr/n`.
    pub tangent_weight: StatSummary,
    /// `(w, sgn ρ)²` against `νr/n²`.
    pub sign_overlap_sq: StatSummary,
    /// `‖w‖₁` against `(1 + log₂ n)²`.
    pub trace_norm: StatSummary,
}

pub fn incoherence_report(frame: &FrameDescriptor, rho: &DensityMatrix, nu: f64, samples: usize, seed: u64) -> Result<IncoherenceReport> {
    if rho.dim() != frame.dim {
        return Err(invalid(format!("state dimension {} does not match frame dimension {}", rho.dim(), frame.dim)));
    }
    if samples == 0 || !(nu > 0.0) {
        return Err(invalid("need samples >= 1 and nu > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(samples);
    while draws.len() < samples {
        for w in frame.sample_setting(&mut rng)? {
            if draws.len() < samples {
                draws.push(w);
            }
        }
    }
    incoherence_of(&draws, rho, nu)
}

/// Incoherence statistics for an explicit list of observables.
pub fn incoherence_of(observables: &[HermitianObservable], rho: &DensityMatrix, nu: f64) -> Result<IncoherenceReport> {
    let n = rho.dim();
    let tangent = states::tangent_projector(rho.matrix(), states::DEFAULT_RANK_TOL)?;
    let sign = states::sign_matrix(rho.matrix())?;
    let r = tangent.rank();
    let nf = n as f64;
    let mut op = Vec::with_capacity(observables.len());
    let mut tw = Vec::with_capacity(observables.len());
    let mut so = Vec::with_capacity(observables.len());
    let mut tn = Vec::with_capacity(observables.len());
    for w in observables {
        check_dim(n, w.dim())?;
        let e = linalg::eigh(w.matrix());
        let norm = e.max_abs();
        op.push(norm * norm);
        tn.push(e.values.iter().map(|v| v.abs()).sum());
        let pt = tangent.apply(w.matrix());
        tw.push(linalg::hs_inner(&pt, &pt).re);
        let s = linalg::hs_inner(w.matrix(), &sign).re;
        so.push(s * s);
    }
    let lg = libm::log2(nf) + 1.0;
    Ok(IncoherenceReport {
        sample_count: observables.len(),
        nu,
        rank: r,
        dim: n,
        operator_norm_sq: StatSummary::from_values(&op, nu / nf),
        tangent_weight: StatSummary::from_values(&tw, 2.0 * nu * r as f64 / nf),
        sign_overlap_sq: StatSummary::from_values(&so, nu * r as f64 / (nf * nf)),
        trace_norm: StatSummary::from_values(&tn, lg * lg),
    })
}
