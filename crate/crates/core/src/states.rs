//! Density matrices, random low-rank states and spectral utilities.

use alloc::format;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, complex_gaussian, eigh, real, CMat, Eigh};

/// Relative eigenvalue threshold below which a direction counts as kernel.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMat,
}

impl DensityMatrix {
    /// Validates `matrix` against the density-matrix invariants.
    pub fn new(matrix: CMat) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(invalid("density matrix must be square and non-empty"));
        }
        let defect = linalg::hermitian_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(invalid(format!("not Hermitian (defect {defect:e})")));
        }
        let matrix = linalg::hermitize(&matrix);
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(invalid(format!("trace is {tr}, expected 1")));
        }
        let min = eigh(&matrix).values.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(invalid(format!("not positive semidefinite (eigenvalue {min:e})")));
        }
        Ok(Self { matrix })
    }

    /// Normalizes a positive semidefinite matrix to unit trace.
    pub fn from_psd(matrix: CMat) -> Result<Self> {
        let h = linalg::hermitize(&matrix);
        let tr = linalg::trace(&h).re;
        if !(tr > 0.0) {
            return Err(invalid("matrix has non-positive trace"));
        }
        Self::new(h * real(1.0 / tr))
    }

    pub fn pure(amplitudes: &[num_complex::Complex64]) -> Result<Self> {
        let n = amplitudes.len();
        let v = CMat::from_column_slice(n, 1, amplitudes);
        Self::from_psd(&v * v.adjoint())
    }

    /// Fock state `|k⟩⟨k|` in a space with photon cutoff `cutoff`.
    pub fn fock(cutoff: usize, k: usize) -> Result<Self> {
        if k > cutoff {
            return Err(invalid("Fock index exceeds cutoff"));
        }
        let mut m = CMat::zeros(cutoff + 1, cutoff + 1);
        m[(k, k)] = linalg::ONE;
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        linalg::hs_inner(&self.matrix, &self.matrix).re
    }

    /// Number of eigenvalues above `rel_tol` times the largest one.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&eigh(&self.matrix), rel_tol)
    }
}

fn numerical_rank(e: &Eigh, rel_tol: f64) -> usize {
    let cut = rel_tol * e.max_abs();
    e.values.iter().filter(|v| v.abs() > cut).count()
}

/// Unitarily invariant random state of rank `r`: `GG†/Tr(GG†)` for an
/// `n × r` matrix `G` of independent standard complex Gaussians.
pub fn random_rank_r_state(n: usize, r: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rank_r_state_with(n, r, &mut rng)
}

pub fn random_rank_r_state_with<R: rand::Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<DensityMatrix> {
    if r < 1 || r > n {
        return Err(invalid(format!("rank {r} outside 1..={n}")));
    }
    let g = CMat::from_fn(n, r, |_, _| complex_gaussian(rng));
    DensityMatrix::from_psd(&g * g.adjoint())
}

fn require_hermitian(h: &CMat) -> Result<()> {
    if !linalg::is_hermitian(h, 1e-10) {
        return Err(invalid("matrix is not Hermitian"));
    }
    Ok(())
}

/// Matrix sign function; eigenvalues within the default rank tolerance of
/// zero map to zero.
pub fn sign_matrix(h: &CMat) -> Result<CMat> {
    require_hermitian(h)?;
    let e = eigh(h);
    let cut = DEFAULT_RANK_TOL * e.max_abs();
    Ok(e.map(|l| if l > cut { 1.0 } else if l < -cut { -1.0 } else { 0.0 }))
}

/// Orthogonal projection onto the tangent space `T` of a reference matrix.
///
/// `T` consists of the Hermitian matrices whose compression to the kernel of
/// the reference vanishes, so the projector acts as `σ ↦ σ − πσπ` with `π`
/// the kernel projector.
#[derive(Debug, Clone)]
pub struct TangentProjector {
    range_basis: CMat,
    kernel_basis: CMat,
}

impl TangentProjector {
    pub fn dim(&self) -> usize {
        self.range_basis.nrows()
    }

    /// Number of range directions `q`.
    pub fn rank(&self) -> usize {
        self.range_basis.ncols()
    }

    pub fn range_basis(&self) -> &CMat {
        &self.range_basis
    }

    pub fn kernel_basis(&self) -> &CMat {
        &self.kernel_basis
    }

    /// Real dimension of `T`, `2nq − q²`.
    pub fn tangent_dim(&self) -> usize {
        let (n, q) = (self.dim(), self.rank());
        2 * n * q - q * q
    }

    fn kernel_part(&self, sigma: &CMat) -> CMat {
        let k = &self.kernel_basis;
        let inner = k.adjoint() * sigma * k;
        k * inner * k.adjoint()
    }

    pub fn apply(&self, sigma: &CMat) -> CMat {
        sigma - self.kernel_part(sigma)
    }

    /// `σ ↦ πσπ`, the projection onto `T⊥`.
    pub fn complement(&self, sigma: &CMat) -> CMat {
        self.kernel_part(sigma)
    }

    /// Orthonormal Hermitian basis of `T` (Hilbert–Schmidt inner product).
    ///
    /// Built in the eigenbasis `U = [range | kernel]` from the elementary
    /// matrices `E_ii` (`i < q`) and `(E_ij ± E_ji)` combinations with
    /// `i < q`, then rotated back by `U`.
    pub fn tangent_basis(&self) -> Vec<CMat> {
        let n = self.dim();
        let q = self.rank();
        let u = self.full_basis();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let mut out = Vec::with_capacity(self.tangent_dim());
        for i in 0..q {
            let ui = u.column(i);
            out.push(&ui * ui.adjoint());
            for j in (i + 1)..n {
                let uj = u.column(j);
                let a = &ui * uj.adjoint();
                let b = a.adjoint();
                out.push((&a + &b) * real(s));
                out.push((&a - &b) * num_complex::Complex64::new(0.0, s));
            }
        }
        out
    }

    fn full_basis(&self) -> CMat {
        let n = self.dim();
        let q = self.rank();
        let mut u = CMat::zeros(n, n);
        u.columns_mut(0, q).copy_from(&self.range_basis);
        u.columns_mut(q, n - q).copy_from(&self.kernel_basis);
        u
    }
}

/// Tangent projector of `reference`; eigendirections with
/// `|λ| > rank_tol · max|λ|` span the range.
pub fn tangent_projector(reference: &CMat, rank_tol: f64) -> Result<TangentProjector> {
    require_hermitian(reference)?;
    if !(rank_tol >= 0.0) {
        return Err(invalid("rank tolerance must be non-negative"));
    }
    let e = eigh(reference);
    let cut = rank_tol * e.max_abs();
    let n = e.dim();
    let (range, kernel): (Vec<usize>, Vec<usize>) = (0..n).partition(|&k| e.values[k].abs() > cut && e.values[k] != 0.0);
    Ok(TangentProjector {
        range_basis: select_columns(&e.vectors, &range),
        kernel_basis: select_columns(&e.vectors, &kernel),
    })
}

/// Tangent projector spanned by the columns of an isometry.
pub fn tangent_projector_from_range(range_basis: CMat) -> Result<TangentProjector> {
    let n = range_basis.nrows();
    let q = range_basis.ncols();
    let gram = range_basis.adjoint() * &range_basis;
    if linalg::frobenius_norm(&(gram - linalg::identity(q))) > 1e-10 {
        return Err(invalid("range basis is not orthonormal"));
    }
    // complete to a unitary through the kernel of the range projector
    let pi = &range_basis * range_basis.adjoint();
    let e = eigh(&pi);
    let kernel: Vec<usize> = (q..n).collect();
    Ok(TangentProjector {
        range_basis,
        kernel_basis: select_columns(&e.vectors, &kernel),
    })
}

fn select_columns(m: &CMat, cols: &[usize]) -> CMat {
    CMat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

/// Rank-`q` spectral truncation of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralTruncation {
    pub kept_rank: usize,
    pub truncated_matrix: CMat,
    /// Frobenius norm of the discarded spectral part.
    pub frobenius_error: f64,
    /// Kept eigenvalues, largest magnitude first.
    pub kept_values: Vec<f64>,
    /// Kept eigenvectors as columns, matching `kept_values`.
    pub kept_vectors: CMat,
}

impl SpectralTruncation {
    pub fn dim(&self) -> usize {
        self.truncated_matrix.nrows()
    }

    /// `sgn σ_q`: sign of every kept non-zero eigenvalue.
    pub fn sign(&self) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        for (k, &l) in self.kept_values.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let v = self.kept_vectors.column(k);
            out.ger(real(l.signum()), &v, &v.conjugate(), linalg::ONE);
        }
        linalg::hermitize(&out)
    }

    /// Tangent space of the truncated matrix (its `q` kept directions).
    pub fn tangent(&self) -> Result<TangentProjector> {
        let cols: Vec<usize> = (0..self.kept_rank).filter(|&k| self.kept_values[k] != 0.0).collect();
        tangent_projector_from_range(select_columns(&self.kept_vectors, &cols))
    }
}

/// Keeps the `q` eigenvalues of largest magnitude.
///
/// Eigenvalues are first sorted in descending order and then stably by
/// magnitude, so ties keep the earlier entry of the descending order.
pub fn truncate_to_rank(h: &CMat, q: usize) -> Result<SpectralTruncation> {
    require_hermitian(h)?;
    let n = h.nrows();
    if q < 1 || q > n {
        return Err(invalid(format!("truncation rank {q} outside 1..={n}")));
    }
    let e = eigh(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.values[b].abs().total_cmp(&e.values[a].abs()));
    let kept = &order[..q];
    let discarded = &order[q..];
    let kept_values: Vec<f64> = kept.iter().map(|&k| e.values[k]).collect();
    let kept_vectors = select_columns(&e.vectors, kept);
    let mut truncated = CMat::zeros(n, n);
    for (k, &l) in kept_values.iter().enumerate() {
        let v = kept_vectors.column(k);
        truncated.ger(real(l), &v, &v.conjugate(), linalg::ONE);
    }
    let frobenius_error = libm::sqrt(discarded.iter().map(|&k| e.values[k] * e.values[k]).sum::<f64>());
    Ok(SpectralTruncation {
        kept_rank: q,
        truncated_matrix: linalg::hermitize(&truncated),
        frobenius_error,
        kept_values,
        kept_vectors,
    })
}

/// Trace-norm error bound `3·√(N_mean/(N+1))` for truncating a state of
/// mean photon number `mean_photons` to photon numbers `0..=cutoff`.
pub fn fock_truncation_error(mean_photons: f64, cutoff: usize) -> Result<f64> {
    if !(mean_photons >= 0.0) || !mean_photons.is_finite() {
        return Err(invalid("mean photon number must be finite and non-negative"));
    }
    let n1 = (cutoff + 1) as f64;
    if n1 < mean_photons {
        return Err(Error::InvalidArgument(format!(
            "bound requires cutoff + 1 >= mean photon number ({n1} < {mean_photons})"
        )));
    }
    Ok(3.0 * libm::sqrt(mean_photons / n1))
}
