//! Dense complex linear algebra shared by every module.
//!
//! Hermitian matrices are the working currency. They are represented as
//! `DMatrix<Complex64>`, and when a superoperator has to be written down as a
//! matrix the real vectorization [`vec_hermitian`] is used: it maps the
//! Hilbert–Schmidt inner product on Hermitian matrices onto the Euclidean one
//! on `R^{n^2}`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const IMAG: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `values`.
    pub vectors: CMat,
}

impl Eigh {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Rebuilds `Σ f(λ_k) v_k v_k†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.dim();
        let mut out = CMat::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            out.ger(real(w), &v, &v.conjugate(), ONE);
        }
        hermitize(&out)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn eigh(h: &CMat) -> Eigh {
    let n = h.nrows();
    let e = nalgebra::SymmetricEigen::new(hermitize(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let values = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    Eigh { values, vectors }
}

/// Real symmetric eigendecomposition, eigenvalues descending.
pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let e = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let values = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let vectors = RMat::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Largest entrywise deviation `|m_ij − conj(m_ji)|`.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    if m.ncols() != n {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |a, z| a.max(z.norm()))
}

/// Hermiticity check with a tolerance scaled to the matrix magnitude.
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && hermitian_defect(m) <= tol * max_abs_entry(m).max(1.0)
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * real(0.5)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius_norm(a: &CMat) -> f64 {
    libm::sqrt(a.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Singular values, largest first, as the non-negative eigenvalues of the
/// Hermitian dilation `[[0, A], [A†, 0]]`.
///
/// The dense SVD loses accuracy on matrices with repeated rows, which the
/// sampling operators produce routinely, and the Gram route `√λ(A†A)`
/// inflates zero singular values to `√ε · ‖A‖`.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let (r, c) = a.shape();
    let mut d = CMat::zeros(r + c, r + c);
    d.view_mut((0, r), (r, c)).copy_from(a);
    d.view_mut((r, 0), (c, r)).copy_from(&a.adjoint());
    eigh(&d).values.into_iter().take(r.min(c)).map(|v| v.max(0.0)).collect()
}

/// Thin SVD `A = U diag(s) Wᵀ` of a real matrix, singular values
/// descending, by one-sided Jacobi rotations.
///
/// Slower than a Gram eigendecomposition but accurate to `ε‖A‖` in every
/// singular direction, so small singular values keep their vectors.
/// The input is first reduced by a column-pivoted QR step, after which the
/// rotations converge in a few sweeps.
pub fn thin_svd_real(a: &RMat) -> (RMat, Vec<f64>, RMat) {
    let (rows, cols) = a.shape();
    if rows < cols {
        let (u, s, w) = thin_svd_real(&a.transpose());
        return (w, s, u);
    }
    // A P = Q R and R = V S Wᵀ give A = (Q V) S (Wᵀ P⁻¹)
    let qr = a.clone().col_piv_qr();
    let (v, s, w) = jacobi_rows(&qr.r());
    let mut wt = w.transpose();
    qr.p().inv_permute_columns(&mut wt);
    (qr.q() * v, s, wt.transpose())
}

/// One-sided Jacobi on the rows of a square `a`: `a = V S Wᵀ`.
fn jacobi_rows(a: &RMat) -> (RMat, Vec<f64>, RMat) {
    let k = a.nrows();
    let mut g = a.transpose();
    let mut v = RMat::identity(k, k);
    // columns this small are zero at working accuracy
    let negligible = f64::EPSILON * f64::EPSILON * g.norm_squared();
    let mut sq: Vec<f64> = (0..k).map(|j| g.column(j).norm_squared()).collect();
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (alpha, beta) = (sq[p], sq[q]);
                if alpha.min(beta) <= negligible {
                    continue;
                }
                let gamma = g.column(p).dot(&g.column(q));
                if gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_columns(&mut g, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
                sq[p] = g.column(p).norm_squared();
                sq[q] = g.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..k).map(|j| g.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = RMat::from_fn(k, k, |i, j| v[(i, order[j])]);
    let w = RMat::from_fn(k, k, |i, j| if norms[order[j]] > 0.0 { g[(i, order[j])] / norms[order[j]] } else { 0.0 });
    (u, s, w)
}

const JACOBI_SWEEPS: usize = 60;

/// Rotates columns `p < q` in place.
fn rotate_columns(m: &mut RMat, p: usize, q: usize, c: f64, s: f64) {
    let n = m.nrows();
    let (head, tail) = m.as_mut_slice().split_at_mut(q * n);
    let (cp, cq) = (&mut head[p * n..(p + 1) * n], &mut tail[..n]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Spectral (Schatten-∞) norm of an arbitrary square matrix.
pub fn operator_norm(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// Trace (Schatten-1) norm of an arbitrary square matrix.
pub fn trace_norm(a: &CMat) -> f64 {
    singular_values(a).into_iter().sum()
}

pub fn operator_norm_hermitian(h: &CMat) -> f64 {
    eigh(h).max_abs()
}

pub fn trace_norm_hermitian(h: &CMat) -> f64 {
    eigh(h).values.iter().map(|v| v.abs()).sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Real orthonormal coordinates of a Hermitian matrix.
///
/// Diagonal entries map to themselves; for `i < j` the slot `(i, j)` carries
/// `√2 Re h_ij` and the slot `(j, i)` carries `√2 Im h_ij`. With this layout
/// `vec(a) · vec(b) = Tr(a b)` for Hermitian `a`, `b`.
pub fn vec_hermitian(h: &CMat) -> RVec {
    let n = h.nrows();
    let s = core::f64::consts::SQRT_2;
    let mut v = RVec::zeros(n * n);
    for i in 0..n {
        v[i * n + i] = h[(i, i)].re;
        for j in (i + 1)..n {
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            v[i * n + j] = s * z.re;
            v[j * n + i] = s * z.im;
        }
    }
    v
}

pub fn unvec_hermitian(v: &[f64], n: usize) -> CMat {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let mut h = CMat::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = real(v[i * n + i]);
        for j in (i + 1)..n {
            let z = Complex64::new(v[i * n + j] * s, v[j * n + i] * s);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// Operator norm of a real symmetric matrix: dense eigensolve up to 1024
/// rows, power iteration beyond.
pub fn symmetric_operator_norm(m: &RMat) -> f64 {
    if m.nrows() <= 1024 {
        let (vals, _) = eigh_real(m);
        vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    } else {
        power_iteration_norm(|x| m * x, m.nrows(), 200, 1e-8)
    }
}

/// Estimates `max |λ|` of a symmetric linear map by power iteration on `A²`.
pub fn power_iteration_norm(apply: impl Fn(&RVec) -> RVec, dim: usize, iters: usize, tol: f64) -> f64 {
    if dim == 0 {
        return 0.0;
    }
    // deterministic, non-degenerate start
    let mut x = RVec::from_fn(dim, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    let nx = x.norm();
    x /= nx;
    let mut est = 0.0;
    for _ in 0..iters {
        let y = apply(&apply(&x));
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        let next = libm::sqrt(ny);
        x = y / ny;
        if (next - est).abs() <= tol * next.max(1e-300) {
            return next;
        }
        est = next;
    }
    est
}

/// Standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `n × k` matrix with orthonormal columns drawn from the Haar measure.
pub fn haar_isometry<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, k, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    // fix the phase ambiguity of QR so that the law is exactly Haar
    let mut out = q.columns(0, k).into_owned();
    for j in 0..k {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            out[(i, j)] *= ph;
        }
    }
    out
}

/// Haar-random unitary of size `n`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    haar_isometry(n, n, rng)
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Returns an orthonormal basis (as columns) for the span of `vectors`;
/// candidates whose residual norm falls below `drop_tol` times their
/// original norm are discarded.
pub fn orthonormal_basis(vectors: &[RVec], dim: usize, drop_tol: f64) -> RMat {
    let mut basis: Vec<RVec> = Vec::new();
    for v in vectors {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&u);
                u.axpy(-c, q, 1.0);
            }
        }
        let nu = u.norm();
        if nu > drop_tol * norm0 {
            basis.push(u / nu);
        }
    }
    let mut out = RMat::zeros(dim, basis.len());
    for (j, q) in basis.iter().enumerate() {
        out.set_column(j, q);
    }
    out
}

pub(crate) fn ln_factorials(max: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(max + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for k in 1..=max {
        acc += libm::log(k as f64);
        t.push(acc);
    }
    t
}
