//! Continuous-variable kernel: displacement operators, Wigner matrix
//! elements, quadrature distributions, homodyne simulation and
//! characteristic-function slices.
//!
//! Quadratures follow `x_θ = (a e^{−iθ} + a† e^{iθ})/√2`, so the vacuum
//! distribution is `e^{−x²}/√π`. With this convention
//! `Tr(ρ e^{−iζ x_θ}) = Tr(D(α)ρ)` for `α = −iζe^{iθ}/√2`, see
//! [`homodyne_alpha`].

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{self, ln_factorials, real, CMat, ZERO};
use crate::states::DensityMatrix;

/// Entry `⟨k|D(α)|l⟩` of the displacement operator `exp(αa† − α*a)`.
///
/// Evaluates the finite sum
/// `e^{−|α|²/2} Σ_j α^{k−j}(−α*)^{l−j} √(k! l!) / (j!(k−j)!(l−j)!)`.
/// The terms alternate in sign and reach `~10⁵` at `|α| = 8`, `k = l = 20`,
/// so the term ratios are accumulated in double-double arithmetic.
pub fn displacement_matrix_element(k: usize, l: usize, alpha: Complex64) -> Complex64 {
    let lnf = ln_factorials(k.max(l));
    displacement_element_with(&lnf, k, l, alpha)
}

fn displacement_element_with(lnf: &[f64], k: usize, l: usize, alpha: Complex64) -> Complex64 {
    let r = alpha.norm();
    if r == 0.0 {
        return if k == l { linalg::ONE } else { ZERO };
    }
    let (lo, hi) = (k.min(l), k.max(l));
    let d = hi - lo;
    // α^{k−j}(−α*)^{l−j} = (−1)^{l−j} r^{k+l−2j} e^{iφ(k−l)}; start at j = min(k, l)
    let unit = alpha / r;
    let phase = if k >= l { unit.powu(d as u32) } else { unit.conj().powu(d as u32) };
    let sign = if k >= l || d % 2 == 0 { 1.0 } else { -1.0 };
    let lead = sign * libm::exp(-0.5 * r * r + libm::log(r) * d as f64 + 0.5 * (lnf[hi] - lnf[lo]) - lnf[d]);
    let r2 = dd::add(dd::two_prod(alpha.re, alpha.re), dd::two_prod(alpha.im, alpha.im));
    let (mut term, mut sum) = (dd::ONE, dd::ONE);
    for j in (1..=lo).rev() {
        // t_{j−1}/t_j = −r² j / ((k−j+1)(l−j+1))
        let denom = ((k - j + 1) * (l - j + 1)) as f64;
        term = dd::div_f64(dd::mul_f64(dd::mul(term, r2), -(j as f64)), denom);
        sum = dd::add(sum, term);
    }
    phase * (lead * (sum.0 + sum.1))
}

/// Minimal double-double arithmetic: `(hi, lo)` with `|lo| ≤ ulp(hi)/2`.
mod dd {
    pub type Dd = (f64, f64);
    pub const ONE: Dd = (1.0, 0.0);

    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        (s, b - (s - a))
    }

    pub fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        (p, libm::fma(a, b, -p))
    }

    pub fn add(a: Dd, b: Dd) -> Dd {
        let (s, e) = two_sum(a.0, b.0);
        let (t, f) = two_sum(a.1, b.1);
        let (s, e) = quick_two_sum(s, e + t);
        quick_two_sum(s, e + f)
    }

    pub fn mul(a: Dd, b: Dd) -> Dd {
        let (p, e) = two_prod(a.0, b.0);
        quick_two_sum(p, e + (a.0 * b.1 + a.1 * b.0))
    }

    pub fn mul_f64(a: Dd, b: f64) -> Dd {
        let (p, e) = two_prod(a.0, b);
        quick_two_sum(p, e + a.1 * b)
    }

    pub fn div_f64(a: Dd, b: f64) -> Dd {
        let q1 = a.0 / b;
        let (p, e) = two_prod(q1, b);
        let (s, f) = two_sum(a.0, -p);
        let q2 = (s + (f - e + a.1)) / b;
        quick_two_sum(q1, q2)
    }
}

/// `Π_N D(α) Π_N` as an `(N+1) × (N+1)` matrix.
pub fn displacement_matrix(cutoff: usize, alpha: Complex64) -> CMat {
    let lnf = ln_factorials(cutoff);
    CMat::from_fn(cutoff + 1, cutoff + 1, |k, l| displacement_element_with(&lnf, k, l, alpha))
}

/// Truncated, optionally rescaled displacement operator.
#[derive(Debug, Clone)]
pub struct TruncatedDisplacement {
    pub cutoff: usize,
    pub alpha: Complex64,
    pub matrix: CMat,
    pub scaled: bool,
    pub sigma: f64,
}

/// `D_N(α)`, or `D̃_N(α) = √2 σ e^{|α|²/4σ²} D_N(α)` when `scaled`.
pub fn truncated_displacement(cutoff: usize, alpha: Complex64, scaled: bool, sigma: f64) -> Result<TruncatedDisplacement> {
    let mut matrix = displacement_matrix(cutoff, alpha);
    if scaled {
        if !(sigma > 0.0) {
            return Err(invalid("scaled displacement needs sigma > 0"));
        }
        matrix *= real(displacement_scale(alpha, sigma));
    }
    Ok(TruncatedDisplacement { cutoff, alpha, matrix, scaled, sigma })
}

pub(crate) fn displacement_scale(alpha: Complex64, sigma: f64) -> f64 {
    SQRT_2 * sigma * libm::exp(alpha.norm_sqr() / (4.0 * sigma * sigma))
}

/// Gaussian width `√(2N log(1+4N))` of the displacement frame.
pub fn displacement_sigma(cutoff: usize) -> f64 {
    let n = cutoff as f64;
    libm::sqrt(2.0 * n * libm::log(1.0 + 4.0 * n))
}

/// Operator-norm bound `2e√(N log(1+4N))` on `D̃_N(α)`.
pub fn scaled_displacement_norm_bound(cutoff: usize) -> f64 {
    let n = cutoff as f64;
    2.0 * core::f64::consts::E * libm::sqrt(n * libm::log(1.0 + 4.0 * n))
}

/// `|⟨k|D(α)|l⟩| ≤ e^{−|α|²/2}(1+|α|²)^{(k+l)/2}`.
pub fn displacement_element_bound(k: usize, l: usize, alpha: Complex64) -> f64 {
    let r2 = alpha.norm_sqr();
    libm::exp(-0.5 * r2 + 0.5 * (k + l) as f64 * libm::log1p(r2))
}

/// Density `P_G(α) = e^{−|α|²/2σ²}/(2πσ²)` of the complex Gaussian.
pub fn gaussian_density(alpha: Complex64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    libm::exp(-alpha.norm_sqr() / (2.0 * s2)) / (2.0 * PI * s2)
}

/// Wigner function of `|l⟩⟨k|` at `(x, p)`, i.e.
/// `(1/π)∫ψ_k(x+y)ψ_l(x−y)e^{2ipy}dy`.
///
/// Expanding the generating function gives
/// `(1/π)e^{−x²−p²}√(k!l!/2^{k+l}) Σ_j (−2)^j a^{k−j} b^{l−j}/(j!(k−j)!(l−j)!)`
/// with `a = 2(x+ip)` and `b = 2(x−ip)`.
pub fn wigner_matrix_element(k: usize, l: usize, x: f64, p: f64) -> Complex64 {
    let lnf = ln_factorials(k.max(l));
    wigner_element_with(&lnf, k, l, x, p)
}

fn wigner_element_with(lnf: &[f64], k: usize, l: usize, x: f64, p: f64) -> Complex64 {
    let a = Complex64::new(2.0 * x, 2.0 * p);
    let r = a.norm();
    let base = -x * x - p * p + 0.5 * (lnf[k] + lnf[l]) - 0.5 * (k + l) as f64 * core::f64::consts::LN_2;
    let mut acc = ZERO;
    for j in 0..=k.min(l) {
        let (ka, lb) = (k - j, l - j);
        if r == 0.0 && ka + lb > 0 {
            continue;
        }
        let ln_r = if ka + lb > 0 { libm::log(r) * (ka + lb) as f64 } else { 0.0 };
        let ln_mag = base + j as f64 * core::f64::consts::LN_2 + ln_r - lnf[j] - lnf[ka] - lnf[lb];
        let phase = a.arg() * (ka as f64 - lb as f64) + if j % 2 == 1 { PI } else { 0.0 };
        acc += Complex64::from_polar(libm::exp(ln_mag), phase);
    }
    acc / PI
}

/// Oscillator eigenfunctions `ψ_0(x), …, ψ_nmax(x)` by the normalized
/// three-term recurrence.
pub fn hermite_functions(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(libm::pow(PI, -0.25) * libm::exp(-0.5 * x * x));
    if nmax >= 1 {
        out.push(SQRT_2 * x * out[0]);
    }
    for j in 1..nmax {
        let jf = j as f64;
        let next = libm::sqrt(2.0 / (jf + 1.0)) * x * out[j] - libm::sqrt(jf / (jf + 1.0)) * out[j - 1];
        out.push(next);
    }
    out
}

/// Quadrature density `Σ ρ_kl e^{i(l−k)θ} ψ_k(x) ψ_l(x)` on `x_grid`.
pub fn quadrature_distribution(rho: &DensityMatrix, theta: f64, x_grid: &[f64]) -> Result<Vec<f64>> {
    if x_grid.iter().any(|x| !x.is_finite()) {
        return Err(invalid("quadrature grid must be finite"));
    }
    let n = rho.dim();
    let m = rho.matrix();
    let rotated = CMat::from_fn(n, n, |k, l| m[(k, l)] * Complex64::from_polar(1.0, (l as f64 - k as f64) * theta));
    Ok(x_grid
        .iter()
        .map(|&x| {
            let psi = hermite_functions(n - 1, x);
            let mut acc = 0.0;
            for k in 0..n {
                let mut row = ZERO;
                for l in 0..n {
                    row += rotated[(k, l)] * psi[l];
                }
                acc += (row * psi[k]).re;
            }
            acc
        })
        .collect())
}

/// Points of the inverse-CDF grid used by [`homodyne_sample`].
pub const HOMODYNE_GRID_POINTS: usize = 1 << 13;

/// Half-width `8 + √N` of the homodyne sampling grid.
pub fn homodyne_grid_half_width(cutoff: usize) -> f64 {
    8.0 + libm::sqrt(cutoff as f64)
}

/// I.i.d. quadrature samples drawn by inverse CDF on a dense grid.
pub fn homodyne_sample(rho: &DensityMatrix, theta: f64, shots: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    homodyne_sample_with(rho, theta, shots, &mut rng)
}

pub fn homodyne_sample_with<R: Rng + ?Sized>(rho: &DensityMatrix, theta: f64, shots: usize, rng: &mut R) -> Result<Vec<f64>> {
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    let cdf = QuadratureCdf::new(rho, theta)?;
    Ok((0..shots).map(|_| cdf.invert(rng.random::<f64>())).collect())
}

/// Piecewise-linear CDF of a quadrature density on the sampling grid.
#[derive(Debug, Clone)]
pub struct QuadratureCdf {
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl QuadratureCdf {
    pub fn new(rho: &DensityMatrix, theta: f64) -> Result<Self> {
        let half = homodyne_grid_half_width(rho.dim() - 1);
        let pts = HOMODYNE_GRID_POINTS;
        let h = 2.0 * half / (pts - 1) as f64;
        let grid: Vec<f64> = (0..pts).map(|i| -half + h * i as f64).collect();
        let density: Vec<f64> = quadrature_distribution(rho, theta, &grid)?.into_iter().map(|v| v.max(0.0)).collect();
        let mut cumulative = Vec::with_capacity(pts);
        cumulative.push(0.0);
        for i in 1..pts {
            let prev = cumulative[i - 1];
            cumulative.push(prev + 0.5 * h * (density[i - 1] + density[i]));
        }
        let total = cumulative[pts - 1];
        for c in cumulative.iter_mut() {
            *c /= total;
        }
        Ok(Self { grid, cumulative })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return 1.0;
        }
        let i = g.partition_point(|&v| v <= x) - 1;
        let t = (x - g[i]) / (g[i + 1] - g[i]);
        self.cumulative[i] + t * (self.cumulative[i + 1] - self.cumulative[i])
    }

    pub fn invert(&self, u: f64) -> f64 {
        let c = &self.cumulative;
        let i = c.partition_point(|&v| v < u).clamp(1, c.len() - 1);
        let (c0, c1) = (c[i - 1], c[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.grid[i - 1] + t * (self.grid[i] - self.grid[i - 1])
    }
}

/// Displacement amplitude sampled by the Fourier variable `ζ` at phase `θ`.
pub fn homodyne_alpha(theta: f64, zeta: f64) -> Complex64 {
    Complex64::new(0.0, -zeta * FRAC_1_SQRT_2) * Complex64::from_polar(1.0, theta)
}

/// One homodyne phase setting with its Fourier grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneSetting {
    theta: f64,
    zeta_grid: Vec<f64>,
    cutoff: usize,
}

impl HomodyneSetting {
    pub fn new(theta: f64, zeta_grid: Vec<f64>, cutoff: usize) -> Result<Self> {
        check_zeta_grid(&zeta_grid)?;
        if !theta.is_finite() {
            return Err(invalid("theta must be finite"));
        }
        Ok(Self { theta, zeta_grid, cutoff })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn zeta_grid(&self) -> &[f64] {
        &self.zeta_grid
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }
}

pub(crate) fn check_zeta_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("zeta grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("zeta grid must be strictly increasing"));
    }
    let m = grid.len();
    for i in 0..m {
        let (a, b) = (grid[i], grid[m - 1 - i]);
        if (a + b).abs() > 1e-12 * (1.0 + a.abs()) {
            return Err(invalid("zeta grid must be symmetric about 0"));
        }
    }
    Ok(())
}

/// Default number of Fourier grid points per mode.
pub const DEFAULT_ZETA_POINTS: usize = 64;

/// Default grid half-width `4√n`, i.e. displacements up to `|α| = 2√(2n)`.
pub fn default_zeta_max(dim: usize) -> f64 {
    4.0 * libm::sqrt(dim as f64)
}

/// `points` values uniform on `[−ζ_max, ζ_max]`.
pub fn uniform_zeta_grid(zeta_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(zeta_max > 0.0) {
        return Err(invalid("zeta grid needs at least two points and a positive half-width"));
    }
    let h = 2.0 * zeta_max / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| -zeta_max + h * i as f64).collect();
    // make the symmetry exact
    Ok((0..points).map(|i| if 2 * i + 1 < points { grid[i] } else if 2 * i + 1 == points { 0.0 } else { -grid[points - 1 - i] }).collect())
}

/// Sampled values of the characteristic function along one line.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSlice {
    pub setting: HomodyneSetting,
    pub values: Vec<Complex64>,
    /// Sample count behind the estimate, 0 for exact values.
    pub shots: usize,
}

/// `Tr(D(α)ρ)` along the setting's line.
pub fn characteristic_slice_exact(rho: &DensityMatrix, setting: &HomodyneSetting) -> Result<CharacteristicSlice> {
    check_dim(setting.cutoff + 1, rho.dim())?;
    let values = setting
        .zeta_grid
        .iter()
        .map(|&z| {
            let d = displacement_matrix(setting.cutoff, homodyne_alpha(setting.theta, z));
            trace_product(&d, rho.matrix())
        })
        .collect();
    Ok(CharacteristicSlice { setting: setting.clone(), values, shots: 0 })
}

fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Empirical characteristic function `(1/ℓ)Σ e^{−iζx_i}`.
pub fn characteristic_slice_estimate(x_samples: &[f64], setting: &HomodyneSetting) -> Result<CharacteristicSlice> {
    if x_samples.is_empty() {
        return Err(invalid("no quadrature samples"));
    }
    let inv = 1.0 / x_samples.len() as f64;
    let values = setting
        .zeta_grid
        .iter()
        .map(|&z| {
            let (mut c, mut s) = (0.0, 0.0);
            for &x in x_samples {
                let (sn, cs) = libm::sincos(z * x);
                c += cs;
                s += sn;
            }
            Complex64::new(c * inv, -s * inv)
        })
        .collect();
    Ok(CharacteristicSlice { setting: setting.clone(), values, shots: x_samples.len() })
}

/// Detection efficiencies at or below this floor are refused by
/// [`loss_compensation`].
pub const DEFAULT_EFFICIENCY_FLOOR: f64 = 0.5;

/// Gaussian damping `e^{−(1−η)ζ²/(4η)}` of the characteristic function
/// caused by detection efficiency `η`.
pub fn loss_envelope(zeta: f64, efficiency: f64) -> f64 {
    libm::exp(-(1.0 - efficiency) * zeta * zeta / (4.0 * efficiency))
}

fn check_efficiency(efficiency: f64, floor: f64) -> Result<()> {
    if !(efficiency > floor && efficiency <= 1.0) {
        return Err(invalid(format!("efficiency {efficiency} outside ({floor}, 1]")));
    }
    Ok(())
}

fn scale_slice(slice: &CharacteristicSlice, f: impl Fn(f64) -> f64) -> CharacteristicSlice {
    let values = slice.setting.zeta_grid.iter().zip(&slice.values).map(|(&z, &v)| v * f(z)).collect();
    CharacteristicSlice { setting: slice.setting.clone(), values, shots: slice.shots }
}

/// Multiplies a slice by the loss envelope.
pub fn apply_loss(slice: &CharacteristicSlice, efficiency: f64) -> Result<CharacteristicSlice> {
    check_efficiency(efficiency, 0.0)?;
    Ok(scale_slice(slice, |z| loss_envelope(z, efficiency)))
}

/// Divides out the loss envelope, refusing `η ≤ 0.5`.
pub fn loss_compensation(slice: &CharacteristicSlice, efficiency: f64) -> Result<CharacteristicSlice> {
    loss_compensation_with_floor(slice, efficiency, DEFAULT_EFFICIENCY_FLOOR)
}

pub fn loss_compensation_with_floor(slice: &CharacteristicSlice, efficiency: f64, floor: f64) -> Result<CharacteristicSlice> {
    check_efficiency(efficiency, floor)?;
    Ok(scale_slice(slice, |z| 1.0 / loss_envelope(z, efficiency)))
}

/// Width `√n log n` of the pointwise Wigner frame, `n = N+1`.
pub fn pointwise_wigner_sigma(cutoff: usize) -> f64 {
    let n = (cutoff + 1) as f64;
    libm::sqrt(n) * libm::log(n)
}

/// `Π_N w_α Π_N` for the displaced-parity observable
/// `w_α = √(2π)(2/π) D(α)(−1)^n̂ D†(α) = √(2π)(2/π) D(2α)(−1)^n̂`.
pub fn displaced_parity(cutoff: usize, alpha: Complex64) -> CMat {
    let mut d = displacement_matrix(cutoff, alpha * 2.0);
    for l in 0..=cutoff {
        if l % 2 == 1 {
            d.column_mut(l).neg_mut();
        }
    }
    linalg::hermitize(&(d * real(libm::sqrt(2.0 * PI) * 2.0 / PI)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::random_rank_r_state;
    use std::vec;

    /// Associated Laguerre `L_n^{(a)}(x)` by the three-term recurrence.
    fn laguerre(n: usize, a: f64, x: f64) -> f64 {
        let (mut prev, mut cur) = (1.0, 1.0 + a - x);
        if n == 0 {
            return prev;
        }
        for k in 1..n {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
            prev = cur;
            cur = next;
        }
        cur
    }

    fn laguerre_element(k: usize, l: usize, alpha: Complex64) -> Complex64 {
        let r2 = alpha.norm_sqr();
        let lnf = ln_factorials(k.max(l));
        if k >= l {
            let pre = libm::exp(0.5 * (lnf[l] - lnf[k]) - 0.5 * r2);
            alpha.powu((k - l) as u32) * pre * laguerre(l, (k - l) as f64, r2)
        } else {
            let pre = libm::exp(0.5 * (lnf[k] - lnf[l]) - 0.5 * r2);
            (-alpha.conj()).powu((l - k) as u32) * pre * laguerre(k, (l - k) as f64, r2)
        }
    }

    /// Composite Simpson rule on `[a, b]` with `n` (even) panels.
    fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            acc += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * (h / 3.0)
    }

    #[test]
    fn displacement_trivial_elements() {
        let a = Complex64::new(0.4, -1.1);
        let v = displacement_matrix_element(0, 0, a);
        assert!((v - real(libm::exp(-0.5 * a.norm_sqr()))).norm() < 1e-15);
        for k in 0..5 {
            for l in 0..5 {
                let e = displacement_matrix_element(k, l, ZERO);
                assert_eq!(e, if k == l { linalg::ONE } else { ZERO });
            }
        }
    }

    #[test]
    fn displacement_matches_laguerre_example() {
        let a = Complex64::new(0.7, 0.2);
        assert!((displacement_matrix_element(3, 1, a) - laguerre_element(3, 1, a)).norm() < 1e-10);
    }

    #[test]
    fn displacement_sum_survives_cancellation() {
        // 60-digit reference values
        let cases = [
            (20, 20, Complex64::new(6.0, 2.0), Complex64::new(0.051116209720245469138, 0.0)),
            (13, 19, Complex64::new(5.5, -5.5), Complex64::new(0.0, 0.16730222533082773237)),
            (20, 3, Complex64::new(8.0, 0.0), Complex64::new(-0.00061580530947279335106, 0.0)),
        ];
        for (k, l, a, want) in cases {
            let got = displacement_matrix_element(k, l, a);
            assert!((got - want).norm() < 1e-13, "({k},{l}) {got} vs {want}");
            assert!((got - laguerre_element(k, l, a)).norm() < 1e-13);
        }
    }

    #[test]
    fn displacement_is_unitary_before_truncation() {
        let a = Complex64::new(0.3, 0.5);
        let big = displacement_matrix(60, a);
        let u = &big * big.adjoint();
        for i in 0..10 {
            for j in 0..10 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((u[(i, j)] - real(e)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn displacement_adjoint_is_negated_argument() {
        let a = Complex64::new(-0.8, 1.3);
        let d = displacement_matrix(6, a);
        let dm = displacement_matrix(6, -a);
        assert!(linalg::frobenius_norm(&(d.adjoint() - dm)) < 1e-13);
    }

    #[test]
    fn truncated_displacement_examples() {
        let t = truncated_displacement(4, ZERO, false, 0.0).unwrap();
        assert!(linalg::frobenius_norm(&(t.matrix - linalg::identity(5))) < 1e-15);
        assert!(truncated_displacement(4, ZERO, true, 0.0).is_err());

        let sigma = displacement_sigma(10);
        assert!((sigma - libm::sqrt(20.0 * libm::log(41.0))).abs() < 1e-12);
        let bound = scaled_displacement_norm_bound(10);
        for i in 0..=40 {
            let r = 4.0 * sigma * i as f64 / 40.0;
            for t in 0..8 {
                let a = Complex64::from_polar(r, t as f64 * 0.7);
                let d = truncated_displacement(10, a, true, sigma).unwrap();
                assert!(linalg::operator_norm(&d.matrix) <= bound + 1e-9);
            }
        }

        // appendix chain at N = 6, α = 1
        let d = truncated_displacement(6, real(1.0), false, 0.0).unwrap();
        let chain: f64 = (0..=6)
            .flat_map(|k| (0..=6).map(move |l| (k, l)))
            .map(|(k, l)| displacement_element_bound(k, l, real(1.0)).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(linalg::frobenius_norm(&d.matrix) <= chain + 1e-12);
        assert!(chain <= libm::exp(-0.5) * 2f64.powi(7) * 2.0);
    }

    #[test]
    fn hermite_functions_are_orthonormal() {
        let n = 12;
        let h = 1.0 / 64.0;
        let xs: Vec<f64> = (0..=2048).map(|i| -16.0 + h * i as f64).collect();
        let table: Vec<Vec<f64>> = xs.iter().map(|&x| hermite_functions(n, x)).collect();
        for a in 0..=n {
            for b in 0..=n {
                let s: f64 = table.iter().map(|t| t[a] * t[b]).sum::<f64>() * h;
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-10, "{a} {b} {s}");
            }
        }
    }

    #[test]
    fn wigner_element_examples() {
        assert!((wigner_matrix_element(0, 0, 0.0, 0.0) - real(1.0 / PI)).norm() < 1e-15);
        for (k, l) in [(0, 3), (2, 5), (4, 1)] {
            for (x, p) in [(0.3, -0.4), (1.2, 0.7), (-0.5, 2.0)] {
                let a = wigner_matrix_element(k, l, x, p);
                let b = wigner_matrix_element(l, k, x, p);
                assert!((a - b.conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn wigner_element_matches_quadrature() {
        let (k, l, x, p) = (2usize, 1usize, 0.3, -0.4);
        let oracle = simpson(
            |y| {
                let a = hermite_functions(k, x + y)[k];
                let b = hermite_functions(l, x - y)[l];
                Complex64::from_polar(a * b, 2.0 * p * y)
            },
            -12.0,
            12.0,
            4096,
        ) / PI;
        assert!((wigner_matrix_element(k, l, x, p) - oracle).norm() < 1e-8);
    }

    #[test]
    fn displaced_parity_links_to_wigner_elements() {
        let cutoff = 5;
        let d0 = displaced_parity(cutoff, ZERO);
        let c = libm::sqrt(2.0 * PI) * 2.0 / PI;
        for j in 0..=cutoff {
            let e = if j % 2 == 0 { c } else { -c };
            assert!((d0[(j, j)] - real(e)).norm() < 1e-14);
        }
        let (x, p) = (0.6, -0.25);
        let alpha = Complex64::new(x, p) * FRAC_1_SQRT_2;
        let w = displaced_parity(cutoff, alpha);
        for k in 0..=cutoff {
            for l in 0..=cutoff {
                let expected = wigner_matrix_element(k, l, x, p) * (c * PI);
                assert!((w[(k, l)] - expected).norm() < 1e-10);
            }
        }
        // vacuum expectation is the vacuum Wigner value
        let vac = w[(0, 0)].re;
        assert!((vac - c * libm::exp(-2.0 * alpha.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn quadrature_examples() {
        let xs: Vec<f64> = (0..=200).map(|i| -5.0 + 0.05 * i as f64).collect();
        let vac = DensityMatrix::fock(4, 0).unwrap();
        for theta in [0.0, 0.4, 2.0] {
            let p = quadrature_distribution(&vac, theta, &xs).unwrap();
            for (v, x) in p.iter().zip(&xs) {
                assert!((v - libm::exp(-x * x) / PI.sqrt()).abs() < 1e-10);
            }
        }
        let one = DensityMatrix::fock(3, 1).unwrap();
        let base = quadrature_distribution(&one, 0.0, &xs).unwrap();
        for t in 1..16 {
            let p = quadrature_distribution(&one, t as f64 * PI / 16.0, &xs).unwrap();
            let dev = p.iter().zip(&base).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(dev <= 1e-10);
        }
        let rho = random_rank_r_state(6, 3, 9).unwrap();
        let grid: Vec<f64> = (0..=1024).map(|i| -8.0 + i as f64 / 64.0).collect();
        let p = quadrature_distribution(&rho, 1.1, &grid).unwrap();
        assert!(p.iter().all(|&v| v >= -1e-10));
        let integral: f64 = p.windows(2).map(|w| 0.5 * (w[0] + w[1]) / 64.0).sum();
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn homodyne_vacuum_moments_and_determinism() {
        let vac = DensityMatrix::fock(2, 0).unwrap();
        let xs = homodyne_sample(&vac, 0.3, 100_000, 5).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(mean.abs() < 0.02);
        assert!((var - 0.5).abs() < 0.02);
        let again = homodyne_sample(&vac, 0.3, 100_000, 5).unwrap();
        assert_eq!(xs, again);
        assert!(homodyne_sample(&vac, 0.3, 0, 5).is_err());
    }

    #[test]
    fn homodyne_single_photon_passes_ks() {
        let one = DensityMatrix::fock(3, 1).unwrap();
        let shots = 100_000;
        let mut xs = homodyne_sample(&one, 0.0, shots, 17).unwrap();
        xs.sort_by(f64::total_cmp);
        // exact CDF of |1⟩: 1/2 + erf(x)/2 − x e^{−x²}/√π
        let exact = |x: f64| 0.5 + 0.5 * libm::erf(x) - x * libm::exp(-x * x) / PI.sqrt();
        let nf = shots as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = exact(x);
                (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / nf.sqrt(), "KS statistic {d}");
    }

    fn vacuum_setting(theta: f64, cutoff: usize) -> HomodyneSetting {
        let grid = uniform_zeta_grid(6.0, 61).unwrap();
        HomodyneSetting::new(theta, grid, cutoff).unwrap()
    }

    #[test]
    fn zeta_grid_validation() {
        assert!(HomodyneSetting::new(0.0, vec![-1.0, 0.0, 1.0], 2).is_ok());
        assert!(HomodyneSetting::new(0.0, vec![-1.0, 0.5], 2).is_err());
        assert!(HomodyneSetting::new(0.0, vec![1.0, -1.0], 2).is_err());
        let g = uniform_zeta_grid(default_zeta_max(3), DEFAULT_ZETA_POINTS).unwrap();
        assert!(check_zeta_grid(&g).is_ok());
        assert!(!g.contains(&0.0));
    }

    #[test]
    fn exact_slice_matches_fourier_transform() {
        let x_grid: Vec<f64> = (0..=2048).map(|i| -10.0 + i as f64 / 102.4).collect();
        for (rho, theta) in [
            (DensityMatrix::fock(6, 0).unwrap(), 0.0),
            (random_rank_r_state(7, 2, 31).unwrap(), 0.9),
        ] {
            let setting = vacuum_setting(theta, rho.dim() - 1);
            let slice = characteristic_slice_exact(&rho, &setting).unwrap();
            let p = quadrature_distribution(&rho, theta, &x_grid).unwrap();
            let h = x_grid[1] - x_grid[0];
            for (z, v) in setting.zeta_grid().iter().zip(&slice.values) {
                let mut acc = ZERO;
                for (i, (&x, &px)) in x_grid.iter().zip(&p).enumerate() {
                    let w = if i == 0 || i == x_grid.len() - 1 { 0.5 } else { 1.0 };
                    acc += Complex64::from_polar(px * w * h, -z * x);
                }
                assert!((acc - v).norm() < 1e-6, "zeta {z}: {acc} vs {v}");
            }
        }
    }

    #[test]
    fn exact_slice_symmetries() {
        let rho = random_rank_r_state(5, 2, 3).unwrap();
        let s = characteristic_slice_exact(&rho, &vacuum_setting(0.7, 4)).unwrap();
        let m = s.values.len();
        assert!((s.values[m / 2] - linalg::ONE).norm() < 1e-9);
        for i in 0..m {
            assert!((s.values[i] - s.values[m - 1 - i].conj()).norm() < 1e-10);
        }
        let vac = DensityMatrix::fock(4, 0).unwrap();
        let a = characteristic_slice_exact(&vac, &vacuum_setting(0.2, 4)).unwrap();
        let b = characteristic_slice_exact(&vac, &vacuum_setting(0.2 + PI / 2.0, 4)).unwrap();
        assert!((a.values[m / 2] - b.values[m / 2]).norm() < 1e-12);
    }

    #[test]
    fn real_state_slices_conjugate_under_reflection() {
        let rho = random_rank_r_state(4, 2, 12).unwrap();
        let real_rho = DensityMatrix::from_psd(rho.matrix().map(|z| real(z.re))).unwrap();
        let theta = 0.35;
        let a = characteristic_slice_exact(&real_rho, &vacuum_setting(theta, 3)).unwrap();
        let b = characteristic_slice_exact(&real_rho, &vacuum_setting(PI - theta, 3)).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn slice_estimates() {
        let setting = vacuum_setting(0.0, 3);
        let one = characteristic_slice_estimate(&[0.0], &setting).unwrap();
        assert!(one.values.iter().all(|v| (v - linalg::ONE).norm() < 1e-15));
        assert!(characteristic_slice_estimate(&[], &setting).is_err());

        let vac = DensityMatrix::fock(3, 0).unwrap();
        let grid = uniform_zeta_grid(4.0, 41).unwrap();
        let setting = HomodyneSetting::new(0.0, grid, 3).unwrap();
        let xs = homodyne_sample(&vac, 0.0, 100_000, 77).unwrap();
        let est = characteristic_slice_estimate(&xs, &setting).unwrap();
        let exact = characteristic_slice_exact(&vac, &setting).unwrap();
        let m = est.values.len();
        for i in 0..m {
            assert!((est.values[i] - exact.values[i]).norm() <= 0.02);
            assert_eq!(est.values[i], est.values[m - 1 - i].conj());
        }
    }

    #[test]
    fn loss_round_trips() {
        let rho = random_rank_r_state(4, 1, 5).unwrap();
        let s = characteristic_slice_exact(&rho, &vacuum_setting(0.4, 3)).unwrap();
        assert_eq!(loss_compensation(&s, 1.0).unwrap(), s);
        let lossy = apply_loss(&s, 0.8).unwrap();
        let back = loss_compensation(&lossy, 0.8).unwrap();
        for (a, b) in back.values.iter().zip(&s.values) {
            assert!((a - b).norm() < 1e-12);
        }
        assert!(loss_compensation(&s, 0.5).is_err());
        assert!(loss_compensation(&s, 0.3).is_err());
        assert!(loss_compensation_with_floor(&s, 0.3, 0.2).is_ok());
    }

    #[test]
    fn loss_envelope_matches_beam_splitter_model() {
        // a coherent state |β⟩ leaves the loss channel as |√η β⟩; rescaling the recorded
        // quadrature by 1/√η evaluates its slice at ζ/√η, which must equal the lossless
        // slice times the envelope
        let eta: f64 = 0.8;
        let beta = Complex64::new(0.6, 0.3);
        let coherent = |b: Complex64, cutoff: usize| {
            let lnf = ln_factorials(cutoff);
            let v: Vec<Complex64> = (0..=cutoff)
                .map(|k| Complex64::from_polar(libm::exp(-0.5 * b.norm_sqr() + k as f64 * libm::log(b.norm()) - 0.5 * lnf[k]), b.arg() * k as f64))
                .collect();
            DensityMatrix::pure(&v).unwrap()
        };
        let cutoff = 30;
        let setting = vacuum_setting(0.3, cutoff);
        let clean = characteristic_slice_exact(&coherent(beta, cutoff), &setting).unwrap();
        let scaled_grid: Vec<f64> = setting.zeta_grid().iter().map(|z| z / eta.sqrt()).collect();
        let scaled = HomodyneSetting::new(0.3, scaled_grid, cutoff).unwrap();
        let lossy = characteristic_slice_exact(&coherent(beta * eta.sqrt(), cutoff), &scaled).unwrap();
        let modelled = apply_loss(&clean, eta).unwrap();
        for (a, b) in modelled.values.iter().zip(&lossy.values) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn pointwise_sigma_value() {
        assert!((pointwise_wigner_sigma(8) - 3.0 * libm::log(9.0)).abs() < 1e-12);
    }
}
