//! Homodyne detection as a generalized tight frame.
//!
//! A setting fixes one phase `θ_j ∈ [0, π)` per mode and records the
//! characteristic function on a product grid of Fourier variables. On
//! `M` modes with grid `{ζ}` the setting contributes
//! `𝒬_θ = n^{−2} Σ_ζ ω_ζ |D(α_ζ)⟩⟨D(α_ζ)|` with trapezoid weights
//! `ω_ζ = Π_j |ζ_j| h_j / 2`, so that the average over `θ` resolves the
//! identity up to discretization. The non-Hermitian displacements are
//! encoded by the Hermitian pairs `(D + D†)/√2` and `i(D − D†)/√2` over
//! grid points modulo `ζ ↦ −ζ`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};
use num_complex::Complex64;
use rand::Rng;

use crate::cv::{check_zeta_grid, default_zeta_max, displacement_matrix, homodyne_alpha, uniform_zeta_grid, DEFAULT_ZETA_POINTS};
use crate::error::{invalid, Error, Result};
use crate::frames::{HermitianObservable, MAX_TENSOR_DIM};
use crate::linalg::{self, real, vec_hermitian, CMat, RMat};

#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneFrame {
    cutoff: usize,
    modes: usize,
    zeta_grid: Vec<f64>,
    weights: Vec<f64>,
}

impl HomodyneFrame {
    pub fn new(cutoff: usize, modes: usize, zeta_grid: Vec<f64>) -> Result<Self> {
        check_zeta_grid(&zeta_grid)?;
        if cutoff < 1 || modes < 1 {
            return Err(invalid("homodyne frame needs cutoff >= 1 and at least one mode"));
        }
        let dim = (0..modes).try_fold(1usize, |a, _| a.checked_mul(cutoff + 1).filter(|&d| d <= MAX_TENSOR_DIM));
        if dim.is_none() {
            return Err(Error::Resource(format!("{} modes with cutoff {cutoff} exceed dimension {MAX_TENSOR_DIM}", modes)));
        }
        let g = zeta_grid.len();
        let weights = (0..g)
            .map(|i| {
                if g == 1 {
                    return 0.0;
                }
                let lo = if i == 0 { zeta_grid[0] } else { zeta_grid[i - 1] };
                let hi = if i + 1 == g { zeta_grid[g - 1] } else { zeta_grid[i + 1] };
                0.5 * (hi - lo) * zeta_grid[i].abs() * 0.5
            })
            .collect();
        Ok(Self { cutoff, modes, zeta_grid, weights })
    }

    /// Default grid: 64 points on `[−4√d, 4√d]` with `d = N + 1`.
    pub fn with_default_grid(cutoff: usize, modes: usize) -> Result<Self> {
        let grid = uniform_zeta_grid(default_zeta_max(cutoff + 1), DEFAULT_ZETA_POINTS)?;
        Self::new(cutoff, modes, grid)
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn zeta_grid(&self) -> &[f64] {
        &self.zeta_grid
    }

    /// Per-mode quadrature weights `|ζ| h / 2`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        (self.cutoff + 1).pow(self.modes as u32)
    }

    /// Observables produced by one setting: one per product-grid point.
    pub fn rows_per_setting(&self) -> usize {
        self.representatives().iter().map(|(_, pair)| if *pair { 2 } else { 1 }).sum()
    }

    pub fn sample_angles<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.modes).map(|_| rng.random::<f64>() * PI).collect()
    }

    /// Product-grid indices up to `ζ ↦ −ζ`, flagged `true` when the point
    /// differs from its mirror image (giving two Hermitian observables).
    fn representatives(&self) -> Vec<(Vec<usize>, bool)> {
        let g = self.zeta_grid.len();
        let total = g.pow(self.modes as u32);
        let mut out = Vec::new();
        for flat in 0..total {
            let mut idx = Vec::with_capacity(self.modes);
            let mut rest = flat;
            for _ in 0..self.modes {
                idx.push(rest % g);
                rest /= g;
            }
            idx.reverse();
            if idx.iter().any(|&i| self.weights[i] == 0.0) {
                // zero-weight points (ζ = 0 or a one-point grid) carry nothing
                continue;
            }
            let mirror: Vec<usize> = idx.iter().map(|&i| g - 1 - i).collect();
            match idx.cmp(&mirror) {
                core::cmp::Ordering::Greater => out.push((idx, true)),
                core::cmp::Ordering::Equal => out.push((idx, false)),
                core::cmp::Ordering::Less => {}
            }
        }
        out
    }

    /// Multimode displacement `⊗_j D_N(α(θ_j, ζ_j))` at grid index `idx`.
    pub fn displacement(&self, thetas: &[f64], idx: &[usize]) -> CMat {
        let mut d = CMat::from_element(1, 1, linalg::ONE);
        for (j, &i) in idx.iter().enumerate() {
            d = linalg::kron(&d, &displacement_matrix(self.cutoff, homodyne_alpha(thetas[j], self.zeta_grid[i])));
        }
        d
    }

    fn weight(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.weights[i]).product()
    }

    /// The Hermitian observables of the setting `thetas`.
    pub fn setting_rows(&self, thetas: &[f64]) -> Vec<HermitianObservable> {
        assert_eq!(thetas.len(), self.modes, "one phase per mode");
        let n = self.dim() as f64;
        let theta_label: Vec<String> = thetas.iter().map(|t| format!("{t:.6}")).collect();
        let theta_label = theta_label.join(",");
        let mut rows = Vec::new();
        for (idx, pair) in self.representatives() {
            let d = self.displacement(thetas, &idx);
            let scale = libm::sqrt(self.weight(&idx)) / n;
            let zeta: Vec<String> = idx.iter().map(|&i| format!("{:.6}", self.zeta_grid[i])).collect();
            let zeta = zeta.join(",");
            if pair {
                let a = d.adjoint();
                let re = linalg::hermitize(&((&d + &a) * real(scale * FRAC_1_SQRT_2)));
                let im = linalg::hermitize(&((&d - &a) * Complex64::new(0.0, scale * FRAC_1_SQRT_2)));
                rows.push(HermitianObservable::from_hermitian(re, format!("theta=({theta_label});zeta=({zeta}):re")));
                rows.push(HermitianObservable::from_hermitian(im, format!("theta=({theta_label});zeta=({zeta}):im")));
            } else {
                let h = linalg::hermitize(&(d * real(scale)));
                rows.push(HermitianObservable::from_hermitian(h, format!("theta=({theta_label});zeta=({zeta})")));
            }
        }
        rows
    }

    /// `𝒬_θ` on the vectorized Hermitian space.
    pub fn q_theta(&self, thetas: &[f64]) -> RMat {
        let d = self.dim() * self.dim();
        let mut q = RMat::zeros(d, d);
        for w in self.setting_rows(thetas) {
            let v = vec_hermitian(w.matrix());
            q.ger(1.0, &v, &v, 1.0);
        }
        q
    }

    /// `(1/π^M)∫𝒬_θ dθ` by the midpoint rule with `points` phases per mode.
    pub fn q_average(&self, points: usize) -> RMat {
        let d = self.dim() * self.dim();
        let mut acc = RMat::zeros(d, d);
        let total = points.pow(self.modes as u32);
        for flat in 0..total {
            let mut rest = flat;
            let thetas: Vec<f64> = (0..self.modes)
                .map(|_| {
                    let i = rest % points;
                    rest /= points;
                    PI * (i as f64 + 0.5) / points as f64
                })
                .collect();
            acc += self.q_theta(&thetas);
        }
        acc / total as f64
    }

    /// `‖n² · (1/π^M)∫𝒬_θ dθ − 1‖` under the discretization.
    pub fn resolution_defect(&self, points: usize) -> f64 {
        let n2 = (self.dim() * self.dim()) as f64;
        let mut s = self.q_average(points) * n2;
        for i in 0..s.nrows() {
            s[(i, i)] -= 1.0;
        }
        linalg::symmetric_operator_norm(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cv::{characteristic_slice_exact, HomodyneSetting};
    use crate::states::random_rank_r_state;

    #[test]
    fn single_mode_row_count_matches_grid() {
        let f = HomodyneFrame::with_default_grid(2, 1).unwrap();
        assert_eq!(f.rows_per_setting(), 64);
        assert_eq!(f.setting_rows(&[0.3]).len(), 64);
    }

    #[test]
    fn multimode_row_count() {
        let grid = uniform_zeta_grid(3.0, 6).unwrap();
        let f = HomodyneFrame::new(2, 3, grid).unwrap();
        assert_eq!(f.dim(), 27);
        assert_eq!(f.rows_per_setting(), 216);
    }

    #[test]
    fn averaged_q_resolves_identity_on_n3() {
        let f = HomodyneFrame::with_default_grid(2, 1).unwrap();
        let defect = f.resolution_defect(64);
        assert!(defect < 0.05, "defect {defect}");
    }

    #[test]
    fn q_theta_is_psd() {
        let f = HomodyneFrame::with_default_grid(2, 1).unwrap();
        let (vals, _) = linalg::eigh_real(&f.q_theta(&[1.1]));
        assert!(vals.iter().all(|&v| v > -1e-12));
    }

    #[test]
    fn rows_encode_slices() {
        let f = HomodyneFrame::with_default_grid(3, 1).unwrap();
        let rho = random_rank_r_state(4, 2, 5).unwrap();
        let theta = 0.8;
        let setting = HomodyneSetting::new(theta, f.zeta_grid().to_vec(), 3).unwrap();
        let slice = characteristic_slice_exact(&rho, &setting).unwrap();
        let rows = f.setting_rows(&[theta]);
        let g = f.zeta_grid().len();
        let n = 4.0;
        let mut k = 0;
        for i in g / 2..g {
            let s = slice.values[i];
            let scale = libm::sqrt(f.weights()[i]) / n;
            let re = linalg::hs_inner(rows[k].matrix(), rho.matrix()).re;
            let im = linalg::hs_inner(rows[k + 1].matrix(), rho.matrix()).re;
            assert!((re - scale * core::f64::consts::SQRT_2 * s.re).abs() < 1e-12);
            assert!((im + scale * core::f64::consts::SQRT_2 * s.im).abs() < 1e-12);
            k += 2;
        }
    }

    #[test]
    fn invalid_grids_rejected() {
        assert!(HomodyneFrame::new(2, 1, alloc::vec![0.0, 1.0]).is_err());
        assert!(HomodyneFrame::new(0, 1, alloc::vec![-1.0, 1.0]).is_err());
        assert!(matches!(HomodyneFrame::new(4, 5, alloc::vec![-1.0, 1.0]), Err(Error::Resource(_))));
    }
}
