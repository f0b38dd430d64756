//! JSON exchange formats for measurements, reconstructions and
//! certificate reports.
//!
//! Complex matrices are stored row-major as flat lists of `[re, im]`
//! pairs. Measured values are the raw expectation values `tr(w_i ρ)`; the
//! scale of the sampling operator is applied on load.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tomoframe_core::certify::CertificateReport;
use tomoframe_core::frames::HermitianObservable;
use tomoframe_core::reconstruct::ReconstructionResult;
use tomoframe_core::sampling::{MeasurementRecord, SamplingOperator};
use tomoframe_core::linalg::RVec;
use tomoframe_core::CMat;

use crate::config::{variant_name, NoiseSpec, SolverSpec};
use crate::error::{io_error, Error, Result};

pub fn matrix_to_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

pub fn pairs_to_matrix(pairs: &[[f64; 2]], dim: usize) -> Result<CMat> {
    if pairs.len() != dim * dim {
        return Err(Error::Format(format!("expected {} matrix entries, found {}", dim * dim, pairs.len())));
    }
    Ok(CMat::from_fn(dim, dim, |i, j| {
        let [re, im] = pairs[i * dim + j];
        Complex64::new(re, im)
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub dim: usize,
    pub frame_kind: String,
    pub observables: Vec<Vec<[f64; 2]>>,
    /// `tr(w_i ρ)` per observable.
    pub values: Vec<f64>,
    pub noise: NoiseSpec,
    pub seed: u64,
    /// Number of settings `m` in the `n²/m` normalization; defaults to the
    /// number of observables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<usize>,
    #[serde(default)]
    pub normalized: bool,
}

impl MeasurementFile {
    pub fn from_record(op: &SamplingOperator, b: &MeasurementRecord) -> Self {
        let scale = op.a_prefactor();
        Self {
            dim: op.dim(),
            frame_kind: op.frame_kind().to_string(),
            observables: op.observables().iter().map(|w| matrix_to_pairs(w.matrix())).collect(),
            values: b.values.iter().map(|v| v / scale).collect(),
            noise: b.noise.into(),
            seed: b.seed,
            settings: (op.settings() != op.rows()).then_some(op.settings()),
            normalized: op.normalized(),
        }
    }

    pub fn to_problem(&self) -> Result<(SamplingOperator, MeasurementRecord)> {
        if self.values.len() != self.observables.len() {
            return Err(Error::Format(format!("{} values for {} observables", self.values.len(), self.observables.len())));
        }
        let obs = self
            .observables
            .iter()
            .enumerate()
            .map(|(i, pairs)| Ok(HermitianObservable::new(pairs_to_matrix(pairs, self.dim)?, format!("w{i}"))?))
            .collect::<Result<Vec<_>>>()?;
        let settings = self.settings.unwrap_or(obs.len());
        let op = SamplingOperator::new(self.dim, settings, obs, self.normalized, self.frame_kind.clone())?;
        let scale = op.a_prefactor();
        let values = RVec::from_iterator(self.values.len(), self.values.iter().map(|v| v * scale));
        Ok((op, MeasurementRecord { values, noise: self.noise.model(), seed: self.seed }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub dim: usize,
    pub solver: SolverSpec,
    pub sigma_star: Vec<[f64; 2]>,
    pub trace_norm: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub data_residual: f64,
    pub converged: bool,
    pub rank: usize,
    pub measurements: MeasurementFile,
}

impl SolutionFile {
    pub fn new(solver: SolverSpec, result: &ReconstructionResult, measurements: MeasurementFile) -> Self {
        Self {
            dim: result.sigma_star.nrows(),
            solver,
            sigma_star: matrix_to_pairs(&result.sigma_star),
            trace_norm: result.trace_norm,
            iterations: result.iterations,
            final_residual: result.final_residual,
            data_residual: result.data_residual,
            converged: result.converged,
            rank: result.rank,
            measurements,
        }
    }

    pub fn result(&self) -> Result<ReconstructionResult> {
        Ok(ReconstructionResult {
            sigma_star: pairs_to_matrix(&self.sigma_star, self.dim)?,
            trace_norm: self.trace_norm,
            iterations: self.iterations,
            final_residual: self.final_residual,
            data_residual: self.data_residual,
            converged: self.converged,
            rank: self.rank,
            dual_witness: None,
            objective_history: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    /// `false` when no truncation rank gave a valid certificate.
    pub certified: bool,
    pub tried: usize,
    #[serde(with = "variant_name")]
    pub variant: tomoframe_core::certify::ConditionVariant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_operator_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub robustness_bound: Option<f64>,
    pub trace_norm_of_solution: f64,
    pub trace_norm_is_one: bool,
    pub many_measurements_warning: bool,
}

impl ReportFile {
    pub fn new(variant: tomoframe_core::certify::ConditionVariant, tried: usize, report: Option<&CertificateReport>, trace_norm: f64, trace_tol: f64, warn: bool) -> Self {
        Self {
            certified: report.is_some(),
            tried,
            variant,
            q: report.map(|r| r.q),
            c1: report.map(|r| r.c1),
            c2: report.map(|r| r.c2),
            c3: report.map(|r| r.c3),
            spectral_lower: report.map(|r| r.spectral_lower),
            truncation_error: report.map(|r| r.truncation_error),
            r_operator_norm: report.map(|r| r.r_operator_norm),
            robustness_bound: report.and_then(|r| r.robustness_bound),
            trace_norm_of_solution: trace_norm,
            trace_norm_is_one: (trace_norm - 1.0).abs() <= trace_tol,
            many_measurements_warning: warn,
        }
    }
}

/// A density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub matrix: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn new(m: &CMat) -> Self {
        Self { dim: m.nrows(), matrix: matrix_to_pairs(m) }
    }

    pub fn matrix(&self) -> Result<CMat> {
        pairs_to_matrix(&self.matrix, self.dim)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(io_error(path))
}
