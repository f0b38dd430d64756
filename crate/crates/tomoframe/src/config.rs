//! Serializable experiment configuration.

use serde::{Deserialize, Serialize};
use tomoframe_core::certify::ConditionVariant;
use tomoframe_core::cv::{default_zeta_max, uniform_zeta_grid, DEFAULT_ZETA_POINTS};
use tomoframe_core::frames::{
    displacement_frame, haar_hermitian_frame, homodyne_frame_descriptor, matrix_entry_frame, pauli_frame, pointwise_wigner_frame,
    tensor_product_frame, uniform_displacement_frame, FrameDescriptor,
};
use tomoframe_core::homodyne::HomodyneFrame;
use tomoframe_core::reconstruct::SolverConfig;
use tomoframe_core::sampling::NoiseModel;

use crate::error::{Error, Result};

/// Frame measure and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FrameSpec {
    Pauli { qubits: usize },
    Haar { dim: usize },
    MatrixEntry { dim: usize },
    /// The first `m` matrix units in a fixed order instead of random draws;
    /// `m = n²` gives the complete orthonormal basis.
    CompleteBasis { dim: usize },
    Tensor { local: Box<FrameSpec>, copies: usize },
    Displacement { cutoff: usize },
    UniformDisplacement { cutoff: usize, max_radius: f64 },
    Wigner { cutoff: usize },
    Homodyne {
        cutoff: usize,
        modes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zeta_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        zeta_points: Option<usize>,
    },
}

impl FrameSpec {
    pub fn build(&self) -> Result<FrameDescriptor> {
        Ok(match self {
            FrameSpec::Pauli { qubits } => pauli_frame(*qubits)?,
            FrameSpec::Haar { dim } => haar_hermitian_frame(*dim)?,
            FrameSpec::MatrixEntry { dim } | FrameSpec::CompleteBasis { dim } => matrix_entry_frame(*dim)?,
            FrameSpec::Tensor { local, copies } => tensor_product_frame(local.build()?, *copies)?,
            FrameSpec::Displacement { cutoff } => displacement_frame(*cutoff)?,
            FrameSpec::UniformDisplacement { cutoff, max_radius } => uniform_displacement_frame(*cutoff, *max_radius)?,
            FrameSpec::Wigner { cutoff } => pointwise_wigner_frame(*cutoff)?,
            FrameSpec::Homodyne { cutoff, modes, zeta_max, zeta_points } => {
                let zmax = zeta_max.unwrap_or_else(|| default_zeta_max(cutoff + 1));
                let grid = uniform_zeta_grid(zmax, zeta_points.unwrap_or(DEFAULT_ZETA_POINTS))?;
                homodyne_frame_descriptor(HomodyneFrame::new(*cutoff, *modes, grid)?)
            }
        })
    }

    /// Parses the short names accepted by `frame info`.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "pauli" => FrameSpec::Pauli { qubits: 4 },
            "haar" => FrameSpec::Haar { dim: 16 },
            "matrix-entry" => FrameSpec::MatrixEntry { dim: 16 },
            "complete-basis" => FrameSpec::CompleteBasis { dim: 16 },
            "tensor" | "local-haar" => FrameSpec::Tensor { local: Box::new(FrameSpec::Haar { dim: 2 }), copies: 4 },
            "displacement" => FrameSpec::Displacement { cutoff: 15 },
            "uniform-displacement" => FrameSpec::UniformDisplacement { cutoff: 15, max_radius: 5.0 },
            "wigner" => FrameSpec::Wigner { cutoff: 15 },
            "homodyne" => FrameSpec::Homodyne { cutoff: 2, modes: 3, zeta_max: None, zeta_points: None },
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 9] =
        ["pauli", "haar", "matrix-entry", "complete-basis", "tensor", "displacement", "uniform-displacement", "wigner", "homodyne"];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseSpec {
    Exact,
    Gaussian { std: f64 },
    Shots { count: u64 },
}

impl NoiseSpec {
    pub fn model(self) -> NoiseModel {
        match self {
            NoiseSpec::Exact => NoiseModel::Exact,
            NoiseSpec::Gaussian { std } => NoiseModel::Gaussian { std },
            NoiseSpec::Shots { count } => NoiseModel::Shots { count },
        }
    }
}

impl From<NoiseModel> for NoiseSpec {
    fn from(n: NoiseModel) -> Self {
        match n {
            NoiseModel::Exact => NoiseSpec::Exact,
            NoiseModel::Gaussian { std } => NoiseSpec::Gaussian { std },
            NoiseModel::Shots { count } => NoiseSpec::Shots { count },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "program", rename_all = "snake_case")]
pub enum SolverKind {
    Equality,
    Tube { delta: f64 },
    Dantzig { lambda: f64 },
    Lasso { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    #[serde(flatten)]
    pub kind: SolverKind,
    pub max_iterations: usize,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { kind: SolverKind::Equality, max_iterations: d.max_iterations, tolerance: d.tolerance, step: d.step }
    }
}

impl SolverSpec {
    pub fn config(&self) -> SolverConfig {
        SolverConfig { max_iterations: self.max_iterations, tolerance: self.tolerance, step: self.step, ..SolverConfig::default() }
    }
}

/// Serde bridge for [`ConditionVariant`] through its short name.
pub mod variant_name {
    use super::ConditionVariant;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &ConditionVariant, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(v.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ConditionVariant, D::Error> {
        let name = String::deserialize(d)?;
        ConditionVariant::from_name(&name).ok_or_else(|| D::Error::custom(format!("unknown certificate variant `{name}`")))
    }
}

pub const DEFAULT_RECOVERY_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_TRIALS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub frame: FrameSpec,
    pub state: StateSpec,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub noise: NoiseSpec,
    pub solver: SolverSpec,
    #[serde(with = "variant_name")]
    pub certificate: ConditionVariant,
    pub recovery_threshold: f64,
    /// Master seed; trial seeds are derived from it.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(frame: FrameSpec, rank: usize, m_grid: Vec<usize>) -> Self {
        Self {
            frame,
            state: StateSpec { rank },
            m_grid,
            trials: DEFAULT_TRIALS,
            noise: NoiseSpec::Exact,
            solver: SolverSpec::default(),
            certificate: ConditionVariant::Relaxed,
            recovery_threshold: DEFAULT_RECOVERY_THRESHOLD,
            seed: 0,
        }
    }

    /// Checks the config and builds its frame.
    pub fn validate(&self) -> Result<FrameDescriptor> {
        let frame = self.frame.build()?;
        let n = frame.dim();
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.m_grid.is_empty() || self.m_grid[0] == 0 {
            return Err(Error::Config("m grid must be non-empty with positive entries".into()));
        }
        if self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("m grid must be strictly increasing".into()));
        }
        if self.state.rank == 0 || self.state.rank > n {
            return Err(Error::Config(format!("state rank {} outside 1..={n}", self.state.rank)));
        }
        if let FrameSpec::CompleteBasis { .. } = self.frame {
            if *self.m_grid.last().unwrap() > n * n {
                return Err(Error::Config(format!("complete basis has only {} elements", n * n)));
            }
        }
        if !(self.recovery_threshold > 0.0) {
            return Err(Error::Config("recovery threshold must be positive".into()));
        }
        let s = &self.solver;
        if s.max_iterations == 0 || !(s.tolerance > 0.0) || s.step.is_some_and(|x| !(x > 0.0)) {
            return Err(Error::Config("solver iterations, tolerance and step must be positive".into()));
        }
        match s.kind {
            SolverKind::Equality => {}
            SolverKind::Tube { delta: x } | SolverKind::Dantzig { lambda: x } | SolverKind::Lasso { mu: x } => {
                if !(x >= 0.0) || !x.is_finite() {
                    return Err(Error::Config("solver parameter must be finite and non-negative".into()));
                }
            }
        }
        match self.noise {
            NoiseSpec::Gaussian { std } if !(std >= 0.0) || !std.is_finite() => Err(Error::Config("noise std must be non-negative".into())),
            NoiseSpec::Shots { count: 0 } => Err(Error::Config("shot count must be positive".into())),
            _ => Ok(frame),
        }
    }
}
