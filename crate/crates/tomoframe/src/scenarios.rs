//! Built-in study designs.

use crate::config::{ExperimentConfig, FrameSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: &'static str,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub curves: Vec<Curve>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.curves[0].config.frame.build().map_or(0, |f| f.dim())
    }

    pub fn rank(&self) -> usize {
        self.curves[0].config.state.rank
    }

    /// Applies `f` to every curve's config.
    pub fn map_configs(mut self, mut f: impl FnMut(&mut ExperimentConfig)) -> Self {
        for c in &mut self.curves {
            f(&mut c.config);
        }
        self
    }
}

fn step_grid(step: usize, count: usize) -> Vec<usize> {
    (1..=count).map(|i| i * step).collect()
}

/// Homodyne Fourier grid used by `fig3`: 8 points per mode on `[−3, 3]`.
pub const FIG3_ZETA_MAX: f64 = 3.0;
pub const FIG3_ZETA_POINTS: usize = 8;

pub fn builtin_scenarios() -> Vec<Scenario> {
    let qubits = || FrameSpec::Pauli { qubits: 4 };
    let global = FrameSpec::Haar { dim: 16 };
    let local = FrameSpec::Tensor { local: Box::new(FrameSpec::Haar { dim: 2 }), copies: 4 };
    let homodyne = FrameSpec::Homodyne { cutoff: 2, modes: 3, zeta_max: Some(FIG3_ZETA_MAX), zeta_points: Some(FIG3_ZETA_POINTS) };
    let mut fig3 = ExperimentConfig::new(homodyne, 5, (1..=6).collect());
    fig3.trials = 20;
    vec![
        Scenario {
            name: "fig1",
            description: "random pure state on 4 qubits, Pauli measurements",
            curves: vec![Curve { label: "pauli", config: ExperimentConfig::new(qubits(), 1, step_grid(20, 12)) }],
        },
        Scenario {
            name: "fig2",
            description: "pure state on 4 qubits, global Haar-Hermitian vs local tensor-product observables",
            curves: vec![
                Curve { label: "global", config: ExperimentConfig::new(global, 1, step_grid(20, 12)) },
                Curve { label: "local", config: ExperimentConfig::new(local, 1, step_grid(20, 12)) },
            ],
        },
        Scenario {
            name: "fig3",
            description: "rank-5 state on 3 modes with up to 2 photons each, homodyne settings",
            curves: vec![Curve { label: "homodyne", config: fig3 }],
        },
        Scenario {
            name: "fig4",
            description: "random pure state of one mode truncated at 15 photons, normalized displacements with |alpha| uniform on [0, 5]",
            curves: vec![Curve {
                label: "displacement",
                config: ExperimentConfig::new(FrameSpec::UniformDisplacement { cutoff: 15, max_radius: 5.0 }, 1, step_grid(20, 12)),
            }],
        },
    ]
}

pub fn scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_parameters() {
        let dims: Vec<(usize, usize)> = builtin_scenarios().iter().map(|s| (s.dim(), s.rank())).collect();
        assert_eq!(dims, vec![(16, 1), (16, 1), (27, 5), (16, 1)]);
        assert_eq!(scenario("fig2").unwrap().curves.len(), 2);
        for s in builtin_scenarios() {
            for c in &s.curves {
                c.config.validate().unwrap();
            }
        }
        assert!(scenario("fig5").is_none());
    }
}
