use tomoframe::config::{FrameSpec, NoiseSpec, SolverKind};
use tomoframe::experiments::{run_experiment, run_success_curve, RunOptions};
use tomoframe::output::csv_string;
use tomoframe::{builtin_scenarios, ExperimentConfig};
use tomoframe_core::certify::ConditionVariant;

fn small(frame: FrameSpec, rank: usize, grid: Vec<usize>, trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(frame, rank, grid);
    c.trials = trials;
    c
}

#[test]
fn configs_round_trip_through_json() {
    let mut c = small(FrameSpec::Homodyne { cutoff: 2, modes: 1, zeta_max: Some(3.0), zeta_points: Some(8) }, 1, vec![1, 2, 3], 4);
    c.noise = NoiseSpec::Shots { count: 1000 };
    c.solver.kind = SolverKind::Dantzig { lambda: 0.01 };
    c.certificate = ConditionVariant::Noisy;
    let text = serde_json::to_string(&c).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
    for s in builtin_scenarios() {
        for curve in s.curves {
            let text = serde_json::to_string(&curve.config).unwrap();
            assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), curve.config);
        }
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let c = small(FrameSpec::Haar { dim: 4 }, 1, vec![4, 8, 12], 6);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_success_curve(&c, RunOptions { keep_outcomes: true, ..Default::default() }).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(csv_string(&one), csv_string(&run(8)));
}

#[test]
fn seeds_change_the_draws() {
    let mut c = small(FrameSpec::Pauli { qubits: 2 }, 1, vec![6], 4);
    let opts = RunOptions { keep_outcomes: true, ..Default::default() };
    let a = run_success_curve(&c, opts).unwrap();
    c.seed += 1;
    let b = run_success_curve(&c, opts).unwrap();
    assert_ne!(a[0].outcomes[0].error, b[0].outcomes[0].error);
}

#[test]
fn records_echo_their_config() {
    let c = small(FrameSpec::Pauli { qubits: 1 }, 1, vec![4], 2);
    let rec = run_experiment("tiny", &c, RunOptions::default()).unwrap();
    assert_eq!(rec.label, "tiny");
    assert_eq!(rec.config, c);
    let json = serde_json::to_value(&rec).unwrap();
    assert!(json["points"][0].get("outcomes").is_none());
}

#[test]
fn noisy_runs_do_not_claim_exact_recovery() {
    let mut c = small(FrameSpec::Pauli { qubits: 2 }, 1, vec![16], 4);
    c.noise = NoiseSpec::Gaussian { std: 0.05 };
    c.solver.kind = SolverKind::Lasso { mu: 0.05 };
    c.certificate = ConditionVariant::Noisy;
    let p = &run_success_curve(&c, RunOptions::default()).unwrap()[0];
    assert_eq!(p.recovered, 0);
    assert!(p.certified <= p.trials);
}

#[test]
fn full_sampling_of_a_mixed_state_certifies() {
    let c = small(FrameSpec::CompleteBasis { dim: 3 }, 3, vec![9], 2);
    let p = &run_success_curve(&c, RunOptions::default()).unwrap()[0];
    assert_eq!((p.recovered, p.certified), (2, 2));
}
