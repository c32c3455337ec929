use dfs_lab::analysis::empirical_fidelity;
use dfs_lab::codes::{CodeSpec, GaugeSpec};
use dfs_lab::engine::{exact_acceptance, exact_fidelity, run, simulate, ExperimentPlan, InitialState, Protocol};
use dfs_lab::noise::{GateNoiseModel, NoiseStrengths, SystemBathModel};
use dfs_lab::sequences::{dfs2_sequence, dfs3_sequence, xy4, SequenceMode};
use proptest::prelude::*;

fn plan(kind: u8, theta: f64, phi: f64, seed: u64, dd: bool, noisy_gates: bool) -> ExperimentPlan {
    let s = NoiseStrengths::default();
    let (code, model, seq) = match kind {
        0 => (None, SystemBathModel::linear_per_qubit(1, 1, s, seed).unwrap(), xy4(1e-7).unwrap()),
        1 => (Some(CodeSpec::dfs2()), SystemBathModel::generic_two_qubit(1, s, seed).unwrap(), dfs2_sequence(1e-7).unwrap()),
        _ => (Some(CodeSpec::dfs3()), SystemBathModel::linear_per_qubit(3, 1, s, seed).unwrap(), dfs3_sequence(1e-7).unwrap()),
    };
    let gate_noise = noisy_gates.then(GateNoiseModel::manila);
    let seq = if noisy_gates { seq.with_mode(SequenceMode::CompositeNoisy) } else { seq };
    let protocol = if dd { Protocol::Dd(seq) } else { Protocol::matched_free(&seq, gate_noise.as_ref()).unwrap() };
    let mut initial = InitialState::new(theta, phi);
    if kind == 2 {
        initial = initial.with_gauge(GaugeSpec::from_angle(phi / 2.0));
    }
    let mut p = ExperimentPlan::new(code, initial, model, protocol);
    p.gate_noise = gate_noise;
    p.repetitions = vec![1, 4, 10];
    p.shots = 2000;
    p.seed = seed;
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn outcome_distributions_stay_normalized(
        kind in 0u8..3, theta in 0.0..3.14f64, phi in 0.0..6.28f64, seed in any::<u64>(), dd in any::<bool>(), noisy in any::<bool>(),
    ) {
        for pt in simulate(&plan(kind, theta, phi, seed, dd, noisy)).unwrap() {
            prop_assert!((pt.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!((pt.probs_readout.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(pt.probs.iter().all(|&p| p > -1e-12));
        }
    }

    #[test]
    fn reruns_are_bit_identical(kind in 0u8..3, seed in any::<u64>(), noisy in any::<bool>()) {
        let p = plan(kind, 1.0, 0.5, seed, true, noisy);
        prop_assert_eq!(run(&p).unwrap(), run(&p).unwrap());
    }

    #[test]
    fn sampled_estimates_match_exact(kind in 0u8..3, theta in 0.0..3.14f64, phi in 0.0..6.28f64, seed in any::<u64>(), dd in any::<bool>()) {
        let p = plan(kind, theta, phi, seed, dd, false);
        let records = run(&p).unwrap();
        let bound = 4.0 / (p.shots as f64).sqrt();
        for &m in &p.repetitions {
            let at_m: Vec<_> = records.iter().filter(|r| r.m == m).cloned().collect();
            let accepted = at_m.iter().filter(|r| r.accepted).count() as f64 / at_m.len() as f64;
            prop_assert!((accepted - exact_acceptance(&p, m).unwrap()).abs() < bound);
            let fid = empirical_fidelity(&at_m, p.code.is_some()).unwrap();
            prop_assert!((fid - exact_fidelity(&p, m).unwrap()).abs() < bound);
        }
    }
}
