use dfs_lab::noise::{NoiseStrengths, SystemBathModel};
use dfs_lab::tensor::DenseOperator;
use proptest::prelude::*;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn collective_models(seed: u64) -> Vec<SystemBathModel> {
    let s = NoiseStrengths::default();
    vec![
        SystemBathModel::collective_dephasing(2, 1, s, seed).unwrap(),
        SystemBathModel::collective_dephasing(3, 2, s, seed).unwrap(),
        SystemBathModel::collective_decoherence(2, 2, s, seed).unwrap(),
        SystemBathModel::collective_decoherence(3, 1, s, seed).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonians_are_hermitian(seed in any::<u64>()) {
        let s = NoiseStrengths::default();
        let mut models = collective_models(seed);
        models.push(SystemBathModel::generic_two_qubit(2, s, seed).unwrap());
        models.push(SystemBathModel::linear_per_qubit(3, 1, s, seed).unwrap());
        models.push(SystemBathModel::linear_per_qubit(2, 1, s, seed).unwrap().with_zz(0, 1, 2e4).unwrap());
        for m in models {
            let h = m.dense_hamiltonian();
            prop_assert!(h.hermiticity_error() < 1e-10 * h.max_abs().max(1.0));
        }
    }

    #[test]
    fn collective_models_commute_with_permutations(seed in any::<u64>()) {
        for m in collective_models(seed) {
            prop_assert!(m.collective);
            let h = m.dense_hamiltonian();
            for p in permutations(m.n_sys) {
                let full: Vec<usize> = p.iter().copied().chain(m.n_sys..m.n_total()).collect();
                let perm = DenseOperator::qubit_permutation(&full).unwrap();
                prop_assert!(h.commutator(&perm).max_abs() < 1e-10);
            }
        }
    }

    #[test]
    fn seeded_constructors_reproduce(seed in any::<u64>()) {
        let s = NoiseStrengths::default();
        prop_assert_eq!(
            SystemBathModel::generic_two_qubit(2, s, seed).unwrap(),
            SystemBathModel::generic_two_qubit(2, s, seed).unwrap()
        );
        prop_assert_eq!(
            SystemBathModel::linear_per_qubit(3, 2, s, seed).unwrap(),
            SystemBathModel::linear_per_qubit(3, 2, s, seed).unwrap()
        );
    }
}
