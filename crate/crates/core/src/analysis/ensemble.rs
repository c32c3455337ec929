use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PauliPole,
    Haar,
}

/// Bloch-sphere states `(θ, φ)` used to average fidelities over inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEnsemble {
    pub states: Vec<(f64, f64)>,
    pub provenance: Vec<Provenance>,
}

impl StateEnsemble {
    /// The six Pauli eigenstates: ±z, ±x, ±y.
    pub fn poles() -> Self {
        let states = vec![
            (0.0, 0.0),
            (PI, 0.0),
            (FRAC_PI_2, 0.0),
            (FRAC_PI_2, PI),
            (FRAC_PI_2, FRAC_PI_2),
            (FRAC_PI_2, 3.0 * FRAC_PI_2),
        ];
        StateEnsemble { provenance: vec![Provenance::PauliPole; 6], states }
    }

    /// `n` Haar-random pure states from a seeded stream.
    pub fn haar(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                ((1.0 - 2.0 * u).acos(), 2.0 * PI * v)
            })
            .collect();
        StateEnsemble { states, provenance: vec![Provenance::Haar; n] }
    }

    /// Six poles followed by 14 Haar samples.
    pub fn standard(seed: u64) -> Self {
        let mut e = Self::poles();
        let h = Self::haar(14, seed);
        e.states.extend(h.states);
        e.provenance.extend(h.provenance);
        e
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::depolarize;
    use crate::tensor::Ket;

    #[test]
    fn standard_has_twenty_states() {
        let e = StateEnsemble::standard(7);
        assert_eq!(e.len(), 20);
        assert_eq!(e.provenance.iter().filter(|p| **p == Provenance::PauliPole).count(), 6);
        assert_eq!(e, StateEnsemble::standard(7));
        assert_ne!(e, StateEnsemble::standard(8));
    }

    #[test]
    fn poles_are_pauli_eigenstates() {
        let e = StateEnsemble::poles();
        let want = [(0.0, 0.0, 1.0), (0.0, 0.0, -1.0), (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, -1.0, 0.0)];
        for (&(t, p), &(x, y, z)) in e.states.iter().zip(&want) {
            let r = (t.sin() * p.cos(), t.sin() * p.sin(), t.cos());
            assert!((r.0 - x).abs() < 1e-12 && (r.1 - y).abs() < 1e-12 && (r.2 - z).abs() < 1e-12);
        }
    }

    #[test]
    fn depolarizing_ensemble_average() {
        // Average fidelity of a qubit depolarizing channel is 1 - p/2.
        let p = 0.3;
        let e = StateEnsemble::standard(11);
        let fids: Vec<f64> = e
            .states
            .iter()
            .map(|&(t, ph)| {
                let k = Ket::bloch(t, ph);
                depolarize(&k.to_density(), &[0], p).unwrap().fidelity_with(&k)
            })
            .collect();
        let avg = super::super::state_averaged_fidelity(&fids);
        assert!((avg - (1.0 - p / 2.0)).abs() < 0.01);
    }

    #[test]
    fn dephasing_ensemble_average() {
        // Z-dephasing with flip probability p averages to 1 - 2p/3 over Haar states.
        let p = 0.2;
        let e = StateEnsemble::standard(3);
        let fids: Vec<f64> = e
            .states
            .iter()
            .map(|&(t, _)| 1.0 - p * t.sin().powi(2))
            .collect();
        let avg = super::super::state_averaged_fidelity(&fids);
        assert!((avg - (1.0 - 2.0 * p / 3.0)).abs() < 0.05);
    }
}
