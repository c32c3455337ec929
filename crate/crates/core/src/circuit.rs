//! Gate lists over the native set `{X90, X180, Rz(θ), CNOT}` plus generic
//! single-qubit and controlled unitaries used by the encoders.
//!
//! Gates are stored in time order. Qubit indices follow the big-endian
//! convention of [`crate::tensor`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{DfsError, Result};
use crate::noise::GateNoiseModel;
use crate::pauli::Pauli;
use crate::tensor::{gates, DenseOperator, Ket};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X90(usize),
    X180(usize),
    /// Virtual Z rotation `e^{-iθZ/2}`: zero duration, no error.
    Rz(f64, usize),
    Cnot { control: usize, target: usize },
    /// Arbitrary single-qubit unitary, costed as one physical pulse.
    U1(DenseOperator, usize),
    /// Controlled single-qubit unitary, costed as two CNOTs and two pulses.
    CU { u: DenseOperator, control: usize, target: usize },
    /// Multi-qubit unitary costed as `cnots` CNOTs plus `pulses` physical pulses.
    Block { u: DenseOperator, qubits: Vec<usize>, cnots: usize, pulses: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::X90(q) | Gate::X180(q) | Gate::Rz(_, q) | Gate::U1(_, q) => vec![*q],
            Gate::Cnot { control, target } | Gate::CU { control, target, .. } => vec![*control, *target],
            Gate::Block { qubits, .. } => qubits.clone(),
        }
    }

    /// Local matrix and the qubits it acts on (control first for two-qubit gates).
    pub fn local(&self) -> (DenseOperator, Vec<usize>) {
        let m = match self {
            Gate::X90(_) => gates::rx(FRAC_PI_2),
            Gate::X180(_) => gates::rx(PI),
            Gate::Rz(t, _) => gates::rz(*t),
            Gate::Cnot { .. } => gates::cnot(),
            Gate::U1(u, _) => u.clone(),
            Gate::CU { u, .. } => gates::controlled(u),
            Gate::Block { u, .. } => u.clone(),
        };
        (m, self.qubits())
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Gate::Rz(..))
    }

    pub fn duration(&self, m: &GateNoiseModel) -> f64 {
        match self {
            Gate::Rz(..) => 0.0,
            Gate::X90(_) | Gate::X180(_) | Gate::U1(..) => m.oneq_duration,
            Gate::Cnot { .. } => m.cnot_duration,
            Gate::CU { .. } => 2.0 * m.cnot_duration + 2.0 * m.oneq_duration,
            Gate::Block { cnots, pulses, .. } => *cnots as f64 * m.cnot_duration + *pulses as f64 * m.oneq_duration,
        }
    }

    /// Depolarizing probability applied after the gate on its qubits.
    pub fn error(&self, m: &GateNoiseModel) -> f64 {
        match self {
            Gate::Rz(..) => 0.0,
            Gate::X90(_) | Gate::X180(_) | Gate::U1(..) => m.oneq_error,
            Gate::Cnot { .. } => m.cnot_error,
            Gate::CU { .. } => 1.0 - (1.0 - m.cnot_error).powi(2) * (1.0 - m.oneq_error).powi(2),
            Gate::Block { cnots, pulses, .. } => {
                1.0 - (1.0 - m.cnot_error).powi(*cnots as i32) * (1.0 - m.oneq_error).powi(*pulses as i32)
            }
        }
    }

    pub fn cnot_count(&self) -> usize {
        match self {
            Gate::Cnot { .. } => 1,
            Gate::CU { .. } => 2,
            Gate::Block { cnots, .. } => *cnots,
            _ => 0,
        }
    }

    /// Physical single-qubit pulses in the gate's cost.
    pub fn pulse_count(&self) -> usize {
        match self {
            Gate::X90(_) | Gate::X180(_) | Gate::U1(..) => 1,
            Gate::CU { .. } => 2,
            Gate::Block { pulses, .. } => *pulses,
            _ => 0,
        }
    }

    /// Inverse gates, equal to the exact inverse up to a global phase.
    fn inverse(&self) -> Vec<Gate> {
        match self {
            Gate::X90(q) => vec![Gate::Rz(-PI, *q), Gate::X90(*q), Gate::Rz(PI, *q)],
            Gate::X180(q) => vec![Gate::X180(*q)],
            Gate::Rz(t, q) => vec![Gate::Rz(-t, *q)],
            Gate::Cnot { control, target } => vec![Gate::Cnot { control: *control, target: *target }],
            Gate::U1(u, q) => vec![Gate::U1(u.adjoint(), *q)],
            Gate::CU { u, control, target } => vec![Gate::CU { u: u.adjoint(), control: *control, target: *target }],
            Gate::Block { u, qubits, cnots, pulses } => {
                vec![Gate::Block { u: u.adjoint(), qubits: qubits.clone(), cnots: *cnots, pulses: *pulses }]
            }
        }
    }

    fn remap(&self, map: &[usize]) -> Gate {
        match self {
            Gate::X90(q) => Gate::X90(map[*q]),
            Gate::X180(q) => Gate::X180(map[*q]),
            Gate::Rz(t, q) => Gate::Rz(*t, map[*q]),
            Gate::Cnot { control, target } => Gate::Cnot { control: map[*control], target: map[*target] },
            Gate::U1(u, q) => Gate::U1(u.clone(), map[*q]),
            Gate::CU { u, control, target } => Gate::CU { u: u.clone(), control: map[*control], target: map[*target] },
            Gate::Block { u, qubits, cnots, pulses } => Gate::Block {
                u: u.clone(),
                qubits: qubits.iter().map(|q| map[*q]).collect(),
                cnots: *cnots,
                pulses: *pulses,
            },
        }
    }
}

/// Time-ordered gate list on an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, g: Gate) -> Result<&mut Self> {
        let qs = g.qubits();
        for &q in &qs {
            if q >= self.n {
                return Err(DfsError::QubitOutOfRange { index: q, n: self.n });
            }
        }
        for (i, &q) in qs.iter().enumerate() {
            if qs[..i].contains(&q) {
                return Err(DfsError::DuplicateQubit(q));
            }
        }
        if let Gate::Block { u, qubits, .. } = &g {
            if u.dim() != 1 << qubits.len() {
                return Err(DfsError::DimensionMismatch { expected: 1 << qubits.len(), found: u.dim() });
            }
        }
        self.gates.push(g);
        Ok(self)
    }

    /// Appends `other` (applied after `self`).
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.n != self.n {
            return Err(DfsError::DimensionMismatch { expected: self.n, found: other.n });
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    pub fn then(mut self, other: &Circuit) -> Result<Self> {
        self.append(other)?;
        Ok(self)
    }

    /// Reversed circuit with every gate inverted; equals `U†` up to global phase.
    pub fn inverse(&self) -> Circuit {
        Circuit { n: self.n, gates: self.gates.iter().rev().flat_map(|g| g.inverse()).collect() }
    }

    /// Moves qubit `q` to `map[q]` in an `n_new`-qubit register.
    pub fn remap(&self, map: &[usize], n_new: usize) -> Result<Circuit> {
        if map.len() != self.n {
            return Err(DfsError::DimensionMismatch { expected: self.n, found: map.len() });
        }
        if let Some(&bad) = map.iter().find(|&&m| m >= n_new) {
            return Err(DfsError::QubitOutOfRange { index: bad, n: n_new });
        }
        Ok(Circuit { n: n_new, gates: self.gates.iter().map(|g| g.remap(map)).collect() })
    }

    /// Dense product of all gates.
    pub fn unitary(&self) -> Result<DenseOperator> {
        let mut u = DenseOperator::identity(self.n);
        for g in &self.gates {
            let (m, t) = g.local();
            u = DenseOperator::embed(&m, &t, self.n)?.mul(&u);
        }
        Ok(u)
    }

    pub fn apply(&self, psi: &Ket) -> Result<Ket> {
        if psi.n_qubits() < self.n {
            return Err(DfsError::DimensionMismatch { expected: self.n, found: psi.n_qubits() });
        }
        let mut out = psi.clone();
        for g in &self.gates {
            let (m, t) = g.local();
            out = out.apply_local(&m, &t)?;
        }
        Ok(out)
    }

    pub fn duration(&self, m: &GateNoiseModel) -> f64 {
        self.gates.iter().map(|g| g.duration(m)).sum()
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().map(|g| g.cnot_count()).sum()
    }

    pub fn pulse_count(&self) -> usize {
        self.gates.iter().map(|g| g.pulse_count()).sum()
    }
}

/// Native-gate building blocks.
pub mod native {
    use super::*;

    /// `X` up to phase.
    pub fn x(q: usize) -> Vec<Gate> {
        vec![Gate::X180(q)]
    }

    /// `Y` up to phase: a π pulse about the axis rotated by π/2 in the xy-plane.
    pub fn y(q: usize) -> Vec<Gate> {
        vec![Gate::Rz(-FRAC_PI_2, q), Gate::X180(q), Gate::Rz(FRAC_PI_2, q)]
    }

    /// `Z` up to phase.
    pub fn z(q: usize) -> Vec<Gate> {
        vec![Gate::Rz(std::f64::consts::PI, q)]
    }

    /// Hadamard up to phase.
    pub fn h(q: usize) -> Vec<Gate> {
        vec![Gate::Rz(FRAC_PI_2, q), Gate::X90(q), Gate::Rz(FRAC_PI_2, q)]
    }

    /// Gates `B` with `B P B† = Z`, and their inverse.
    fn to_z_basis(p: Pauli, q: usize) -> (Vec<Gate>, Vec<Gate>) {
        match p {
            Pauli::X => (h(q), h(q)),
            Pauli::Y => (vec![Gate::X90(q)], vec![Gate::Rz(-PI, q), Gate::X90(q), Gate::Rz(PI, q)]),
            Pauli::Z | Pauli::I => (vec![], vec![]),
        }
    }

    /// `e^{-iφ P_a ⊗ P_b}` via basis changes around a CNOT–Rz–CNOT core.
    pub fn pauli_pair_rotation(a: usize, pa: Pauli, b: usize, pb: Pauli, phi: f64) -> Vec<Gate> {
        let (ba, ba_inv) = to_z_basis(pa, a);
        let (bb, bb_inv) = to_z_basis(pb, b);
        let mut out = Vec::new();
        out.extend(ba);
        out.extend(bb);
        out.push(Gate::Cnot { control: a, target: b });
        out.push(Gate::Rz(2.0 * phi, b));
        out.push(Gate::Cnot { control: a, target: b });
        out.extend(ba_inv);
        out.extend(bb_inv);
        out
    }

    /// SWAP as three CNOTs.
    pub fn swap(a: usize, b: usize) -> Vec<Gate> {
        vec![
            Gate::Cnot { control: a, target: b },
            Gate::Cnot { control: b, target: a },
            Gate::Cnot { control: a, target: b },
        ]
    }

    pub fn circuit(n: usize, gates: Vec<Gate>) -> Result<Circuit> {
        let mut c = Circuit::new(n);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;
    use crate::tensor::{expm_hermitian, phase_insensitive_distance};

    #[test]
    fn native_paulis_match() {
        for (gs, target) in [(native::x(0), gates::x()), (native::y(0), gates::y()), (native::z(0), gates::z()), (native::h(0), gates::h())] {
            let u = native::circuit(1, gs).unwrap().unitary().unwrap();
            assert!(phase_insensitive_distance(&u, &target) < 1e-12);
        }
    }

    #[test]
    fn pair_rotations_match_expm() {
        let phi = 0.37;
        for pa in [Pauli::X, Pauli::Y, Pauli::Z] {
            for pb in [Pauli::X, Pauli::Y, Pauli::Z] {
                let u = native::circuit(2, native::pauli_pair_rotation(0, pa, 1, pb, phi)).unwrap().unitary().unwrap();
                let gen = PauliString::new(vec![pa, pb]).to_dense();
                let expect = expm_hermitian(&gen, phi).unwrap();
                assert!(phase_insensitive_distance(&u, &expect) < 1e-12, "{pa:?}{pb:?}");
            }
        }
    }

    #[test]
    fn swap_is_three_cnots() {
        let c = native::circuit(2, native::swap(0, 1)).unwrap();
        assert_eq!(c.cnot_count(), 3);
        assert!(phase_insensitive_distance(&c.unitary().unwrap(), &gates::swap()) < 1e-15);
    }

    #[test]
    fn inverse_undoes_circuit() {
        let mut c = Circuit::new(2);
        c.push(Gate::X90(0)).unwrap();
        c.push(Gate::Rz(0.3, 1)).unwrap();
        c.push(Gate::CU { u: gates::ry(0.4), control: 1, target: 0 }).unwrap();
        c.push(Gate::U1(gates::h(), 1)).unwrap();
        let u = c.clone().then(&c.inverse()).unwrap().unitary().unwrap();
        assert!(phase_insensitive_distance(&u, &DenseOperator::identity(2)) < 1e-12);
    }

    #[test]
    fn push_rejects_bad_qubits() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::X90(2)).is_err());
        assert!(c.push(Gate::Cnot { control: 1, target: 1 }).is_err());
    }

    #[test]
    fn durations_add_up() {
        let m = GateNoiseModel::manila();
        let c = native::circuit(2, native::pauli_pair_rotation(0, Pauli::X, 1, Pauli::X, 0.2)).unwrap();
        // two CNOTs and two X90 pulses (one Hadamard per qubit, each side)
        let expect = 2.0 * m.cnot_duration + 4.0 * m.oneq_duration;
        assert!((c.duration(&m) - expect).abs() < 1e-18);
    }
}
