//! The two-qubit collective-dephasing code (DFS2) and the three-qubit
//! collective-decoherence subsystem code (DFS3).
//!
//! Slot layout is fixed: qubit 0 holds the data, qubit 1 the ancilla and (for
//! DFS3) qubit 2 the gauge. DFS2 code words are `|0_L⟩ = |01⟩`,
//! `|1_L⟩ = |10⟩`. DFS3 code words are `|0_L⟩ = γ|1̄⟩ + δ|2̄⟩` and
//! `|1_L⟩ = γ|3̄⟩ + δ|4̄⟩` with
//!
//! ```text
//! |1̄⟩ = |S₀⟩|0⟩                     |2̄⟩ = |S₀⟩|1⟩
//! |3̄⟩ = (√2|T₊⟩|1⟩ − |T₀⟩|0⟩)/√3     |4̄⟩ = (|T₀⟩|1⟩ − √2|T₋⟩|0⟩)/√3
//! ```
//!
//! Logical rotations use `R̄_n(θ) = exp(−iθ/2 n̂·σ̄)`, so `R̄_x(π)` is a logical
//! bit flip and `Π = R̄_x(2π)` is `−1` on the code space.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{DfsError, Result};
use crate::pauli::{OperatorSum, Pauli, PauliString};
use crate::tensor::{
    expm_hermitian, gates, partial_trace, schmidt_decompose, DenseOperator, DensityMatrix, Ket, C64, ONE, ZERO,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeKind {
    Dfs2,
    Dfs3,
}

/// Choice of DFS2 logical operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalVariant {
    /// `σ̄ˣ = (XX + YY)/2`, `σ̄ʸ = (YX − XY)/2`, `σ̄ᶻ = (Z₁ − Z₂)/2`; preserves every two-qubit DFS.
    #[default]
    Symmetric,
    /// `σ̄ˣ = XX`, `σ̄ʸ = YX`, `σ̄ᶻ = −Z₂`.
    NonSymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Which DFS3 encoder circuit to build.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderForm {
    /// State-independent circuit with controlled `G₁`, `G₂`.
    Reference,
    /// State-specific circuit from the Schmidt form, one CNOT for the two-qubit core.
    #[default]
    Optimized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    pub kind: CodeKind,
    pub n_physical: usize,
    pub data_slot: usize,
    pub ancilla_slots: Vec<usize>,
    pub gauge_slot: Option<usize>,
    pub stabilizers: Vec<PauliString>,
    pub variant: LogicalVariant,
}

/// Gauge state `γ|0⟩ + δ|1⟩` of the DFS3 subsystem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeSpec {
    pub gamma: C64,
    pub delta: C64,
}

impl GaugeSpec {
    pub fn new(gamma: C64, delta: C64) -> Result<Self> {
        let n = gamma.norm_sqr() + delta.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(DfsError::InvalidParameter(format!("gauge |γ|²+|δ|² = {n} != 1")));
        }
        Ok(GaugeSpec { gamma, delta })
    }

    /// `γ = cos(φ/2)`, `δ = sin(φ/2)`.
    pub fn from_angle(phi: f64) -> Self {
        GaugeSpec { gamma: C64::new((phi / 2.0).cos(), 0.0), delta: C64::new((phi / 2.0).sin(), 0.0) }
    }

    pub fn trivial() -> Self {
        GaugeSpec { gamma: ONE, delta: ZERO }
    }

    /// True when the gauge qubit is `|0⟩` (up to phase) and no gauge circuit is needed.
    pub fn is_trivial(&self) -> bool {
        self.delta == ZERO
    }

    /// `[[γ, −δ*], [δ, γ*]]`, applied collectively to move the gauge.
    pub fn rotation(&self) -> DenseOperator {
        DenseOperator::from_rows(2, &[self.gamma, -self.delta.conj(), self.delta, self.gamma.conj()]).unwrap()
    }
}

impl Default for GaugeSpec {
    fn default() -> Self {
        Self::trivial()
    }
}

/// Encoded state together with the parameters that produced it.
#[derive(Clone, Debug)]
pub struct LogicalState {
    pub code: CodeSpec,
    pub theta: f64,
    pub phi: f64,
    pub gauge: GaugeSpec,
    pub physical: Ket,
}

const ACCEPT_FLOOR: f64 = 1e-12;

/// Post-selection outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct PostSelection {
    pub accept_probability: f64,
    /// `[P(data = 0), P(data = 1)]` conditioned on acceptance.
    pub data_distribution: [f64; 2],
}

fn r(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn ket3(entries: &[(usize, f64)]) -> Ket {
    let mut v = vec![ZERO; 8];
    for &(i, a) in entries {
        v[i] += r(a);
    }
    Ket::new(v).expect("nonzero")
}

/// `|1̄⟩ … |4̄⟩` as 3-qubit kets (indices are `q0 q1 q2` bit strings).
pub fn dfs3_basis() -> [Ket; 4] {
    let s3 = 3f64.sqrt();
    let h = FRAC_1_SQRT_2;
    [
        ket3(&[(0b010, h), (0b100, -h)]),
        ket3(&[(0b011, h), (0b101, -h)]),
        ket3(&[(0b001, SQRT_2 / s3), (0b010, -h / s3), (0b100, -h / s3)]),
        ket3(&[(0b011, h / s3), (0b101, h / s3), (0b110, -SQRT_2 / s3)]),
    ]
}

/// Unitary with `|a g 0⟩ ↦` code word `(a, g)` (`|1̄⟩, |2̄⟩, |3̄⟩, |4̄⟩` for `ag = 00, 01, 10, 11`)
/// and `|a g 1⟩ ↦` the `J = 3/2` states ordered by descending `m`.
pub fn dfs3_subsystem_encoder() -> DenseOperator {
    let s3 = 3f64.sqrt();
    let quartet = [
        ket3(&[(0b000, 1.0)]),
        ket3(&[(0b001, 1.0 / s3), (0b010, 1.0 / s3), (0b100, 1.0 / s3)]),
        ket3(&[(0b011, 1.0 / s3), (0b101, 1.0 / s3), (0b110, 1.0 / s3)]),
        ket3(&[(0b111, 1.0)]),
    ];
    let doublets = dfs3_basis();
    let mut m = nalgebra::DMatrix::from_element(8, 8, ZERO);
    for (k, v) in doublets.iter().enumerate() {
        m.set_column(k << 1, v.amplitudes());
    }
    for (k, v) in quartet.iter().enumerate() {
        m.set_column((k << 1) | 1, v.amplitudes());
    }
    DenseOperator::from_matrix(m).expect("8x8")
}

/// `(I + XX + YY + ZZ)/2` on qubits `i`, `j` of `n`.
pub fn exchange(n: usize, i: usize, j: usize) -> OperatorSum {
    let mut s = OperatorSum::identity(n);
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        let mut axes = vec![Pauli::I; n];
        axes[i] = p;
        axes[j] = p;
        s.add_term(&PauliString::new(axes), ONE);
    }
    s.scale_real(0.5)
}

/// Single-qubit state `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` preparation unitary.
pub fn state_prep(theta: f64, phi: f64) -> DenseOperator {
    gates::state_prep(theta, phi)
}

fn g1() -> DenseOperator {
    let s = 1.0 / 3f64.sqrt();
    DenseOperator::from_real_rows(2, &[s, SQRT_2 * s, -SQRT_2 * s, s]).unwrap()
}

fn g2() -> DenseOperator {
    let s = FRAC_1_SQRT_2;
    DenseOperator::from_real_rows(2, &[s, s, -s, s]).unwrap()
}

/// Columns `a`, `b` as a 2×2 matrix.
fn columns(a: &Ket, b: &Ket) -> DenseOperator {
    let (x, y) = (a.amplitudes(), b.amplitudes());
    DenseOperator::from_rows(2, &[x[0], y[0], x[1], y[1]]).unwrap()
}

impl CodeSpec {
    pub fn dfs2() -> Self {
        CodeSpec {
            kind: CodeKind::Dfs2,
            n_physical: 2,
            data_slot: 0,
            ancilla_slots: vec![1],
            gauge_slot: None,
            stabilizers: vec!["ZZ".parse().unwrap()],
            variant: LogicalVariant::Symmetric,
        }
    }

    pub fn dfs3() -> Self {
        CodeSpec {
            kind: CodeKind::Dfs3,
            n_physical: 3,
            data_slot: 0,
            ancilla_slots: vec![1],
            gauge_slot: Some(2),
            stabilizers: vec!["XXX".parse().unwrap(), "YYY".parse().unwrap(), "ZZZ".parse().unwrap()],
            variant: LogicalVariant::Symmetric,
        }
    }

    pub fn new(kind: CodeKind) -> Self {
        match kind {
            CodeKind::Dfs2 => Self::dfs2(),
            CodeKind::Dfs3 => Self::dfs3(),
        }
    }

    pub fn with_variant(mut self, variant: LogicalVariant) -> Self {
        self.variant = variant;
        self
    }

    /// `(|0_L⟩, |1_L⟩)` at the given gauge (ignored for DFS2).
    pub fn logical_basis(&self, gauge: &GaugeSpec) -> [Ket; 2] {
        match self.kind {
            CodeKind::Dfs2 => [Ket::from_bits(&[0, 1]).unwrap(), Ket::from_bits(&[1, 0]).unwrap()],
            CodeKind::Dfs3 => {
                let b = dfs3_basis();
                let mix = |a: &Ket, c: &Ket| {
                    let v: Vec<C64> = a
                        .amplitudes()
                        .iter()
                        .zip(c.amplitudes().iter())
                        .map(|(x, y)| gauge.gamma * x + gauge.delta * y)
                        .collect();
                    Ket::new(v).unwrap()
                };
                [mix(&b[0], &b[1]), mix(&b[2], &b[3])]
            }
        }
    }

    /// Direct construction `α|0_L⟩ + β|1_L⟩` from a one-qubit state.
    pub fn encode(&self, psi: &Ket, gauge: &GaugeSpec) -> Result<Ket> {
        if psi.dim() != 2 {
            return Err(DfsError::DimensionMismatch { expected: 2, found: psi.dim() });
        }
        let [l0, l1] = self.logical_basis(gauge);
        let (a, b) = (psi.amplitudes()[0], psi.amplitudes()[1]);
        let v: Vec<C64> = l0.amplitudes().iter().zip(l1.amplitudes().iter()).map(|(x, y)| a * x + b * y).collect();
        Ket::new(v)
    }

    pub fn logical_state(&self, theta: f64, phi: f64, gauge: GaugeSpec) -> Result<LogicalState> {
        let psi = Ket::bloch(theta, phi);
        Ok(LogicalState { code: self.clone(), theta, phi, gauge, physical: self.encode(&psi, &gauge)? })
    }

    /// Projector onto the full code family: `{|01⟩, |10⟩}` for DFS2, the whole `J = 1/2` sector for DFS3.
    pub fn code_projector(&self) -> DenseOperator {
        let kets: Vec<Ket> = match self.kind {
            CodeKind::Dfs2 => self.logical_basis(&GaugeSpec::trivial()).to_vec(),
            CodeKind::Dfs3 => dfs3_basis().to_vec(),
        };
        let mut p = DenseOperator::zeros(self.n_physical);
        for k in &kets {
            p = p.add(&DenseOperator::outer(k, k).unwrap());
        }
        p
    }

    /// Logical Pauli `σ̄^axis` on the physical qubits.
    pub fn logical_operator(&self, axis: Axis) -> OperatorSum {
        let h = r(0.5);
        match (self.kind, self.variant) {
            (CodeKind::Dfs2, LogicalVariant::Symmetric) => match axis {
                Axis::X => OperatorSum::from_labels(&[("XX", h), ("YY", h)]).unwrap(),
                Axis::Y => OperatorSum::from_labels(&[("YX", h), ("XY", -h)]).unwrap(),
                Axis::Z => OperatorSum::from_labels(&[("ZI", h), ("IZ", -h)]).unwrap(),
            },
            (CodeKind::Dfs2, LogicalVariant::NonSymmetric) => match axis {
                Axis::X => OperatorSum::from_labels(&[("XX", ONE)]).unwrap(),
                Axis::Y => OperatorSum::from_labels(&[("YX", ONE)]).unwrap(),
                Axis::Z => OperatorSum::from_labels(&[("IZ", -ONE)]).unwrap(),
            },
            (CodeKind::Dfs3, _) => {
                let sx = exchange(3, 1, 2).sub(&exchange(3, 0, 2)).unwrap().scale_real(1.0 / 3f64.sqrt());
                let sz = exchange(3, 0, 2)
                    .add(&exchange(3, 1, 2))
                    .unwrap()
                    .sub(&exchange(3, 0, 1).scale_real(2.0))
                    .unwrap()
                    .scale_real(1.0 / 3.0);
                match axis {
                    Axis::X => sx,
                    Axis::Z => sz,
                    // −(i/2)[σ̄ᶻ, σ̄ˣ]
                    Axis::Y => sz.commutator(&sx).unwrap().scale(C64::new(0.0, -0.5)),
                }
            }
        }
    }

    /// `exp(−i angle/2 · σ̄^axis)`.
    pub fn logical_rotation(&self, axis: Axis, angle: f64) -> DenseOperator {
        expm_hermitian(&self.logical_operator(axis).to_dense(), angle / 2.0).expect("logical operators are Hermitian")
    }

    /// Qubits other than the data slot, in ascending order.
    pub fn flag_slots(&self) -> Vec<usize> {
        (0..self.n_physical).filter(|&q| q != self.data_slot).collect()
    }

    /// Post-selection predicate on a measured bit string (bit `q` = qubit `q`).
    pub fn accepts(&self, bits: &[u8]) -> bool {
        match self.kind {
            CodeKind::Dfs2 => bits[self.ancilla_slots[0]] == 0,
            CodeKind::Dfs3 => bits[self.gauge_slot.unwrap()] == 0,
        }
    }

    /// Retained fraction and conditioned data statistics from a joint outcome distribution
    /// over all physical qubits (big-endian index).
    pub fn postselect(&self, joint: &[f64]) -> Result<PostSelection> {
        let n = self.n_physical;
        if joint.len() != 1 << n {
            return Err(DfsError::DimensionMismatch { expected: 1 << n, found: joint.len() });
        }
        let mut acc = [0.0; 2];
        for (idx, &p) in joint.iter().enumerate() {
            let bits: Vec<u8> = (0..n).map(|q| ((idx >> (n - 1 - q)) & 1) as u8).collect();
            if self.accepts(&bits) {
                acc[bits[self.data_slot] as usize] += p;
            }
        }
        let total = acc[0] + acc[1];
        // Round-off from exact propagation leaves ~1e-30 on rejected branches.
        if total <= ACCEPT_FLOOR * joint.iter().sum::<f64>() {
            return Err(DfsError::AllRejected);
        }
        Ok(PostSelection { accept_probability: total, data_distribution: [acc[0] / total, acc[1] / total] })
    }

    /// True when `error` anticommutes with some stabilizer element.
    pub fn syndrome(&self, error: &PauliString) -> Result<bool> {
        if error.n_qubits() != self.n_physical {
            return Err(DfsError::DimensionMismatch { expected: self.n_physical, found: error.n_qubits() });
        }
        Ok(self.stabilizers.iter().any(|s| !s.commutes_with(error)))
    }

    /// State-independent encoder acting on `|ψ⟩|0…0⟩` (data already prepared on qubit 0).
    pub fn reference_encoder(&self, gauge: &GaugeSpec) -> Circuit {
        let mut c = Circuit::new(self.n_physical);
        match self.kind {
            CodeKind::Dfs2 => {
                c.push(Gate::X180(1)).unwrap();
                c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
            }
            CodeKind::Dfs3 => {
                for g in dfs3_stage_gates(0, 2) {
                    c.push(g).unwrap();
                }
                c.push(Gate::X180(1)).unwrap();
                c.push(Gate::Cnot { control: 2, target: 1 }).unwrap();
                c.push(Gate::CU { u: g2(), control: 1, target: 0 }).unwrap();
                c.push(Gate::Cnot { control: 0, target: 1 }).unwrap();
                push_gauge_block(&mut c, gauge);
            }
        }
        c
    }

    /// Full preparation circuit from `|0…0⟩` to the encoded state of `|ψ(θ, φ)⟩`.
    pub fn preparation_circuit(&self, theta: f64, phi: f64, gauge: &GaugeSpec, form: EncoderForm) -> Result<Circuit> {
        let prep = Gate::U1(state_prep(theta, phi), self.data_slot);
        match (self.kind, form) {
            (CodeKind::Dfs2, _) | (CodeKind::Dfs3, EncoderForm::Reference) => {
                let mut c = Circuit::new(self.n_physical);
                c.push(prep)?;
                c.append(&self.reference_encoder(gauge))?;
                Ok(c)
            }
            (CodeKind::Dfs3, EncoderForm::Optimized) => dfs3_optimized(theta, phi, gauge),
        }
    }

    /// Maps encoded states back to `|ψ⟩|0…0⟩`.
    ///
    /// DFS2 uses the inverse encoder. DFS3 uses the gauge-agnostic subsystem decoder,
    /// costed like the reference encoder, which leaves the gauge on qubit 1 and the
    /// `J = 3/2` indicator on qubit 2; the known initial gauge is then rotated back to `|0⟩`.
    pub fn decoder_circuit(&self, gauge: &GaugeSpec) -> Circuit {
        match self.kind {
            CodeKind::Dfs2 => self.reference_encoder(gauge).inverse(),
            CodeKind::Dfs3 => {
                let reference = self.reference_encoder(&GaugeSpec::trivial());
                let mut c = Circuit::new(3);
                c.push(Gate::Block {
                    u: dfs3_subsystem_encoder().adjoint(),
                    qubits: vec![0, 1, 2],
                    cnots: reference.cnot_count(),
                    pulses: reference.pulse_count(),
                })
                .unwrap();
                if !gauge.is_trivial() {
                    c.push(Gate::U1(gauge.rotation().adjoint(), 1)).unwrap();
                }
                c
            }
        }
    }

    /// Applies the decoder and splits data from flags.
    pub fn decode(&self, state: &DensityMatrix, gauge: &GaugeSpec) -> Result<(DensityMatrix, Vec<f64>)> {
        if state.n_qubits() != self.n_physical {
            return Err(DfsError::DimensionMismatch { expected: self.n_physical, found: state.n_qubits() });
        }
        let u = self.decoder_circuit(gauge).unitary()?;
        let out = state.evolve(&u)?;
        let data = partial_trace(&out, &[self.data_slot])?;
        let flags = partial_trace(&out, &self.flag_slots())?.probabilities();
        Ok((data, flags))
    }
}

/// `Z`, controlled-`G₁`, CNOT back onto the data: `a|0⟩ + b|1⟩` on (data, gauge) ↦ the
/// two-qubit core of the DFS3 code words.
fn dfs3_stage_gates(data: usize, gauge: usize) -> Vec<Gate> {
    vec![
        Gate::Rz(std::f64::consts::PI, data),
        Gate::CU { u: g1(), control: data, target: gauge },
        Gate::Cnot { control: gauge, target: data },
    ]
}

fn push_gauge_block(c: &mut Circuit, gauge: &GaugeSpec) {
    if gauge.is_trivial() {
        return;
    }
    let u = gauge.rotation();
    for q in 0..3 {
        c.push(Gate::U1(u.clone(), q)).unwrap();
    }
}

/// Two-qubit state on (data, gauge) produced by the controlled-`G` core, including the
/// `G₂` step controlled on the gauge being `|0⟩`.
fn dfs3_core_state(theta: f64, phi: f64) -> Result<Ket> {
    let mut c = Circuit::new(2);
    c.push(Gate::U1(state_prep(theta, phi), 0))?;
    for g in dfs3_stage_gates(0, 1) {
        c.push(g)?;
    }
    c.push(Gate::X180(1))?;
    c.push(Gate::CU { u: g2(), control: 1, target: 0 })?;
    c.push(Gate::X180(1))?;
    c.apply(&Ket::basis(2, 0)?)
}

/// Schmidt-form unitaries `(W̃₁, W₂, W₃)` for the DFS3 core of `|ψ(θ, φ)⟩`.
pub fn dfs3_schmidt_unitaries(theta: f64, phi: f64) -> Result<(DenseOperator, DenseOperator, DenseOperator)> {
    let core = dfs3_core_state(theta, phi)?;
    let s = schmidt_decompose(&core, &[0])?;
    let (a, b) = (r(s.coefficients[0]), r(s.coefficients[1]));
    let w1 = DenseOperator::from_rows(2, &[a, b.conj(), b, -a.conj()])?;
    let w2 = columns(&s.left[0], &s.left[1]);
    let w3 = columns(&s.right[0], &s.right[1]);
    Ok((w1, w2, w3))
}

fn dfs3_optimized(theta: f64, phi: f64, gauge: &GaugeSpec) -> Result<Circuit> {
    let (w1, w2, w3) = dfs3_schmidt_unitaries(theta, phi)?;
    let mut c = Circuit::new(3);
    c.push(Gate::U1(w1, 0))?;
    c.push(Gate::Cnot { control: 0, target: 2 })?;
    c.push(Gate::U1(w2, 0))?;
    c.push(Gate::U1(w3, 2))?;
    c.push(Gate::X180(1))?;
    c.push(Gate::Cnot { control: 2, target: 1 })?;
    c.push(Gate::Cnot { control: 0, target: 1 })?;
    push_gauge_block(&mut c, gauge);
    Ok(c)
}

/// `α|0⟩ + β|1⟩ ↦ α|01⟩ + β|10⟩`.
pub fn dfs2_encode(psi: &Ket) -> Result<Ket> {
    CodeSpec::dfs2().encode(psi, &GaugeSpec::trivial())
}

/// `α|0⟩ + β|1⟩ ↦ α|0_L⟩ + β|1_L⟩` at the given gauge.
pub fn dfs3_encode(psi: &Ket, gauge: &GaugeSpec) -> Result<Ket> {
    CodeSpec::dfs3().encode(psi, gauge)
}
