//! System–bath Hamiltonians and gate-level noise channels.
//!
//! The environment is a small register of bath qubits. Bath coupling
//! operators are random traceless Hermitian Pauli sums of unit
//! Hilbert–Schmidt norm; the physical scale lives in each coupling's
//! `strength` (rad/s). All random draws come from a ChaCha stream keyed by
//! the caller's seed, so constructors are bit-reproducible.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DfsError, Result};
use crate::pauli::{OperatorSum, Pauli, PauliString};
use crate::tensor::{DenseOperator, DensityMatrix, HermitianEigen, Ket, C64, MAX_QUBITS, ONE};

/// One interaction term `strength · A ⊗ B`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub system: OperatorSum,
    pub bath: OperatorSum,
    /// rad/s
    pub strength: f64,
}

/// `H = H_S ⊗ I + I ⊗ H_B + Σ strength · A ⊗ B` over `n_sys + n_bath` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemBathModel {
    pub n_sys: usize,
    pub n_bath: usize,
    pub h_s: OperatorSum,
    pub h_b: OperatorSum,
    pub couplings: Vec<Coupling>,
    /// Set by constructors whose interaction is permutation symmetric on the system.
    pub collective: bool,
}

/// Coupling and bath self-Hamiltonian scales, both in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseStrengths {
    pub coupling: f64,
    pub bath: f64,
}

impl NoiseStrengths {
    pub fn new(coupling: f64, bath: f64) -> Self {
        NoiseStrengths { coupling, bath }
    }

    pub fn zero() -> Self {
        NoiseStrengths { coupling: 0.0, bath: 0.0 }
    }
}

impl Default for NoiseStrengths {
    fn default() -> Self {
        NoiseStrengths { coupling: 1e5, bath: 1e5 }
    }
}

/// Traceless random Hermitian Pauli sum on `n` qubits with unit HS norm.
pub fn random_bath_operator(n: usize, rng: &mut impl Rng) -> OperatorSum {
    let mut s = OperatorSum::zero(n);
    for p in PauliString::all(n).skip(1) {
        let c: f64 = rng.sample(StandardNormal);
        s.add_term(&p, C64::new(c, 0.0));
    }
    let norm = s.hs_norm();
    if norm > 0.0 {
        s.scale_real(1.0 / norm)
    } else {
        s
    }
}

fn check_register(n_sys: usize, n_bath: usize) -> Result<()> {
    if n_sys == 0 {
        return Err(DfsError::EmptyQubitSet);
    }
    if n_sys + n_bath > MAX_QUBITS {
        return Err(DfsError::RegisterTooLarge { requested: n_sys + n_bath, max: MAX_QUBITS });
    }
    Ok(())
}

fn require_bath(n_bath: usize, strengths: &NoiseStrengths) -> Result<()> {
    if n_bath == 0 && strengths.coupling != 0.0 {
        return Err(DfsError::InvalidParameter(
            "a nonzero system-bath coupling needs at least one bath qubit".into(),
        ));
    }
    Ok(())
}

impl SystemBathModel {
    /// No dynamics at all.
    pub fn trivial(n_sys: usize, n_bath: usize) -> Result<Self> {
        check_register(n_sys, n_bath)?;
        Ok(SystemBathModel {
            n_sys,
            n_bath,
            h_s: OperatorSum::zero(n_sys),
            h_b: OperatorSum::zero(n_bath),
            couplings: Vec::new(),
            collective: true,
        })
    }

    fn base(n_sys: usize, n_bath: usize, strengths: &NoiseStrengths, rng: &mut ChaCha8Rng) -> Result<Self> {
        check_register(n_sys, n_bath)?;
        require_bath(n_bath, strengths)?;
        let mut m = Self::trivial(n_sys, n_bath)?;
        if n_bath > 0 {
            m.h_b = random_bath_operator(n_bath, rng).scale_real(strengths.bath);
        }
        Ok(m)
    }

    fn push(&mut self, system: OperatorSum, bath: OperatorSum, strength: f64) {
        if strength != 0.0 && !system.is_empty() && !bath.is_empty() {
            self.couplings.push(Coupling { system, bath, strength });
        }
    }

    /// `(Σᵢ σᵢᶻ) ⊗ B_z`.
    pub fn collective_dephasing(n_sys: usize, n_bath: usize, strengths: NoiseStrengths, seed: u64) -> Result<Self> {
        if n_sys < 2 {
            return Err(DfsError::InvalidParameter("collective dephasing needs at least 2 system qubits".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::base(n_sys, n_bath, &strengths, &mut rng)?;
        let all: Vec<usize> = (0..n_sys).collect();
        let b = random_bath_operator(n_bath, &mut rng);
        m.push(OperatorSum::sum_over(n_sys, &all, Pauli::Z), b, strengths.coupling);
        m.collective = true;
        Ok(m)
    }

    /// `Σ_α (Σᵢ σᵢ^α) ⊗ B_α` with independent bath operators per axis.
    pub fn collective_decoherence(n_sys: usize, n_bath: usize, strengths: NoiseStrengths, seed: u64) -> Result<Self> {
        if n_sys < 2 {
            return Err(DfsError::InvalidParameter("collective decoherence needs at least 2 system qubits".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::base(n_sys, n_bath, &strengths, &mut rng)?;
        let all: Vec<usize> = (0..n_sys).collect();
        for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
            let b = random_bath_operator(n_bath, &mut rng);
            m.push(OperatorSum::sum_over(n_sys, &all, axis), b, strengths.coupling);
        }
        m.collective = true;
        Ok(m)
    }

    /// All 15 nontrivial two-qubit Pauli couplings with Gaussian strengths.
    pub fn generic_two_qubit(n_bath: usize, strengths: NoiseStrengths, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::base(2, n_bath, &strengths, &mut rng)?;
        for p in PauliString::all(2).skip(1) {
            let g: f64 = rng.sample(StandardNormal);
            let b = random_bath_operator(n_bath, &mut rng);
            m.push(OperatorSum::from_string(&p, ONE), b, strengths.coupling * g);
        }
        m.collective = false;
        Ok(m)
    }

    /// `Σᵢ σ⃗ᵢ · B⃗ᵢ` with independent Gaussian strengths per qubit and axis.
    pub fn linear_per_qubit(n_sys: usize, n_bath: usize, strengths: NoiseStrengths, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::base(n_sys, n_bath, &strengths, &mut rng)?;
        for q in 0..n_sys {
            for axis in [Pauli::X, Pauli::Y, Pauli::Z] {
                let g: f64 = rng.sample(StandardNormal);
                let b = random_bath_operator(n_bath, &mut rng);
                m.push(OperatorSum::single(n_sys, q, axis), b, strengths.coupling * g);
            }
        }
        m.collective = false;
        Ok(m)
    }

    /// `Σᵢ σᵢ^axis ⊗ Bᵢ` with an independent bath operator per qubit and unit relative strength.
    pub fn local_axis(n_sys: usize, n_bath: usize, axis: Pauli, strengths: NoiseStrengths, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Self::base(n_sys, n_bath, &strengths, &mut rng)?;
        for q in 0..n_sys {
            let b = random_bath_operator(n_bath, &mut rng);
            m.push(OperatorSum::single(n_sys, q, axis), b, strengths.coupling);
        }
        m.collective = n_sys == 1 && axis == Pauli::I;
        Ok(m)
    }

    /// Adds `strength · σᵢᶻσⱼᶻ` to the system Hamiltonian.
    pub fn with_zz(mut self, i: usize, j: usize, strength: f64) -> Result<Self> {
        if i >= self.n_sys || j >= self.n_sys {
            return Err(DfsError::QubitOutOfRange { index: i.max(j), n: self.n_sys });
        }
        if i == j {
            return Err(DfsError::DuplicateQubit(i));
        }
        let mut axes = vec![Pauli::I; self.n_sys];
        axes[i] = Pauli::Z;
        axes[j] = Pauli::Z;
        self.h_s = self.h_s.add(&OperatorSum::from_string(&PauliString::new(axes), C64::new(strength, 0.0)))?;
        self.collective = false;
        Ok(self)
    }

    /// Places both models on the same system with their bath registers side by side.
    pub fn combine(&self, other: &SystemBathModel) -> Result<Self> {
        if self.n_sys != other.n_sys {
            return Err(DfsError::DimensionMismatch { expected: self.n_sys, found: other.n_sys });
        }
        let n_bath = self.n_bath + other.n_bath;
        check_register(self.n_sys, n_bath)?;
        let left: Vec<usize> = (0..self.n_bath).collect();
        let right: Vec<usize> = (self.n_bath..n_bath).collect();
        let mut couplings = Vec::new();
        for c in &self.couplings {
            couplings.push(Coupling { bath: c.bath.relabel(&left, n_bath)?, ..c.clone() });
        }
        for c in &other.couplings {
            couplings.push(Coupling { bath: c.bath.relabel(&right, n_bath)?, ..c.clone() });
        }
        Ok(SystemBathModel {
            n_sys: self.n_sys,
            n_bath,
            h_s: self.h_s.add(&other.h_s)?,
            h_b: self.h_b.relabel(&left, n_bath)?.add(&other.h_b.relabel(&right, n_bath)?)?,
            couplings,
            collective: self.collective && other.collective,
        })
    }

    /// Moves the system onto qubits `map` of a larger `n_sys_new`-qubit system.
    pub fn embed_system(&self, map: &[usize], n_sys_new: usize) -> Result<Self> {
        check_register(n_sys_new, self.n_bath)?;
        let couplings = self
            .couplings
            .iter()
            .map(|c| Ok(Coupling { system: c.system.relabel(map, n_sys_new)?, ..c.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(SystemBathModel {
            n_sys: n_sys_new,
            n_bath: self.n_bath,
            h_s: self.h_s.relabel(map, n_sys_new)?,
            h_b: self.h_b.clone(),
            couplings,
            collective: false,
        })
    }

    pub fn n_total(&self) -> usize {
        self.n_sys + self.n_bath
    }

    /// Interaction part `Σ strength · A ⊗ B` over the full register.
    pub fn h_sb(&self) -> OperatorSum {
        let mut h = OperatorSum::zero(self.n_total());
        for c in &self.couplings {
            let t = c.system.tensor(&c.bath).scale_real(c.strength);
            h = h.add(&t).expect("register sizes agree");
        }
        h
    }

    /// Full Hamiltonian over `n_sys + n_bath` qubits.
    pub fn hamiltonian(&self) -> OperatorSum {
        let h = self.h_sb();
        let hs = self.h_s.tensor(&OperatorSum::identity(self.n_bath));
        let hb = OperatorSum::identity(self.n_sys).tensor(&self.h_b);
        h.add(&hs).and_then(|x| x.add(&hb)).expect("register sizes agree")
    }

    pub fn dense_hamiltonian(&self) -> DenseOperator {
        self.hamiltonian().to_dense()
    }

    pub fn spectral(&self) -> Result<HermitianEigen> {
        HermitianEigen::new(&self.dense_hamiltonian())
    }

    /// `e^{-i H_B t}` on the bath register alone.
    pub fn bath_evolution(&self, t: f64) -> Result<DenseOperator> {
        HermitianEigen::new(&self.h_b.to_dense()).map(|e| e.evolution(t))
    }

    /// Lowest-energy eigenstate of `H_B` (the `|0…0⟩` state when `H_B = 0`).
    pub fn bath_ground_state(&self) -> Result<Ket> {
        if self.h_b.is_empty() {
            return Ket::basis(self.n_bath, 0);
        }
        Ok(HermitianEigen::new(&self.h_b.to_dense())?.ground_state())
    }

    pub fn is_noiseless(&self) -> bool {
        self.couplings.is_empty() && self.h_s.is_empty()
    }
}

/// Depolarizing gate errors, durations and readout flips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateNoiseModel {
    pub cnot_error: f64,
    pub oneq_error: f64,
    /// seconds
    pub cnot_duration: f64,
    /// seconds
    pub oneq_duration: f64,
    pub readout_error: f64,
}

impl GateNoiseModel {
    pub fn noiseless() -> Self {
        GateNoiseModel { cnot_error: 0.0, oneq_error: 0.0, cnot_duration: 0.0, oneq_duration: 0.0, readout_error: 0.0 }
    }

    /// Manila qubit 0 and pair (0, 1) averages.
    pub fn manila() -> Self {
        GateNoiseModel {
            cnot_error: 6.91e-3,
            oneq_error: 0.31e-3,
            cnot_duration: 277.33e-9,
            oneq_duration: 35.55e-9,
            readout_error: 2.93e-2,
        }
    }

    /// Durations of the Manila model with every error probability set to zero.
    pub fn ideal_with_durations(self) -> Self {
        GateNoiseModel { cnot_error: 0.0, oneq_error: 0.0, readout_error: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("cnot_error", self.cnot_error), ("oneq_error", self.oneq_error), ("readout_error", self.readout_error)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(DfsError::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        for (name, d) in [("cnot_duration", self.cnot_duration), ("oneq_duration", self.oneq_duration)] {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(DfsError::InvalidParameter(format!("{name} = {d} must be a non-negative duration")));
            }
        }
        Ok(())
    }

    /// Error probability of a gate acting on `k` qubits.
    pub fn error_for(&self, k: usize) -> f64 {
        if k >= 2 {
            self.cnot_error
        } else {
            self.oneq_error
        }
    }
}

impl Default for GateNoiseModel {
    fn default() -> Self {
        Self::manila()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitRecord {
    pub index: usize,
    pub t1_us: f64,
    pub t2_us: f64,
    pub err_1q: f64,
    pub err_ro: f64,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub control: usize,
    pub target: usize,
    pub err_cx: f64,
    pub dur_cx_ns: f64,
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRecord {
    pub name: String,
    pub oneq_duration_ns: f64,
    pub calibration_window: String,
    pub qubit: Vec<QubitRecord>,
    pub pair: Vec<PairRecord>,
}

/// Calibration averages bundled with the library.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDefaults {
    pub schema_version: u32,
    pub device: Vec<DeviceRecord>,
}

const BUNDLED_DEVICES: &str = include_str!("../data/devices.toml");

impl DeviceDefaults {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DEVICES).expect("bundled device data is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let d: DeviceDefaults = toml::from_str(text).map_err(|e| DfsError::InvalidParameter(e.to_string()))?;
        if d.schema_version != 1 {
            return Err(DfsError::InvalidParameter(format!("unsupported schema_version {}", d.schema_version)));
        }
        Ok(d)
    }

    pub fn get(&self, name: &str) -> Option<&DeviceRecord> {
        self.device.iter().find(|d| d.name == name)
    }

    /// Gate-noise model for one qubit and one CNOT direction of a device.
    pub fn gate_noise(&self, name: &str, qubit: usize, pair: (usize, usize)) -> Result<GateNoiseModel> {
        let dev = self.get(name).ok_or_else(|| DfsError::InvalidParameter(format!("unknown device `{name}`")))?;
        let q = dev
            .qubit
            .iter()
            .find(|q| q.index == qubit)
            .ok_or_else(|| DfsError::InvalidParameter(format!("device `{name}` has no qubit {qubit}")))?;
        let p = dev
            .pair
            .iter()
            .find(|p| (p.control, p.target) == pair || (p.target, p.control) == pair)
            .ok_or_else(|| DfsError::InvalidParameter(format!("device `{name}` has no CNOT pair {pair:?}")))?;
        Ok(GateNoiseModel {
            cnot_error: p.err_cx,
            oneq_error: q.err_1q,
            cnot_duration: p.dur_cx_ns * 1e-9,
            oneq_duration: dev.oneq_duration_ns * 1e-9,
            readout_error: q.err_ro,
        })
    }
}

/// `P ρ P†` for a Pauli string over the full register, in `O(dim²)`.
pub fn pauli_conjugate(rho: &DMatrix<C64>, p: &PauliString) -> DMatrix<C64> {
    let n = p.n_qubits();
    let dim = rho.nrows();
    let mut mask = 0usize;
    for (q, &a) in p.axes().iter().enumerate() {
        if matches!(a, Pauli::X | Pauli::Y) {
            mask |= 1 << (n - 1 - q);
        }
    }
    // P|k⟩ = v(k)|k ^ mask⟩
    let v: Vec<C64> = (0..dim)
        .map(|k| {
            let mut acc = ONE;
            for (q, &a) in p.axes().iter().enumerate() {
                let bit = (k >> (n - 1 - q)) & 1;
                acc *= match (a, bit) {
                    (Pauli::Z, 1) => -ONE,
                    (Pauli::Y, 0) => crate::tensor::I,
                    (Pauli::Y, _) => -crate::tensor::I,
                    _ => ONE,
                };
            }
            acc
        })
        .collect();
    DMatrix::from_fn(dim, dim, |r, c| {
        let (r0, c0) = (r ^ mask, c ^ mask);
        v[r0] * rho[(r0, c0)] * v[c0].conj()
    })
}

/// `(1 − p) ρ + p · Tr_t(ρ) ⊗ I/d` on the target qubits, `d = 2^|targets|`.
pub fn depolarize(rho: &DensityMatrix, targets: &[usize], p: f64) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    for &t in targets {
        if t >= n {
            return Err(DfsError::QubitOutOfRange { index: t, n });
        }
    }
    if p == 0.0 || targets.is_empty() {
        return Ok(rho.clone());
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(DfsError::InvalidParameter(format!("depolarizing probability {p} outside [0, 1]")));
    }
    let k = targets.len();
    let d2 = (1usize << (2 * k)) as f64;
    let mut acc = rho.matrix() * C64::new(1.0 - p, 0.0);
    let w = C64::new(p / d2, 0.0);
    for local in PauliString::all(k) {
        let mut axes = vec![Pauli::I; n];
        for (j, &t) in targets.iter().enumerate() {
            axes[t] = local.axes()[j];
        }
        acc += pauli_conjugate(rho.matrix(), &PauliString::new(axes)) * w;
    }
    Ok(DensityMatrix::from_matrix_unchecked(acc))
}

/// Ideal gate followed by depolarizing noise of the model's strength on the targets.
pub fn apply_gate_noise(
    state: &DensityMatrix,
    gate: &DenseOperator,
    targets: &[usize],
    model: &GateNoiseModel,
) -> Result<DensityMatrix> {
    let out = state.apply_local(gate, targets)?;
    depolarize(&out, targets, model.error_for(targets.len()))
}

/// Outcome distribution after independent symmetric bit flips with probability `p` on every qubit.
pub fn apply_readout_error(probs: &[f64], p: f64) -> Vec<f64> {
    if p == 0.0 {
        return probs.to_vec();
    }
    let n = probs.len().trailing_zeros() as usize;
    let mut cur = probs.to_vec();
    for q in 0..n {
        let bit = 1usize << q;
        let mut next = vec![0.0; cur.len()];
        for (i, &w) in cur.iter().enumerate() {
            next[i] += (1.0 - p) * w;
            next[i ^ bit] += p * w;
        }
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::collective_residual;
    use crate::tensor::gates;

    #[test]
    fn zero_strength_has_no_coupling() {
        let m = SystemBathModel::collective_dephasing(2, 1, NoiseStrengths::new(0.0, 1e5), 3).unwrap();
        assert!(m.couplings.is_empty());
        assert!(m.h_sb().is_empty());
    }

    #[test]
    fn bath_required_for_coupling() {
        let r = SystemBathModel::collective_dephasing(2, 0, NoiseStrengths::new(1e5, 0.0), 1);
        assert!(matches!(r, Err(DfsError::InvalidParameter(_))));
        assert!(SystemBathModel::collective_dephasing(2, 0, NoiseStrengths::zero(), 1).is_ok());
    }

    #[test]
    fn hamiltonians_are_hermitian() {
        let s = NoiseStrengths::default();
        let models = [
            SystemBathModel::collective_dephasing(2, 2, s, 1).unwrap(),
            SystemBathModel::collective_decoherence(3, 1, s, 2).unwrap(),
            SystemBathModel::generic_two_qubit(2, s, 3).unwrap(),
            SystemBathModel::linear_per_qubit(3, 2, s, 4).unwrap(),
        ];
        for m in &models {
            assert!(m.dense_hamiltonian().hermiticity_error() < 1e-12 * 1e5);
        }
    }

    #[test]
    fn seeded_constructors_reproduce() {
        let s = NoiseStrengths::default();
        let a = SystemBathModel::generic_two_qubit(2, s, 42).unwrap();
        let b = SystemBathModel::generic_two_qubit(2, s, 42).unwrap();
        let c = SystemBathModel::generic_two_qubit(2, s, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn linear_asymmetric_is_not_collective() {
        let m = SystemBathModel::linear_per_qubit(2, 1, NoiseStrengths::default(), 9).unwrap();
        assert!(collective_residual(&m.h_sb(), 2).unwrap() > 0.0);
        let c = SystemBathModel::collective_decoherence(3, 1, NoiseStrengths::default(), 9).unwrap();
        assert!(collective_residual(&c.h_sb(), 3).unwrap() < 1e-12 * 1e5);
    }

    #[test]
    fn combine_stacks_baths() {
        let s = NoiseStrengths::default();
        let a = SystemBathModel::collective_dephasing(2, 1, s, 1).unwrap();
        let b = SystemBathModel::linear_per_qubit(2, 2, s, 2).unwrap();
        let c = a.combine(&b).unwrap();
        assert_eq!(c.n_bath, 3);
        assert_eq!(c.couplings.len(), a.couplings.len() + b.couplings.len());
        assert!(!c.collective);
        assert!(c.dense_hamiltonian().is_hermitian(1e-6));
    }

    #[test]
    fn depolarize_full_strength_gives_mixed() {
        let rho = Ket::basis(1, 0).unwrap().to_density();
        let out = depolarize(&rho, &[0], 1.0).unwrap();
        let half = DensityMatrix::maximally_mixed(1);
        assert!((out.matrix() - half.matrix()).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_error_is_unitary_only() {
        let rho = Ket::from_bits(&[1, 0]).unwrap().to_density();
        let out = apply_gate_noise(&rho, &gates::cnot(), &[0, 1], &GateNoiseModel::noiseless()).unwrap();
        assert!((out.fidelity_with(&Ket::from_bits(&[1, 1]).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cnot_average_gate_fidelity_matches_process_oracle() {
        // Process fidelity from the Choi construction, F_avg = (d F_pro + 1) / (d + 1).
        let model = GateNoiseModel::manila();
        let p = model.cnot_error;
        let d = 4usize;
        let u = gates::cnot();
        let mut f_pro = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                let mut e = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
                e[(i, j)] = ONE;
                let rho = DensityMatrix::from_matrix_unchecked(e);
                let out = apply_gate_noise(&rho, &u, &[0, 1], &model).unwrap();
                let back = u.adjoint().matrix() * out.matrix() * u.matrix();
                f_pro += back[(i, j)];
            }
        }
        let f_pro = f_pro.re / (d * d) as f64;
        let f_avg = (d as f64 * f_pro + 1.0) / (d as f64 + 1.0);
        assert!((f_avg - (1.0 - p * (d as f64 - 1.0) / d as f64)).abs() < 1e-14);
    }

    #[test]
    fn trace_preserved_by_gate_noise() {
        let psi = Ket::from_real(&[0.6, 0.0, 0.0, 0.8]).unwrap().kron(&Ket::basis(1, 1).unwrap()).unwrap();
        let out = apply_gate_noise(&psi.to_density(), &gates::cnot(), &[2, 0], &GateNoiseModel::manila()).unwrap();
        assert!((out.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn pauli_conjugate_matches_dense() {
        let psi = Ket::new(vec![C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.7, 0.0), C64::new(0.1, -0.3)]).unwrap();
        let rho = psi.to_density();
        let p: PauliString = "YZ".parse().unwrap();
        let dense = p.to_dense();
        let expect = dense.matrix() * rho.matrix() * dense.adjoint().matrix();
        let got = pauli_conjugate(rho.matrix(), &p);
        assert!((got - expect).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn readout_flip_single_qubit() {
        let out = apply_readout_error(&[1.0, 0.0], 0.1);
        assert!((out[0] - 0.9).abs() < 1e-15 && (out[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bundled_devices_load() {
        let d = DeviceDefaults::bundled();
        let m = d.gate_noise("manila", 0, (0, 1)).unwrap();
        assert_eq!(m, GateNoiseModel::manila());
        assert!(d.get("montreal").unwrap().qubit.iter().all(|q| !q.provenance.is_empty()));
        assert!(d.gate_noise("manila", 9, (0, 1)).is_err());
    }

    #[test]
    fn gate_noise_validation() {
        let mut m = GateNoiseModel::manila();
        assert!(m.validate().is_ok());
        m.cnot_error = 1.5;
        assert!(m.validate().is_err());
    }
}
