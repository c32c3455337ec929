//! Dynamical-decoupling sequences and their compilation to native gates.
//!
//! A [`PulseSequence`] is stored in time order as `(pulse, free_after)` steps.
//! The written form `P_K f_τ … P_1 f_τ` becomes `[(I, τ), (P_1, τ), …, (P_K, 0)]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{native, Circuit, Gate};
use crate::codes::{Axis, CodeSpec, LogicalVariant};
use crate::error::{DfsError, Result};
use crate::noise::GateNoiseModel;
use crate::pauli::Pauli;
use crate::tensor::{gates, DenseOperator};

/// Named pulse. Logical labels act on a two-qubit DFS2 register.
#[derive(Clone, Debug, PartialEq)]
pub enum PulseLabel {
    Identity,
    /// `X` on every system qubit.
    X,
    /// `Y` on every system qubit.
    Y,
    /// `X̄ = R̄_x(π)`.
    LogicalX,
    /// `Ȳ = R̄_y(π)`.
    LogicalY,
    /// `Π = R̄_x(2π)`.
    Pi,
    /// SWAP `E_ab`.
    Swap(usize, usize),
    Adjoint(Box<PulseLabel>),
    /// Operator product, leftmost factor applied last.
    Product(Vec<PulseLabel>),
}

impl PulseLabel {
    pub fn adjoint(&self) -> PulseLabel {
        match self {
            PulseLabel::Identity | PulseLabel::X | PulseLabel::Y | PulseLabel::Swap(..) => self.clone(),
            PulseLabel::Adjoint(inner) => (**inner).clone(),
            PulseLabel::Product(fs) => PulseLabel::Product(fs.iter().rev().map(|f| f.adjoint()).collect()),
            _ => PulseLabel::Adjoint(Box::new(self.clone())),
        }
    }

    /// Product `self · other` with nested products flattened and identities dropped.
    pub fn then_after(&self, other: &PulseLabel) -> PulseLabel {
        let mut fs = Vec::new();
        for l in [self, other] {
            match l {
                PulseLabel::Identity => {}
                PulseLabel::Product(inner) => fs.extend(inner.iter().cloned()),
                _ => fs.push(l.clone()),
            }
        }
        match fs.len() {
            0 => PulseLabel::Identity,
            1 => fs.pop().unwrap(),
            _ => PulseLabel::Product(fs),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, PulseLabel::Identity)
    }

    fn logical_code(n: usize, variant: LogicalVariant) -> Result<CodeSpec> {
        if n != 2 {
            return Err(DfsError::UnsupportedSequence(format!("logical pulses need 2 qubits, got {n}")));
        }
        Ok(CodeSpec::dfs2().with_variant(variant))
    }

    fn check_swap(a: usize, b: usize, n: usize) -> Result<()> {
        if a >= n || b >= n {
            return Err(DfsError::QubitOutOfRange { index: a.max(b), n });
        }
        if a == b {
            return Err(DfsError::DuplicateQubit(a));
        }
        Ok(())
    }

    /// Ideal unitary on `n` system qubits.
    pub fn unitary(&self, n: usize, variant: LogicalVariant) -> Result<DenseOperator> {
        let transversal = |u: DenseOperator| -> Result<DenseOperator> {
            let mut acc = DenseOperator::identity(n);
            for q in 0..n {
                acc = DenseOperator::embed(&u, &[q], n)?.mul(&acc);
            }
            Ok(acc)
        };
        match self {
            PulseLabel::Identity => Ok(DenseOperator::identity(n)),
            PulseLabel::X => transversal(gates::x()),
            PulseLabel::Y => transversal(gates::y()),
            PulseLabel::LogicalX => Ok(Self::logical_code(n, variant)?.logical_rotation(Axis::X, std::f64::consts::PI)),
            PulseLabel::LogicalY => Ok(Self::logical_code(n, variant)?.logical_rotation(Axis::Y, std::f64::consts::PI)),
            PulseLabel::Pi => Ok(Self::logical_code(n, variant)?.logical_rotation(Axis::X, 2.0 * std::f64::consts::PI)),
            PulseLabel::Swap(a, b) => {
                Self::check_swap(*a, *b, n)?;
                let mut perm: Vec<usize> = (0..n).collect();
                perm.swap(*a, *b);
                DenseOperator::qubit_permutation(&perm)
            }
            PulseLabel::Adjoint(inner) => Ok(inner.unitary(n, variant)?.adjoint()),
            PulseLabel::Product(fs) => {
                let mut acc = DenseOperator::identity(n);
                for f in fs {
                    acc = acc.mul(&f.unitary(n, variant)?);
                }
                Ok(acc)
            }
        }
    }

    /// Native gates in time order.
    fn native_gates(&self, n: usize, variant: LogicalVariant) -> Result<Vec<Gate>> {
        use std::f64::consts::PI;
        let rotation = |axis: Axis, theta: f64| -> Vec<Gate> {
            let pr = native::pauli_pair_rotation;
            match (variant, axis) {
                (LogicalVariant::Symmetric, Axis::X) => {
                    let mut g = pr(0, Pauli::X, 1, Pauli::X, theta / 4.0);
                    g.extend(pr(0, Pauli::Y, 1, Pauli::Y, theta / 4.0));
                    g
                }
                (LogicalVariant::Symmetric, _) => {
                    let mut g = pr(0, Pauli::Y, 1, Pauli::X, theta / 4.0);
                    g.extend(pr(0, Pauli::X, 1, Pauli::Y, -theta / 4.0));
                    g
                }
                (LogicalVariant::NonSymmetric, Axis::X) => pr(0, Pauli::X, 1, Pauli::X, theta / 2.0),
                (LogicalVariant::NonSymmetric, _) => pr(0, Pauli::Y, 1, Pauli::X, theta / 2.0),
            }
        };
        match self {
            PulseLabel::Identity => Ok(vec![]),
            PulseLabel::X => Ok((0..n).flat_map(native::x).collect()),
            PulseLabel::Y => Ok((0..n).flat_map(native::y).collect()),
            PulseLabel::LogicalX => {
                Self::logical_code(n, variant)?;
                Ok(rotation(Axis::X, PI))
            }
            PulseLabel::LogicalY => {
                Self::logical_code(n, variant)?;
                Ok(rotation(Axis::Y, PI))
            }
            PulseLabel::Pi => {
                Self::logical_code(n, variant)?;
                Ok(rotation(Axis::X, 2.0 * PI))
            }
            PulseLabel::Swap(a, b) => {
                Self::check_swap(*a, *b, n)?;
                Ok(native::swap(*a, *b))
            }
            PulseLabel::Adjoint(inner) => {
                let c = native::circuit(n, inner.native_gates(n, variant)?)?;
                Ok(c.inverse().gates().to_vec())
            }
            PulseLabel::Product(fs) => {
                let mut out = Vec::new();
                for f in fs.iter().rev() {
                    out.extend(f.native_gates(n, variant)?);
                }
                Ok(out)
            }
        }
    }
}

impl fmt::Display for PulseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseLabel::Identity => write!(f, "I"),
            PulseLabel::X => write!(f, "X"),
            PulseLabel::Y => write!(f, "Y"),
            PulseLabel::LogicalX => write!(f, "Xbar"),
            PulseLabel::LogicalY => write!(f, "Ybar"),
            PulseLabel::Pi => write!(f, "Pi"),
            PulseLabel::Swap(a, b) => write!(f, "E{a}{b}"),
            PulseLabel::Adjoint(inner) => write!(f, "{inner}'"),
            PulseLabel::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join("*"))
            }
        }
    }
}

impl FromStr for PulseLabel {
    type Err = DfsError;

    /// Factors joined by `*`; a trailing `'` marks an adjoint; `Eab` is a SWAP of qubits `a`, `b`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('*') {
            let fs = s.split('*').map(|p| p.parse()).collect::<Result<Vec<PulseLabel>>>()?;
            return Ok(PulseLabel::Product(fs));
        }
        if let Some(base) = s.strip_suffix('\'') {
            return Ok(base.parse::<PulseLabel>()?.adjoint());
        }
        match s {
            "I" => Ok(PulseLabel::Identity),
            "X" => Ok(PulseLabel::X),
            "Y" => Ok(PulseLabel::Y),
            "Xbar" => Ok(PulseLabel::LogicalX),
            "Ybar" => Ok(PulseLabel::LogicalY),
            "Pi" => Ok(PulseLabel::Pi),
            _ => {
                let digits: Vec<char> = s.strip_prefix('E').map(|d| d.chars().collect()).unwrap_or_default();
                match digits.as_slice() {
                    [a, b] if a.is_ascii_digit() && b.is_ascii_digit() => Ok(PulseLabel::Swap(
                        a.to_digit(10).unwrap() as usize,
                        b.to_digit(10).unwrap() as usize,
                    )),
                    _ => Err(DfsError::UnknownPulse(s.to_string())),
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceMode {
    /// Instantaneous ideal pulses.
    #[default]
    IdealDelta,
    /// Pulses compiled to native gates with finite duration and gate noise.
    CompositeNoisy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub pulse: PulseLabel,
    pub free_after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulseSequence {
    pub n_qubits: usize,
    pub steps: Vec<Step>,
    pub mode: SequenceMode,
    pub tau: f64,
    pub variant: LogicalVariant,
}

/// Native-gate realization of one pulse.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositePulse {
    pub label: PulseLabel,
    pub circuit: Circuit,
    pub duration: f64,
}

impl CompositePulse {
    pub fn gates(&self) -> &[Gate] {
        self.circuit.gates()
    }

    pub fn cnot_count(&self) -> usize {
        self.circuit.cnot_count()
    }
}

/// Native-gate list for `label` on an `n`-qubit register.
pub fn compile(label: &PulseLabel, n: usize, variant: LogicalVariant, model: &GateNoiseModel) -> Result<CompositePulse> {
    let circuit = native::circuit(n, label.native_gates(n, variant)?)?;
    let duration = circuit.duration(model);
    Ok(CompositePulse { label: label.clone(), circuit, duration })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(DfsError::InvalidParameter(format!("tau must be finite and non-negative, got {tau}")));
    }
    Ok(())
}

impl PulseSequence {
    /// Builds a sequence from `(pulse, free_after)` pairs in time order.
    pub fn new(n_qubits: usize, steps: Vec<(PulseLabel, f64)>, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        if steps.is_empty() {
            return Err(DfsError::UnsupportedSequence("empty sequence".into()));
        }
        if steps.iter().any(|(_, d)| !(d.is_finite() && *d >= 0.0)) {
            return Err(DfsError::InvalidParameter("free durations must be finite and non-negative".into()));
        }
        Ok(PulseSequence {
            n_qubits,
            steps: steps.into_iter().map(|(pulse, free_after)| Step { pulse, free_after }).collect(),
            mode: SequenceMode::IdealDelta,
            tau,
            variant: LogicalVariant::Symmetric,
        })
    }

    /// `k` idle intervals of length `tau`.
    pub fn free(n_qubits: usize, tau: f64, k: usize) -> Result<Self> {
        Self::new(n_qubits, vec![(PulseLabel::Identity, tau * k as f64)], tau)
    }

    pub fn with_mode(mut self, mode: SequenceMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_variant(mut self, variant: LogicalVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn pulses(&self) -> impl Iterator<Item = &PulseLabel> {
        self.steps.iter().map(|s| &s.pulse)
    }

    pub fn pulse_count(&self) -> usize {
        self.steps.iter().filter(|s| !s.pulse.is_identity()).count()
    }

    /// Sum of free intervals.
    pub fn free_time(&self) -> f64 {
        self.steps.iter().map(|s| s.free_after).sum()
    }

    /// Cycle time in the active mode; composite mode adds compiled gate durations.
    pub fn duration(&self, model: &GateNoiseModel) -> Result<f64> {
        match self.mode {
            SequenceMode::IdealDelta => Ok(self.free_time()),
            SequenceMode::CompositeNoisy => {
                let mut t = self.free_time();
                for c in self.compile_all(model)? {
                    t += c.duration;
                }
                Ok(t)
            }
        }
    }

    /// Compiled form of every step's pulse.
    pub fn compile_all(&self, model: &GateNoiseModel) -> Result<Vec<CompositePulse>> {
        self.steps.iter().map(|s| compile(&s.pulse, self.n_qubits, self.variant, model)).collect()
    }

    /// Ideal unitary of every step's pulse.
    pub fn pulse_unitaries(&self) -> Result<Vec<DenseOperator>> {
        self.steps.iter().map(|s| s.pulse.unitary(self.n_qubits, self.variant)).collect()
    }

    /// Product of all pulses over one cycle.
    pub fn net_pulse(&self) -> Result<DenseOperator> {
        let mut acc = DenseOperator::identity(self.n_qubits);
        for u in self.pulse_unitaries()? {
            acc = u.mul(&acc);
        }
        Ok(acc)
    }

    /// Frames `Q_j = P_j ⋯ P_1` seen by each nonzero free interval.
    ///
    /// Fails unless every nonzero interval has the same length.
    pub fn toggling_frames(&self) -> Result<Vec<DenseOperator>> {
        let mut frames = Vec::new();
        let mut acc = DenseOperator::identity(self.n_qubits);
        let mut interval: Option<f64> = None;
        for (s, u) in self.steps.iter().zip(self.pulse_unitaries()?) {
            acc = u.mul(&acc);
            if s.free_after > 0.0 {
                match interval {
                    None => interval = Some(s.free_after),
                    Some(t) if ((t - s.free_after) / t).abs() > 1e-12 => {
                        return Err(DfsError::UnsupportedSequence("unequal free intervals".into()));
                    }
                    _ => {}
                }
                frames.push(acc.clone());
            }
        }
        Ok(frames)
    }
}

/// Written form `Y f X f Y f X f`.
pub fn xy4(tau: f64) -> Result<PulseSequence> {
    xy4_on(1, tau)
}

/// XY4 with transversal `X`, `Y` pulses on `n` qubits.
pub fn xy4_on(n: usize, tau: f64) -> Result<PulseSequence> {
    use PulseLabel::*;
    PulseSequence::new(n, vec![(Identity, tau), (X, tau), (Y, tau), (X, tau), (Y, 0.0)], tau)
}

/// `ȲX̄† f Π f X̄ f Π f Ȳ†X̄† f Π f X̄ f Π f` on a DFS2 register.
pub fn dfs2_sequence(tau: f64) -> Result<PulseSequence> {
    use PulseLabel::*;
    let xd = LogicalX.adjoint();
    let steps = vec![
        (Identity, tau),
        (Pi, tau),
        (LogicalX, tau),
        (Pi, tau),
        (LogicalY.adjoint().then_after(&xd), tau),
        (Pi, tau),
        (LogicalX, tau),
        (Pi, tau),
        (LogicalY.then_after(&xd), 0.0),
    ];
    PulseSequence::new(2, steps, tau)
}

/// `E₁₂ f E₀₁ f E₁₂ f E₀₁ f E₁₂ f E₀₁ f` on three qubits.
pub fn dfs3_sequence(tau: f64) -> Result<PulseSequence> {
    use PulseLabel::*;
    let (a, b) = (Swap(0, 1), Swap(1, 2));
    let steps = vec![
        (Identity, tau),
        (a.clone(), tau),
        (b.clone(), tau),
        (a.clone(), tau),
        (b.clone(), tau),
        (a, tau),
        (b, 0.0),
    ];
    PulseSequence::new(3, steps, tau)
}

/// Conjugation frames `{I, E₀₁, E₀₁E₁₂, E₀₂, E₀₂E₀₁, E₁₂}` of the three-qubit sequence.
pub fn dfs3_conjugation_frames() -> Result<Vec<DenseOperator>> {
    use PulseLabel::*;
    let labels = [
        Identity,
        Swap(0, 1),
        Product(vec![Swap(0, 1), Swap(1, 2)]),
        Swap(0, 2),
        Product(vec![Swap(0, 2), Swap(0, 1)]),
        Swap(1, 2),
    ];
    labels.iter().map(|l| l.unitary(3, LogicalVariant::Symmetric)).collect()
}

#[derive(Clone, Debug)]
enum Token {
    Pulse(PulseLabel),
    Free,
}

/// Nested construction `U_k ∘ (⋯ (U_1 ∘ f_τ))` with `U ∘ S = U S U† S`, outermost last.
pub fn nested(n: usize, units: &[PulseLabel], tau: f64) -> Result<PulseSequence> {
    let mut word = vec![Token::Free];
    for u in units {
        let mut next = vec![Token::Pulse(u.clone())];
        next.extend(word.iter().cloned());
        next.push(Token::Pulse(u.adjoint()));
        next.extend(word.iter().cloned());
        word = next;
    }
    // operator order → time order, merging adjacent pulses
    let mut steps: Vec<(PulseLabel, f64)> = Vec::new();
    let mut pending = PulseLabel::Identity;
    for t in word.iter().rev() {
        match t {
            Token::Free => {
                steps.push((pending, tau));
                pending = PulseLabel::Identity;
            }
            Token::Pulse(p) => pending = p.then_after(&pending),
        }
    }
    steps.push((pending, 0.0));
    PulseSequence::new(n, steps, tau)
}

/// All six nestings of `{Π, X̄, Ȳ}`.
pub fn dfs2_orderings(tau: f64) -> Result<Vec<PulseSequence>> {
    use PulseLabel::*;
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let units = [Pi, LogicalX, LogicalY];
    perms
        .iter()
        .map(|p| nested(2, &[units[p[0]].clone(), units[p[1]].clone(), units[p[2]].clone()], tau))
        .collect()
}

/// `m` back-to-back cycles; a trailing pulse merges into the next cycle's leading idle step.
pub fn repeat(seq: &PulseSequence, m: usize) -> Result<PulseSequence> {
    if m == 0 {
        return Err(DfsError::InvalidParameter("repetition count must be at least 1".into()));
    }
    let mut out = seq.clone();
    for _ in 1..m {
        for (i, s) in seq.steps.iter().enumerate() {
            let last = out.steps.last_mut().unwrap();
            if i == 0 && last.free_after == 0.0 && s.pulse.is_identity() {
                last.free_after = s.free_after;
            } else {
                out.steps.push(s.clone());
            }
        }
    }
    Ok(out)
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        let mode = match self.mode {
            SequenceMode::IdealDelta => "ideal_delta",
            SequenceMode::CompositeNoisy => "composite_noisy",
        };
        writeln!(f, "mode {mode}")?;
        let variant = match self.variant {
            LogicalVariant::Symmetric => "symmetric",
            LogicalVariant::NonSymmetric => "non_symmetric",
        };
        writeln!(f, "variant {variant}")?;
        writeln!(f, "tau {:e}", self.tau)?;
        for s in &self.steps {
            if self.tau > 0.0 && s.free_after == self.tau {
                writeln!(f, "step {} tau", s.pulse)?;
            } else {
                writeln!(f, "step {} {:e}", s.pulse, s.free_after)?;
            }
        }
        Ok(())
    }
}

impl FromStr for PulseSequence {
    type Err = DfsError;

    /// Line format: `qubits N`, `mode ideal_delta|composite_noisy`, `variant symmetric|non_symmetric`,
    /// `tau SECONDS`, then one `step LABEL DURATION` per pulse, where `DURATION` is seconds, `tau` or `K*tau`.
    /// `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let err = |line: usize, msg: String| DfsError::SequenceFormat(format!("line {line}: {msg}"));
        let mut n = None;
        let mut mode = SequenceMode::IdealDelta;
        let mut variant = LogicalVariant::Symmetric;
        let mut tau = None;
        let mut raw_steps: Vec<(usize, PulseLabel, String)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["qubits", v] => n = Some(v.parse::<usize>().map_err(|e| err(ln, e.to_string()))?),
                ["mode", "ideal_delta"] => mode = SequenceMode::IdealDelta,
                ["mode", "composite_noisy"] => mode = SequenceMode::CompositeNoisy,
                ["variant", "symmetric"] => variant = LogicalVariant::Symmetric,
                ["variant", "non_symmetric"] => variant = LogicalVariant::NonSymmetric,
                ["tau", v] => tau = Some(v.parse::<f64>().map_err(|e| err(ln, e.to_string()))?),
                ["step", label, d] => {
                    let l = label.parse().map_err(|e: DfsError| err(ln, e.to_string()))?;
                    raw_steps.push((ln, l, d.to_string()));
                }
                _ => return Err(err(ln, format!("unrecognised line `{line}`"))),
            }
        }
        let n = n.ok_or_else(|| DfsError::SequenceFormat("missing `qubits`".into()))?;
        let tau = tau.ok_or_else(|| DfsError::SequenceFormat("missing `tau`".into()))?;
        let mut steps = Vec::new();
        for (ln, label, d) in raw_steps {
            let dur = if d == "tau" {
                tau
            } else if let Some(k) = d.strip_suffix("*tau") {
                k.parse::<f64>().map_err(|e| err(ln, e.to_string()))? * tau
            } else {
                d.parse::<f64>().map_err(|e| err(ln, e.to_string()))?
            };
            label.unitary(n, variant).map_err(|e| err(ln, e.to_string()))?;
            steps.push((label, dur));
        }
        Ok(PulseSequence::new(n, steps, tau)?.with_mode(mode).with_variant(variant))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{first_order_average, project, OperatorSum, SubspaceBasis};
    use crate::tensor::phase_insensitive_distance;

    #[test]
    fn xy4_product_is_identity() {
        let s = xy4(1e-7).unwrap();
        assert!(phase_insensitive_distance(&s.net_pulse().unwrap(), &DenseOperator::identity(1)) < 1e-12);
        assert_eq!(s.toggling_frames().unwrap().len(), 4);
    }

    #[test]
    fn xy4_cancels_single_qubit_coupling() {
        let h = OperatorSum::from_labels(&[("XZ", ONE_C), ("YX", ONE_C), ("ZY", ONE_C)]).unwrap();
        let avg = first_order_average(&xy4(1.0).unwrap(), &h).unwrap();
        assert!(avg.hs_norm() < 1e-14);
    }

    const ONE_C: crate::tensor::C64 = crate::tensor::ONE;

    #[test]
    fn free_sequence_keeps_h() {
        let h = OperatorSum::from_labels(&[("ZX", ONE_C)]).unwrap();
        let avg = first_order_average(&PulseSequence::free(1, 1.0, 1).unwrap(), &h).unwrap();
        assert!(avg.sub(&h).unwrap().hs_norm() < 1e-15);
    }

    #[test]
    fn dfs2_cycle_is_identity_on_code() {
        let s = dfs2_sequence(1.0).unwrap();
        assert_eq!(s.toggling_frames().unwrap().len(), 8);
        let u = s.net_pulse().unwrap();
        let code = CodeSpec::dfs2();
        let [l0, l1] = code.logical_basis(&Default::default());
        let a = l0.inner(&l0.apply(&u).unwrap());
        let b = l1.inner(&l1.apply(&u).unwrap());
        assert!((a.norm() - 1.0).abs() < 1e-12 && (a - b).norm() < 1e-12);
    }

    #[test]
    fn dfs2_suppresses_leak_and_logical() {
        let h = OperatorSum::from_labels(&[("XI", ONE_C), ("IY", ONE_C), ("XX", ONE_C), ("ZI", ONE_C), ("XZ", ONE_C)]).unwrap();
        let mut seqs = vec![dfs2_sequence(1.0).unwrap()];
        seqs.extend(dfs2_orderings(1.0).unwrap());
        for s in seqs {
            let avg = first_order_average(&s, &h).unwrap();
            for b in [SubspaceBasis::leak(), SubspaceBasis::logi()] {
                let (c, _) = project(&avg, &b).unwrap();
                assert!(c.hs_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dfs3_frames_match_conjugation_set() {
        let frames = dfs3_sequence(1.0).unwrap().toggling_frames().unwrap();
        let reference = dfs3_conjugation_frames().unwrap();
        assert_eq!(frames.len(), 6);
        for r in &reference {
            assert_eq!(frames.iter().filter(|f| f.max_abs_diff(r) < 1e-14).count(), 1);
        }
    }

    #[test]
    fn compiled_pulses_match_labels() {
        let m = GateNoiseModel::default();
        let mut labels: Vec<(PulseLabel, usize)> = vec![(PulseLabel::X, 1), (PulseLabel::Y, 1), (PulseLabel::Swap(0, 2), 3)];
        for l in dfs2_sequence(1.0).unwrap().pulses() {
            labels.push((l.clone(), 2));
        }
        for variant in [LogicalVariant::Symmetric, LogicalVariant::NonSymmetric] {
            for (l, n) in &labels {
                let c = compile(l, *n, variant, &m).unwrap();
                let d = phase_insensitive_distance(&c.circuit.unitary().unwrap(), &l.unitary(*n, variant).unwrap());
                assert!(d < 1e-10, "{l} {variant:?}");
            }
        }
        assert_eq!(compile(&PulseLabel::Swap(1, 2), 3, LogicalVariant::Symmetric, &m).unwrap().cnot_count(), 3);
        assert_eq!(compile(&PulseLabel::LogicalX, 2, LogicalVariant::Symmetric, &m).unwrap().cnot_count(), 4);
        assert_eq!(compile(&PulseLabel::X, 1, LogicalVariant::Symmetric, &m).unwrap().gates(), &[Gate::X180(0)]);
    }

    #[test]
    fn repeat_durations() {
        let s = xy4(1e-7).unwrap();
        assert_eq!(repeat(&s, 1).unwrap(), s);
        let r = repeat(&s, 3).unwrap();
        assert!((r.free_time() - 3.0 * s.free_time()).abs() < 1e-20);
        assert_eq!(r.toggling_frames().unwrap().len(), 12);
        assert!(repeat(&s, 0).is_err());
        let m = GateNoiseModel::default();
        let c = s.clone().with_mode(SequenceMode::CompositeNoisy);
        let rc = repeat(&c, 3).unwrap();
        assert!((rc.duration(&m).unwrap() - 3.0 * c.duration(&m).unwrap()).abs() < 1e-18);
    }

    #[test]
    fn text_round_trip() {
        let s = dfs2_sequence(2e-7).unwrap().with_mode(SequenceMode::CompositeNoisy);
        let back: PulseSequence = s.to_string().parse().unwrap();
        assert_eq!(back.steps.len(), s.steps.len());
        for (a, b) in back.pulse_unitaries().unwrap().iter().zip(s.pulse_unitaries().unwrap()) {
            assert!(a.max_abs_diff(&b) < 1e-14);
        }
        assert_eq!(back.mode, s.mode);
        assert!("qubits 1\ntau 1\nstep Q tau\n".parse::<PulseSequence>().is_err());
    }

    #[test]
    fn unequal_intervals_rejected() {
        let s = PulseSequence::new(1, vec![(PulseLabel::Identity, 1.0), (PulseLabel::X, 2.0)], 1.0).unwrap();
        assert!(s.toggling_frames().is_err());
    }
}
