//! Experiment execution: prepare, evolve system ⊗ bath under free evolution or
//! a decoupling sequence, decode, measure and post-select.
//!
//! A plan is lowered to a [`Program`]: three timed gate segments (prefix,
//! one protocol cycle, suffix) on the system qubits plus the system–bath
//! Hamiltonian that acts between gates. Gates with duration `d` fire at the
//! midpoint of their slot.

use std::collections::HashMap;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::codes::{CodeSpec, EncoderForm, GaugeSpec};
use crate::error::{DfsError, Result};
use crate::noise::{apply_readout_error, depolarize, GateNoiseModel, SystemBathModel};
use crate::sequences::{compile, PulseSequence, SequenceMode};
use crate::tensor::{kron, DenseOperator, DensityMatrix, HermitianEigen, Ket, MAX_QUBITS};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathState {
    #[default]
    Ground,
    MaximallyMixed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialState {
    pub theta: f64,
    pub phi: f64,
    pub gauge: GaugeSpec,
}

impl InitialState {
    pub fn new(theta: f64, phi: f64) -> Self {
        InitialState { theta, phi, gauge: GaugeSpec::trivial() }
    }

    pub fn with_gauge(mut self, gauge: GaugeSpec) -> Self {
        self.gauge = gauge;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Protocol {
    /// Idle for `period` per repetition.
    Free { period: f64 },
    Dd(PulseSequence),
}

impl Protocol {
    /// Free evolution lasting as long as one cycle of `seq`.
    pub fn matched_free(seq: &PulseSequence, gate_noise: Option<&GateNoiseModel>) -> Result<Self> {
        Ok(Protocol::Free { period: free_equivalent(seq, 1, gate_noise)? })
    }
}

/// Total time of `m` cycles in the sequence's mode.
pub fn free_equivalent(seq: &PulseSequence, m: usize, gate_noise: Option<&GateNoiseModel>) -> Result<f64> {
    let model = gate_noise.copied().unwrap_or_else(GateNoiseModel::noiseless);
    Ok(m as f64 * seq.duration(&model)?)
}

#[derive(Clone, Debug)]
pub struct ExperimentPlan {
    pub id: usize,
    /// `None` runs the unencoded state on every system qubit.
    pub code: Option<CodeSpec>,
    pub encoder: EncoderForm,
    pub initial: InitialState,
    pub model: SystemBathModel,
    pub bath_state: BathState,
    pub gate_noise: Option<GateNoiseModel>,
    pub protocol: Protocol,
    pub repetitions: Vec<usize>,
    pub shots: usize,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn new(code: Option<CodeSpec>, initial: InitialState, model: SystemBathModel, protocol: Protocol) -> Self {
        ExperimentPlan {
            id: 0,
            code,
            encoder: EncoderForm::default(),
            initial,
            model,
            bath_state: BathState::Ground,
            gate_noise: None,
            protocol,
            repetitions: vec![1],
            shots: 8000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(DfsError::InvalidParameter("shots must be at least 1".into()));
        }
        if self.repetitions.is_empty() || self.repetitions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DfsError::InvalidParameter("repetitions must be nonempty and strictly increasing".into()));
        }
        if let Some(c) = &self.code {
            if self.model.n_sys != c.n_physical {
                return Err(DfsError::DimensionMismatch { expected: c.n_physical, found: self.model.n_sys });
            }
        }
        if let Protocol::Dd(seq) = &self.protocol {
            if seq.n_qubits != self.model.n_sys {
                return Err(DfsError::DimensionMismatch { expected: self.model.n_sys, found: seq.n_qubits });
            }
        }
        if let Protocol::Free { period } = self.protocol {
            if !(period.is_finite() && period >= 0.0) {
                return Err(DfsError::InvalidParameter(format!("free period {period} must be non-negative")));
            }
        }
        if let Some(g) = &self.gate_noise {
            g.validate()?;
        }
        if self.model.n_total() > MAX_QUBITS {
            return Err(DfsError::RegisterTooLarge { requested: self.model.n_total(), max: MAX_QUBITS });
        }
        Ok(())
    }

    pub fn data_slot(&self) -> usize {
        self.code.as_ref().map_or(0, |c| c.data_slot)
    }
}

/// One measured shot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub plan_id: usize,
    pub m: usize,
    pub t_total: f64,
    pub data_bit: u8,
    /// Outcomes of every system qubit other than the data slot, in qubit order.
    pub flags: Vec<u8>,
    pub accepted: bool,
}

/// Outcome distribution over the system qubits after `m` repetitions.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub m: usize,
    pub t_total: f64,
    /// Without readout error.
    pub probs: Vec<f64>,
    /// With the plan's readout error.
    pub probs_readout: Vec<f64>,
}

/// Fidelity estimate with the retained fraction it was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub fidelity: f64,
    pub accept: f64,
}

/// Probability that qubit `q` of an `n`-qubit register reads 0.
pub fn qubit_zero_probability(weights: &[f64], n: usize, q: usize) -> f64 {
    let total: f64 = weights.iter().sum();
    let zero: f64 = weights.iter().enumerate().filter(|(i, _)| (i >> (n - 1 - q)) & 1 == 0).map(|(_, w)| w).sum();
    zero / total
}

/// Fidelity from outcome weights (probabilities or counts) over the system bits.
///
/// With a code and `postselect`, the data bit is conditioned on acceptance;
/// otherwise it is the data-slot marginal and `accept` is 1.
pub fn estimate(weights: &[f64], n_sys: usize, code: Option<&CodeSpec>, postselect: bool) -> Result<Estimate> {
    if weights.len() != 1 << n_sys {
        return Err(DfsError::DimensionMismatch { expected: 1 << n_sys, found: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(DfsError::InvalidParameter("empty outcome distribution".into()));
    }
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    match code {
        Some(c) if postselect => {
            let ps = c.postselect(&normalized)?;
            Ok(Estimate { fidelity: ps.data_distribution[0], accept: ps.accept_probability })
        }
        _ => {
            let slot = code.map_or(0, |c| c.data_slot);
            Ok(Estimate { fidelity: qubit_zero_probability(&normalized, n_sys, slot), accept: 1.0 })
        }
    }
}

#[derive(Clone, Debug)]
struct TimedGate {
    time: f64,
    op: DenseOperator,
    targets: Vec<usize>,
    error: f64,
}

#[derive(Clone, Debug, Default)]
struct Segment {
    events: Vec<TimedGate>,
    duration: f64,
}

impl Segment {
    fn gate(&mut self, g: &Gate, noise: Option<&GateNoiseModel>, offset: usize) {
        let (d, err) = noise.map_or((0.0, 0.0), |m| (g.duration(m), g.error(m)));
        let (op, targets) = g.local();
        self.events.push(TimedGate {
            time: self.duration + d / 2.0,
            op,
            targets: targets.into_iter().map(|q| q + offset).collect(),
            error: err,
        });
        self.duration += d;
    }

    fn circuit(&mut self, c: &Circuit, noise: Option<&GateNoiseModel>, offset: usize) {
        for g in c.gates() {
            if !matches!(g, Gate::Rz(a, _) if *a == 0.0) {
                self.gate(g, noise, offset);
            }
        }
    }

    fn instant(&mut self, op: DenseOperator, targets: Vec<usize>) {
        self.events.push(TimedGate { time: self.duration, op, targets, error: 0.0 });
    }

    fn idle(&mut self, dt: f64) {
        self.duration += dt;
    }

    fn shifted(&self, offset: usize) -> Segment {
        let events = self
            .events
            .iter()
            .map(|e| TimedGate { targets: e.targets.iter().map(|q| q + offset).collect(), ..e.clone() })
            .collect();
        Segment { events, duration: self.duration }
    }

    fn merge(&self, other: &Segment) -> Segment {
        let mut events: Vec<TimedGate> = self.events.iter().chain(other.events.iter()).cloned().collect();
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Segment { events, duration: self.duration.max(other.duration) }
    }
}

#[derive(Clone, Debug)]
enum State {
    Pure(Ket),
    Mixed(DensityMatrix),
}

impl State {
    fn apply_local(&mut self, op: &DenseOperator, targets: &[usize]) -> Result<()> {
        *self = match self {
            State::Pure(k) => State::Pure(k.apply_local(op, targets)?),
            State::Mixed(r) => State::Mixed(r.apply_local(op, targets)?),
        };
        Ok(())
    }

    fn apply(&mut self, u: &DenseOperator) -> Result<()> {
        *self = match self {
            State::Pure(k) => State::Pure(k.apply(u)?),
            State::Mixed(r) => State::Mixed(r.evolve(u)?),
        };
        Ok(())
    }

    fn depolarize(&mut self, targets: &[usize], p: f64) -> Result<()> {
        let rho = match self {
            State::Pure(k) => k.to_density(),
            State::Mixed(r) => r.clone(),
        };
        *self = State::Mixed(depolarize(&rho, targets, p)?);
        Ok(())
    }

    fn probabilities(&self) -> Vec<f64> {
        match self {
            State::Pure(k) => k.probabilities(),
            State::Mixed(r) => r.probabilities(),
        }
    }

    fn kron(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => Ok(State::Pure(a.kron(b)?)),
            _ => {
                let m = kron(&self.density_operator(), &other.density_operator())?;
                Ok(State::Mixed(DensityMatrix::from_matrix_unchecked(m.into_matrix())))
            }
        }
    }

    fn density_operator(&self) -> DenseOperator {
        match self {
            State::Pure(k) => DenseOperator::from_matrix_unchecked(k.to_density().matrix().clone()),
            State::Mixed(r) => DenseOperator::from_matrix_unchecked(r.matrix().clone()),
        }
    }
}

/// Lowered experiment: timed segments on the system qubits plus the Hamiltonian.
#[derive(Clone, Debug)]
pub struct Program {
    n_sys: usize,
    model: SystemBathModel,
    bath: State,
    prefix: Segment,
    cycle: Segment,
    suffix: Segment,
    readout: Vec<f64>,
}

fn bath_state(model: &SystemBathModel, kind: BathState) -> Result<State> {
    Ok(match kind {
        BathState::Ground => State::Pure(model.bath_ground_state()?),
        BathState::MaximallyMixed => State::Mixed(DensityMatrix::maximally_mixed(model.n_bath)),
    })
}

/// State preparation circuit of the plan (encoder included).
pub fn preparation_circuit(plan: &ExperimentPlan) -> Result<Circuit> {
    let InitialState { theta, phi, gauge } = plan.initial;
    match &plan.code {
        Some(c) => c.preparation_circuit(theta, phi, &gauge, plan.encoder),
        None => {
            let mut c = Circuit::new(plan.model.n_sys);
            for q in 0..plan.model.n_sys {
                c.push(Gate::U1(crate::codes::state_prep(theta, phi), q))?;
            }
            Ok(c)
        }
    }
}

/// Decoder followed by the inverse state preparation, so the ideal outcome is all zeros.
pub fn decoding_circuit(plan: &ExperimentPlan) -> Result<Circuit> {
    let InitialState { theta, phi, gauge } = plan.initial;
    match &plan.code {
        Some(c) => {
            let mut d = c.decoder_circuit(&gauge);
            d.push(Gate::U1(crate::codes::state_prep(theta, phi).adjoint(), c.data_slot))?;
            Ok(d)
        }
        None => Ok(preparation_circuit(plan)?.inverse()),
    }
}

impl Program {
    pub fn from_plan(plan: &ExperimentPlan) -> Result<Self> {
        plan.validate()?;
        let noise = plan.gate_noise.as_ref();
        let n = plan.model.n_sys;
        let prep = preparation_circuit(plan)?;
        let mut prefix = Segment::default();
        prefix.circuit(&prep, noise, 0);
        let mut suffix = Segment::default();
        suffix.circuit(&decoding_circuit(plan)?, noise, 0);
        let mut cycle = Segment::default();
        match &plan.protocol {
            Protocol::Free { period } => cycle.idle(*period),
            Protocol::Dd(seq) => {
                let model = noise.copied().unwrap_or_else(GateNoiseModel::noiseless);
                for s in &seq.steps {
                    if !s.pulse.is_identity() {
                        match seq.mode {
                            SequenceMode::IdealDelta => {
                                cycle.instant(s.pulse.unitary(n, seq.variant)?, (0..n).collect());
                            }
                            SequenceMode::CompositeNoisy => {
                                let c = compile(&s.pulse, n, seq.variant, &model)?;
                                cycle.circuit(&c.circuit, noise, 0);
                            }
                        }
                    }
                    cycle.idle(s.free_after);
                }
            }
        }
        let readout = vec![noise.map_or(0.0, |m| m.readout_error); 1];
        Ok(Program {
            n_sys: n,
            model: plan.model.clone(),
            bath: bath_state(&plan.model, plan.bath_state)?,
            prefix,
            cycle,
            suffix,
            readout,
        })
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    pub fn cycle_duration(&self) -> f64 {
        self.cycle.duration
    }

    pub fn overhead_duration(&self) -> f64 {
        self.prefix.duration + self.suffix.duration
    }

    /// Two programs side by side with an optional `ZZ` coupling between their boundary qubits.
    pub fn pair(a: &Program, b: &Program, zz: f64) -> Result<Program> {
        let n = a.n_sys + b.n_sys;
        let total = n + a.model.n_bath + b.model.n_bath;
        if total > MAX_QUBITS {
            return Err(DfsError::RegisterTooLarge { requested: total, max: MAX_QUBITS });
        }
        let (ca, cb) = (a.cycle.duration, b.cycle.duration);
        if (ca - cb).abs() > 1e-12 * ca.max(cb) {
            return Err(DfsError::InvalidParameter(format!(
                "co-simulated blocks need equal cycle durations ({ca:e} s vs {cb:e} s)"
            )));
        }
        let left: Vec<usize> = (0..a.n_sys).collect();
        let right: Vec<usize> = (a.n_sys..n).collect();
        let mut model = a.model.embed_system(&left, n)?.combine(&b.model.embed_system(&right, n)?)?;
        if zz != 0.0 {
            model = model.with_zz(a.n_sys - 1, a.n_sys, zz)?;
        }
        let mut readout = a.readout.clone();
        readout.extend(b.readout.iter().copied());
        Ok(Program {
            n_sys: n,
            model,
            bath: a.bath.kron(&b.bath)?,
            prefix: a.prefix.merge(&b.prefix.shifted(a.n_sys)),
            cycle: a.cycle.merge(&b.cycle.shifted(a.n_sys)),
            suffix: a.suffix.merge(&b.suffix.shifted(a.n_sys)),
            readout,
        })
    }

    /// Outcome distributions over all system bits at each repetition count.
    pub fn simulate(&self, repetitions: &[usize], readout: f64) -> Result<Vec<Point>> {
        let mut sim = Simulator::new(self)?;
        let mut state = State::Pure(Ket::basis(self.n_sys, 0)?).kron(&self.bath)?;
        sim.run(&mut state, &self.prefix)?;
        let mut done = 0;
        let mut out = Vec::with_capacity(repetitions.len());
        for &m in repetitions {
            while done < m {
                sim.run(&mut state, &self.cycle)?;
                done += 1;
            }
            let mut s = state.clone();
            sim.run(&mut s, &self.suffix)?;
            let probs = system_marginal(&s.probabilities(), self.n_sys, self.model.n_bath);
            let norm: f64 = probs.iter().sum();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-8 {
                return Err(DfsError::Numeric(format!("state norm drifted to {norm}")));
            }
            let probs_readout = apply_readout_error(&probs, readout);
            out.push(Point {
                m,
                t_total: self.prefix.duration + m as f64 * self.cycle.duration + self.suffix.duration,
                probs,
                probs_readout,
            });
        }
        Ok(out)
    }
}

fn system_marginal(full: &[f64], n_sys: usize, n_bath: usize) -> Vec<f64> {
    let mut out = vec![0.0; 1 << n_sys];
    for (i, p) in full.iter().enumerate() {
        out[i >> n_bath] += p;
    }
    out
}

struct Simulator {
    eigen: Option<HermitianEigen>,
    cache: HashMap<u64, DenseOperator>,
}

impl Simulator {
    fn new(p: &Program) -> Result<Self> {
        let h = p.model.hamiltonian();
        let eigen = if h.is_empty() { None } else { Some(HermitianEigen::new(&h.to_dense())?) };
        Ok(Simulator { eigen, cache: HashMap::new() })
    }

    fn evolve(&mut self, state: &mut State, dt: f64) -> Result<()> {
        if dt <= 0.0 {
            return Ok(());
        }
        let Some(e) = &self.eigen else { return Ok(()) };
        let u = self.cache.entry(dt.to_bits()).or_insert_with(|| e.evolution(dt));
        state.apply(u)
    }

    fn run(&mut self, state: &mut State, seg: &Segment) -> Result<()> {
        let mut t = 0.0;
        for ev in &seg.events {
            self.evolve(state, ev.time - t)?;
            t = ev.time;
            state.apply_local(&ev.op, &ev.targets)?;
            if ev.error > 0.0 {
                state.depolarize(&ev.targets, ev.error)?;
            }
        }
        self.evolve(state, seg.duration - t)
    }
}

/// Dense outcome distributions for every repetition count of the plan.
pub fn simulate(plan: &ExperimentPlan) -> Result<Vec<Point>> {
    let p = Program::from_plan(plan)?;
    p.simulate(&plan.repetitions, p.readout[0])
}

fn single_point(plan: &ExperimentPlan, m: usize) -> Result<Point> {
    let p = Program::from_plan(plan)?;
    Ok(p.simulate(&[m], p.readout[0])?.remove(0))
}

/// Post-selected (for encoded plans) data fidelity from the dense state, ignoring readout error.
pub fn exact_fidelity(plan: &ExperimentPlan, m: usize) -> Result<f64> {
    let pt = single_point(plan, m)?;
    Ok(estimate(&pt.probs, plan.model.n_sys, plan.code.as_ref(), true)?.fidelity)
}

/// Exact acceptance probability, ignoring readout error.
pub fn exact_acceptance(plan: &ExperimentPlan, m: usize) -> Result<f64> {
    let pt = single_point(plan, m)?;
    Ok(estimate(&pt.probs, plan.model.n_sys, plan.code.as_ref(), true)?.accept)
}

fn sample_indices(probs: &[f64], shots: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(probs).map_err(|e| DfsError::Numeric(format!("cannot sample outcomes: {e}")))?;
    Ok((0..shots).map(|_| dist.sample(rng)).collect())
}

fn records_from_points(plan: &ExperimentPlan, points: &[Point]) -> Result<Vec<ShotRecord>> {
    let n = plan.model.n_sys;
    let slot = plan.data_slot();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut out = Vec::with_capacity(points.len() * plan.shots);
    for pt in points {
        for idx in sample_indices(&pt.probs_readout, plan.shots, &mut rng)? {
            let bits: Vec<u8> = (0..n).map(|q| ((idx >> (n - 1 - q)) & 1) as u8).collect();
            let accepted = plan.code.as_ref().is_none_or(|c| c.accepts(&bits));
            let flags = bits.iter().enumerate().filter(|(q, _)| *q != slot).map(|(_, b)| *b).collect();
            out.push(ShotRecord { plan_id: plan.id, m: pt.m, t_total: pt.t_total, data_bit: bits[slot], flags, accepted });
        }
    }
    Ok(out)
}

/// Sampled shot records, `shots` per repetition count, from one seeded stream.
pub fn run(plan: &ExperimentPlan) -> Result<Vec<ShotRecord>> {
    records_from_points(plan, &simulate(plan)?)
}

/// Outcome histogram for one repetition count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub m: usize,
    pub t_total: f64,
    pub counts: Vec<u64>,
}

impl Counts {
    pub fn weights(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn shots(&self) -> u64 {
        self.counts.iter().sum()
    }
}

fn counts_from_points(plan: &ExperimentPlan, points: &[Point]) -> Result<Vec<Counts>> {
    sample_counts(points, plan.shots, plan.seed)
}

/// Histograms of `shots` draws from each point's readout-corrupted distribution.
pub fn sample_counts(points: &[Point], shots: usize, seed: u64) -> Result<Vec<Counts>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    points
        .iter()
        .map(|pt| {
            let mut counts = vec![0u64; pt.probs.len()];
            for idx in sample_indices(&pt.probs_readout, shots, &mut rng)? {
                counts[idx] += 1;
            }
            Ok(Counts { m: pt.m, t_total: pt.t_total, counts })
        })
        .collect()
}

/// Same sampling stream as [`run`], aggregated into histograms.
pub fn run_counts(plan: &ExperimentPlan) -> Result<Vec<Counts>> {
    counts_from_points(plan, &simulate(plan)?)
}

fn marginal(probs: &[f64], n: usize, start: usize, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; 1 << len];
    let shift = n - start - len;
    for (i, p) in probs.iter().enumerate() {
        out[(i >> shift) & ((1 << len) - 1)] += p;
    }
    out
}

/// Dense per-block distributions. With a nonzero `zz`, blocks `(0,1)`, `(2,3)`, … are
/// co-simulated with the coupling between their boundary qubits.
pub fn simulate_blocks(plans: &[ExperimentPlan], zz: Option<f64>) -> Result<Vec<Vec<Point>>> {
    let zz = zz.unwrap_or(0.0);
    let mut out = Vec::with_capacity(plans.len());
    let mut i = 0;
    while i < plans.len() {
        if zz == 0.0 || i + 1 == plans.len() {
            out.push(simulate(&plans[i])?);
            i += 1;
            continue;
        }
        let (a, b) = (&plans[i], &plans[i + 1]);
        if a.repetitions != b.repetitions {
            return Err(DfsError::InvalidParameter("co-simulated blocks need the same repetitions".into()));
        }
        let (pa, pb) = (Program::from_plan(a)?, Program::from_plan(b)?);
        let joint = Program::pair(&pa, &pb, zz)?;
        let pts = joint.simulate(&a.repetitions, 0.0)?;
        for (k, (p, start)) in [(&pa, 0), (&pb, pa.n_sys)].into_iter().enumerate() {
            let ro = joint.readout[k];
            out.push(
                pts.iter()
                    .map(|pt| {
                        let probs = marginal(&pt.probs, joint.n_sys, start, p.n_sys);
                        Point { m: pt.m, t_total: pt.t_total, probs_readout: apply_readout_error(&probs, ro), probs }
                    })
                    .collect(),
            );
        }
        i += 2;
    }
    Ok(out)
}

/// Sampled records per block, each block using its own plan seed.
pub fn run_blocks(plans: &[ExperimentPlan], zz: Option<f64>) -> Result<Vec<Vec<ShotRecord>>> {
    simulate_blocks(plans, zz)?.iter().zip(plans).map(|(pts, plan)| records_from_points(plan, pts)).collect()
}

/// Histograms per block, each block using its own plan seed.
pub fn run_blocks_counts(plans: &[ExperimentPlan], zz: Option<f64>) -> Result<Vec<Vec<Counts>>> {
    simulate_blocks(plans, zz)?.iter().zip(plans).map(|(pts, plan)| counts_from_points(plan, pts)).collect()
}

/// Writes records as line-delimited JSON.
pub fn write_records<W: Write>(records: &[ShotRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| DfsError::Io(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| DfsError::Io(e.to_string()))?;
    }
    Ok(())
}

/// Index and value of the largest entry; ties go to the lowest index.
pub fn best_of(values: &[f64]) -> Option<(usize, f64)> {
    values.iter().copied().enumerate().fold(None, |acc, (i, v)| match acc {
        Some((_, b)) if b >= v => acc,
        _ => Some((i, v)),
    })
}
