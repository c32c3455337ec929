//! Plan construction, sampling and per-point statistics shared by the experiments.

use std::f64::consts::PI;

use dfs_lab::analysis::{bootstrap, derive_seed, StateEnsemble};
use dfs_lab::codes::CodeSpec;
use dfs_lab::engine::{estimate, sample_counts, Estimate, ExperimentPlan, InitialState, Point, Program, Protocol};
use dfs_lab::noise::{GateNoiseModel, NoiseStrengths, SystemBathModel};
use dfs_lab::pauli::Pauli;
use dfs_lab::sequences::{dfs2_sequence, dfs3_sequence, xy4, PulseSequence, SequenceMode};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{CollectiveAxes, Config, Experiment, NoiseKind, ProtocolName};
use crate::CliError;

/// Seed streams split off the master seed.
pub mod stream {
    pub const NOISE: u64 = 1;
    pub const ENSEMBLE: u64 = 2;
    pub const SHOTS: u64 = 3;
    pub const BOOTSTRAP: u64 = 4;
    pub const ORDER: u64 = 5;
    pub const HETEROGENEITY: u64 = 6;
}

/// Chains [`derive_seed`] along a path of stream indices.
pub fn seed_path(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(master, |s, &p| derive_seed(s, p))
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Mean, bootstrap interval and standard error over realizations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub sem: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointStat {
    #[serde(flatten)]
    pub fidelity: Stat,
    pub accepted_fraction: f64,
    pub accepted_sem: f64,
}

/// Fidelity and acceptance of one arm at one point, per realization.
#[derive(Clone, Debug, Default)]
pub struct Realized {
    pub fidelity: Vec<f64>,
    pub accept: Vec<f64>,
}

impl Realized {
    /// Element-wise mean of several realized values (state averaging).
    pub fn average(parts: &[Realized]) -> Realized {
        let r = parts[0].fidelity.len();
        let n = parts.len() as f64;
        let mut out = Realized { fidelity: vec![0.0; r], accept: vec![0.0; r] };
        for p in parts {
            for i in 0..r {
                out.fidelity[i] += p.fidelity[i] / n;
                out.accept[i] += p.accept[i] / n;
            }
        }
        out
    }
}

pub struct Setup {
    pub cfg: Config,
    pub experiment: Experiment,
    pub gate_noise: Option<GateNoiseModel>,
    pub cycle: f64,
    pub noise_seed: u64,
}

impl Setup {
    pub fn new(cfg: Config, experiment: Experiment) -> Result<Self, CliError> {
        cfg.validate(experiment)?;
        let gate_noise = cfg.gates.as_ref().map(|g| g.resolve()).transpose()?;
        let noise_seed = cfg.noise.seed.unwrap_or_else(|| derive_seed(cfg.seed, stream::NOISE));
        let s = Setup { cycle: cfg.sequence.cycle_time.get(), cfg, experiment, gate_noise, noise_seed };
        for p in s.used_protocols() {
            s.protocol(p)?;
        }
        Ok(s)
    }

    /// Distinct protocols the experiment will run, in [`ProtocolName::ALL`] order.
    pub fn used_protocols(&self) -> Vec<ProtocolName> {
        let named: Vec<ProtocolName> = match self.experiment {
            Experiment::Scaling => {
                let c = &self.cfg.scaling;
                vec![c.logical, c.logical.without_dd(), c.physical, c.physical.without_dd()]
            }
            _ => self.cfg.protocols.iter().map(|e| e.name).collect(),
        };
        ProtocolName::ALL.into_iter().filter(|p| named.contains(p)).collect()
    }

    pub fn code(&self, p: ProtocolName) -> Option<CodeSpec> {
        p.code(self.cfg.sequence.variant)
    }

    fn sequence(&self, p: ProtocolName, tau: f64) -> Result<Option<PulseSequence>, CliError> {
        let seq = match p {
            ProtocolName::Xy4 => xy4(tau)?,
            ProtocolName::Dfs2Dd => dfs2_sequence(tau)?,
            ProtocolName::Dfs3Dd => dfs3_sequence(tau)?,
            _ => return Ok(None),
        };
        Ok(Some(seq.with_mode(self.cfg.sequence.mode).with_variant(self.cfg.sequence.variant)))
    }

    /// Protection protocol whose cycle lasts exactly `cycle_time`.
    pub fn protocol(&self, p: ProtocolName) -> Result<Protocol, CliError> {
        let Some(unit) = self.sequence(p, 1.0)? else {
            return Ok(Protocol::Free { period: self.cycle });
        };
        let model = match (self.cfg.sequence.mode, &self.gate_noise) {
            (SequenceMode::CompositeNoisy, Some(g)) => *g,
            _ => GateNoiseModel::noiseless(),
        };
        let free_units = unit.free_time();
        let pulse_time = unit.duration(&model)? - free_units;
        let tau = (self.cycle - pulse_time) / free_units;
        if !(tau > 0.0) {
            return Err(CliError::Config(format!(
                "sequence.cycle_time = {:e} s is too short for the `{p}` pulses ({pulse_time:e} s)",
                self.cycle
            )));
        }
        Ok(Protocol::Dd(self.sequence(p, tau)?.expect("decoupled protocol")))
    }

    /// System-bath model for `n_sys` qubits; `scale` multiplies the coupling.
    pub fn model(&self, n_sys: usize, seed: u64, scale: f64) -> Result<SystemBathModel, CliError> {
        let nc = &self.cfg.noise;
        let s = NoiseStrengths::new(nc.coupling.get() * scale, nc.bath.get());
        let nb = nc.bath_qubits;
        let collective = |axes: CollectiveAxes, s: NoiseStrengths, seed: u64| match (axes, n_sys) {
            (CollectiveAxes::Dephasing, 1) => SystemBathModel::local_axis(1, nb, Pauli::Z, s, seed),
            (CollectiveAxes::Decoherence, 1) => SystemBathModel::linear_per_qubit(1, nb, s, seed),
            (CollectiveAxes::Dephasing, _) => SystemBathModel::collective_dephasing(n_sys, nb, s, seed),
            (CollectiveAxes::Decoherence, _) => SystemBathModel::collective_decoherence(n_sys, nb, s, seed),
        };
        let m = match nc.model {
            NoiseKind::None => SystemBathModel::trivial(n_sys, 0),
            NoiseKind::CollectiveDephasing => collective(CollectiveAxes::Dephasing, s, seed),
            NoiseKind::CollectiveDecoherence => collective(CollectiveAxes::Decoherence, s, seed),
            NoiseKind::Linear => SystemBathModel::linear_per_qubit(n_sys, nb, s, seed),
            NoiseKind::Generic if n_sys == 2 => SystemBathModel::generic_two_qubit(nb, s, seed),
            NoiseKind::Generic => SystemBathModel::linear_per_qubit(n_sys, nb, s, seed),
            NoiseKind::LocalZ => SystemBathModel::local_axis(n_sys, nb, Pauli::Z, s, seed),
            NoiseKind::Mixed => {
                let base = collective(nc.collective, s, seed)?;
                let weak = NoiseStrengths::new(s.coupling * nc.asymmetry.get(), s.bath);
                let extra = SystemBathModel::linear_per_qubit(n_sys, nb, weak, derive_seed(seed, 1))?;
                base.combine(&extra)
            }
        };
        Ok(m?)
    }

    pub fn plan(
        &self,
        p: ProtocolName,
        initial: InitialState,
        model: SystemBathModel,
        repetitions: Vec<usize>,
    ) -> Result<ExperimentPlan, CliError> {
        let mut plan = ExperimentPlan::new(self.code(p), initial, model, self.protocol(p)?);
        plan.encoder = self.cfg.sequence.encoder;
        plan.bath_state = self.cfg.noise.bath_state;
        plan.gate_noise = self.gate_noise;
        plan.repetitions = repetitions;
        plan.shots = self.cfg.shots.get();
        plan.validate()?;
        Ok(plan)
    }

    pub fn realizations(&self) -> usize {
        if self.cfg.exact {
            1
        } else {
            self.cfg.realizations.get()
        }
    }

    /// Outcome weights per realization and point: exact probabilities, or seeded shot counts.
    pub fn weights(&self, points: &[Point], seed: u64) -> Result<Vec<Vec<Vec<f64>>>, CliError> {
        if self.cfg.exact {
            return Ok(vec![points.iter().map(|p| p.probs_readout.clone()).collect()]);
        }
        (0..self.realizations() as u64)
            .map(|r| {
                let counts = sample_counts(points, self.cfg.shots.get(), derive_seed(seed, r))?;
                Ok(counts.iter().map(|c| c.weights()).collect())
            })
            .collect()
    }

    /// Per-point realized estimates from [`Setup::weights`] output.
    pub fn realize(
        &self,
        weights: &[Vec<Vec<f64>>],
        n_sys: usize,
        code: Option<&CodeSpec>,
        postselect: bool,
    ) -> Result<Vec<Realized>, CliError> {
        let n_points = weights[0].len();
        let mut out = vec![Realized::default(); n_points];
        for per_r in weights {
            for (slot, w) in out.iter_mut().zip(per_r) {
                let Estimate { fidelity, accept } = estimate(w, n_sys, code, postselect)?;
                slot.fidelity.push(fidelity);
                slot.accept.push(accept);
            }
        }
        Ok(out)
    }

    pub fn stat(&self, values: &[f64], seed: u64) -> Result<Stat, CliError> {
        if values.len() == 1 {
            let v = values[0];
            return Ok(Stat { mean: v, ci_lo: v, ci_hi: v, sem: 0.0 });
        }
        let a = &self.cfg.analysis;
        let b = bootstrap(values, a.bootstrap_resamples.get(), a.ci_level.get(), seed)?;
        Ok(Stat { mean: b.mean, ci_lo: b.ci_lo, ci_hi: b.ci_hi, sem: sem(values) })
    }

    pub fn point_stat(&self, r: &Realized, seed: u64) -> Result<PointStat, CliError> {
        Ok(PointStat {
            fidelity: self.stat(&r.fidelity, seed)?,
            accepted_fraction: mean(&r.accept),
            accepted_sem: sem(&r.accept),
        })
    }

    pub fn ensemble(&self) -> StateEnsemble {
        let mut e = StateEnsemble::poles();
        let h = StateEnsemble::haar(self.cfg.analysis.haar_states, derive_seed(self.cfg.seed, stream::ENSEMBLE));
        e.states.extend(h.states);
        e.provenance.extend(h.provenance);
        e
    }

    /// Seed-shuffled execution groups: protocols with equal total time run back to back.
    pub fn execution_order(&self, protocols: &[ProtocolName], reps: usize) -> Result<Vec<Vec<String>>, CliError> {
        let mut keyed: Vec<(i64, ProtocolName)> = Vec::new();
        for &p in protocols {
            let model = SystemBathModel::trivial(p.n_sys(), 0)?;
            let plan = self.plan(p, InitialState::new(0.0, 0.0), model, vec![reps])?;
            let prog = Program::from_plan(&plan)?;
            let total = prog.overhead_duration() + reps as f64 * prog.cycle_duration();
            keyed.push(((total * 1e12).round() as i64, p));
        }
        keyed.sort();
        keyed.dedup();
        let mut groups: Vec<Vec<String>> = Vec::new();
        let mut last = None;
        for (k, p) in keyed {
            if last != Some(k) {
                groups.push(Vec::new());
                last = Some(k);
            }
            groups.last_mut().unwrap().push(p.to_string());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, stream::ORDER));
        for g in &mut groups {
            g.shuffle(&mut rng);
        }
        groups.shuffle(&mut rng);
        Ok(groups)
    }

    /// Coupling scale factors in `[1 − h, 1 + h]`, floored at zero, one per block.
    pub fn block_scales(&self, blocks: usize) -> Vec<f64> {
        let h = self.cfg.scaling.heterogeneity.get();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.noise_seed, stream::HETEROGENEITY));
        (0..blocks).map(|_| (1.0 + h * rng.random_range(-1.0..=1.0)).max(0.0)).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean; zero for a single value.
fn sem(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

/// Polar grid over `[0, π]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    linspace(0.0, PI, n)
}
