//! Experiment configuration files.

use std::fmt;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use dfs_lab::codes::{CodeSpec, EncoderForm, LogicalVariant};
use dfs_lab::engine::BathState;
use dfs_lab::noise::{DeviceDefaults, GateNoiseModel};
use dfs_lab::sequences::SequenceMode;
use serde::{Deserialize, Serialize};

use crate::CliError;

macro_rules! bounded {
    ($name:ident, $doc:literal, |$v:ident| $ok:expr) => {
        #[doc = $doc]
        #[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(try_from = "f64", into = "f64")]
        pub struct $name(f64);

        impl $name {
            pub fn get(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<f64> for $name {
            type Error = String;
            fn try_from($v: f64) -> Result<Self, String> {
                if $ok {
                    Ok($name($v))
                } else {
                    Err(format!("{} is not {}", $v, $doc.trim_end_matches('.').to_lowercase()))
                }
            }
        }

        impl From<$name> for f64 {
            fn from(v: $name) -> f64 {
                v.0
            }
        }
    };
}

bounded!(Positive, "A finite positive number.", |v| v.is_finite() && v > 0.0);
bounded!(NonNegative, "A finite non-negative number.", |v| v.is_finite() && v >= 0.0);
bounded!(Probability, "A probability in [0, 1].", |v| (0.0..=1.0).contains(&v));
bounded!(Level, "A confidence level in (0, 1).", |v| v > 0.0 && v < 1.0);
bounded!(Finite, "A finite number.", |v| v.is_finite());

fn nz(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n).expect("nonzero default")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    ThetaScan,
    GaugeScan,
    Decay,
    Scaling,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ThetaScan => "theta_scan",
            Experiment::GaugeScan => "gauge_scan",
            Experiment::Decay => "decay",
            Experiment::Scaling => "scaling",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Encoding plus protection scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolName {
    /// Unencoded qubit, idle.
    Free,
    /// Unencoded qubit under XY4.
    Xy4,
    Dfs2,
    Dfs2Dd,
    Dfs3,
    Dfs3Dd,
}

impl ProtocolName {
    pub const ALL: [ProtocolName; 6] = [
        ProtocolName::Free,
        ProtocolName::Xy4,
        ProtocolName::Dfs2,
        ProtocolName::Dfs2Dd,
        ProtocolName::Dfs3,
        ProtocolName::Dfs3Dd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolName::Free => "free",
            ProtocolName::Xy4 => "xy4",
            ProtocolName::Dfs2 => "dfs2",
            ProtocolName::Dfs2Dd => "dfs2_dd",
            ProtocolName::Dfs3 => "dfs3",
            ProtocolName::Dfs3Dd => "dfs3_dd",
        }
    }

    pub fn code(self, variant: LogicalVariant) -> Option<CodeSpec> {
        match self {
            ProtocolName::Free | ProtocolName::Xy4 => None,
            ProtocolName::Dfs2 | ProtocolName::Dfs2Dd => Some(CodeSpec::dfs2().with_variant(variant)),
            ProtocolName::Dfs3 | ProtocolName::Dfs3Dd => Some(CodeSpec::dfs3()),
        }
    }

    pub fn n_sys(self) -> usize {
        match self {
            ProtocolName::Free | ProtocolName::Xy4 => 1,
            ProtocolName::Dfs2 | ProtocolName::Dfs2Dd => 2,
            ProtocolName::Dfs3 | ProtocolName::Dfs3Dd => 3,
        }
    }

    pub fn has_dd(self) -> bool {
        matches!(self, ProtocolName::Xy4 | ProtocolName::Dfs2Dd | ProtocolName::Dfs3Dd)
    }

    /// Same encoding with the decoupling sequence removed.
    pub fn without_dd(self) -> ProtocolName {
        match self {
            ProtocolName::Xy4 => ProtocolName::Free,
            ProtocolName::Dfs2Dd => ProtocolName::Dfs2,
            ProtocolName::Dfs3Dd => ProtocolName::Dfs3,
            p => p,
        }
    }

    pub fn is_encoded(self) -> bool {
        self.n_sys() > 1
    }
}

impl fmt::Display for ProtocolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolEntry {
    pub name: ProtocolName,
    /// Condition on the code's flag qubits; ignored for unencoded protocols.
    #[serde(default = "yes")]
    pub postselect: bool,
}

impl ProtocolEntry {
    pub fn postselects(&self) -> bool {
        self.postselect && self.name.is_encoded()
    }

    pub fn label(&self) -> String {
        if self.postselects() {
            format!("{}+ps", self.name)
        } else {
            self.name.to_string()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    CollectiveDephasing,
    CollectiveDecoherence,
    /// Independent `σ⃗ᵢ · B⃗ᵢ` per qubit.
    Linear,
    /// All two-qubit Pauli couplings; other register sizes use `linear`.
    Generic,
    LocalZ,
    /// Collective coupling plus `asymmetry` times an independent per-qubit coupling.
    Mixed,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectiveAxes {
    Dephasing,
    #[default]
    Decoherence,
}

fn default_strength() -> NonNegative {
    NonNegative(1e5)
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub model: NoiseKind,
    /// rad/s
    #[serde(default = "default_strength")]
    pub coupling: NonNegative,
    /// rad/s
    #[serde(default = "default_strength")]
    pub bath: NonNegative,
    #[serde(default = "one")]
    pub bath_qubits: usize,
    #[serde(default)]
    pub bath_state: BathState,
    #[serde(default)]
    pub collective: CollectiveAxes,
    #[serde(default = "zero")]
    pub asymmetry: NonNegative,
    /// Coupling realization; derived from the master seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn zero() -> NonNegative {
    NonNegative(0.0)
}

fn manila() -> String {
    "manila".into()
}

fn default_pair() -> (usize, usize) {
    (0, 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateConfig {
    /// Bundled calibration set.
    #[serde(default = "manila")]
    pub device: String,
    #[serde(default)]
    pub qubit: usize,
    #[serde(default = "default_pair")]
    pub pair: (usize, usize),
    pub cnot_error: Option<Probability>,
    pub oneq_error: Option<Probability>,
    pub readout_error: Option<Probability>,
    /// seconds
    pub cnot_duration: Option<NonNegative>,
    /// seconds
    pub oneq_duration: Option<NonNegative>,
}

impl GateConfig {
    pub fn resolve(&self) -> Result<GateNoiseModel, CliError> {
        let mut m = DeviceDefaults::bundled()
            .gate_noise(&self.device, self.qubit, self.pair)
            .map_err(|e| CliError::Config(format!("[gates]: {e}")))?;
        if let Some(v) = self.cnot_error {
            m.cnot_error = v.get();
        }
        if let Some(v) = self.oneq_error {
            m.oneq_error = v.get();
        }
        if let Some(v) = self.readout_error {
            m.readout_error = v.get();
        }
        if let Some(v) = self.cnot_duration {
            m.cnot_duration = v.get();
        }
        if let Some(v) = self.oneq_duration {
            m.oneq_duration = v.get();
        }
        Ok(m)
    }
}

fn default_cycle() -> Positive {
    Positive(2e-6)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    #[serde(default)]
    pub mode: SequenceMode,
    /// Duration of one protection cycle, shared by every protocol (seconds).
    #[serde(default = "default_cycle")]
    pub cycle_time: Positive,
    #[serde(default)]
    pub variant: LogicalVariant,
    #[serde(default)]
    pub encoder: EncoderForm,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            mode: SequenceMode::IdealDelta,
            cycle_time: default_cycle(),
            variant: LogicalVariant::Symmetric,
            encoder: EncoderForm::Optimized,
        }
    }
}

fn resamples() -> NonZeroUsize {
    nz(10_000)
}

fn level() -> Level {
    Level(0.95)
}

fn fourteen() -> usize {
    14
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "resamples")]
    pub bootstrap_resamples: NonZeroUsize,
    #[serde(default = "level")]
    pub ci_level: Level,
    /// Haar-random states added to the six Pauli eigenstates.
    #[serde(default = "fourteen")]
    pub haar_states: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { bootstrap_resamples: resamples(), ci_level: level(), haar_states: fourteen() }
    }
}

fn thirteen() -> NonZeroUsize {
    nz(13)
}

fn zero_f() -> Finite {
    Finite(0.0)
}

fn one_nz() -> NonZeroUsize {
    nz(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaScanConfig {
    #[serde(default = "thirteen")]
    pub points: NonZeroUsize,
    #[serde(default = "zero_f")]
    pub phi: Finite,
    /// Protection cycles before decoding.
    #[serde(default = "one_nz")]
    pub cycles: NonZeroUsize,
}

impl Default for ThetaScanConfig {
    fn default() -> Self {
        ThetaScanConfig { points: thirteen(), phi: zero_f(), cycles: one_nz() }
    }
}

fn seven() -> NonZeroUsize {
    nz(7)
}

fn eight() -> NonZeroUsize {
    nz(8)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeScanConfig {
    #[serde(default = "seven")]
    pub theta_points: NonZeroUsize,
    #[serde(default = "eight")]
    pub gauge_points: NonZeroUsize,
    #[serde(default = "zero_f")]
    pub phi: Finite,
    #[serde(default = "one_nz")]
    pub cycles: NonZeroUsize,
}

impl Default for GaugeScanConfig {
    fn default() -> Self {
        GaugeScanConfig { theta_points: seven(), gauge_points: eight(), phi: zero_f(), cycles: one_nz() }
    }
}

fn decay_reps() -> Vec<usize> {
    (0..=12).collect()
}

fn one_p() -> Positive {
    Positive(1.0)
}

fn three_p() -> Positive {
    Positive(3.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    #[serde(default = "decay_reps")]
    pub repetitions: Vec<usize>,
    /// Short integration window in cycles.
    #[serde(default = "one_p")]
    pub short_cycles: Positive,
    /// Long integration window in cycles.
    #[serde(default = "three_p")]
    pub long_cycles: Positive,
    #[serde(default = "yes")]
    pub fit: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig { repetitions: decay_reps(), short_cycles: one_p(), long_cycles: three_p(), fit: true }
    }
}

fn four() -> NonZeroUsize {
    nz(4)
}

fn scaling_reps() -> Vec<usize> {
    (0..=6).collect()
}

fn dfs3_dd() -> ProtocolName {
    ProtocolName::Dfs3Dd
}

fn xy4() -> ProtocolName {
    ProtocolName::Xy4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    /// Simultaneously generated logical qubits.
    #[serde(default = "four")]
    pub blocks: NonZeroUsize,
    #[serde(default = "dfs3_dd")]
    pub logical: ProtocolName,
    #[serde(default = "xy4")]
    pub physical: ProtocolName,
    /// Alternate blocks drop the decoupling sequence.
    #[serde(default = "yes")]
    pub stagger: bool,
    #[serde(default = "yes")]
    pub postselect: bool,
    /// `ZZ` strength between neighbouring blocks (rad/s).
    #[serde(default = "zero_f")]
    pub zz: Finite,
    /// Relative spread of coupling strengths across blocks.
    #[serde(default = "zero")]
    pub heterogeneity: NonNegative,
    #[serde(default = "scaling_reps")]
    pub repetitions: Vec<usize>,
    #[serde(default = "one_p")]
    pub window_cycles: Positive,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            blocks: four(),
            logical: dfs3_dd(),
            physical: xy4(),
            stagger: true,
            postselect: true,
            zz: zero_f(),
            heterogeneity: zero(),
            repetitions: scaling_reps(),
            window_cycles: one_p(),
        }
    }
}

fn default_seed() -> u64 {
    1
}

fn shots() -> NonZeroUsize {
    nz(8000)
}

fn five() -> NonZeroUsize {
    nz(5)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Must match the subcommand when given.
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "shots")]
    pub shots: NonZeroUsize,
    /// Independent sampling runs feeding the bootstrap.
    #[serde(default = "five")]
    pub realizations: NonZeroUsize,
    /// Use outcome probabilities instead of sampled shots.
    #[serde(default)]
    pub exact: bool,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default)]
    pub protocols: Vec<ProtocolEntry>,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub gates: Option<GateConfig>,
    #[serde(default)]
    pub sequence: SequenceConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub theta_scan: ThetaScanConfig,
    #[serde(default)]
    pub gauge_scan: GaugeScanConfig,
    #[serde(default)]
    pub decay: DecayConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub exact: bool,
    pub shots: Option<NonZeroUsize>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.out {
            self.output = Some(p.clone());
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if o.exact {
            self.exact = true;
        }
        if let Some(s) = o.shots {
            self.shots = s;
        }
    }

    /// Cross-field checks that the schema cannot express.
    pub fn validate(&self, experiment: Experiment) -> Result<(), CliError> {
        let err = |m: String| Err(CliError::Config(m));
        if let Some(e) = self.experiment {
            if e != experiment {
                return err(format!("config is for `{e}` but the `{experiment}` command was run"));
            }
        }
        if experiment != Experiment::Scaling && self.protocols.is_empty() {
            return err("`protocols` must list at least one protocol".into());
        }
        if experiment == Experiment::GaugeScan {
            if let Some(p) = self.protocols.iter().find(|p| !matches!(p.name, ProtocolName::Dfs3 | ProtocolName::Dfs3Dd)) {
                return err(format!("gauge scans need DFS3 protocols, found `{}`", p.name));
            }
        }
        if self.sequence.mode == SequenceMode::CompositeNoisy && self.gates.is_none() {
            return err("sequence.mode = \"composite_noisy\" needs a [gates] table".into());
        }
        if self.noise.model != NoiseKind::None && self.noise.coupling.get() > 0.0 && self.noise.bath_qubits == 0 {
            return err("noise.bath_qubits must be at least 1 for a nonzero coupling".into());
        }
        let baths = self.noise.bath_qubits * if self.noise.model == NoiseKind::Mixed { 2 } else { 1 };
        let widest = match experiment {
            Experiment::Scaling => {
                let n = self.scaling.logical.n_sys().max(self.scaling.physical.n_sys());
                if self.scaling.zz.get() != 0.0 {
                    2 * (n + baths)
                } else {
                    n + baths
                }
            }
            _ => self.protocols.iter().map(|p| p.name.n_sys()).max().unwrap_or(1) + baths,
        };
        if widest > dfs_lab::tensor::MAX_QUBITS {
            return err(format!("register of {widest} qubits exceeds the {}-qubit limit", dfs_lab::tensor::MAX_QUBITS));
        }
        if experiment == Experiment::Scaling {
            let s = &self.scaling;
            if !s.logical.is_encoded() {
                return err(format!("scaling.logical must be an encoded protocol, found `{}`", s.logical));
            }
            if s.physical.is_encoded() {
                return err(format!("scaling.physical must be unencoded, found `{}`", s.physical));
            }
            check_reps("scaling.repetitions", &s.repetitions, 4)?;
            check_window("scaling.window_cycles", &s.repetitions, s.window_cycles.get())?;
        }
        if experiment == Experiment::Decay {
            let d = &self.decay;
            check_reps("decay.repetitions", &d.repetitions, if d.fit { 5 } else { 4 })?;
            check_window("decay.short_cycles", &d.repetitions, d.short_cycles.get())?;
            check_window("decay.long_cycles", &d.repetitions, d.long_cycles.get())?;
        }
        if let Some(g) = &self.gates {
            g.resolve()?;
        }
        Ok(())
    }
}

fn check_reps(key: &str, reps: &[usize], need: usize) -> Result<(), CliError> {
    if reps.len() < need {
        return Err(CliError::Config(format!("`{key}` needs at least {need} entries, found {}", reps.len())));
    }
    if reps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("`{key}` must be strictly increasing")));
    }
    Ok(())
}

fn check_window(key: &str, reps: &[usize], cycles: f64) -> Result<(), CliError> {
    let span = (reps[reps.len() - 1] - reps[0]) as f64;
    if cycles > span {
        return Err(CliError::Config(format!("`{key}` = {cycles} exceeds the {span} cycles covered by the repetitions")));
    }
    Ok(())
}
