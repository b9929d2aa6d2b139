//! Experiment configuration: a strict TOML schema plus semantic validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::quadrature::Method;
use crate::shots::ShotMode;

pub const MAX_SITES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseKind {
    GroundState,
    Greens,
    Microcanonical,
    LinearSolver,
}

impl CaseKind {
    pub fn name(self) -> &'static str {
        match self {
            CaseKind::GroundState => "ground_state",
            CaseKind::Greens => "greens",
            CaseKind::Microcanonical => "microcanonical",
            CaseKind::LinearSolver => "linear_solver",
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [CaseKind::GroundState, CaseKind::Greens, CaseKind::Microcanonical, CaseKind::LinearSolver]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown case `{s}`")))
    }
}

/// A number, or the keyword `"ground"` referring to the ground energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnergyRule {
    Value(f64),
    Keyword(GroundKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundKeyword {
    Ground,
}

impl EnergyRule {
    pub fn ground() -> Self {
        EnergyRule::Keyword(GroundKeyword::Ground)
    }

    pub fn resolve(self, ground_energy: f64) -> f64 {
        match self {
            EnergyRule::Value(v) => v,
            EnergyRule::Keyword(GroundKeyword::Ground) => ground_energy,
        }
    }
}

/// Identity offset of the Hamiltonian: `"ground"` shifts the ground energy
/// to zero, `"none"` keeps the bare chain, a number adds that multiple of I.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OffsetRule {
    Value(f64),
    Keyword(OffsetKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetKeyword {
    Ground,
    None,
}

impl Default for OffsetRule {
    fn default() -> Self {
        OffsetRule::Keyword(OffsetKeyword::Ground)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_sites: usize,
    pub coupling: f64,
    #[serde(default)]
    pub offset: OffsetRule,
}

/// What a ground-state sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTarget {
    /// The filtered numerator `Tr(g O g rho)`.
    #[default]
    Numerator,
    /// The filtered norm `Tr(g² rho)`.
    Denominator,
    /// Numerator over denominator from independently seeded runs.
    Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateConfig {
    pub observable: String,
    pub tau: f64,
    pub t_cutoff: f64,
    #[serde(default)]
    pub target: GroundTarget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreensConfig {
    pub eta: f64,
    pub omega: EnergyRule,
    pub site_k: usize,
    pub site_l: usize,
    pub y_cutoff: f64,
    pub z_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrocanonicalConfig {
    pub observable: String,
    pub energy: EnergyRule,
    pub tau: f64,
    /// Defaults to `2 τ sqrt(ln(1/tolerance))`.
    #[serde(default)]
    pub t_cutoff: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearSolverConfig {
    pub n_qubits: usize,
    /// Pauli terms of `A`, e.g. `"0.8 Z0"`; `A` is rescaled to unit norm.
    pub terms: Vec<String>,
    pub observable: String,
    /// Explicit `[L1, L2, L3, L4]`; derived from `tolerance` when absent.
    #[serde(default)]
    pub cutoffs: Option<[f64; 4]>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-8
}

/// One entry of the shot list: an integer or `"exact"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShotSpec {
    Count(u64),
    Keyword(ExactKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactKeyword {
    Exact,
}

impl ShotSpec {
    pub fn mode(self) -> Result<ShotMode> {
        match self {
            ShotSpec::Count(0) => Err(Error::ZeroShots),
            ShotSpec::Count(m) => Ok(ShotMode::Shots(m)),
            ShotSpec::Keyword(_) => Ok(ShotMode::Exact),
        }
    }
}

impl From<ShotMode> for ShotSpec {
    fn from(m: ShotMode) -> Self {
        match m {
            ShotMode::Shots(m) => ShotSpec::Count(m),
            ShotMode::Exact => ShotSpec::Keyword(ExactKeyword::Exact),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub methods: Vec<Method>,
    /// Explicit node counts.
    #[serde(default)]
    pub k_list: Option<Vec<usize>>,
    /// Inclusive exponent range `[lo, hi]` expanding to `2^lo ..= 2^hi`.
    #[serde(default)]
    pub k_log2: Option<[u32; 2]>,
    pub shots: Vec<ShotSpec>,
    pub trials: usize,
    pub master_seed: u64,
    /// Cells whose node count exceeds this are skipped and flagged.
    #[serde(default)]
    pub node_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub case: CaseKind,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub ground_state: Option<GroundStateConfig>,
    #[serde(default)]
    pub greens: Option<GreensConfig>,
    #[serde(default)]
    pub microcanonical: Option<MicrocanonicalConfig>,
    #[serde(default)]
    pub linear_solver: Option<LinearSolverConfig>,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
    #[serde(default)]
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Node counts in sweep order.
    pub fn k_values(&self) -> Vec<usize> {
        match (&self.sweep.k_list, &self.sweep.k_log2) {
            (Some(list), _) => list.clone(),
            (None, Some([lo, hi])) => (*lo..=*hi).map(|e| 1usize << e).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn shot_modes(&self) -> Vec<ShotMode> {
        self.sweep.shots.iter().filter_map(|s| s.mode().ok()).collect()
    }

    /// Canonical TOML text of the configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML text, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Collects every semantic problem before failing.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        match self.case {
            CaseKind::GroundState | CaseKind::Greens | CaseKind::Microcanonical => match &self.model {
                None => errs.push(format!("case `{}` needs a [model] section", self.case)),
                Some(m) => {
                    if m.n_sites < 2 || m.n_sites > MAX_SITES {
                        errs.push(format!("model.n_sites must lie in 2..={MAX_SITES}, got {}", m.n_sites));
                    }
                    if !m.coupling.is_finite() {
                        errs.push("model.coupling must be finite".into());
                    }
                }
            },
            CaseKind::LinearSolver => {}
        }
        let n_sites = self.model.as_ref().map(|m| m.n_sites).unwrap_or(0);
        match self.case {
            CaseKind::GroundState => match &self.ground_state {
                None => errs.push("case `ground_state` needs a [ground_state] section".into()),
                Some(g) => {
                    pos(&mut errs, "ground_state.tau", g.tau);
                    pos(&mut errs, "ground_state.t_cutoff", g.t_cutoff);
                    check_observable(&g.observable, n_sites, &mut errs);
                }
            },
            CaseKind::Greens => match &self.greens {
                None => errs.push("case `greens` needs a [greens] section".into()),
                Some(g) => {
                    pos(&mut errs, "greens.eta", g.eta);
                    pos(&mut errs, "greens.y_cutoff", g.y_cutoff);
                    pos(&mut errs, "greens.z_cutoff", g.z_cutoff);
                    for (name, s) in [("site_k", g.site_k), ("site_l", g.site_l)] {
                        if s >= n_sites {
                            errs.push(format!("greens.{name} = {s} outside the chain"));
                        }
                    }
                }
            },
            CaseKind::Microcanonical => match &self.microcanonical {
                None => errs.push("case `microcanonical` needs a [microcanonical] section".into()),
                Some(m) => {
                    pos(&mut errs, "microcanonical.tau", m.tau);
                    if let Some(t) = m.t_cutoff {
                        pos(&mut errs, "microcanonical.t_cutoff", t);
                    }
                    if !(m.tolerance > 0.0 && m.tolerance < 1.0) {
                        errs.push("microcanonical.tolerance must lie in (0, 1)".into());
                    }
                    check_observable(&m.observable, n_sites, &mut errs);
                }
            },
            CaseKind::LinearSolver => match &self.linear_solver {
                None => errs.push("case `linear_solver` needs a [linear_solver] section".into()),
                Some(l) => {
                    if l.n_qubits < 1 || l.n_qubits > MAX_SITES {
                        errs.push(format!("linear_solver.n_qubits must lie in 1..={MAX_SITES}"));
                    }
                    if l.terms.is_empty() {
                        errs.push("linear_solver.terms is empty".into());
                    }
                    for t in &l.terms {
                        match t.parse::<crate::operators::PauliTerm>() {
                            Ok(p) if p.max_site().is_some_and(|s| s >= l.n_qubits) => {
                                errs.push(format!("term `{t}` acts outside {} qubits", l.n_qubits))
                            }
                            Ok(_) => {}
                            Err(e) => errs.push(format!("term `{t}`: {e}")),
                        }
                    }
                    if let Some(c) = l.cutoffs {
                        for (i, v) in c.iter().enumerate() {
                            pos(&mut errs, &format!("linear_solver.cutoffs[{i}]"), *v);
                        }
                    }
                    if !(l.tolerance > 0.0 && l.tolerance < 1.0) {
                        errs.push("linear_solver.tolerance must lie in (0, 1)".into());
                    }
                    check_observable(&l.observable, l.n_qubits, &mut errs);
                }
            },
        }
        let s = &self.sweep;
        if s.methods.is_empty() {
            errs.push("sweep.methods is empty".into());
        }
        let mut seen = s.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != s.methods.len() {
            errs.push("sweep.methods lists a method twice".into());
        }
        match (&s.k_list, &s.k_log2) {
            (Some(_), Some(_)) => errs.push("give either sweep.k_list or sweep.k_log2, not both".into()),
            (None, None) => errs.push("sweep needs k_list or k_log2".into()),
            (None, Some([lo, hi])) => {
                if lo > hi || *hi > 40 {
                    errs.push(format!("sweep.k_log2 = [{lo}, {hi}] is not an ascending range up to 40"));
                }
            }
            (Some(list), None) => {
                if list.is_empty() {
                    errs.push("sweep.k_list is empty".into());
                }
                if list.contains(&0) {
                    errs.push("sweep.k_list contains 0".into());
                }
                if list.windows(2).any(|w| w[0] >= w[1]) {
                    errs.push("sweep.k_list must be strictly ascending".into());
                }
            }
        }
        if s.shots.is_empty() {
            errs.push("sweep.shots is empty".into());
        }
        if s.shots.iter().any(|m| m.mode().is_err()) {
            errs.push("sweep.shots entries must be positive integers or \"exact\"".into());
        }
        let mut modes = self.shot_modes();
        modes.sort();
        modes.dedup();
        if modes.len() != s.shots.len() {
            errs.push("sweep.shots lists a value twice".into());
        }
        if s.trials == 0 {
            errs.push("sweep.trials must be at least 1".into());
        }
        if s.node_cap == Some(0) {
            errs.push("sweep.node_cap must be positive".into());
        }
        if self.output.csv.is_empty() {
            errs.push("output.csv is empty".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

fn pos(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive, got {v}"));
    }
}

fn check_observable(text: &str, n: usize, errs: &mut Vec<String>) {
    match text.parse::<crate::operators::PauliTerm>() {
        Ok(p) if !p.is_unitary() => errs.push(format!("observable `{text}` must have unit coefficient")),
        Ok(p) if n > 0 && p.max_site().is_some_and(|s| s >= n) => {
            errs.push(format!("observable `{text}` acts outside {n} sites"))
        }
        Ok(_) => {}
        Err(e) => errs.push(format!("observable `{text}`: {e}")),
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
case = "ground_state"
[model]
n_sites = 2
coupling = 1.0
[ground_state]
observable = "Z0 Z1"
tau = 1.0
t_cutoff = 12.0
[sweep]
methods = ["mc", "qmc"]
k_log2 = [2, 4]
shots = [1, "exact"]
trials = 3
master_seed = 7
[output]
csv = "out.csv"
"#;

    #[test]
    fn parses_and_expands() {
        let c = ExperimentConfig::from_toml_str(BASE).unwrap();
        assert_eq!(c.k_values(), vec![4, 8, 16]);
        assert_eq!(c.shot_modes(), vec![ShotMode::Shots(1), ShotMode::Exact]);
        assert_eq!(c.model.as_ref().unwrap().offset, OffsetRule::Keyword(OffsetKeyword::Ground));
        let again = ExperimentConfig::from_toml_str(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.digest(), c.digest());
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = BASE.replace("trials = 3", "trials = 3\nbogus = 1");
        assert!(matches!(ExperimentConfig::from_toml_str(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn itemizes_semantic_errors() {
        let bad = BASE.replace("trials = 3", "trials = 0").replace("tau = 1.0", "tau = -1.0");
        let msg = ExperimentConfig::from_toml_str(&bad).unwrap_err().to_string();
        assert!(msg.contains("trials"), "{msg}");
        assert!(msg.contains("tau"), "{msg}");
    }

    #[test]
    fn rejects_descending_k_and_zero_shots() {
        let bad = BASE.replace("k_log2 = [2, 4]", "k_list = [8, 4]");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
        let bad = BASE.replace("shots = [1, \"exact\"]", "shots = [0]");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn integer_literals_for_reals() {
        let c = ExperimentConfig::from_toml_str(&BASE.replace("coupling = 1.0", "coupling = 1")).unwrap();
        assert_eq!(c.model.unwrap().coupling, 1.0);
    }
}
