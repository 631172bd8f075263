//! Experiment configuration.
//!
//! A config file names a preset and overrides any of its fields. Objects are
//! merged key by key; arrays and scalars replace the preset value.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spindd::chain::{BathScope, ControlFieldSpec, CouplingSet};
use spindd::effective::EffectiveVariant;
use spindd::hilbert::{parse_bits, DEFAULT_MAX_SITES};
use spindd::jw::JwVariant;
use spindd::noise::{InitialCondition, OUParams};
use spindd::observables::ConcurrenceConvention;

use crate::error::{LabError, Result};
use crate::presets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    #[serde(default)]
    pub description: String,
    pub n_sites: usize,
    pub couplings: CouplingConfig,
    /// Uniform drive amplitudes `[b_1, b_2, b_3]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<[f64; 3]>,
    /// Duration of the protected single-spin gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_time: Option<f64>,
    pub control: ControlFieldSpec,
    pub noise: NoiseConfig,
    /// Bit pattern; `x*` repeats `x` to fill the chain, e.g. `10*` is `|100…0⟩`.
    pub initial_state: String,
    pub time: TimeGrid,
    pub panels: Vec<PanelConfig>,
    #[serde(default)]
    pub concurrence: ConcurrenceConvention,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingConfig {
    /// The same `[λ_1, λ_2, λ_3]` on every bond.
    Uniform([f64; 3]),
    /// Ising bonds `λ_j = √(j(N−j))`.
    TransferIsing,
    /// One triple per bond.
    Bonds(Vec<[f64; 3]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default)]
    pub scope: BathScope,
    #[serde(default)]
    pub initial: InitialCondition,
}

impl NoiseConfig {
    pub fn params(&self) -> spindd::Result<OUParams> {
        OUParams::new(self.mu, self.sigma, self.tau)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeGrid {
    Uniform { start: f64, end: f64, points: usize },
    Explicit { times: Vec<f64> },
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        match self {
            TimeGrid::Uniform { start, end, points } => match points {
                0 => Vec::new(),
                1 => vec![*start],
                _ => {
                    let gap = (end - start) / (*points - 1) as f64;
                    (0..*points).map(|k| start + gap * k as f64).collect()
                }
            },
            TimeGrid::Explicit { times } => times.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelConfig {
    pub name: String,
    /// Replaces the top-level control spec for this panel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlFieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<String>,
    pub observables: Vec<ObservableConfig>,
    pub curves: Vec<CurveConfig>,
}

/// 1-based site, either a number or `N`, `N-k`, `N/2`, `N/2+k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteRef {
    Index(usize),
    Expr(String),
}

impl SiteRef {
    pub fn resolve(&self, n_sites: usize) -> Result<usize> {
        let site = match self {
            SiteRef::Index(k) => *k,
            SiteRef::Expr(text) => {
                let text: String = text.chars().filter(|c| !c.is_whitespace()).collect();
                let (base, rest) = if let Some(rest) = text.strip_prefix("N/2") {
                    (n_sites / 2, rest)
                } else if let Some(rest) = text.strip_prefix('N') {
                    (n_sites, rest)
                } else {
                    return Err(LabError::Config(format!("bad site expression {text:?}")));
                };
                let offset: i64 = match rest {
                    "" => 0,
                    _ => rest.parse().map_err(|_| LabError::Config(format!("bad site expression {text:?}")))?,
                };
                usize::try_from(base as i64 + offset).unwrap_or(0)
            }
        };
        if site == 0 || site > n_sites {
            return Err(LabError::Config(format!("site {self} is outside 1..={n_sites}")));
        }
        Ok(site)
    }
}

impl fmt::Display for SiteRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SiteRef::Index(k) => write!(f, "{k}"),
            SiteRef::Expr(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableConfig {
    Concurrence { pair: (SiteRef, SiteRef) },
    Purity { pair: (SiteRef, SiteRef) },
    /// `⟨ψ_f|ρ|ψ_f⟩` for a bit-pattern target.
    TransferFidelity { target: String },
    /// `⟨s|ρ_site|s⟩` for a single bit `s`.
    SiteFidelity { site: SiteRef, target: u8 },
}

/// What a curve integrates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dynamics", rename_all = "snake_case")]
pub enum Dynamics {
    /// Chain, bath, control, drive and gate fields.
    Exact {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        period: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_y: Option<f64>,
    },
    /// Chain and bath only.
    NoControl {
        #[serde(default)]
        chain: ChainChoice,
    },
    /// Chain, bath and the bare gate field `−(π/2t_g)σ_x` on site 1.
    SimpleGate,
    /// Noise-free evolution under the time-averaged Hamiltonian.
    Effective {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variant: Option<EffectiveVariant>,
    },
    /// Free-fermion fast path of an effective Hamiltonian.
    Jw { variant: JwVariant },
}

/// Static Hamiltonian of a no-control curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainChoice {
    #[default]
    Bare,
    /// The effective Hamiltonian of the panel's control, used as a bare chain.
    Effective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveConfig {
    pub label: String,
    #[serde(flatten)]
    pub dynamics: Dynamics,
    /// Defaults to on for curves with a bath.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<bool>,
}

impl CurveConfig {
    pub fn noisy(&self) -> bool {
        match self.dynamics {
            Dynamics::Exact { .. } | Dynamics::NoControl { .. } | Dynamics::SimpleGate => self.noise.unwrap_or(true),
            Dynamics::Effective { .. } | Dynamics::Jw { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Largest allowed dense-vs-JW concurrence difference.
    pub jw_agreement: f64,
    /// Largest allowed per-step norm deviation of the integrator.
    pub max_norm_deviation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { jw_agreement: 1e-6, max_norm_deviation: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), svg: false }
    }
}

/// Expands a bit pattern to `n_sites` bits.
pub fn expand_bits(pattern: &str, n_sites: usize) -> Result<Vec<u8>> {
    let text = match pattern.find('*') {
        None => pattern.to_string(),
        Some(star) => {
            if star == 0 || pattern[star + 1..].contains('*') {
                return Err(LabError::Config(format!("bad bit pattern {pattern:?}")));
            }
            let (head, tail) = (&pattern[..star - 1], &pattern[star + 1..]);
            let fill = &pattern[star - 1..star];
            let count = n_sites
                .checked_sub(head.len() + tail.len())
                .filter(|&c| c > 0)
                .ok_or_else(|| LabError::Config(format!("pattern {pattern:?} does not fit {n_sites} sites")))?;
            format!("{head}{}{tail}", fill.repeat(count))
        }
    };
    let bits = parse_bits(&text).map_err(|e| LabError::Config(format!("pattern {pattern:?}: {e}")))?;
    if bits.len() != n_sites {
        return Err(LabError::Config(format!("pattern {pattern:?} has {} bits, chain has {n_sites}", bits.len())));
    }
    Ok(bits)
}

/// Recursively overlays `patch` on `base`.
pub fn merge_json(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) => merge_json(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, value) => *slot = value.clone(),
    }
}

impl ExperimentConfig {
    /// Parses a config: preset defaults overlaid with the given fields.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let patch: Value = serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        Self::from_value(patch)
    }

    pub fn from_value(patch: Value) -> Result<Self> {
        let name = patch
            .get("preset")
            .and_then(Value::as_str)
            .ok_or_else(|| LabError::Config("config must name a preset".into()))?;
        let mut merged = presets::preset_value(name)?;
        // An explicit time list and a uniform grid do not mix.
        if patch.get("time").is_some_and(|t| t.get("times").is_some()) {
            merged["time"] = Value::Null;
        }
        merge_json(&mut merged, &patch);
        let cfg: Self = serde_json::from_value(merged).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn coupling_set(&self) -> Result<CouplingSet> {
        let mut set = match &self.couplings {
            CouplingConfig::Uniform(l) => CouplingSet::uniform(self.n_sites, *l)?,
            CouplingConfig::TransferIsing => CouplingSet::transfer_ising(self.n_sites)?,
            CouplingConfig::Bonds(b) => CouplingSet::new(b.clone())?,
        };
        set.check_sites(self.n_sites).map_err(|e| LabError::Constraint(e.to_string()))?;
        if let Some(b) = self.drive {
            set = set.with_uniform_drive(b)?;
        }
        if let Some(t_g) = self.gate_time {
            set = set.with_gate_time(t_g)?;
        }
        Ok(set)
    }

    pub fn panel_control<'a>(&'a self, panel: &'a PanelConfig) -> &'a ControlFieldSpec {
        panel.control.as_ref().unwrap_or(&self.control)
    }

    pub fn panel_initial(&self, panel: &PanelConfig) -> Result<Vec<u8>> {
        expand_bits(panel.initial_state.as_deref().unwrap_or(&self.initial_state), self.n_sites)
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(LabError::Config(format!("need at least 2 sites, got {}", self.n_sites)));
        }
        if self.noise.realizations == 0 {
            return Err(LabError::Config("realization count must be at least 1".into()));
        }
        self.noise.params().map_err(|e| LabError::Config(e.to_string()))?;
        let times = self.time.times();
        if times.is_empty() {
            return Err(LabError::Config("time grid is empty".into()));
        }
        if times[0] < 0.0 || !times.iter().all(|t| t.is_finite()) {
            return Err(LabError::Config("times must be finite and non-negative".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Config("time grid must be strictly increasing".into()));
        }
        if self.panels.is_empty() {
            return Err(LabError::Config("no panels".into()));
        }
        expand_bits(&self.initial_state, self.n_sites)?;
        let couplings = self.coupling_set()?;
        for panel in &self.panels {
            self.validate_panel(panel, &couplings)?;
        }
        Ok(())
    }

    fn validate_panel(&self, panel: &PanelConfig, couplings: &CouplingSet) -> Result<()> {
        let ctx = |msg: String| format!("panel {:?}: {msg}", panel.name);
        if panel.curves.is_empty() || panel.observables.is_empty() {
            return Err(LabError::Config(ctx("needs at least one curve and one observable".into())));
        }
        let bits = self.panel_initial(panel)?;
        self.panel_control(panel).clone().validated().map_err(|e| LabError::Constraint(ctx(e.to_string())))?;
        for obs in &panel.observables {
            match obs {
                ObservableConfig::Concurrence { pair } | ObservableConfig::Purity { pair } => {
                    let (i, j) = (pair.0.resolve(self.n_sites)?, pair.1.resolve(self.n_sites)?);
                    if i == j {
                        return Err(LabError::Config(ctx(format!("pair ({i}, {j}) repeats a site"))));
                    }
                }
                ObservableConfig::TransferFidelity { target } => {
                    expand_bits(target, self.n_sites)?;
                }
                ObservableConfig::SiteFidelity { site, target } => {
                    site.resolve(self.n_sites)?;
                    if *target > 1 {
                        return Err(LabError::Config(ctx(format!("site target must be 0 or 1, got {target}"))));
                    }
                }
            }
        }
        let mut labels = std::collections::BTreeSet::new();
        for curve in &panel.curves {
            if !labels.insert(curve.label.as_str()) {
                return Err(LabError::Config(ctx(format!("duplicate curve label {:?}", curve.label))));
            }
            match &curve.dynamics {
                Dynamics::Jw { .. } => {
                    check_jw(couplings, &bits, &panel.observables).map_err(|m| LabError::Constraint(ctx(m)))?;
                }
                _ if self.n_sites > DEFAULT_MAX_SITES => {
                    return Err(LabError::Constraint(ctx(format!(
                        "curve {:?} needs the dense path, infeasible for {} sites (limit {DEFAULT_MAX_SITES})",
                        curve.label, self.n_sites
                    ))));
                }
                Dynamics::SimpleGate if self.gate_time.is_none() => {
                    return Err(LabError::Config(ctx("simple_gate needs gate_time".into())));
                }
                Dynamics::Exact { period: Some(p), .. } if !(*p > 0.0 && p.is_finite()) => {
                    return Err(LabError::Config(ctx(format!("period must be positive, got {p}"))));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Conditions of the free-fermion fast path.
pub fn check_jw(couplings: &CouplingSet, bits: &[u8], observables: &[ObservableConfig]) -> Result<(), String> {
    if couplings.uniform_triple().is_none() {
        return Err("the JW path needs uniform couplings".into());
    }
    if couplings.free_fermion_residual() > 1e-12 {
        return Err(format!(
            "the JW path needs 2λ₁ + λ₂ + λ₃ = 0, residual {:e}",
            couplings.free_fermion_residual()
        ));
    }
    if couplings.drive().is_some() {
        return Err("the JW path does not support drives".into());
    }
    if bits.iter().any(|&b| b != 1) {
        return Err("the JW path starts from |11…1⟩".into());
    }
    if observables.iter().any(|o| !matches!(o, ObservableConfig::Concurrence { .. } | ObservableConfig::Purity { .. })) {
        return Err("the JW path only provides two-spin observables".into());
    }
    Ok(())
}

impl fmt::Display for ObservableConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableConfig::Concurrence { pair } => write!(f, "C({},{})", pair.0, pair.1),
            ObservableConfig::Purity { pair } => write!(f, "purity({},{})", pair.0, pair.1),
            ObservableConfig::TransferFidelity { target } => write!(f, "F[{target}]"),
            ObservableConfig::SiteFidelity { site, target } => write!(f, "F{site}[{target}]"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_patterns() {
        assert_eq!(expand_bits("10*", 4).unwrap(), vec![1, 0, 0, 0]);
        assert_eq!(expand_bits("0*1", 3).unwrap(), vec![0, 0, 1]);
        assert_eq!(expand_bits("1*", 2).unwrap(), vec![1, 1]);
        assert_eq!(expand_bits("0111", 4).unwrap(), vec![0, 1, 1, 1]);
        assert!(expand_bits("0111", 5).is_err());
        assert!(expand_bits("*1", 5).is_err());
        assert!(expand_bits("1010*", 3).is_err());
    }

    #[test]
    fn site_expressions() {
        let r = |s: &str| SiteRef::Expr(s.into()).resolve(12);
        assert_eq!(r("N").unwrap(), 12);
        assert_eq!(r("N-1").unwrap(), 11);
        assert_eq!(r("N/2").unwrap(), 6);
        assert_eq!(r("N/2 + 1").unwrap(), 7);
        assert!(r("N+1").is_err());
        assert!(r("M").is_err());
        assert!(SiteRef::Index(0).resolve(4).is_err());
    }

    #[test]
    fn merge_replaces_leaves() {
        let mut base = serde_json::json!({"a": {"b": 1, "c": [1, 2]}, "d": 3});
        merge_json(&mut base, &serde_json::json!({"a": {"c": [5]}, "e": 4}));
        assert_eq!(base, serde_json::json!({"a": {"b": 1, "c": [5]}, "d": 3, "e": 4}));
    }

    #[test]
    fn uniform_grid() {
        let g = TimeGrid::Uniform { start: 0.0, end: 1.0, points: 3 };
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0]);
    }
}
