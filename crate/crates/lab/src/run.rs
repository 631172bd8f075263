//! Turns a config into per-panel tables of observable curves.

use std::f64::consts::PI;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;
use spindd::chain::{chain_terms, ControlFieldSpec, ControlVariant, CouplingSet};
use spindd::effective::{effective_chain, effective_hamiltonian, EffectiveVariant};
use spindd::hilbert::{basis_state, reduced_pair, reduced_single, Mat2, OperatorMatrix, SpinState, TwoSpinDensity};
use spindd::jw::{build_quadratic_form, correlators_at, solve_free_fermion, two_spin_density_jw, JwVariant};
use spindd::noise::ou_realization;
use spindd::observables::{
    concurrence, mat2_expectation, purity, state_fidelity, ConcurrenceConvention, ObservableKind, ObservableSeries,
};
use spindd::propagator::{evolve_static, evolve_time_dependent, EvolutionPlan, IntegrationStats, PauliSum};
use spindd::C64;

use crate::config::{check_jw, expand_bits, ChainChoice, CurveConfig, Dynamics, ExperimentConfig, ObservableConfig, PanelConfig};
use crate::error::{LabError, Result};

/// One panel: a shared time grid and one column per curve and observable.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTable {
    pub panel: String,
    pub times: Vec<f64>,
    pub columns: Vec<ObservableSeries>,
}

impl CurveTable {
    pub fn column(&self, label: &str) -> Option<&ObservableSeries> {
        self.columns.iter().find(|c| c.label == label)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRecord {
    pub panel: String,
    pub label: String,
    pub dynamics: String,
    pub realizations: usize,
    /// Base seed; realization `r` uses stream `r`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_per_realization: Option<usize>,
    pub max_norm_deviation: f64,
    pub cumulative_drift: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct JwCheck {
    pub panel: String,
    pub jw_label: String,
    pub dense_label: String,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub preset: String,
    pub build: &'static str,
    pub jobs: usize,
    pub base_seed: u64,
    pub curves: Vec<CurveRecord>,
    pub jw_checks: Vec<JwCheck>,
    pub warnings: Vec<String>,
    pub wall_seconds: f64,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tables: Vec<CurveTable>,
    pub metadata: RunMetadata,
}

/// Build identifier recorded in run metadata.
pub const BUILD: &str = env!("SPINDD_GIT_DESCRIBE");

enum Probe {
    Concurrence(usize),
    Purity(usize),
    Transfer(SpinState),
    Site(usize, [C64; 2]),
}

/// Observables of a panel, with the pairs and sites they need.
struct Probes {
    probes: Vec<(Probe, ObservableKind, String)>,
    pairs: Vec<(usize, usize)>,
    sites: Vec<usize>,
}

impl Probes {
    fn new(observables: &[ObservableConfig], n_sites: usize) -> Result<Self> {
        let mut out = Probes { probes: Vec::new(), pairs: Vec::new(), sites: Vec::new() };
        for obs in observables {
            let probe = match obs {
                ObservableConfig::Concurrence { pair } | ObservableConfig::Purity { pair } => {
                    let p = (pair.0.resolve(n_sites)?, pair.1.resolve(n_sites)?);
                    let k = index_of(&mut out.pairs, p);
                    if matches!(obs, ObservableConfig::Concurrence { .. }) {
                        (Probe::Concurrence(k), ObservableKind::Concurrence)
                    } else {
                        (Probe::Purity(k), ObservableKind::Purity)
                    }
                }
                ObservableConfig::TransferFidelity { target } => {
                    (Probe::Transfer(basis_state(&expand_bits(target, n_sites)?)?), ObservableKind::Fidelity)
                }
                ObservableConfig::SiteFidelity { site, target } => {
                    let k = index_of(&mut out.sites, site.resolve(n_sites)?);
                    let one = C64::new(1.0, 0.0);
                    let zero = C64::new(0.0, 0.0);
                    let amps = if *target == 0 { [one, zero] } else { [zero, one] };
                    (Probe::Site(k, amps), ObservableKind::Fidelity)
                }
            };
            out.probes.push((probe.0, probe.1, obs.to_string()));
        }
        Ok(out)
    }
}

fn index_of<T: PartialEq>(list: &mut Vec<T>, item: T) -> usize {
    match list.iter().position(|x| *x == item) {
        Some(k) => k,
        None => {
            list.push(item);
            list.len() - 1
        }
    }
}

/// Reduced quantities of one realization at every output time.
#[derive(Clone)]
struct Sample {
    pairs: Vec<Vec<Array2<C64>>>,
    sites: Vec<Vec<Mat2>>,
    fidelities: Vec<Vec<f64>>,
    pair_concurrences: Vec<Vec<f64>>,
}

fn density(entries: &Array2<C64>, pair: (usize, usize)) -> Result<TwoSpinDensity> {
    Ok(TwoSpinDensity::new(entries.clone(), pair)?)
}

impl Sample {
    fn from_pair_densities(
        per_time: Vec<Vec<TwoSpinDensity>>,
        convention: ConcurrenceConvention,
    ) -> Result<Self> {
        let mut pairs = Vec::with_capacity(per_time.len());
        let mut pair_concurrences = Vec::with_capacity(per_time.len());
        for rhos in per_time {
            if convention == ConcurrenceConvention::AveragedConcurrence {
                pair_concurrences.push(rhos.iter().map(concurrence).collect::<spindd::Result<Vec<_>>>()?);
            }
            pairs.push(rhos.iter().map(|r| r.entries().clone()).collect());
        }
        let times = pairs.len();
        Ok(Sample { pairs, sites: vec![Vec::new(); times], fidelities: vec![Vec::new(); times], pair_concurrences })
    }

    fn from_states(states: &[SpinState], probes: &Probes, convention: ConcurrenceConvention) -> Result<Self> {
        let per_time = states
            .iter()
            .map(|psi| probes.pairs.iter().map(|&(i, j)| reduced_pair(psi, i, j)).collect::<spindd::Result<Vec<_>>>())
            .collect::<spindd::Result<Vec<_>>>()?;
        let mut sample = Self::from_pair_densities(per_time, convention)?;
        for (k, psi) in states.iter().enumerate() {
            sample.sites[k] = probes.sites.iter().map(|&s| reduced_single(psi, s)).collect::<spindd::Result<_>>()?;
            sample.fidelities[k] = probes
                .probes
                .iter()
                .filter_map(|(p, _, _)| match p {
                    Probe::Transfer(target) => Some(state_fidelity(psi, target)),
                    _ => None,
                })
                .collect::<spindd::Result<_>>()?;
        }
        Ok(sample)
    }

    /// `Σ_r w_r sample_r`, accumulated in realization order.
    fn mean(samples: &[Sample]) -> Sample {
        let w = 1.0 / samples.len() as f64;
        let mut acc = samples[0].clone();
        for (k, s) in samples.iter().enumerate() {
            let first = k == 0;
            for (a, b) in acc.pairs.iter_mut().flatten().zip(s.pairs.iter().flatten()) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = if first { y * w } else { *x + y * w };
                }
            }
            for (a, b) in acc.sites.iter_mut().flatten().zip(s.sites.iter().flatten()) {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (x, y) in ra.iter_mut().zip(rb) {
                        *x = if first { y * w } else { *x + y * w };
                    }
                }
            }
            let scalars = acc.fidelities.iter_mut().zip(&s.fidelities).chain(acc.pair_concurrences.iter_mut().zip(&s.pair_concurrences));
            for (a, b) in scalars {
                for (x, y) in a.iter_mut().zip(b) {
                    *x = if first { y * w } else { *x + y * w };
                }
            }
        }
        acc
    }

    fn evaluate(&self, probes: &Probes, convention: ConcurrenceConvention) -> Result<Vec<Vec<f64>>> {
        let mut columns = vec![Vec::with_capacity(self.pairs.len()); probes.probes.len()];
        for k in 0..self.pairs.len() {
            let mut transfer = 0;
            for (column, (probe, _, _)) in columns.iter_mut().zip(&probes.probes) {
                let value = match probe {
                    Probe::Concurrence(p) => match convention {
                        ConcurrenceConvention::AveragedDensity => concurrence(&density(&self.pairs[k][*p], probes.pairs[*p])?)?,
                        ConcurrenceConvention::AveragedConcurrence => self.pair_concurrences[k][*p],
                    },
                    Probe::Purity(p) => purity(&density(&self.pairs[k][*p], probes.pairs[*p])?),
                    Probe::Transfer(_) => {
                        transfer += 1;
                        self.fidelities[k][transfer - 1]
                    }
                    Probe::Site(s, target) => mat2_expectation(&self.sites[k][*s], *target),
                };
                column.push(value);
            }
        }
        Ok(columns)
    }
}

struct PanelContext<'a> {
    cfg: &'a ExperimentConfig,
    couplings: CouplingSet,
    spec: ControlFieldSpec,
    psi0: SpinState,
    bits: Vec<u8>,
    times: Vec<f64>,
    probes: Probes,
}

fn curve_spec(base: &ControlFieldSpec, period: Option<f64>, n_y: Option<f64>) -> Result<ControlFieldSpec> {
    let mut spec = base.clone();
    if let Some(p) = period {
        spec.period = p;
    }
    if let Some(ny) = n_y {
        spec.n_y = ny;
    }
    Ok(spec.validated()?)
}

impl PanelContext<'_> {
    fn n_sites(&self) -> usize {
        self.cfg.n_sites
    }

    fn plan(&self, dynamics: &Dynamics) -> Result<EvolutionPlan> {
        let n = self.n_sites();
        let chain = || -> Result<PauliSum> { Ok(PauliSum::new(chain_terms(&self.couplings, n)?, n)?) };
        let plan = match dynamics {
            Dynamics::Exact { period, n_y } => {
                let spec = curve_spec(&self.spec, *period, *n_y)?;
                let mut plan = EvolutionPlan::new(chain()?, self.times.clone());
                if let Some(drive) = self.couplings.drive() {
                    if spec.drive_nz.is_none() {
                        return Err(LabError::Constraint("a drive needs control.drive_nz".into()));
                    }
                    plan = plan.with_drive(drive.to_vec());
                }
                if let Some(t_g) = self.cfg.gate_time {
                    if spec.variant != ControlVariant::Gate {
                        return Err(LabError::Constraint("gate_time needs the gate control variant".into()));
                    }
                    plan = plan.with_gate(t_g);
                }
                plan.with_control(spec)
            }
            Dynamics::NoControl { chain: ChainChoice::Bare } => EvolutionPlan::new(chain()?, self.times.clone()),
            Dynamics::NoControl { chain: ChainChoice::Effective } => {
                let h = effective_hamiltonian(&self.couplings, &self.spec, n)?;
                EvolutionPlan::new(PauliSum::from_operator(&h)?, self.times.clone())
            }
            Dynamics::SimpleGate => {
                let t_g = self.cfg.gate_time.ok_or_else(|| LabError::Config("simple_gate needs gate_time".into()))?;
                let mut fields = vec![[0.0; 3]; n];
                fields[0][0] = -PI / (2.0 * t_g);
                EvolutionPlan::new(chain()?, self.times.clone()).with_static_fields(fields)
            }
            Dynamics::Effective { .. } | Dynamics::Jw { .. } => unreachable!("not integrated"),
        };
        Ok(plan)
    }

    fn effective_operator(&self, variant: Option<EffectiveVariant>) -> Result<OperatorMatrix> {
        Ok(match variant {
            Some(v) => effective_chain(&self.couplings, self.n_sites(), v)?,
            None => effective_hamiltonian(&self.couplings, &self.spec, self.n_sites())?,
        })
    }

    /// Resolved closed-form variant of an effective curve, when it has one.
    fn effective_variant(&self, variant: Option<EffectiveVariant>) -> Option<EffectiveVariant> {
        variant.or_else(|| match self.spec.variant {
            ControlVariant::Gate => None,
            _ if self.couplings.drive().is_some() => None,
            _ => Some(EffectiveVariant::for_spec(&self.spec)),
        })
    }

    fn run_curve(&self, curve: &CurveConfig) -> Result<(Vec<Vec<f64>>, CurveRecord)> {
        let start = Instant::now();
        let convention = self.cfg.concurrence;
        let mut record = CurveRecord {
            panel: String::new(),
            label: curve.label.clone(),
            dynamics: dynamics_name(&curve.dynamics).into(),
            realizations: 1,
            seed: None,
            step: None,
            steps_per_realization: None,
            max_norm_deviation: 0.0,
            cumulative_drift: 0.0,
            wall_seconds: 0.0,
        };
        let sample = match &curve.dynamics {
            Dynamics::Effective { variant } => {
                let h = self.effective_operator(*variant)?;
                let traj = evolve_static(&h, &self.psi0, &self.times)?;
                Sample::from_states(&traj.states, &self.probes, convention)?
            }
            Dynamics::Jw { variant } => self.jw_sample(*variant)?,
            dynamics => {
                let base = self.plan(dynamics)?;
                let step = base.default_step();
                let realizations = if curve.noisy() { self.cfg.noise.realizations } else { 1 };
                let noise = &self.cfg.noise;
                let params = noise.params()?;
                let duration = self.times.last().copied().unwrap_or(0.0).max(step);
                let runs: Vec<(Sample, IntegrationStats)> = (0..realizations)
                    .into_par_iter()
                    .map(|r| -> Result<_> {
                        let mut plan = base.clone();
                        if curve.noisy() {
                            let traj = ou_realization(params, duration, step, noise.seed, r as u64, noise.initial)?;
                            plan = plan.with_bath(traj, noise.scope);
                        }
                        let traj = evolve_time_dependent(&plan, &self.psi0)?;
                        Ok((Sample::from_states(&traj.states, &self.probes, convention)?, traj.stats))
                    })
                    .collect::<Result<Vec<_>>>()?;
                record.realizations = realizations;
                record.seed = curve.noisy().then_some(noise.seed);
                record.step = Some(runs[0].1.step);
                record.steps_per_realization = Some(runs[0].1.steps);
                for (_, s) in &runs {
                    record.max_norm_deviation = record.max_norm_deviation.max(s.max_norm_deviation);
                    record.cumulative_drift = record.cumulative_drift.max(s.cumulative_drift);
                }
                if record.max_norm_deviation > self.cfg.tolerances.max_norm_deviation {
                    return Err(LabError::Numerical(format!(
                        "curve {:?}: per-step norm deviation {:e} exceeds {:e}",
                        curve.label, record.max_norm_deviation, self.cfg.tolerances.max_norm_deviation
                    )));
                }
                let samples: Vec<Sample> = runs.into_iter().map(|(s, _)| s).collect();
                Sample::mean(&samples)
            }
        };
        record.wall_seconds = start.elapsed().as_secs_f64();
        Ok((sample.evaluate(&self.probes, convention)?, record))
    }

    fn jw_sample(&self, variant: JwVariant) -> Result<Sample> {
        let [l1, l2, _] = self
            .couplings
            .uniform_triple()
            .ok_or_else(|| LabError::Constraint("the JW path needs uniform couplings".into()))?;
        let sol = solve_free_fermion(&build_quadratic_form(l1, l2, self.n_sites(), variant)?)?;
        let per_time = self
            .times
            .iter()
            .map(|&t| {
                let cs = correlators_at(&sol, t, &self.probes.pairs)?;
                self.probes.pairs.iter().map(|&p| two_spin_density_jw(&cs, p)).collect::<spindd::Result<Vec<_>>>()
            })
            .collect::<spindd::Result<Vec<_>>>()?;
        Sample::from_pair_densities(per_time, self.cfg.concurrence)
    }
}

fn dynamics_name(d: &Dynamics) -> &'static str {
    match d {
        Dynamics::Exact { .. } => "exact",
        Dynamics::NoControl { .. } => "no_control",
        Dynamics::SimpleGate => "simple_gate",
        Dynamics::Effective { .. } => "effective",
        Dynamics::Jw { .. } => "jw",
    }
}

fn jw_variant_of(v: EffectiveVariant) -> Option<JwVariant> {
    match v {
        EffectiveVariant::Hbar1 => Some(JwVariant::Hbar1),
        EffectiveVariant::Hbar2 => Some(JwVariant::Hbar2),
        _ => None,
    }
}

/// Curves of a panel after adding the dense or JW partner of every
/// JW-eligible effective curve.
fn completed_curves(ctx: &PanelContext<'_>, panel: &PanelConfig) -> Vec<CurveConfig> {
    let mut curves = panel.curves.clone();
    if check_jw(&ctx.couplings, &ctx.bits, &panel.observables).is_err() {
        return curves;
    }
    let dense = ctx.n_sites() <= spindd::hilbert::DEFAULT_MAX_SITES;
    let has_jw = |curves: &[CurveConfig], v: JwVariant| {
        curves.iter().any(|c| matches!(c.dynamics, Dynamics::Jw { variant } if variant == v))
    };
    let has_dense = |curves: &[CurveConfig], v: JwVariant| {
        curves.iter().any(|c| match c.dynamics {
            Dynamics::Effective { variant } => ctx.effective_variant(variant).and_then(jw_variant_of) == Some(v),
            _ => false,
        })
    };
    for curve in panel.curves.iter() {
        match curve.dynamics {
            Dynamics::Effective { variant } => {
                if let Some(v) = ctx.effective_variant(variant).and_then(jw_variant_of) {
                    if !has_jw(&curves, v) {
                        curves.push(CurveConfig {
                            label: unique_label(&curves, &format!("{} JW", curve.label)),
                            dynamics: Dynamics::Jw { variant: v },
                            noise: None,
                        });
                    }
                }
            }
            Dynamics::Jw { variant } if dense && !has_dense(&curves, variant) => {
                curves.push(CurveConfig {
                    label: unique_label(&curves, &format!("{} dense", curve.label)),
                    dynamics: Dynamics::Effective { variant: Some(variant.effective()) },
                    noise: None,
                });
            }
            _ => {}
        }
    }
    curves
}

fn unique_label(curves: &[CurveConfig], base: &str) -> String {
    let mut label = base.to_string();
    let mut k = 2;
    while curves.iter().any(|c| c.label == label) {
        label = format!("{base} {k}");
        k += 1;
    }
    label
}

/// Runs every panel of a validated config.
pub fn run_preset(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Instant::now();
    let couplings = cfg.coupling_set()?;
    let times = cfg.time.times();
    let mut tables = Vec::new();
    let mut records = Vec::new();
    let mut jw_checks = Vec::new();
    let mut warnings = Vec::new();
    for panel in &cfg.panels {
        let spec = cfg.panel_control(panel).clone().validated()?;
        warnings.extend(spec.warnings().into_iter().map(|w| format!("panel {}: {w}", panel.name)));
        let bits = cfg.panel_initial(panel)?;
        let ctx = PanelContext {
            cfg,
            couplings: couplings.clone(),
            spec,
            psi0: basis_state(&bits)?,
            bits,
            times: times.clone(),
            probes: Probes::new(&panel.observables, cfg.n_sites)?,
        };
        let curves = completed_curves(&ctx, panel);
        let mut results = Vec::with_capacity(curves.len());
        for curve in &curves {
            log::info!("panel {}: curve {:?}", panel.name, curve.label);
            let (values, mut record) = ctx.run_curve(curve)?;
            record.panel = panel.name.clone();
            records.push(record);
            results.push(values);
        }
        jw_checks.extend(check_jw_agreement(&ctx, panel, &curves, &results)?);
        if ctx.n_sites() > spindd::hilbert::DEFAULT_MAX_SITES
            && curves.iter().any(|c| matches!(c.dynamics, Dynamics::Jw { .. }))
        {
            warnings.push(format!("panel {}: dense cross-check of the JW curves skipped for {} sites", panel.name, ctx.n_sites()));
        }
        let mut columns = Vec::new();
        for (curve, values) in curves.iter().zip(results) {
            for ((_, kind, name), column) in ctx.probes.probes.iter().zip(values) {
                let label =
                    if ctx.probes.probes.len() == 1 { curve.label.clone() } else { format!("{} {name}", curve.label) };
                columns.push(
                    ObservableSeries::new(label, *kind, times.clone(), column)
                        .map_err(|e| LabError::Numerical(format!("curve {:?}: {e}", curve.label)))?,
                );
            }
        }
        tables.push(CurveTable { panel: panel.name.clone(), times: times.clone(), columns });
    }
    let metadata = RunMetadata {
        preset: cfg.preset.clone(),
        build: BUILD,
        jobs: rayon::current_num_threads(),
        base_seed: cfg.noise.seed,
        curves: records,
        jw_checks,
        warnings,
        wall_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    Ok(RunOutput { tables, metadata })
}

fn check_jw_agreement(
    ctx: &PanelContext<'_>,
    panel: &PanelConfig,
    curves: &[CurveConfig],
    results: &[Vec<Vec<f64>>],
) -> Result<Vec<JwCheck>> {
    let mut checks = Vec::new();
    for (jw_curve, jw_values) in curves.iter().zip(results) {
        let Dynamics::Jw { variant } = jw_curve.dynamics else { continue };
        let partner = curves.iter().zip(results).find(|(c, _)| match c.dynamics {
            Dynamics::Effective { variant: v } => ctx.effective_variant(v).and_then(jw_variant_of) == Some(variant),
            _ => false,
        });
        let Some((dense_curve, dense_values)) = partner else { continue };
        let diff = jw_values
            .iter()
            .flatten()
            .zip(dense_values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if diff > ctx.cfg.tolerances.jw_agreement {
            return Err(LabError::Numerical(format!(
                "panel {}: JW curve {:?} differs from dense {:?} by {diff:e}",
                panel.name, jw_curve.label, dense_curve.label
            )));
        }
        checks.push(JwCheck {
            panel: panel.name.clone(),
            jw_label: jw_curve.label.clone(),
            dense_label: dense_curve.label.clone(),
            max_abs_diff: diff,
        });
    }
    Ok(checks)
}
