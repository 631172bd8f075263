//! Time evolution of chain states.
//!
//! [`evolve_time_dependent`] integrates `i∂ψ/∂t = H(t)ψ` with classical RK4
//! on a fixed grid. The static part is held as a Pauli sum and every field
//! term is applied site by site, so no `2^N × 2^N` matrix is formed.
//! Bath fields are frozen over each step at the noise sample covering the
//! step start. The state is renormalized after every step and the norm
//! deviations are recorded in [`IntegrationStats`].

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::chain::{control_field, drive_field, gate_field, BathScope, ControlFieldSpec};
use crate::hilbert::{
    partial_trace_pair, reduced_pair_from_slice, site_bit, DensityMatrix, OperatorMatrix, SpinState, TwoSpinDensity,
    DEFAULT_MAX_SITES, HERMITIAN_TOL,
};
use crate::noise::NoiseTrajectory;
use crate::pauli::PauliString;
use crate::{Error, Result, C64};

/// Largest allowed step as a fraction of `t_c` when control fields are on.
pub const MAX_STEP_FRACTION: f64 = 1.0 / 50.0;
/// Minimum number of steps per control period.
pub const MIN_STEPS_PER_PERIOD: usize = 100;
/// Largest phase `h·Ω` a local field may accumulate in one default step.
pub const MAX_PHASE_PER_STEP: f64 = 0.02;
/// Default step of field-free plans.
pub const FIELD_FREE_STEP: f64 = 1e-3;
/// Relative tolerance for output times to sit on the integration grid.
const GRID_TOL: f64 = 1e-9;

/// Static Hamiltonian as `Σ c_P P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_sites: usize,
    terms: Vec<(PauliString, C64)>,
}

impl PauliSum {
    pub fn new(terms: Vec<(PauliString, C64)>, n_sites: usize) -> Result<Self> {
        if terms.iter().any(|(p, _)| p.n_sites() != n_sites) {
            return Err(Error::InvalidArgument("Pauli term on the wrong number of sites".into()));
        }
        if terms.iter().any(|(_, c)| c.im.abs() > HERMITIAN_TOL) {
            return Err(Error::NotHermitian(terms.iter().map(|(_, c)| c.im.abs()).fold(0.0, f64::max)));
        }
        Ok(Self { n_sites, terms })
    }

    pub fn zero(n_sites: usize) -> Self {
        Self { n_sites, terms: Vec::new() }
    }

    /// Expansion of a dense Hermitian operator (small chains only).
    pub fn from_operator(op: &OperatorMatrix) -> Result<Self> {
        op.ensure_hermitian(HERMITIAN_TOL.max(1e-12 * op.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)))?;
        let mut terms = crate::pauli::decompose(op, 1e-14);
        for (_, c) in terms.iter_mut() {
            c.im = 0.0;
        }
        Ok(Self { n_sites: op.n_sites(), terms })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[(PauliString, C64)] {
        &self.terms
    }

    pub fn to_operator(&self) -> OperatorMatrix {
        crate::chain::sum_paulis(&self.terms, self.n_sites)
    }

    /// Upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    fn apply_add(&self, scale: C64, psi: &[C64], out: &mut [C64]) {
        for (p, c) in &self.terms {
            p.apply_add(scale * c, psi, out);
        }
    }
}

/// Bath coupling of one realization.
#[derive(Clone, Debug)]
pub struct BathCoupling {
    pub trajectory: NoiseTrajectory,
    pub scope: BathScope,
}

/// Everything needed to integrate one realization.
#[derive(Clone, Debug)]
pub struct EvolutionPlan {
    static_part: PauliSum,
    control: Option<ControlFieldSpec>,
    drive: Option<Vec<[f64; 3]>>,
    gate_time: Option<f64>,
    static_fields: Option<Vec<[f64; 3]>>,
    bath: Option<BathCoupling>,
    output_times: Vec<f64>,
    step: Option<f64>,
}

impl EvolutionPlan {
    pub fn new(static_part: PauliSum, output_times: Vec<f64>) -> Self {
        Self {
            static_part,
            control: None,
            drive: None,
            gate_time: None,
            static_fields: None,
            bath: None,
            output_times,
            step: None,
        }
    }

    pub fn with_control(mut self, spec: ControlFieldSpec) -> Self {
        self.control = Some(spec);
        self
    }

    /// Per-site drive amplitudes; needs a control spec with `drive_nz`.
    pub fn with_drive(mut self, amplitudes: Vec<[f64; 3]>) -> Self {
        self.drive = Some(amplitudes);
        self
    }

    /// Extra site-1 gate field of duration `t_g`; needs a gate-variant spec.
    pub fn with_gate(mut self, t_g: f64) -> Self {
        self.gate_time = Some(t_g);
        self
    }

    /// Constant local fields, one vector per site.
    pub fn with_static_fields(mut self, fields: Vec<[f64; 3]>) -> Self {
        self.static_fields = Some(fields);
        self
    }

    pub fn with_bath(mut self, trajectory: NoiseTrajectory, scope: BathScope) -> Self {
        self.bath = Some(BathCoupling { trajectory, scope });
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = Some(step);
        self
    }

    pub fn n_sites(&self) -> usize {
        self.static_part.n_sites()
    }

    pub fn output_times(&self) -> &[f64] {
        &self.output_times
    }

    pub fn control(&self) -> Option<&ControlFieldSpec> {
        self.control.as_ref()
    }

    /// Largest local rate any single site can see: field magnitude plus the
    /// rate at which the control field rotates.
    pub fn site_field_bound(&self) -> f64 {
        let n = self.n_sites();
        let mut worst = 0.0f64;
        for site in 1..=n {
            let mut bound = 0.0;
            if let Some(spec) = &self.control {
                let (nx, ny) = spec.site_integers(site);
                bound += spec.omega() * ((nx * nx + ny * ny).sqrt() + 2.0 * nx.abs());
                if site == 1 {
                    if let Some(tg) = self.gate_time {
                        bound += std::f64::consts::PI / (2.0 * tg);
                    }
                }
            }
            if let Some(d) = &self.drive {
                bound += d.get(site - 1).map_or(0.0, |b| (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt());
            }
            if let Some(f) = &self.static_fields {
                bound += f.get(site - 1).map_or(0.0, |b| (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt());
            }
            worst = worst.max(bound);
        }
        worst
    }

    /// Step used when none is given: at least [`MIN_STEPS_PER_PERIOD`] per
    /// period and at most [`MAX_PHASE_PER_STEP`] of local phase per step.
    pub fn default_step(&self) -> f64 {
        match &self.control {
            Some(spec) => {
                let by_phase = (spec.period * self.site_field_bound() / MAX_PHASE_PER_STEP).ceil() as usize;
                let mut steps = by_phase.max(MIN_STEPS_PER_PERIOD);
                // A grid finer than the period needs a whole number of steps per output gap.
                if let Some(unit) = self.grid_unit() {
                    let per_period = (spec.period / unit).round();
                    if per_period > 1.0 && (spec.period / unit - per_period).abs() < 1e-9 * per_period {
                        let q = per_period as usize;
                        steps = steps.div_ceil(q) * q;
                    }
                }
                spec.period / steps as f64
            }
            None => {
                let scale = self.static_part.norm_bound() + self.site_field_bound() * self.n_sites() as f64;
                let h = if scale > 0.0 { (MAX_PHASE_PER_STEP / scale).min(FIELD_FREE_STEP) } else { FIELD_FREE_STEP };
                match self.grid_unit() {
                    Some(unit) => unit / (unit / h).ceil(),
                    None => h,
                }
            }
        }
    }

    fn grid_unit(&self) -> Option<f64> {
        let mut unit = None;
        let mut prev = 0.0;
        for &t in &self.output_times {
            let gap = t - prev;
            if gap > 0.0 {
                unit = Some(unit.map_or(gap, |u: f64| u.min(gap)));
            }
            prev = t;
        }
        unit
    }

    fn validate(&self, psi0: &SpinState) -> Result<(f64, Vec<usize>)> {
        let n = self.n_sites();
        if psi0.n_sites() != n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: psi0.dim() });
        }
        if n > 20 {
            return Err(Error::TooManySites { got: n, limit: 20 });
        }
        let step = self.step.unwrap_or_else(|| self.default_step());
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {step}")));
        }
        if let Some(spec) = &self.control {
            let limit = spec.period * MAX_STEP_FRACTION;
            if step > limit * (1.0 + GRID_TOL) {
                return Err(Error::StepTooLarge { step, limit });
            }
            if self.drive.is_some() && spec.drive_nz.is_none() {
                return Err(Error::InvalidControl("drive needs an n_z value".into()));
            }
            if let Some(tg) = self.gate_time {
                gate_field(spec, tg, 0.0)?;
            }
        } else if self.drive.is_some() || self.gate_time.is_some() {
            return Err(Error::InvalidControl("drive and gate fields need a control spec".into()));
        }
        for fields in [&self.drive, &self.static_fields].into_iter().flatten() {
            if fields.len() != n {
                return Err(Error::CouplingLength { found: fields.len(), expected: n, n_sites: n });
            }
        }
        let mut indices = Vec::with_capacity(self.output_times.len());
        let mut prev = -1.0;
        for &t in &self.output_times {
            if !(t >= 0.0 && t > prev) {
                return Err(Error::InvalidArgument("output times must be nonnegative and strictly increasing".into()));
            }
            let k = (t / step).round();
            if (k * step - t).abs() > GRID_TOL * t.max(step) {
                return Err(Error::InvalidArgument(format!("output time {t} is not on the integration grid (step {step})")));
            }
            indices.push(k as usize);
            prev = t;
        }
        if let Some(bath) = &self.bath {
            let last = *self.output_times.last().unwrap_or(&0.0);
            let covered = bath.trajectory.time(bath.trajectory.len() - 1) + bath.trajectory.dt();
            if covered < last - GRID_TOL * last.max(1.0) {
                return Err(Error::InvalidNoise(format!("noise covers [0, {covered}) but evolution runs to {last}")));
            }
        }
        Ok((step, indices))
    }

    fn site_fields(&self, t: f64, bath: [f64; 3], out: &mut [[f64; 3]]) -> Result<()> {
        let n = self.n_sites();
        let bath_sites = self.bath.as_ref().map_or(0, |b| b.scope.sites(n));
        for (k, f) in out.iter_mut().enumerate() {
            let site = k + 1;
            *f = [0.0; 3];
            if let Some(spec) = &self.control {
                add(f, control_field(spec, site, t));
                if let Some(d) = &self.drive {
                    add(f, drive_field(d[k], spec, t)?);
                }
                if site == 1 {
                    if let Some(tg) = self.gate_time {
                        add(f, gate_field(spec, tg, t)?);
                    }
                }
            }
            if let Some(s) = &self.static_fields {
                add(f, s[k]);
            }
            if site <= bath_sites {
                add(f, bath);
            }
        }
        Ok(())
    }
}

fn add(acc: &mut [f64; 3], v: [f64; 3]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}

/// Norm bookkeeping of one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub steps: usize,
    pub step: f64,
    /// Largest `|‖ψ‖ − 1|` seen before a renormalization.
    pub max_norm_deviation: f64,
    /// Sum of `|‖ψ‖ − 1|` over all steps.
    pub cumulative_drift: f64,
}

/// States at the output times of a plan.
#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SpinState>,
    pub stats: IntegrationStats,
}

/// `out = −i H(t) ψ` for local fields and a static Pauli sum.
fn derivative(static_part: &PauliSum, fields: &[[f64; 3]], psi: &[C64], out: &mut [C64]) {
    let n = fields.len();
    let minus_i = C64::new(0.0, -1.0);
    out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    static_part.apply_add(minus_i, psi, out);
    for (k, h) in fields.iter().enumerate() {
        if h[0] == 0.0 && h[1] == 0.0 && h[2] == 0.0 {
            continue;
        }
        let bit = 1usize << site_bit(k + 1, n);
        let hz = C64::new(h[2], 0.0);
        let lower = C64::new(h[0], h[1]);
        let upper = C64::new(h[0], -h[1]);
        let mut base = 0;
        while base < psi.len() {
            for b in base..base + bit {
                let (a0, a1) = (psi[b], psi[b | bit]);
                out[b] += minus_i * (hz * a0 + upper * a1);
                out[b | bit] += minus_i * (lower * a0 - hz * a1);
            }
            base += 2 * bit;
        }
    }
}

/// Fixed-step RK4 integration of a plan from `psi0`.
pub fn evolve_time_dependent(plan: &EvolutionPlan, psi0: &SpinState) -> Result<StateTrajectory> {
    let (step, output_steps) = plan.validate(psi0)?;
    let n = plan.n_sites();
    let dim = psi0.dim();
    let total_steps = output_steps.last().copied().unwrap_or(0);
    let zero = C64::new(0.0, 0.0);
    let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut stage) =
        (vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim], vec![zero; dim]);
    let mut fields = vec![[0.0; 3]; n];
    let mut stats = IntegrationStats { step, ..Default::default() };
    let mut states = Vec::with_capacity(output_steps.len());
    let mut next_output = 0;
    let record = |k: usize, psi: &[C64], next: &mut usize, states: &mut Vec<SpinState>| {
        while *next < output_steps.len() && output_steps[*next] == k {
            states.push(SpinState::from_raw(Array1::from(psi.to_vec()), n));
            *next += 1;
        }
    };
    record(0, &psi, &mut next_output, &mut states);
    let time_dependent = plan.control.is_some();
    for k in 0..total_steps {
        let t = k as f64 * step;
        let bath = plan.bath.as_ref().map_or([0.0; 3], |b| b.trajectory.value_at(t));
        let half = C64::new(step / 2.0, 0.0);
        let full = C64::new(step, 0.0);

        plan.site_fields(t, bath, &mut fields)?;
        derivative(&plan.static_part, &fields, &psi, &mut k1);
        for i in 0..dim {
            stage[i] = psi[i] + half * k1[i];
        }
        if time_dependent {
            plan.site_fields(t + step / 2.0, bath, &mut fields)?;
        }
        derivative(&plan.static_part, &fields, &stage, &mut k2);
        for i in 0..dim {
            stage[i] = psi[i] + half * k2[i];
        }
        derivative(&plan.static_part, &fields, &stage, &mut k3);
        for i in 0..dim {
            stage[i] = psi[i] + full * k3[i];
        }
        if time_dependent {
            plan.site_fields(t + step, bath, &mut fields)?;
        }
        derivative(&plan.static_part, &fields, &stage, &mut k4);
        let sixth = step / 6.0;
        let mut norm_sqr = 0.0;
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * sixth;
            norm_sqr += psi[i].norm_sqr();
        }
        let norm = norm_sqr.sqrt();
        if !norm.is_finite() {
            return Err(Error::Linalg(format!("integration diverged at t = {t}")));
        }
        let dev = (norm - 1.0).abs();
        stats.max_norm_deviation = stats.max_norm_deviation.max(dev);
        stats.cumulative_drift += dev;
        psi.iter_mut().for_each(|z| *z /= norm);
        stats.steps += 1;
        record(k + 1, &psi, &mut next_output, &mut states);
    }
    Ok(StateTrajectory { times: plan.output_times.clone(), states, stats })
}

/// `e^{−iHt}ψ_0` at each time by spectral decomposition.
pub fn evolve_static(h: &OperatorMatrix, psi0: &SpinState, times: &[f64]) -> Result<StateTrajectory> {
    if h.dim() != psi0.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi0.dim() });
    }
    if h.n_sites() > DEFAULT_MAX_SITES {
        return Err(Error::TooManySites { got: h.n_sites(), limit: DEFAULT_MAX_SITES });
    }
    let (energies, vectors) = h.eigh()?;
    let coeffs: Array1<C64> = vectors.t().mapv(|z| z.conj()).dot(psi0.amplitudes());
    let states = times
        .iter()
        .map(|&t| {
            let phased = Array1::from_iter(
                coeffs.iter().zip(energies.iter()).map(|(c, e)| c * C64::from_polar(1.0, -e * t)),
            );
            SpinState::from_raw(vectors.dot(&phased), psi0.n_sites())
        })
        .collect();
    Ok(StateTrajectory { times: times.to_vec(), states, stats: IntegrationStats::default() })
}

fn check_weights(trajectories: &[StateTrajectory], weights: &[f64]) -> Result<()> {
    if trajectories.is_empty() || trajectories.len() != weights.len() {
        return Err(Error::InvalidArgument("need one weight per trajectory".into()));
    }
    let times = &trajectories[0].times;
    if trajectories.iter().any(|tr| &tr.times != times || tr.states.len() != times.len()) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Uniform weights `1/R`.
pub fn uniform_weights(count: usize) -> Vec<f64> {
    vec![1.0 / count as f64; count]
}

/// `ρ(t) = Σ_r w_r |ψ_r(t)⟩⟨ψ_r(t)|`, summed in realization order.
pub fn ensemble_density(trajectories: &[StateTrajectory], weights: &[f64]) -> Result<Vec<DensityMatrix>> {
    check_weights(trajectories, weights)?;
    let n = trajectories[0].states.first().map_or(1, |s| s.n_sites());
    let dim = 1usize << n;
    (0..trajectories[0].times.len())
        .map(|k| {
            let mut rho = Array2::<C64>::zeros((dim, dim));
            for (tr, &w) in trajectories.iter().zip(weights) {
                let a = tr.states[k].amplitudes();
                for r in 0..dim {
                    let ar = a[r] * w;
                    for c in 0..dim {
                        rho[[r, c]] += ar * a[c].conj();
                    }
                }
            }
            OperatorMatrix::from_entries(rho, n)
        })
        .collect()
}

/// Ensemble-averaged two-spin densities `[time][pair]` without forming `ρ`.
pub fn ensemble_pair_densities(
    trajectories: &[StateTrajectory],
    weights: &[f64],
    pairs: &[(usize, usize)],
) -> Result<Vec<Vec<TwoSpinDensity>>> {
    check_weights(trajectories, weights)?;
    (0..trajectories[0].times.len())
        .map(|k| {
            pairs
                .iter()
                .map(|&(i, j)| {
                    let mut acc = TwoSpinDensity::zeros((i, j));
                    for (tr, &w) in trajectories.iter().zip(weights) {
                        let st = &tr.states[k];
                        let red = reduced_pair_from_slice(
                            st.amplitudes().as_slice().expect("contiguous"),
                            st.n_sites(),
                            i,
                            j,
                        )?;
                        acc.scaled_add(red.entries(), w);
                    }
                    Ok(acc)
                })
                .collect()
        })
        .collect()
}

/// Two-spin densities of an ensemble density sequence.
pub fn pair_densities_of(densities: &[DensityMatrix], i: usize, j: usize) -> Result<Vec<TwoSpinDensity>> {
    densities.iter().map(|rho| partial_trace_pair(rho, i, j)).collect()
}
