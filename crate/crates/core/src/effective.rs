//! Time-averaged Hamiltonians in the frame of the control fields.
//!
//! For a `t_c`-periodic control propagator `U_c(t)` the lowest Magnus term is
//! `H̄ = (1/t_c)∫ U_c† H U_c dt`. This module provides the closed forms for the
//! standard and rotated fields, a quadrature route that evaluates the average
//! for any operator, the decoupling residual of the bath coupling, and the
//! second Magnus term.

use serde::{Deserialize, Serialize};

use crate::chain::{
    bath_hamiltonian, chain_hamiltonian, control_unitary, drive_hamiltonian, sum_paulis, BathScope,
    ControlFieldSpec, ControlVariant, CouplingSet, DrivePhase,
};
use crate::hilbert::{Axis, OperatorMatrix};
use crate::pauli::PauliString;
use crate::quadrature::{composite_gl, gauss_legendre, periodic_nodes};
use crate::{Error, Result, C64};

/// Nodes per period of the single-integral rule.
pub const AVERAGE_NODES: usize = 512;
/// Panels and nodes per panel of the nested Magnus rule.
pub const MAGNUS_PANELS: usize = 32;
pub const MAGNUS_ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveVariant {
    /// Standard fields with `n_y ≠ 2 n_x`.
    Hbar1,
    /// Standard fields with `n_y = 2 n_x`, which adds cross interactions.
    Hbar2,
    /// Rotated fields on an Ising chain.
    RotatedIsing,
    /// `Hbar1` plus the averaged drive.
    WithDrive1,
    /// `Hbar2` plus the averaged drive.
    WithDrive2,
}

impl EffectiveVariant {
    /// Closed form that applies to a control spec, ignoring any drive.
    pub fn for_spec(spec: &ControlFieldSpec) -> Self {
        match spec.variant {
            ControlVariant::Rotated => EffectiveVariant::RotatedIsing,
            _ if spec.is_double() => EffectiveVariant::Hbar2,
            _ => EffectiveVariant::Hbar1,
        }
    }

    fn chain_part(self) -> Self {
        match self {
            EffectiveVariant::WithDrive1 => EffectiveVariant::Hbar1,
            EffectiveVariant::WithDrive2 => EffectiveVariant::Hbar2,
            other => other,
        }
    }
}

fn bond_terms(j: usize, lambda: [f64; 3], variant: EffectiveVariant, n: usize) -> Result<Vec<(PauliString, C64)>> {
    let [l1, l2, l3] = lambda;
    let pair = |a: Axis, b: Axis| PauliString::from_factors(&[(j, a), (j + 1, b)], n);
    let mut out = Vec::new();
    let mut push = |a: Axis, b: Axis, c: f64| -> Result<()> {
        if c != 0.0 {
            out.push((pair(a, b)?, C64::new(c, 0.0)));
        }
        Ok(())
    };
    match variant.chain_part() {
        EffectiveVariant::RotatedIsing => {
            if l2 != 0.0 || l3 != 0.0 {
                return Err(Error::InvalidCouplings(
                    "the rotated closed form applies to Ising couplings only".into(),
                ));
            }
            push(Axis::X, Axis::X, l1 / 2.0)?;
            push(Axis::Y, Axis::Y, l1 / 2.0)?;
        }
        EffectiveVariant::Hbar1 => {
            let s = (l2 + l3) / 4.0;
            push(Axis::X, Axis::X, l1 / 2.0 + s)?;
            push(Axis::Y, Axis::Y, 2.0 * s)?;
            push(Axis::Z, Axis::Z, l1 / 2.0 + s)?;
        }
        EffectiveVariant::Hbar2 => {
            let s = (l2 + l3) / 4.0;
            let cross = (l2 - l3) / 4.0;
            push(Axis::X, Axis::X, l1 / 2.0 + s)?;
            push(Axis::Y, Axis::Y, 2.0 * s)?;
            push(Axis::Z, Axis::Z, l1 / 2.0 + s)?;
            push(Axis::X, Axis::Y, cross)?;
            push(Axis::Y, Axis::X, cross)?;
        }
        EffectiveVariant::WithDrive1 | EffectiveVariant::WithDrive2 => unreachable!(),
    }
    Ok(out)
}

/// Closed-form effective chain Hamiltonian.
///
/// For the drive variants the averaged drive of `couplings` is included.
///
/// ```
/// use spindd::chain::{chain_hamiltonian, CouplingSet};
/// use spindd::effective::{effective_chain, EffectiveVariant};
/// let xxx = CouplingSet::uniform(3, [0.7, 0.7, 0.7]).unwrap();
/// let hbar = effective_chain(&xxx, 3, EffectiveVariant::Hbar2).unwrap();
/// assert!(hbar.max_abs_diff(&chain_hamiltonian(&xxx, 3).unwrap()) < 1e-15);
/// ```
pub fn effective_chain(couplings: &CouplingSet, n_sites: usize, variant: EffectiveVariant) -> Result<OperatorMatrix> {
    let mut h = sum_paulis(&effective_chain_terms(couplings, n_sites, variant)?, n_sites);
    if matches!(variant, EffectiveVariant::WithDrive1 | EffectiveVariant::WithDrive2) {
        h += &effective_drive(couplings, variant)?;
    }
    Ok(h)
}

/// Pauli expansion of the closed-form chain part (drive excluded).
pub fn effective_chain_terms(
    couplings: &CouplingSet,
    n_sites: usize,
    variant: EffectiveVariant,
) -> Result<Vec<(PauliString, C64)>> {
    couplings.check_sites(n_sites)?;
    let mut terms = Vec::new();
    for (k, l) in couplings.lambdas().iter().enumerate() {
        terms.extend(bond_terms(k + 1, *l, variant, n_sites)?);
    }
    Ok(terms)
}

/// Closed-form average of the drive, valid for `n_z = n_y − n_x`.
pub fn effective_drive(couplings: &CouplingSet, variant: EffectiveVariant) -> Result<OperatorMatrix> {
    let drive = couplings.drive().ok_or(Error::MissingDrive)?;
    let double = match variant {
        EffectiveVariant::Hbar1 | EffectiveVariant::WithDrive1 => false,
        EffectiveVariant::Hbar2 | EffectiveVariant::WithDrive2 => true,
        EffectiveVariant::RotatedIsing => {
            return Err(Error::InvalidArgument("no closed-form drive average for rotated fields".into()))
        }
    };
    let fields: Vec<[f64; 3]> = drive
        .iter()
        .map(|b| {
            let extra = if double { b[1] / 4.0 } else { 0.0 };
            [b[0] / 2.0 + extra, b[1] / 2.0, b[2] / 4.0]
        })
        .collect();
    Ok(crate::chain::local_field_operator(&fields))
}

/// Whether the drive closed form applies to `spec`.
pub fn drive_closed_form_applies(spec: &ControlFieldSpec) -> bool {
    spec.variant == ControlVariant::Standard
        && spec.drive_nz == Some(spec.n_y - spec.n_x)
        && spec.drive_z_phase == DrivePhase::Cosine
}

/// Full effective Hamiltonian for a coupling set and control spec.
///
/// Uses the closed forms where they apply and falls back to quadrature for
/// the drive otherwise (which requires a periodic spec).
pub fn effective_hamiltonian(couplings: &CouplingSet, spec: &ControlFieldSpec, n_sites: usize) -> Result<OperatorMatrix> {
    let variant = EffectiveVariant::for_spec(spec);
    let mut h = match (variant, spec.variant) {
        (_, ControlVariant::Gate) => numerical_time_average(&chain_hamiltonian(couplings, n_sites)?, spec)?,
        (EffectiveVariant::RotatedIsing, _) if couplings.lambdas().iter().any(|l| l[1] != 0.0 || l[2] != 0.0) => {
            numerical_time_average(&chain_hamiltonian(couplings, n_sites)?, spec)?
        }
        _ => effective_chain(couplings, n_sites, variant)?,
    };
    if couplings.drive().is_some() {
        if drive_closed_form_applies(spec) {
            h += &effective_drive(couplings, variant)?;
        } else {
            log::info!("drive closed form does not apply; averaging numerically");
            h += &time_average_of(spec, n_sites, AVERAGE_NODES, |t| drive_hamiltonian(couplings, spec, t))?;
        }
    }
    Ok(h)
}

/// `(1/t_c)∫ U_c† H U_c dt` by the periodic rule with [`AVERAGE_NODES`] nodes.
pub fn numerical_time_average(h: &OperatorMatrix, spec: &ControlFieldSpec) -> Result<OperatorMatrix> {
    numerical_time_average_with(h, spec, AVERAGE_NODES)
}

pub fn numerical_time_average_with(h: &OperatorMatrix, spec: &ControlFieldSpec, nodes: usize) -> Result<OperatorMatrix> {
    time_average_of(spec, h.n_sites(), nodes, |_| Ok(h.clone()))
}

/// `(1/t_c)∫ U_c† H(t) U_c dt` for a time-dependent operator.
pub fn time_average_of<F>(spec: &ControlFieldSpec, n_sites: usize, nodes: usize, h_of_t: F) -> Result<OperatorMatrix>
where
    F: Fn(f64) -> Result<OperatorMatrix>,
{
    spec.ensure_periodic()?;
    let mut acc = OperatorMatrix::zeros(n_sites);
    for (t, w) in periodic_nodes(spec.period, nodes) {
        let u = control_unitary(spec, n_sites, t);
        acc += &(&h_of_t(t)?.conjugate_by(&u) * w);
    }
    Ok(acc)
}

/// Spectral norm of the averaged bath coupling with `B = (1, 1, 1)` on every site.
pub fn decoupling_residual(spec: &ControlFieldSpec, n_sites: usize) -> Result<f64> {
    let bath = bath_hamiltonian([1.0, 1.0, 1.0], n_sites, BathScope::AllSites);
    numerical_time_average(&bath, spec)?.hermitian_norm()
}

/// Outer nodes of the nested rule, grouped by panel, with the inner rule for
/// `∫_{panel start}^{t_1}`.
struct NestedRule {
    outer: Vec<Vec<(f64, f64)>>,
    inner: Vec<Vec<Vec<(f64, f64)>>>,
}

impl NestedRule {
    fn new(period: f64, panels: usize, order: usize) -> Self {
        let rule = gauss_legendre(order);
        let width = period / panels as f64;
        let mut outer = Vec::with_capacity(panels);
        let mut inner = Vec::with_capacity(panels);
        for p in 0..panels {
            let lo = p as f64 * width;
            let nodes = composite_gl(lo, lo + width, 1, &rule);
            inner.push(nodes.iter().map(|&(t1, _)| composite_gl(lo, t1, 1, &rule)).collect());
            outer.push(nodes);
        }
        Self { outer, inner }
    }

    /// `∫_0^{t_c} dt_1 f(t_1) ∫_0^{t_1} g(t_2) dt_2` for any bilinear pairing.
    fn integrate<T, Acc>(&self, mut eval: impl FnMut(f64) -> T, zero: T, mut pair: impl FnMut(&mut Acc, f64, &T, &T), acc: &mut Acc)
    where
        T: Clone + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    {
        let mut cumulative = zero.clone();
        for (nodes, inners) in self.outer.iter().zip(&self.inner) {
            let mut panel_total = zero.clone();
            for (&(t1, w1), inner_nodes) in nodes.iter().zip(inners) {
                let f1 = eval(t1);
                let mut g = cumulative.clone();
                for &(t2, w2) in inner_nodes {
                    g += eval(t2) * w2;
                }
                pair(acc, w1, &f1, &g);
                panel_total += f1 * w1;
            }
            cumulative += panel_total;
        }
    }
}

#[derive(Clone)]
struct Dense(ndarray::Array2<C64>);

impl std::ops::AddAssign for Dense {
    fn add_assign(&mut self, rhs: Dense) {
        self.0 += &rhs.0;
    }
}

impl std::ops::Mul<f64> for Dense {
    type Output = Dense;
    fn mul(self, rhs: f64) -> Dense {
        Dense(self.0 * C64::new(rhs, 0.0))
    }
}

fn toggling_frame(h: &OperatorMatrix, spec: &ControlFieldSpec, t: f64) -> OperatorMatrix {
    h.conjugate_by(&control_unitary(spec, h.n_sites(), t))
}

/// Second Magnus term `−(i/2t_c)∫dt_1∫_0^{t_1}dt_2 [H̃(t_1), H̃(t_2)]` of a
/// system Hamiltonian, by nested composite Gauss–Legendre quadrature.
pub fn magnus_second_order(h: &OperatorMatrix, spec: &ControlFieldSpec) -> Result<OperatorMatrix> {
    magnus_second_order_with(h, spec, MAGNUS_PANELS, MAGNUS_ORDER)
}

pub fn magnus_second_order_with(h: &OperatorMatrix, spec: &ControlFieldSpec, panels: usize, order: usize) -> Result<OperatorMatrix> {
    spec.ensure_periodic()?;
    let n = h.n_sites();
    let rule = NestedRule::new(spec.period, panels, order);
    let zero = Dense(OperatorMatrix::zeros(n).into_entries());
    let mut acc = zero.0.clone();
    rule.integrate(
        |t| Dense(toggling_frame(h, spec, t).into_entries()),
        zero,
        |acc: &mut ndarray::Array2<C64>, w, f1, g| {
            let comm = f1.0.dot(&g.0) - g.0.dot(&f1.0);
            acc.scaled_add(C64::new(w, 0.0), &comm);
        },
        &mut acc,
    );
    let factor = C64::new(0.0, -1.0 / (2.0 * spec.period));
    OperatorMatrix::from_entries(acc * factor, n)
}

/// One contribution `coefficient · product` of the second Magnus term, from the
/// `first` string at `t_1` against the `second` string at `t_2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnusTerm {
    pub first: PauliString,
    pub second: PauliString,
    pub product: PauliString,
    pub coefficient: C64,
}

#[derive(Clone)]
struct Coeffs(Vec<C64>);

impl std::ops::AddAssign for Coeffs {
    fn add_assign(&mut self, rhs: Coeffs) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl std::ops::Mul<f64> for Coeffs {
    type Output = Coeffs;
    fn mul(mut self, rhs: f64) -> Coeffs {
        self.0.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

/// Second Magnus term broken down into Pauli-string pairs.
///
/// `H̃(t) = Σ_P c_P(t) P` is expanded on the same nested grid as
/// [`magnus_second_order`], and every ordered pair `(P, Q)` with a
/// nonzero commutator contributes `−(i/2t_c) ∫∫ c_P(t_1) c_Q(t_2) [P, Q]`.
pub fn magnus_pair_terms(h: &OperatorMatrix, spec: &ControlFieldSpec, cutoff: f64) -> Result<Vec<MagnusTerm>> {
    spec.ensure_periodic()?;
    let n = h.n_sites();
    let rule = NestedRule::new(spec.period, MAGNUS_PANELS, MAGNUS_ORDER);
    // Strings that appear in the toggling frame at any outer node.
    let mut support: Vec<PauliString> = Vec::new();
    for p in PauliString::all(n) {
        let present = rule
            .outer
            .iter()
            .flatten()
            .step_by(3)
            .any(|&(t, _)| p.coefficient_in(&toggling_frame(h, spec, t)).norm() > 1e-14);
        if present {
            support.push(p);
        }
    }
    let k = support.len();
    let mut integrals = vec![C64::new(0.0, 0.0); k * k];
    rule.integrate(
        |t| {
            let frame = toggling_frame(h, spec, t);
            Coeffs(support.iter().map(|p| p.coefficient_in(&frame)).collect())
        },
        Coeffs(vec![C64::new(0.0, 0.0); k]),
        |acc: &mut Vec<C64>, w, f1, g| {
            for a in 0..k {
                for b in 0..k {
                    acc[a * k + b] += f1.0[a] * g.0[b] * w;
                }
            }
        },
        &mut integrals,
    );
    let factor = C64::new(0.0, -1.0 / (2.0 * spec.period));
    let mut terms = Vec::new();
    for (a, p) in support.iter().enumerate() {
        for (b, q) in support.iter().enumerate() {
            let (comm, product) = p.commutator(q);
            let coefficient = factor * integrals[a * k + b] * comm;
            if coefficient.norm() > cutoff {
                terms.push(MagnusTerm { first: *p, second: *q, product, coefficient });
            }
        }
    }
    Ok(terms)
}

/// Reassembles a dense operator from pair terms.
pub fn magnus_from_terms(terms: &[MagnusTerm], n_sites: usize) -> OperatorMatrix {
    let flat: Vec<(PauliString, C64)> = terms.iter().map(|t| (t.product, t.coefficient)).collect();
    sum_paulis(&flat, n_sites)
}
