//! Transfer fidelity, Wootters concurrence and purity.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::hilbert::{reduced_single, DensityMatrix, Mat2, OperatorMatrix, SpinState, TwoSpinDensity};
use crate::{Error, Result, C64};

/// Most negative eigenvalue of a two-spin density accepted before clipping.
pub const NEGATIVITY_TOL: f64 = 1e-8;
/// Largest imaginary part of an eigenvalue of `ρρ̃` that is dropped silently.
pub const EIG_IMAG_TOL: f64 = 1e-9;
/// Slack on the `[0, 1]` range of bounded series.
pub const RANGE_TOL: f64 = 1e-9;

/// What a series measures; bounded kinds are checked against `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Fidelity,
    Concurrence,
    Purity,
    RescaledConcurrence,
    Other,
}

impl ObservableKind {
    fn is_unit_bounded(self) -> bool {
        matches!(self, Self::Fidelity | Self::Concurrence | Self::Purity)
    }
}

/// Real values of one observable on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub label: String,
    pub kind: ObservableKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl ObservableSeries {
    pub fn new(label: impl Into<String>, kind: ObservableKind, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value {v}")));
        }
        if kind.is_unit_bounded() {
            if let Some(v) = values.iter().find(|&&v| !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v)) {
                return Err(Error::InvalidArgument(format!("{kind:?} value {v} outside [0, 1]")));
            }
        }
        Ok(Self { label: label.into(), kind, times, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> Option<(f64, f64)> {
        self.times.iter().copied().zip(self.values.iter().copied()).max_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Largest `|a − b|` against a series on the same grid.
    pub fn max_abs_diff(&self, other: &ObservableSeries) -> Result<f64> {
        if self.times.len() != other.times.len()
            || self.times.iter().zip(&other.times).any(|(a, b)| (a - b).abs() > 1e-9 * a.abs().max(1.0))
        {
            return Err(Error::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }
}

/// How concurrence is combined over noise realizations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcurrenceConvention {
    /// Concurrence of the ensemble-averaged two-spin density.
    #[default]
    AveragedDensity,
    /// Mean of the per-realization concurrences.
    AveragedConcurrence,
}

/// `⟨ψ_f|ρ|ψ_f⟩`.
pub fn transfer_fidelity(rho: &DensityMatrix, target: &SpinState) -> Result<f64> {
    Ok(rho.expectation(target)?.re)
}

/// `|⟨ψ_f|ψ⟩|²`, the pure-state case of [`transfer_fidelity`].
pub fn state_fidelity(psi: &SpinState, target: &SpinState) -> Result<f64> {
    Ok(target.inner(psi)?.norm_sqr())
}

/// `⟨φ|ρ_site|φ⟩` for a single-spin target `φ = (a_0, a_1)`.
pub fn single_site_fidelity(psi: &SpinState, site: usize, target: [C64; 2]) -> Result<f64> {
    let rho = reduced_single(psi, site)?;
    Ok(mat2_expectation(&rho, target))
}

pub fn mat2_expectation(rho: &Mat2, target: [C64; 2]) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..2 {
        for c in 0..2 {
            acc += target[r].conj() * rho[r][c] * target[c];
        }
    }
    acc.re
}

/// Densities whose purity can be taken.
pub trait DensityEntries {
    fn density_entries(&self) -> &Array2<C64>;
}

impl DensityEntries for OperatorMatrix {
    fn density_entries(&self) -> &Array2<C64> {
        self.entries()
    }
}

impl DensityEntries for TwoSpinDensity {
    fn density_entries(&self) -> &Array2<C64> {
        self.entries()
    }
}

/// `Tr ρ²`, computed as `Σ |ρ_rc|²` for Hermitian `ρ`.
pub fn purity<D: DensityEntries + ?Sized>(rho: &D) -> f64 {
    let e = rho.density_entries();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..e.nrows() {
        for c in 0..e.ncols() {
            acc += e[[r, c]] * e[[c, r]];
        }
    }
    acc.re
}

/// `(N − 1)·C`.
pub fn rescaled_concurrence(concurrence: f64, n_sites: usize) -> Result<f64> {
    if n_sites < 2 {
        return Err(Error::TooFewSites { min: 2, got: n_sites });
    }
    if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&concurrence) {
        return Err(Error::InvalidArgument(format!("concurrence {concurrence} outside [0, 1]")));
    }
    Ok((n_sites - 1) as f64 * concurrence)
}

/// `(σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`. The operator `σ_y⊗σ_y` is real with entries
/// `±1` on the antidiagonal, so the flip reduces to an index reversal with
/// signs.
pub fn spin_flip(rho: &Array2<C64>) -> Array2<C64> {
    let sign = |k: usize| if k == 0 || k == 3 { -1.0 } else { 1.0 };
    Array2::from_shape_fn((4, 4), |(r, c)| rho[[3 - r, 3 - c]].conj() * (sign(r) * sign(c)))
}

/// Wootters combination of the eigenvalues `μ` of `R²`. Eigenvalues below
/// the rounding floor of the largest are zeroed before the square root,
/// which would otherwise lift `1e-17` noise to `3e-9`.
fn wootters(squares: impl IntoIterator<Item = f64>) -> f64 {
    let mut squares: Vec<f64> = squares.into_iter().collect();
    let floor = 64.0 * f64::EPSILON * squares.iter().copied().fold(0.0, f64::max);
    let mut roots: Vec<f64> = squares.drain(..).map(|m| if m <= floor { 0.0 } else { m.sqrt() }).collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    (roots[0] - roots[1] - roots[2] - roots[3]).max(0.0)
}

/// Hermitian part with eigenvalues in `[−NEGATIVITY_TOL, 0)` set to zero.
fn clipped(rho: &TwoSpinDensity) -> Result<(Array1<f64>, Array2<C64>)> {
    let dev = rho.hermiticity_deviation();
    if dev > NEGATIVITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let mut h = Array2::<C64>::zeros((4, 4).f());
    h.assign(&rho.hermitian_part());
    let (mut vals, vecs) = h.eigh(UPLO::Upper)?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -NEGATIVITY_TOL {
        return Err(Error::NotPositive(min));
    }
    vals.mapv_inplace(|v| v.max(0.0));
    Ok((vals, vecs))
}

/// Wootters concurrence via the Hermitian matrix `√ρ ρ̃ √ρ`.
///
/// ```
/// use ndarray::Array2;
/// use spindd::hilbert::TwoSpinDensity;
/// use spindd::observables::concurrence;
/// use spindd::C64;
///
/// // (|01⟩ + |10⟩)/√2
/// let mut e = Array2::<C64>::zeros((4, 4));
/// for (r, c) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
///     e[[r, c]] = C64::new(0.5, 0.0);
/// }
/// let rho = TwoSpinDensity::new(e, (1, 2)).unwrap();
/// assert!((concurrence(&rho).unwrap() - 1.0).abs() < 1e-12);
/// ```
pub fn concurrence(rho: &TwoSpinDensity) -> Result<f64> {
    let (vals, vecs) = clipped(rho)?;
    let sqrt_diag = Array2::from_diag(&vals.mapv(|v| C64::new(v.sqrt(), 0.0)));
    let root = vecs.dot(&sqrt_diag).dot(&vecs.t().mapv(|z| z.conj()));
    let product = root.dot(&spin_flip(&root.dot(&root))).dot(&root);
    let mut m = Array2::<C64>::zeros((4, 4).f());
    m.assign(&((&product + &product.t().mapv(|z| z.conj())) * C64::new(0.5, 0.0)));
    let (mu, _) = m.eigh(UPLO::Upper)?;
    Ok(wootters(mu.iter().copied()))
}

/// Wootters concurrence via the eigenvalues of the non-Hermitian `ρρ̃`.
pub fn concurrence_eig_route(rho: &TwoSpinDensity) -> Result<f64> {
    let (vals, vecs) = clipped(rho)?;
    let diag = Array2::from_diag(&vals.mapv(|v| C64::new(v, 0.0)));
    let positive = vecs.dot(&diag).dot(&vecs.t().mapv(|z| z.conj()));
    let (eigs, _) = positive.dot(&spin_flip(&positive)).eig()?;
    if let Some(z) = eigs.iter().find(|z| z.im.abs() > EIG_IMAG_TOL) {
        return Err(Error::Linalg(format!("eigenvalue {z} of ρρ̃ is not real")));
    }
    Ok(wootters(eigs.iter().map(|z| z.re)))
}

/// Concurrence of each realization's density, averaged with `weights`.
pub fn averaged_concurrence(densities: &[TwoSpinDensity], weights: &[f64]) -> Result<f64> {
    if densities.len() != weights.len() || densities.is_empty() {
        return Err(Error::InvalidArgument("need one weight per density".into()));
    }
    densities.iter().zip(weights).try_fold(0.0, |acc, (rho, w)| Ok(acc + w * concurrence(rho)?))
}
