//! States, operators and partial traces on the `2^N`-dimensional chain space.
//!
//! Site 1 is the leftmost tensor factor and the most significant bit of a
//! basis index, so `|1000⟩` is index 8 and means "first spin flipped".
//! `σ_z|s⟩ = (-1)^s |s⟩`.

use std::ops::{Add, AddAssign, Mul, Sub};

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use serde::{Deserialize, Serialize};

use crate::pauli::PauliString;
use crate::{Error, Result, C64};

/// Tolerance on `‖ψ‖² − 1` for a valid state.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance on `max |A − A†|` for assembled Hamiltonians.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on trace, Hermiticity and negative eigenvalues of reduced densities.
pub const DENSITY_TOL: f64 = 1e-10;
/// Default cap on the chain length for dense evolution.
pub const DEFAULT_MAX_SITES: usize = 12;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A 2×2 complex matrix in row-major order.
pub type Mat2 = [[C64; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn matrix(self) -> Mat2 {
        let i = C64::new(0.0, 1.0);
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -i], [i, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }
}

/// Bit position of a 1-based site inside a basis index.
#[inline]
pub(crate) fn site_bit(site: usize, n_sites: usize) -> usize {
    n_sites - site
}

pub(crate) fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if site == 0 || site > n_sites {
        Err(Error::SiteOutOfRange { site, n_sites })
    } else {
        Ok(())
    }
}

fn check_dim(len: usize, n_sites: usize) -> Result<()> {
    if n_sites == 0 {
        return Err(Error::TooFewSites { min: 1, got: 0 });
    }
    if n_sites >= usize::BITS as usize - 1 {
        return Err(Error::TooManySites { got: n_sites, limit: usize::BITS as usize - 2 });
    }
    let expected = 1usize << n_sites;
    if len != expected {
        return Err(Error::DimensionMismatch { expected, found: len });
    }
    Ok(())
}

/// A normalized pure state of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinState {
    amplitudes: Array1<C64>,
    n_sites: usize,
}

impl SpinState {
    /// Wraps amplitudes that are already normalized within [`NORM_TOL`].
    pub fn new(amplitudes: Array1<C64>, n_sites: usize) -> Result<Self> {
        check_dim(amplitudes.len(), n_sites)?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self { amplitudes, n_sites })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: Array1<C64>, n_sites: usize) -> Result<Self> {
        check_dim(amplitudes.len(), n_sites)?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        amplitudes.mapv_inplace(|a| a / norm);
        Ok(Self { amplitudes, n_sites })
    }

    pub(crate) fn from_raw(amplitudes: Array1<C64>, n_sites: usize) -> Self {
        Self { amplitudes, n_sites }
    }

    /// Tensor product of single-site states, site 1 first.
    pub fn product(sites: &[[C64; 2]]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyBitstring);
        }
        let mut amps = Array1::from_elem(1, ONE);
        for s in sites {
            let mut next = Array1::zeros(amps.len() * 2);
            for (k, &a) in amps.iter().enumerate() {
                next[2 * k] = a * s[0];
                next[2 * k + 1] = a * s[1];
            }
            amps = next;
        }
        Self::normalized(amps, sites.len())
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amplitudes
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Parses a bitstring such as `"1000"`.
pub fn parse_bits(text: &str) -> Result<Vec<u8>> {
    if text.is_empty() {
        return Err(Error::EmptyBitstring);
    }
    text.bytes()
        .map(|b| match b {
            b'0' => Ok(0),
            b'1' => Ok(1),
            other => Err(Error::InvalidBit(other)),
        })
        .collect()
}

/// Index of a bitstring with site 1 as the most significant bit.
pub fn basis_index(bits: &[u8]) -> Result<usize> {
    if bits.is_empty() {
        return Err(Error::EmptyBitstring);
    }
    bits.iter().try_fold(0usize, |acc, &b| match b {
        0 | 1 => Ok((acc << 1) | b as usize),
        other => Err(Error::InvalidBit(other)),
    })
}

/// Computational basis state `|b_1 b_2 … b_N⟩`.
///
/// ```
/// use spindd::hilbert::basis_state;
/// let psi = basis_state(&[1, 0]).unwrap();
/// assert_eq!(psi.amplitudes()[2].re, 1.0);
/// ```
pub fn basis_state(bits: &[u8]) -> Result<SpinState> {
    let index = basis_index(bits)?;
    check_dim(1usize << bits.len(), bits.len())?;
    let mut amps = Array1::zeros(1usize << bits.len());
    amps[index] = ONE;
    Ok(SpinState { amplitudes: amps, n_sites: bits.len() })
}

/// Dense operator on the chain, also used for density matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: Array2<C64>,
    n_sites: usize,
}

pub type DensityMatrix = OperatorMatrix;

impl OperatorMatrix {
    pub fn zeros(n_sites: usize) -> Self {
        let d = 1usize << n_sites;
        Self { entries: Array2::zeros((d, d)), n_sites }
    }

    pub fn identity(n_sites: usize) -> Self {
        let d = 1usize << n_sites;
        Self { entries: Array2::eye(d), n_sites }
    }

    pub fn from_entries(entries: Array2<C64>, n_sites: usize) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch { expected: entries.nrows(), found: entries.ncols() });
        }
        check_dim(entries.nrows(), n_sites)?;
        Ok(Self { entries, n_sites })
    }

    pub(crate) fn from_entries_unchecked(entries: Array2<C64>, n_sites: usize) -> Self {
        Self { entries, n_sites }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &SpinState) -> Self {
        let a = psi.amplitudes();
        let d = a.len();
        let entries = Array2::from_shape_fn((d, d), |(r, c)| a[r] * a[c].conj());
        Self { entries, n_sites: psi.n_sites() }
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self { entries: self.entries.t().mapv(|z| z.conj()), n_sites: self.n_sites }
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { entries: &self.entries * factor, n_sites: self.n_sites }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        Self { entries: self.entries.dot(&other.entries), n_sites: self.n_sites }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        let ab = self.entries.dot(&other.entries);
        let ba = other.entries.dot(&self.entries);
        Self { entries: ab - ba, n_sites: self.n_sites }
    }

    /// `U† self U`.
    pub fn conjugate_by(&self, unitary: &Self) -> Self {
        let udag = unitary.dagger();
        udag.matmul(self).matmul(unitary)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim(), other.dim());
        let entries = Array2::from_shape_fn((da * db, da * db), |(r, c)| {
            self.entries[[r / db, c / db]] * other.entries[[r % db, c % db]]
        });
        Self { entries, n_sites: self.n_sites + other.n_sites }
    }

    /// `max |A_ij − conj(A_ji)|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.entries[[r, c]] - self.entries[[c, r]].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > tol {
            Err(Error::NotHermitian(dev))
        } else {
            Ok(())
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, psi: &SpinState) -> Result<Array1<C64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: psi.dim() });
        }
        Ok(self.entries.dot(psi.amplitudes()))
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, psi: &SpinState) -> Result<C64> {
        let applied = self.apply(psi)?;
        Ok(psi.amplitudes().iter().zip(applied.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
    pub fn eigh(&self) -> Result<(Array1<f64>, Array2<C64>)> {
        self.ensure_hermitian(HERMITIAN_TOL.max(1e-12 * self.max_entry()))?;
        // LAPACK sees a row-major complex matrix as its transpose, i.e. the
        // conjugate, so the eigenvectors would come back conjugated.
        let mut column_major = Array2::<C64>::zeros((self.dim(), self.dim()).f());
        column_major.assign(&self.entries);
        Ok(column_major.eigh(UPLO::Upper)?)
    }

    /// Spectral norm of a Hermitian operator.
    pub fn hermitian_norm(&self) -> Result<f64> {
        let (vals, _) = self.eigh()?;
        Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    fn max_entry(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { entries: &self.entries + &rhs.entries, n_sites: self.n_sites }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix { entries: &self.entries - &rhs.entries, n_sites: self.n_sites }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: f64) -> OperatorMatrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl AddAssign<&OperatorMatrix> for OperatorMatrix {
    fn add_assign(&mut self, rhs: &OperatorMatrix) {
        self.entries += &rhs.entries;
    }
}

/// `I ⊗ … ⊗ σ_axis ⊗ … ⊗ I` with `σ` in tensor slot `site` (1-based).
///
/// ```
/// use spindd::hilbert::{embed_pauli, Axis};
/// let z2 = embed_pauli(Axis::Z, 2, 2).unwrap();
/// let diag: Vec<f64> = z2.entries().diag().iter().map(|z| z.re).collect();
/// assert_eq!(diag, vec![1.0, -1.0, 1.0, -1.0]);
/// ```
pub fn embed_pauli(axis: Axis, site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    pauli_product(&[(site, axis)], n_sites)
}

/// Product of Pauli factors on distinct sites.
pub fn pauli_product(factors: &[(usize, Axis)], n_sites: usize) -> Result<OperatorMatrix> {
    check_dim(1usize << n_sites.min(usize::BITS as usize - 2), n_sites)?;
    Ok(PauliString::from_factors(factors, n_sites)?.to_operator())
}

/// A single-site operator `m` placed at `site`.
pub fn embed_single(m: &Mat2, site: usize, n_sites: usize) -> Result<OperatorMatrix> {
    check_site(site, n_sites)?;
    let d = 1usize << n_sites;
    let bit = site_bit(site, n_sites);
    let mask = 1usize << bit;
    let mut entries = Array2::zeros((d, d));
    for c in 0..d {
        let s = (c >> bit) & 1;
        for (r_bit, row) in m.iter().enumerate() {
            let r = (c & !mask) | (r_bit << bit);
            entries[[r, c]] = row[s];
        }
    }
    Ok(OperatorMatrix { entries, n_sites })
}

/// Two-spin reduced density with the factor order of `site_pair`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSpinDensity {
    entries: Array2<C64>,
    site_pair: (usize, usize),
}

impl TwoSpinDensity {
    pub fn new(entries: Array2<C64>, site_pair: (usize, usize)) -> Result<Self> {
        if entries.dim() != (4, 4) {
            return Err(Error::DimensionMismatch { expected: 4, found: entries.nrows() });
        }
        if site_pair.0 == site_pair.1 {
            return Err(Error::InvalidPair(site_pair.0, site_pair.1));
        }
        Ok(Self { entries, site_pair })
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn site_pair(&self) -> (usize, usize) {
        self.site_pair
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                worst = worst.max((self.entries[[r, c]] - self.entries[[c, r]].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian part, removing rounding-level asymmetry.
    pub fn hermitian_part(&self) -> Array2<C64> {
        let h = &self.entries + &self.entries.t().mapv(|z| z.conj());
        h.mapv(|z| z * 0.5)
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        Ok(self.hermitian_part().eigh(UPLO::Upper)?.0)
    }

    /// Checks Hermiticity, unit trace and positivity within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > tol {
            return Err(Error::NotHermitian(dev));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::NotNormalized(tr.re));
        }
        let min = self.eigenvalues()?.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -tol {
            return Err(Error::NotPositive(min));
        }
        Ok(())
    }

    /// Same density with the two tensor factors exchanged.
    pub fn swapped(&self) -> Self {
        let swap = |k: usize| ((k & 1) << 1) | (k >> 1);
        let entries = Array2::from_shape_fn((4, 4), |(r, c)| self.entries[[swap(r), swap(c)]]);
        Self { entries, site_pair: (self.site_pair.1, self.site_pair.0) }
    }

    pub(crate) fn scaled_add(&mut self, other: &Array2<C64>, weight: f64) {
        self.entries.scaled_add(C64::new(weight, 0.0), other);
    }

    pub(crate) fn zeros(site_pair: (usize, usize)) -> Self {
        Self { entries: Array2::zeros((4, 4)), site_pair }
    }
}

fn check_pair(i: usize, j: usize, n_sites: usize) -> Result<()> {
    check_site(i, n_sites).map_err(|_| Error::InvalidPair(i, j))?;
    check_site(j, n_sites).map_err(|_| Error::InvalidPair(i, j))?;
    if i == j {
        return Err(Error::InvalidPair(i, j));
    }
    Ok(())
}

/// Reduced density of sites `(i, j)`; the first factor of the output is site `i`.
pub fn partial_trace_pair(rho: &DensityMatrix, i: usize, j: usize) -> Result<TwoSpinDensity> {
    let n = rho.n_sites();
    check_pair(i, j, n)?;
    let (bi, bj) = (site_bit(i, n), site_bit(j, n));
    let clear = !((1usize << bi) | (1usize << bj));
    let e = rho.entries();
    let mut out = Array2::<C64>::zeros((4, 4));
    for r in 0..rho.dim() {
        let a = ((r >> bi) & 1) << 1 | ((r >> bj) & 1);
        let rest = r & clear;
        for b in 0..4 {
            let c = rest | ((b >> 1) << bi) | ((b & 1) << bj);
            out[[a, b]] += e[[r, c]];
        }
    }
    TwoSpinDensity::new(out, (i, j))
}

/// Reduced density of sites `(i, j)` computed directly from a pure state.
pub fn reduced_pair(psi: &SpinState, i: usize, j: usize) -> Result<TwoSpinDensity> {
    reduced_pair_from_slice(psi.amplitudes().as_slice().expect("contiguous"), psi.n_sites(), i, j)
}

pub(crate) fn reduced_pair_from_slice(amps: &[C64], n: usize, i: usize, j: usize) -> Result<TwoSpinDensity> {
    check_pair(i, j, n)?;
    let (bi, bj) = (site_bit(i, n), site_bit(j, n));
    let mask = (1usize << bi) | (1usize << bj);
    let mut out = Array2::<C64>::zeros((4, 4));
    for rest in (0..amps.len()).filter(|r| r & mask == 0) {
        let mut local = [ZERO; 4];
        for (a, slot) in local.iter_mut().enumerate() {
            *slot = amps[rest | ((a >> 1) << bi) | ((a & 1) << bj)];
        }
        for a in 0..4 {
            for b in 0..4 {
                out[[a, b]] += local[a] * local[b].conj();
            }
        }
    }
    TwoSpinDensity::new(out, (i, j))
}

/// Single-site reduced density of a pure state.
pub fn reduced_single(psi: &SpinState, site: usize) -> Result<Mat2> {
    let n = psi.n_sites();
    check_site(site, n)?;
    let bit = site_bit(site, n);
    let amps = psi.amplitudes();
    let mut out = [[ZERO; 2]; 2];
    for r in (0..amps.len()).filter(|r| (r >> bit) & 1 == 0) {
        let pair = [amps[r], amps[r | (1 << bit)]];
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] += pair[a] * pair[b].conj();
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kron_oracle(factors: &[Mat2]) -> Array2<C64> {
        let mut acc = Array2::from_elem((1, 1), ONE);
        for m in factors {
            let m = Array2::from_shape_fn((2, 2), |(r, c)| m[r][c]);
            let (da, db) = (acc.nrows(), 2);
            acc = Array2::from_shape_fn((da * db, da * db), |(r, c)| acc[[r / db, c / db]] * m[[r % db, c % db]]);
        }
        acc
    }

    fn identity2() -> Mat2 {
        [[ONE, ZERO], [ZERO, ONE]]
    }

    #[test]
    fn eigenvectors_of_complex_operator() {
        let h = &(&embed_pauli(Axis::Y, 1, 2).unwrap() + &embed_pauli(Axis::X, 2, 2).unwrap())
            + &pauli_product(&[(1, Axis::X), (2, Axis::Y)], 2).unwrap();
        let (vals, vecs) = h.eigh().unwrap();
        let diag = Array2::from_diag(&vals.mapv(|v| C64::new(v, 0.0)));
        let residual = (h.entries().dot(&vecs) - vecs.dot(&diag)).mapv(|z| z.norm()).sum();
        assert!(residual < 1e-12);
    }

    #[test]
    fn basis_state_examples() {
        let s = basis_state(&[0]).unwrap();
        assert_eq!(s.amplitudes().to_vec(), vec![ONE, ZERO]);
        let s = basis_state(&[1, 0]).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.amplitudes()[2], ONE);
        let s = basis_state(&[1, 1, 1, 1]).unwrap();
        assert_eq!(s.amplitudes()[15], ONE);
        assert!(matches!(basis_state(&[]), Err(Error::EmptyBitstring)));
        assert!(matches!(basis_state(&[2]), Err(Error::InvalidBit(2))));
    }

    #[test]
    fn embed_pauli_examples() {
        let x = embed_pauli(Axis::X, 1, 1).unwrap();
        assert_eq!(x.entries()[[0, 1]], ONE);
        assert_eq!(x.entries()[[1, 0]], ONE);
        assert!(matches!(embed_pauli(Axis::X, 3, 2), Err(Error::SiteOutOfRange { .. })));
        assert!(matches!(embed_pauli(Axis::X, 0, 2), Err(Error::SiteOutOfRange { .. })));
    }

    #[test]
    fn embed_pauli_matches_kron_oracle() {
        for n in 1..=4 {
            for site in 1..=n {
                for axis in Axis::ALL {
                    let mut factors = vec![identity2(); n];
                    factors[site - 1] = axis.matrix();
                    let oracle = kron_oracle(&factors);
                    let got = embed_pauli(axis, site, n).unwrap();
                    let diff = (got.entries() - &oracle).iter().map(|z| z.norm()).fold(0.0, f64::max);
                    assert!(diff == 0.0, "n={n} site={site} {axis:?}");
                    let single = embed_single(&axis.matrix(), site, n).unwrap();
                    assert_eq!(single.entries(), &oracle);
                }
            }
        }
    }

    #[test]
    fn paulis_are_traceless_involutions_with_su2_algebra() {
        let eps = |a: usize, b: usize, c: usize| -> f64 {
            match (a, b, c) {
                (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                _ => 0.0,
            }
        };
        for n in 1..=4 {
            let id = OperatorMatrix::identity(n);
            for p in 1..=n {
                for a in Axis::ALL {
                    let sa = embed_pauli(a, p, n).unwrap();
                    assert!(sa.trace().norm() < 1e-12);
                    assert!(sa.matmul(&sa).max_abs_diff(&id) < 1e-12);
                    for q in 1..=n {
                        for b in Axis::ALL {
                            let sb = embed_pauli(b, q, n).unwrap();
                            let comm = sa.commutator(&sb);
                            let mut expect = OperatorMatrix::zeros(n);
                            if p == q {
                                for c in Axis::ALL {
                                    let e = eps(a.index(), b.index(), c.index());
                                    if e != 0.0 {
                                        expect += &embed_pauli(c, p, n).unwrap().scale(C64::new(0.0, 2.0 * e));
                                    }
                                }
                            }
                            assert!(comm.max_abs_diff(&expect) < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let psi = basis_state(&[0, 1, 0]).unwrap();
        let rho = OperatorMatrix::from_pure(&psi);
        let red = partial_trace_pair(&rho, 1, 2).unwrap();
        let mut expect = Array2::<C64>::zeros((4, 4));
        expect[[1, 1]] = ONE;
        assert_eq!(red.entries(), &expect);

        let mut ghz = Array1::<C64>::zeros(16);
        ghz[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        ghz[15] = ghz[0];
        let ghz = SpinState::new(ghz, 4).unwrap();
        let red = partial_trace_pair(&OperatorMatrix::from_pure(&ghz), 1, 4).unwrap();
        let mut expect = Array2::<C64>::zeros((4, 4));
        expect[[0, 0]] = C64::new(0.5, 0.0);
        expect[[3, 3]] = C64::new(0.5, 0.0);
        let diff = (red.entries() - &expect).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);

        assert!(matches!(partial_trace_pair(&rho, 2, 2), Err(Error::InvalidPair(2, 2))));
        assert!(matches!(partial_trace_pair(&rho, 1, 4), Err(Error::InvalidPair(1, 4))));
    }

    #[test]
    fn pair_order_swaps_factors() {
        let psi = basis_state(&[0, 1, 1]).unwrap();
        let a = reduced_pair(&psi, 1, 3).unwrap();
        let b = reduced_pair(&psi, 3, 1).unwrap();
        assert_eq!(a.entries()[[1, 1]], ONE);
        assert_eq!(b.entries()[[2, 2]], ONE);
        assert_eq!(a.swapped().entries(), b.entries());
    }

    fn arb_state(n: usize) -> impl Strategy<Value = SpinState> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1usize << n).prop_filter_map("nonzero", move |v| {
            let amps = Array1::from_iter(v.into_iter().map(|(r, i)| C64::new(r, i)));
            SpinState::normalized(amps, n).ok()
        })
    }

    proptest! {
        #[test]
        fn reduced_pair_routes_agree_and_preserve_trace(psi in arb_state(4), i in 1usize..=4, j in 1usize..=4) {
            prop_assume!(i != j);
            let rho = OperatorMatrix::from_pure(&psi);
            let dense = partial_trace_pair(&rho, i, j).unwrap();
            let direct = reduced_pair(&psi, i, j).unwrap();
            let diff = (dense.entries() - direct.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(diff < 1e-12);
            prop_assert!((dense.trace() - rho.trace()).norm() < 1e-12);
            prop_assert!(dense.validate(DENSITY_TOL).is_ok());
        }

        #[test]
        fn mixed_state_partial_trace_is_hermitian(a in arb_state(3), b in arb_state(3), w in 0.0f64..1.0) {
            let rho = &(&OperatorMatrix::from_pure(&a) * w) + &(&OperatorMatrix::from_pure(&b) * (1.0 - w));
            for (i, j) in [(1, 2), (2, 3), (3, 1)] {
                let red = partial_trace_pair(&rho, i, j).unwrap();
                prop_assert!(red.hermiticity_deviation() < 1e-14);
                prop_assert!((red.trace() - ONE).norm() < 1e-12);
            }
        }

        #[test]
        fn basis_states_are_orthonormal(n in 1usize..=5, x in 0usize..32, y in 0usize..32) {
            let d = 1usize << n;
            let bits = |k: usize| (0..n).map(|p| ((k % d) >> (n - 1 - p)) as u8 & 1).collect::<Vec<_>>();
            let a = basis_state(&bits(x)).unwrap();
            let b = basis_state(&bits(y)).unwrap();
            let ip = a.inner(&b).unwrap();
            let expect = if x % d == y % d { 1.0 } else { 0.0 };
            prop_assert!((ip - C64::new(expect, 0.0)).norm() == 0.0);
        }
    }

    #[test]
    fn single_site_reduction_of_product_state() {
        let s = SpinState::product(&[[ONE, ZERO], [ONE, ONE]]).unwrap();
        let r = reduced_single(&s, 2).unwrap();
        assert!((r[0][1] - C64::new(0.5, 0.0)).norm() < 1e-15);
        let r = reduced_single(&s, 1).unwrap();
        assert!((r[0][0] - ONE).norm() < 1e-15);
    }
}
