//! Free-fermion fast path for chains with `2λ₁ + λ₂ + λ₃ = 0`.
//!
//! Under that constraint both effective Hamiltonians lose their `σ_zσ_z`
//! part and the Jordan–Wigner map
//! `c_i = Π_{j<i}(−σ_z^{(j)}) a_i`, `a_i = (σ_x − iσ_y)/2`,
//! turns them into the quadratic form
//! `λ₁ Σ [c_i† J_ij c_j + ½(e^{−iφ} c_i† K_ij c_j† + h.c.)]`.
//! A Bogoliubov transformation `η_k = Σ g_ki c_i + h_ki c_i†` diagonalizes it
//! and two-point functions of the Majorana operators `P = c† + c`,
//! `Q = c† − c` then give every spin correlator as a Pfaffian.
//!
//! The fermion vacuum is `|11…1⟩`, the only initial state supported.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use serde::{Deserialize, Serialize};

use crate::effective::EffectiveVariant;
use crate::hilbert::{pauli_product, Axis, TwoSpinDensity};
use crate::observables::{concurrence, ObservableKind, ObservableSeries};
use crate::pfaffian::pfaffian;
use crate::{Error, Result, C64};

/// Tolerance of the canonical anticommutation checks.
pub const CANONICAL_TOL: f64 = 1e-10;
/// Modes with `Λ/|λ₁|` below this are treated as zero modes.
pub const ZERO_MODE_TOL: f64 = 1e-9;
/// Largest imaginary part a real correlator may carry.
pub const CORRELATOR_IMAG_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JwVariant {
    Hbar1,
    Hbar2,
}

impl JwVariant {
    pub fn effective(self) -> EffectiveVariant {
        match self {
            JwVariant::Hbar1 => EffectiveVariant::Hbar1,
            JwVariant::Hbar2 => EffectiveVariant::Hbar2,
        }
    }
}

/// Hopping `J`, pairing `K` and the scalars of the quadratic form.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub hopping: Array2<f64>,
    pub pairing: Array2<f64>,
    pub gamma: f64,
    pub phase: f64,
    pub lambda1: f64,
}

impl QuadraticForm {
    pub fn n_sites(&self) -> usize {
        self.hopping.nrows()
    }
}

/// Quadratic form of the effective chain with `λ₃ = −2λ₁ − λ₂`.
///
/// `γ` uses `|λ₁|` so that `λ₁γe^{−iφ} = λ₁ − i(λ₁ + λ₂)` for either sign
/// of `λ₁`.
pub fn build_quadratic_form(lambda1: f64, lambda2: f64, n_sites: usize, variant: JwVariant) -> Result<QuadraticForm> {
    if lambda1 == 0.0 || !lambda1.is_finite() || !lambda2.is_finite() {
        return Err(Error::ZeroLambda1);
    }
    if n_sites < 2 {
        return Err(Error::TooFewSites { min: 2, got: n_sites });
    }
    let (gamma, phase) = match variant {
        JwVariant::Hbar1 => (1.0, 0.0),
        JwVariant::Hbar2 => {
            let ratio = (lambda1 + lambda2) / lambda1;
            ((lambda1 * lambda1 + (lambda1 + lambda2).powi(2)).sqrt() / lambda1.abs(), ratio.atan())
        }
    };
    let mut hopping = Array2::zeros((n_sites, n_sites));
    let mut pairing = Array2::zeros((n_sites, n_sites));
    for i in 0..n_sites - 1 {
        hopping[[i, i + 1]] = -1.0;
        hopping[[i + 1, i]] = -1.0;
        pairing[[i, i + 1]] = gamma;
        pairing[[i + 1, i]] = -gamma;
    }
    Ok(QuadraticForm { hopping, pairing, gamma, phase, lambda1 })
}

/// Bogoliubov modes of a quadratic form.
#[derive(Clone, Debug)]
pub struct FreeFermionSolution {
    /// Mode energies `Λ_k ≥ 0`, ascending.
    pub energies: Array1<f64>,
    pub g: Array2<C64>,
    pub h: Array2<C64>,
    /// Inverse transformation `c = g′η + h′η†`.
    pub g_inv: Array2<C64>,
    pub h_inv: Array2<C64>,
    pub phi_rows: Array2<f64>,
    pub psi_rows: Array2<f64>,
}

impl FreeFermionSolution {
    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    /// `max|gg† + hh† − I|` and `max|ghᵀ + hgᵀ|`.
    pub fn canonical_residuals(&self) -> (f64, f64) {
        let n = self.n_sites();
        let dag = |m: &Array2<C64>| m.t().mapv(|z| z.conj());
        let unit = self.g.dot(&dag(&self.g)) + self.h.dot(&dag(&self.h)) - Array2::<C64>::eye(n);
        let pair = self.g.dot(&self.h.t()) + self.h.dot(&self.g.t());
        let max = |m: Array2<C64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        (max(unit), max(pair))
    }

    /// The constant in `H = Σ Λ_k η_k†η_k + E₀` for a traceless Hamiltonian.
    pub fn energy_offset(&self) -> f64 {
        -0.5 * self.energies.sum()
    }

    /// All `2^N` levels `Σ Λ_k n_k + E₀`, ascending.
    pub fn many_body_spectrum(&self) -> Result<Vec<f64>> {
        let n = self.n_sites();
        if n > 20 {
            return Err(Error::TooManySites { got: n, limit: 20 });
        }
        let offset = self.energy_offset();
        let mut levels: Vec<f64> = (0..1usize << n)
            .map(|occ| offset + (0..n).filter(|k| occ >> k & 1 == 1).map(|k| self.energies[k]).sum::<f64>())
            .collect();
        levels.sort_by(f64::total_cmp);
        Ok(levels)
    }
}

/// Fixes the sign so the first significant component is positive.
fn sign_of_lead(v: ndarray::ArrayView1<f64>) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    match v.iter().find(|x| x.abs() > 1e-8 * scale) {
        Some(&first) if first < 0.0 => -1.0,
        _ => 1.0,
    }
}

/// Diagonalizes a quadratic form.
///
/// The mode equations `Φ_k(J−K) = ε_kΨ_k`, `Ψ_k(J+K) = ε_kΦ_k` say that
/// `Φ_k`, `Ψ_k` are right and left singular vectors of `J+K` with singular
/// value `ε_k`, so `Φ_k(J−K)(J+K) = ε_k²Φ_k`. Taking them from one SVD keeps
/// exponentially small edge modes accurate and returns zero modes from the
/// null spaces directly. Then `g = (Φ+Ψ)/2`, `h = e^{−iφ}(Φ−Ψ)/2` and
/// `Λ_k = λ₁ε_k`; for `λ₁ < 0` every mode is swapped with its conjugate so
/// that all `Λ_k ≥ 0`.
pub fn solve_free_fermion(form: &QuadraticForm) -> Result<FreeFermionSolution> {
    let n = form.n_sites();
    let plus = &form.hopping + &form.pairing;
    let (u, sigma, vt) = plus.svd(true, true)?;
    let (u, vt) = (u.expect("requested"), vt.expect("requested"));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    let mut phi = Array2::<f64>::zeros((n, n));
    let mut psi = Array2::<f64>::zeros((n, n));
    let mut eps = Vec::with_capacity(n);
    for (slot, &k) in order.iter().enumerate() {
        let sign = sign_of_lead(vt.row(k));
        phi.row_mut(slot).assign(&(&vt.row(k) * sign));
        let left = u.column(k);
        let zero_mode = sigma[k] < ZERO_MODE_TOL;
        let left_sign = if zero_mode { sign_of_lead(left) } else { sign };
        psi.row_mut(slot).assign(&(&left * left_sign));
        eps.push(if zero_mode { 0.0 } else { sigma[k] });
    }

    let rotation = C64::from_polar(1.0, -form.phase);
    let mut g = Array2::from_shape_fn((n, n), |(k, i)| C64::new(0.5 * (phi[[k, i]] + psi[[k, i]]), 0.0));
    let mut h = Array2::from_shape_fn((n, n), |(k, i)| rotation * (0.5 * (phi[[k, i]] - psi[[k, i]])));
    let mut energies = Array1::from_iter(eps.iter().map(|&e| form.lambda1 * e));
    if form.lambda1 < 0.0 {
        let (new_g, new_h) = (h.mapv(|z| z.conj()), g.mapv(|z| z.conj()));
        g = new_g;
        h = new_h;
        energies.mapv_inplace(|e| -e);
    }
    let g_inv = g.t().mapv(|z| z.conj());
    let h_inv = h.t().to_owned();
    let solution = FreeFermionSolution { energies, g, h, g_inv, h_inv, phi_rows: phi, psi_rows: psi };
    let (unit, pair) = solution.canonical_residuals();
    if unit > CANONICAL_TOL || pair > CANONICAL_TOL {
        return Err(Error::Linalg(format!("Bogoliubov transformation is not canonical ({unit:e}, {pair:e})")));
    }
    Ok(solution)
}

/// The nonvanishing two-site correlators of a pair `l < m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairCorrelators {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub yx: f64,
    pub zz: f64,
}

/// Two-point functions and spin correlators at one time.
#[derive(Clone, Debug)]
pub struct CorrelatorSet {
    pub time: f64,
    pub a: Array2<C64>,
    pub b: Array2<C64>,
    pub x: Array2<C64>,
    pub y: Array2<C64>,
    /// `⟨Q_i P_j⟩`.
    pub f: Array2<C64>,
    /// `⟨Q_i Q_j⟩`.
    pub s: Array2<C64>,
    /// `⟨P_i P_j⟩`.
    pub t: Array2<C64>,
    /// `⟨P_i Q_j⟩`.
    pub w: Array2<C64>,
    /// Keyed by 1-based `(l, m)` with `l < m`.
    pub pairs: BTreeMap<(usize, usize), PairCorrelators>,
    /// `⟨σ_z^{(l)}⟩ = −W_ll`, site 1 first.
    pub sigma_z: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Majorana {
    P(usize),
    Q(usize),
}

impl CorrelatorSet {
    fn contraction(&self, a: Majorana, b: Majorana) -> C64 {
        match (a, b) {
            (Majorana::Q(i), Majorana::P(j)) => self.f[[i, j]],
            (Majorana::Q(i), Majorana::Q(j)) => self.s[[i, j]],
            (Majorana::P(i), Majorana::P(j)) => self.t[[i, j]],
            (Majorana::P(i), Majorana::Q(j)) => self.w[[i, j]],
        }
    }

    /// `⟨ω_1 ω_2 … ω_2n⟩` for distinct Majoranas, by Wick's theorem.
    fn wick(&self, chain: &[Majorana]) -> Result<C64> {
        let n = chain.len();
        let mut m = Array2::<C64>::zeros((n, n));
        for r in 0..n {
            for c in r + 1..n {
                let v = self.contraction(chain[r], chain[c]);
                m[[r, c]] = v;
                m[[c, r]] = -v;
            }
        }
        pfaffian(&m)
    }

    pub fn pair(&self, l: usize, m: usize) -> Result<PairCorrelators> {
        self.pairs.get(&(l, m)).copied().ok_or_else(|| Error::MissingCorrelator(format!("pair ({l}, {m})")))
    }
}

fn real(z: C64, what: &str) -> Result<f64> {
    if z.im.abs() > CORRELATOR_IMAG_TOL {
        return Err(Error::Linalg(format!("{what} has imaginary part {:e}", z.im)));
    }
    Ok(z.re)
}

/// Strings of Majoranas for `l < m` (0-based): `σ_x^lσ_x^m = Q_l (P Q)… P_m`
/// and the analogous forms with the end operators swapped.
fn pair_correlators(cs: &CorrelatorSet, l: usize, m: usize) -> Result<PairCorrelators> {
    let inner: Vec<Majorana> = (l + 1..m).flat_map(|j| [Majorana::P(j), Majorana::Q(j)]).collect();
    let string = |first: Majorana, last: Majorana| -> Vec<Majorana> {
        let mut v = Vec::with_capacity(inner.len() + 2);
        v.push(first);
        v.extend_from_slice(&inner);
        v.push(last);
        v
    };
    let minus_i = C64::new(0.0, -1.0);
    let xx = cs.wick(&string(Majorana::Q(l), Majorana::P(m)))?;
    let yy = -cs.wick(&string(Majorana::P(l), Majorana::Q(m)))?;
    let xy = minus_i * cs.wick(&string(Majorana::Q(l), Majorana::Q(m)))?;
    let yx = minus_i * cs.wick(&string(Majorana::P(l), Majorana::P(m)))?;
    let zz = cs.wick(&[Majorana::P(l), Majorana::Q(l), Majorana::P(m), Majorana::Q(m)])?;
    Ok(PairCorrelators {
        xx: real(xx, "Θ_xx")?,
        yy: real(yy, "Θ_yy")?,
        xy: real(xy, "Θ_xy")?,
        yx: real(yx, "Θ_yx")?,
        zz: real(zz, "Θ_zz")?,
    })
}

/// Correlators at time `t` from the vacuum `|11…1⟩`; `pairs` are 1-based.
pub fn correlators_at(sol: &FreeFermionSolution, t: f64, pairs: &[(usize, usize)]) -> Result<CorrelatorSet> {
    let n = sol.n_sites();
    for &(l, m) in pairs {
        if l == m || l == 0 || m == 0 || l > n || m > n {
            return Err(Error::InvalidPair(l, m));
        }
    }
    let forward = Array1::from_iter(sol.energies.iter().map(|&e| C64::from_polar(1.0, -e * t)));
    let g_t = &sol.g_inv * &forward.view().insert_axis(ndarray::Axis(0));
    let h_t = &sol.h_inv * &forward.mapv(|z| z.conj()).view().insert_axis(ndarray::Axis(0));
    let a = g_t.dot(&sol.g) + h_t.dot(&sol.h.mapv(|z| z.conj()));
    let b = g_t.dot(&sol.h) + h_t.dot(&sol.g.mapv(|z| z.conj()));
    let b_conj = b.mapv(|z| z.conj());
    let x = &a + &b_conj;
    let y = &b_conj - &a;
    let dag = |m: &Array2<C64>| m.t().mapv(|z| z.conj());
    let f = y.dot(&dag(&x));
    let s = -y.dot(&dag(&y));
    let tt = x.dot(&dag(&x));
    let w = -x.dot(&dag(&y));
    let sigma_z = (0..n).map(|l| real(-w[[l, l]], "⟨σ_z⟩")).collect::<Result<Vec<_>>>()?;
    let mut cs = CorrelatorSet { time: t, a, b, x, y, f, s, t: tt, w, pairs: BTreeMap::new(), sigma_z };
    for &(i, j) in pairs {
        let (l, m) = (i.min(j), i.max(j));
        if !cs.pairs.contains_key(&(l, m)) {
            let pc = pair_correlators(&cs, l - 1, m - 1)?;
            cs.pairs.insert((l, m), pc);
        }
    }
    Ok(cs)
}

/// `ρ = ¼[I⊗I + ⟨σ_z⟩⊗I + I⊗⟨σ_z⟩ + Σ Θ_αβ σ_α⊗σ_β]` over the nonvanishing
/// correlators; the output factor order follows `pair`.
pub fn two_spin_density_jw(cs: &CorrelatorSet, pair: (usize, usize)) -> Result<TwoSpinDensity> {
    let (i, j) = pair;
    let (l, m) = (i.min(j), i.max(j));
    if l == m || l == 0 || m > cs.sigma_z.len() {
        return Err(Error::InvalidPair(i, j));
    }
    let pc = cs.pair(l, m)?;
    let op = |factors: &[(usize, Axis)]| pauli_product(factors, 2).map(|o| o.into_entries());
    let mut rho = Array2::<C64>::eye(4);
    let terms: [(f64, Vec<(usize, Axis)>); 7] = [
        (cs.sigma_z[l - 1], vec![(1, Axis::Z)]),
        (cs.sigma_z[m - 1], vec![(2, Axis::Z)]),
        (pc.xx, vec![(1, Axis::X), (2, Axis::X)]),
        (pc.yy, vec![(1, Axis::Y), (2, Axis::Y)]),
        (pc.xy, vec![(1, Axis::X), (2, Axis::Y)]),
        (pc.yx, vec![(1, Axis::Y), (2, Axis::X)]),
        (pc.zz, vec![(1, Axis::Z), (2, Axis::Z)]),
    ];
    for (coeff, factors) in terms {
        rho.scaled_add(C64::new(coeff, 0.0), &op(&factors)?);
    }
    rho.mapv_inplace(|z| z * 0.25);
    let density = TwoSpinDensity::new(rho, (l, m))?;
    Ok(if i > j { density.swapped() } else { density })
}

/// Concurrence of `pair` on `times`, starting from `|11…1⟩`.
pub fn jw_concurrence_curve(
    lambda1: f64,
    lambda2: f64,
    n_sites: usize,
    variant: JwVariant,
    pair: (usize, usize),
    times: &[f64],
) -> Result<ObservableSeries> {
    let form = build_quadratic_form(lambda1, lambda2, n_sites, variant)?;
    let sol = solve_free_fermion(&form)?;
    let values = times
        .iter()
        .map(|&t| {
            let cs = correlators_at(&sol, t, &[pair])?;
            concurrence(&two_spin_density_jw(&cs, pair)?)
        })
        .collect::<Result<Vec<_>>>()?;
    ObservableSeries::new(format!("C{}{} {variant:?} JW", pair.0, pair.1), ObservableKind::Concurrence, times.to_vec(), values)
}
