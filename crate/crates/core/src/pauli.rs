//! Pauli strings as bit masks.
//!
//! A string on `N` sites is stored as an `x` mask and a `z` mask over the
//! basis-index bits, with `(x, z) = (1, 0)` for `σ_x`, `(0, 1)` for `σ_z` and
//! `(1, 1)` for `σ_y`. Applying a string to `|b⟩` gives
//! `i^{#Y} (-1)^{popcount(b & z)} |b ⊕ x⟩`.

use std::fmt;

use ndarray::Array2;

use crate::hilbert::{check_site, site_bit, Axis, OperatorMatrix};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x_mask: u64,
    z_mask: u64,
    n_sites: usize,
}

impl PauliString {
    pub fn identity(n_sites: usize) -> Self {
        Self { x_mask: 0, z_mask: 0, n_sites }
    }

    /// Builds a string from `(site, axis)` factors on distinct sites (1-based).
    pub fn from_factors(factors: &[(usize, Axis)], n_sites: usize) -> Result<Self> {
        if n_sites > 63 {
            return Err(Error::TooManySites { got: n_sites, limit: 63 });
        }
        let mut p = Self::identity(n_sites);
        for &(site, axis) in factors {
            check_site(site, n_sites)?;
            let bit = 1u64 << site_bit(site, n_sites);
            if (p.x_mask | p.z_mask) & bit != 0 {
                return Err(Error::InvalidArgument(format!(
                    "site {site} appears twice in a Pauli product"
                )));
            }
            match axis {
                Axis::X => p.x_mask |= bit,
                Axis::Y => {
                    p.x_mask |= bit;
                    p.z_mask |= bit;
                }
                Axis::Z => p.z_mask |= bit,
            }
        }
        Ok(p)
    }

    /// Parses labels such as `"XIZY"`; the first character is site 1.
    pub fn from_label(label: &str) -> Result<Self> {
        let n_sites = label.chars().count();
        let mut factors = Vec::new();
        for (k, ch) in label.chars().enumerate() {
            let axis = match ch {
                'I' | 'i' => continue,
                'X' | 'x' => Axis::X,
                'Y' | 'y' => Axis::Y,
                'Z' | 'z' => Axis::Z,
                other => {
                    return Err(Error::InvalidArgument(format!("bad Pauli label character {other:?}")))
                }
            };
            factors.push((k + 1, axis));
        }
        Self::from_factors(&factors, n_sites)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Axis acting on `site`, or `None` for identity.
    pub fn axis_at(&self, site: usize) -> Option<Axis> {
        let bit = 1u64 << site_bit(site, self.n_sites);
        match (self.x_mask & bit != 0, self.z_mask & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    pub fn label(&self) -> String {
        (1..=self.n_sites)
            .map(|s| match self.axis_at(s) {
                None => 'I',
                Some(Axis::X) => 'X',
                Some(Axis::Y) => 'Y',
                Some(Axis::Z) => 'Z',
            })
            .collect()
    }

    fn y_count(&self) -> u32 {
        (self.x_mask & self.z_mask).count_ones()
    }

    /// Matrix element factor: `P|b⟩ = factor(b) |b ⊕ x⟩`.
    #[inline]
    pub fn factor(&self, basis: usize) -> C64 {
        let sign = if ((basis as u64) & self.z_mask).count_ones() & 1 == 0 { 1.0 } else { -1.0 };
        i_pow(self.y_count()) * sign
    }

    #[inline]
    pub fn flip_mask(&self) -> usize {
        self.x_mask as usize
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        let anti = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        anti & 1 == 0
    }

    /// Product `self · other = phase · string`.
    pub fn mul(&self, other: &Self) -> (C64, PauliString) {
        debug_assert_eq!(self.n_sites, other.n_sites);
        let result = PauliString {
            x_mask: self.x_mask ^ other.x_mask,
            z_mask: self.z_mask ^ other.z_mask,
            n_sites: self.n_sites,
        };
        // Evaluate on a single basis state: self·other|0⟩ vs result|0⟩.
        // other|0⟩ = f_o(0)|x_o⟩, self|x_o⟩ = f_s(x_o)|x_o ⊕ x_s⟩.
        let lhs = other.factor(0) * self.factor(other.x_mask as usize);
        let phase = lhs / result.factor(0);
        (phase, result)
    }

    /// `[self, other] = coefficient · string` (coefficient zero when they commute).
    pub fn commutator(&self, other: &Self) -> (C64, PauliString) {
        let (phase, p) = self.mul(other);
        if self.commutes_with(other) {
            (C64::new(0.0, 0.0), p)
        } else {
            (phase * 2.0, p)
        }
    }

    pub fn to_operator(&self) -> OperatorMatrix {
        let dim = 1usize << self.n_sites;
        let mut m = Array2::<C64>::zeros((dim, dim));
        let flip = self.flip_mask();
        for b in 0..dim {
            m[[b ^ flip, b]] = self.factor(b);
        }
        OperatorMatrix::from_entries_unchecked(m, self.n_sites)
    }

    /// Accumulates `coeff · P ψ` into `out`.
    pub fn apply_add(&self, coeff: C64, psi: &[C64], out: &mut [C64]) {
        let flip = self.flip_mask();
        for (b, &amp) in psi.iter().enumerate() {
            out[b ^ flip] += coeff * self.factor(b) * amp;
        }
    }

    /// Expansion coefficient `Tr(P A) / 2^N` of a dense operator.
    pub fn coefficient_in(&self, op: &OperatorMatrix) -> C64 {
        let a = op.entries();
        let dim = a.nrows();
        let flip = self.flip_mask();
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..dim {
            acc += self.factor(c) * a[[c, c ^ flip]];
        }
        acc / dim as f64
    }

    /// Every string on `n_sites` sites, identity first.
    pub fn all(n_sites: usize) -> impl Iterator<Item = PauliString> {
        let count = 1u64 << n_sites;
        (0..count).flat_map(move |x| {
            (0..count).map(move |z| PauliString { x_mask: x, z_mask: z, n_sites })
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Pauli expansion `A = Σ c_P P`, dropping coefficients below `cutoff`.
pub fn decompose(op: &OperatorMatrix, cutoff: f64) -> Vec<(PauliString, C64)> {
    PauliString::all(op.n_sites())
        .filter_map(|p| {
            let c = p.coefficient_in(op);
            (c.norm() > cutoff).then_some((p, c))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_products_follow_pauli_algebra() {
        let x = PauliString::from_label("X").unwrap();
        let y = PauliString::from_label("Y").unwrap();
        let z = PauliString::from_label("Z").unwrap();
        let (ph, p) = x.mul(&y);
        assert_eq!(p, z);
        assert!((ph - C64::new(0.0, 1.0)).norm() < 1e-15);
        let (ph, p) = y.mul(&x);
        assert_eq!(p, z);
        assert!((ph - C64::new(0.0, -1.0)).norm() < 1e-15);
        let (c, p) = x.commutator(&y);
        assert_eq!(p, z);
        assert!((c - C64::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn mul_matches_dense_products() {
        let labels = ["XY", "ZI", "YY", "IX", "XZ", "YZ"];
        for a in labels {
            for b in labels {
                let pa = PauliString::from_label(a).unwrap();
                let pb = PauliString::from_label(b).unwrap();
                let (phase, pc) = pa.mul(&pb);
                let dense = pa.to_operator().matmul(&pb.to_operator());
                let expect = pc.to_operator().scale(phase);
                assert!(dense.max_abs_diff(&expect) < 1e-14, "{a}*{b}");
            }
        }
    }

    #[test]
    fn label_round_trip_and_decomposition() {
        let p = PauliString::from_label("XIYZ").unwrap();
        assert_eq!(p.label(), "XIYZ");
        let op = p.to_operator().scale(C64::new(0.5, 0.0));
        let terms = decompose(&op, 1e-12);
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].0, p);
        assert!((terms[0].1 - C64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_repeated_sites() {
        assert!(PauliString::from_factors(&[(1, Axis::X), (1, Axis::Z)], 2).is_err());
        assert!(PauliString::from_label("XQ").is_err());
    }
}
