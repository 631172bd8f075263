//! Pfaffians of complex antisymmetric matrices.

use ndarray::Array2;

use crate::{Error, Result, C64};

/// Antisymmetry tolerance relative to the largest entry.
pub const ANTISYMMETRY_TOL: f64 = 1e-10;

fn check(m: &Array2<C64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m.ncols() });
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[[r, c]] + m[[c, r]]).norm());
        }
    }
    if worst > ANTISYMMETRY_TOL * scale {
        return Err(Error::NotAntisymmetric(worst));
    }
    Ok(())
}

/// Pfaffian by Parlett–Reid tridiagonalization with partial pivoting.
///
/// ```
/// use ndarray::array;
/// use spindd::pfaffian::pfaffian;
/// use spindd::C64;
///
/// let a = C64::new(0.0, 2.0);
/// let m = array![[C64::new(0.0, 0.0), a], [-a, C64::new(0.0, 0.0)]];
/// assert_eq!(pfaffian(&m).unwrap(), a);
/// ```
pub fn pfaffian(m: &Array2<C64>) -> Result<C64> {
    check(m)?;
    let n = m.nrows();
    let mut a = m.clone();
    let mut value = C64::new(1.0, 0.0);
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let pivot = (k + 1..n).max_by(|&i, &j| a[[i, k]].norm().total_cmp(&a[[j, k]].norm())).expect("nonempty");
        if pivot != k + 1 {
            for c in 0..n {
                a.swap([k + 1, c], [pivot, c]);
            }
            for r in 0..n {
                a.swap([r, k + 1], [r, pivot]);
            }
            value = -value;
        }
        if a[[k + 1, k]] == C64::new(0.0, 0.0) {
            return Ok(C64::new(0.0, 0.0));
        }
        let head = a[[k, k + 1]];
        value *= head;
        if k + 2 < n {
            let tau: Vec<C64> = (k + 2..n).map(|c| a[[k, c]] / head).collect();
            let col: Vec<C64> = (k + 2..n).map(|r| a[[r, k + 1]]).collect();
            for (i, r) in (k + 2..n).enumerate() {
                for (j, c) in (k + 2..n).enumerate() {
                    a[[r, c]] += tau[i] * col[j] - col[i] * tau[j];
                }
            }
        }
    }
    Ok(value)
}

/// Pfaffian by cofactor expansion along the first row. Exponential cost,
/// limited to dimension 8; used to cross-check [`pfaffian`].
pub fn pfaffian_by_expansion(m: &Array2<C64>) -> Result<C64> {
    check(m)?;
    if m.nrows() > 8 {
        return Err(Error::InvalidArgument(format!("expansion limited to dimension 8, got {}", m.nrows())));
    }
    let indices: Vec<usize> = (0..m.nrows()).collect();
    Ok(expand(m, &indices))
}

fn expand(m: &Array2<C64>, indices: &[usize]) -> C64 {
    if indices.is_empty() {
        return C64::new(1.0, 0.0);
    }
    let first = indices[0];
    let mut total = C64::new(0.0, 0.0);
    for (pos, &j) in indices.iter().enumerate().skip(1) {
        let rest: Vec<usize> = indices[1..].iter().copied().filter(|&k| k != j).collect();
        let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
        total += m[[first, j]] * expand(m, &rest) * sign;
    }
    total
}

/// Completes an upper triangle to an antisymmetric matrix.
pub fn antisymmetric_from_upper(upper: &Array2<C64>) -> Array2<C64> {
    let n = upper.nrows();
    Array2::from_shape_fn((n, n), |(r, c)| match r.cmp(&c) {
        std::cmp::Ordering::Less => upper[[r, c]],
        std::cmp::Ordering::Greater => -upper[[c, r]],
        std::cmp::Ordering::Equal => C64::new(0.0, 0.0),
    })
}
