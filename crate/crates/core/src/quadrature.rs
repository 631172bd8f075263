//! Fixed-grid quadrature rules over one control period.

use std::f64::consts::PI;

/// Equispaced nodes `k t_c / m` with weights `1/m`: the periodic trapezoid
/// rule, exact for trigonometric polynomials of degree below `m`.
pub(crate) fn periodic_nodes(period: f64, m: usize) -> impl Iterator<Item = (f64, f64)> {
    let w = 1.0 / m as f64;
    (0..m).map(move |k| (period * k as f64 / m as f64, w))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` panels.
pub(crate) fn composite_gl(a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let width = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * rule.len());
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for &(x, w) in rule {
            out.push((lo + 0.5 * width * (x + 1.0), 0.5 * width * w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
        for deg in 0..16 {
            let got: f64 = rule.iter().map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((got - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn periodic_rule_is_exact_for_trig_polynomials() {
        let total: f64 = periodic_nodes(2.0, 64).map(|(t, w)| w * (PI * 5.0 * t).cos().powi(2)).sum();
        assert!((total - 0.5).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_covers_interval() {
        let nodes = composite_gl(0.0, 3.0, 4, &gauss_legendre(8));
        let got: f64 = nodes.iter().map(|(t, w)| w * t.exp()).sum();
        assert!((got - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
