//! Classical Ornstein–Uhlenbeck bath fields.
//!
//! Each component obeys `dB = −(B − μ)dt/τ + σ√(2/τ) dW` and is sampled with
//! the exact AR(1) update
//! `B_{k+1} = μ + (B_k − μ)e^{−dt/τ} + σ√(1 − e^{−2dt/τ}) ξ_k`.
//!
//! Realization `r` of an experiment with base seed `s` draws from
//! `ChaCha20Rng::seed_from_u64(s)` switched to stream `r`; the normals for
//! `B_x`, `B_y`, `B_z` are drawn interleaved, one triple per step.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub mu: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl OUParams {
    pub fn new(mu: f64, sigma: f64, tau: f64) -> Result<Self> {
        Self { mu, sigma, tau }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !self.mu.is_finite() || !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidNoise(format!("need finite mu and sigma >= 0, got {self:?}")));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidNoise(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// `B_0 ~ N(μ, σ²)`.
    #[default]
    Stationary,
    /// `B_0 = μ`.
    AtMean,
}

/// Three sampled bath components on a uniform grid `t_k = k·dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseTrajectory {
    dt: f64,
    components: [Vec<f64>; 3],
    seed: u64,
    stream: u64,
    params: OUParams,
}

impl NoiseTrajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn params(&self) -> OUParams {
        self.params
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn bx(&self) -> &[f64] {
        &self.components[0]
    }

    pub fn by(&self) -> &[f64] {
        &self.components[1]
    }

    pub fn bz(&self) -> &[f64] {
        &self.components[2]
    }

    pub fn sample(&self, k: usize) -> [f64; 3] {
        [self.components[0][k], self.components[1][k], self.components[2][k]]
    }

    /// Zero-order hold: the sample whose interval `[t_k, t_{k+1})` contains `t`.
    pub fn value_at(&self, t: f64) -> [f64; 3] {
        // The small offset keeps grid-aligned times from rounding down one cell.
        let k = ((t / self.dt) + 1e-9).floor().max(0.0) as usize;
        self.sample(k.min(self.len() - 1))
    }

    /// Writes `t,Bx,By,Bz` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,Bx,By,Bz")?;
        for k in 0..self.len() {
            let [x, y, z] = self.sample(k);
            writeln!(out, "{:e},{:e},{:e},{:e}", self.time(k), x, y, z)?;
        }
        Ok(())
    }
}

/// Trajectory over `[0, duration]` with spacing `dt`, stream 0 of `seed`.
pub fn ou_trajectory(params: OUParams, duration: f64, dt: f64, seed: u64) -> Result<NoiseTrajectory> {
    ou_realization(params, duration, dt, seed, 0, InitialCondition::Stationary)
}

/// Realization `stream` of the ensemble keyed by `seed`.
pub fn ou_realization(
    params: OUParams,
    duration: f64,
    dt: f64,
    seed: u64,
    stream: u64,
    initial: InitialCondition,
) -> Result<NoiseTrajectory> {
    let params = params.validated()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidNoise(format!("duration must be positive, got {duration}")));
    }
    if !(dt > 0.0 && dt <= duration) {
        return Err(Error::InvalidNoise(format!("need 0 < dt <= duration, got dt = {dt}")));
    }
    let steps = (duration / dt - 1e-9).ceil() as usize;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let decay = (-dt / params.tau).exp();
    let kick = params.sigma * (1.0 - decay * decay).sqrt();
    let mut current = [params.mu; 3];
    if initial == InitialCondition::Stationary {
        for c in current.iter_mut() {
            let xi: f64 = rng.sample(StandardNormal);
            *c += params.sigma * xi;
        }
    }
    let mut components: [Vec<f64>; 3] = std::array::from_fn(|_| Vec::with_capacity(steps + 1));
    for (comp, &c) in components.iter_mut().zip(&current) {
        comp.push(c);
    }
    for _ in 0..steps {
        for (comp, c) in components.iter_mut().zip(current.iter_mut()) {
            let xi: f64 = rng.sample(StandardNormal);
            *c = params.mu + (*c - params.mu) * decay + kick * xi;
            comp.push(*c);
        }
    }
    Ok(NoiseTrajectory { dt, components, seed, stream, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, var.sqrt())
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let (ma, sa) = mean_std(a);
        let (mb, sb) = mean_std(b);
        let n = a.len() as f64;
        a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / ((n - 1.0) * sa * sb)
    }

    #[test]
    fn zero_sigma_is_constant() {
        let p = OUParams::new(0.7, 0.0, 0.5).unwrap();
        let tr = ou_trajectory(p, 3.0, 0.01, 9).unwrap();
        assert!(tr.bx().iter().chain(tr.by()).chain(tr.bz()).all(|&v| v == 0.7));
        assert_eq!(tr.len(), 301);
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let p = OUParams::new(0.0, 2.0, 0.5).unwrap();
        let a = ou_trajectory(p, 2.0, 0.01, 42).unwrap();
        let b = ou_trajectory(p, 2.0, 0.01, 42).unwrap();
        assert_eq!(a, b);
        let c = ou_realization(p, 2.0, 0.01, 42, 1, InitialCondition::Stationary).unwrap();
        assert_ne!(a.bx(), c.bx());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(OUParams::new(0.0, -1.0, 0.5).is_err());
        assert!(OUParams::new(0.0, 1.0, 0.0).is_err());
        let p = OUParams::new(0.0, 1.0, 0.5).unwrap();
        assert!(ou_trajectory(p, 0.0, 0.01, 1).is_err());
        assert!(ou_trajectory(p, 1.0, 2.0, 1).is_err());
    }

    #[test]
    fn stationary_statistics() {
        let p = OUParams::new(0.0, 2.0, 0.5).unwrap();
        let dt = p.tau / 10.0;
        let tr = ou_trajectory(p, dt * 99_999.0, dt, 2024).unwrap();
        assert_eq!(tr.len(), 100_000);
        for comp in [tr.bx(), tr.by(), tr.bz()] {
            let (m, s) = mean_std(comp);
            assert!(m.abs() <= 0.05, "mean {m}");
            assert!((1.9..=2.1).contains(&s), "std {s}");
            let lag = 10;
            let r = correlation(&comp[..comp.len() - lag], &comp[lag..]);
            assert!((r - (-1f64).exp()).abs() <= 0.05, "autocorrelation {r}");
        }
        assert!(correlation(tr.bx(), tr.by()).abs() <= 0.05);
        assert!(correlation(tr.by(), tr.bz()).abs() <= 0.05);
        assert!(correlation(tr.bx(), tr.bz()).abs() <= 0.05);
    }

    #[test]
    fn marginal_variance_is_step_independent() {
        // Pool many short realizations started at the mean; the variance after
        // a fixed elapsed time must not depend on how finely it was sampled.
        let p = OUParams::new(0.0, 2.0, 0.5).unwrap();
        let elapsed = 0.4;
        let variance_at = |dt: f64| -> f64 {
            let mut pooled = Vec::with_capacity(3 * 40_000);
            for r in 0..40_000 {
                let tr = ou_realization(p, elapsed, dt, 77, r, InitialCondition::AtMean).unwrap();
                pooled.extend(tr.sample(tr.len() - 1));
            }
            let (_, s) = mean_std(&pooled);
            s * s
        };
        let exact = p.sigma.powi(2) * (1.0 - (-2.0 * elapsed / p.tau).exp());
        let coarse = variance_at(0.1);
        let fine = variance_at(0.01);
        assert!((coarse / fine - 1.0).abs() < 0.02, "{coarse} vs {fine}");
        assert!((fine / exact - 1.0).abs() < 0.02);
    }

    #[test]
    fn zero_order_hold_lookup() {
        let p = OUParams::new(0.0, 1.0, 0.5).unwrap();
        let tr = ou_trajectory(p, 1.0, 0.1, 3).unwrap();
        assert_eq!(tr.value_at(0.0), tr.sample(0));
        assert_eq!(tr.value_at(0.3), tr.sample(3));
        assert_eq!(tr.value_at(0.349), tr.sample(3));
        assert_eq!(tr.value_at(5.0), tr.sample(tr.len() - 1));
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,Bx,By,Bz\n"));
        assert_eq!(text.lines().count(), tr.len() + 1);
    }
}
