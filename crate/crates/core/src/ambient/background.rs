use std::f64::consts::PI;

use crate::quadrature::integrate;
use crate::{Error, Result};

const CHEB_NODES: usize = 48;

/// Exact Anti-de Sitter–Schwarzschild background
/// `g_m = (1 + s² − m/s)⁻¹ ds² + s² g₀ = dr² + ψ(r)² g₀`.
///
/// The radial coordinate is normalized so that `r − asinh(s) → 0` as
/// `s → ∞`, i.e. `r(s) = asinh(s) − δ(s)` with
/// `δ(s) = ∫_s^∞ [(1+u²−m/u)^{-1/2} − (1+u²)^{-1/2}] du ≥ 0`.
/// With this choice `ψ² = sinh² r + m/(3 sinh r) + O(e^{-3r})`.
#[derive(Debug, Clone)]
pub struct AdsSchwarzschild {
    mass: f64,
    horizon: f64,
    // δ(s) = t³ g(t), t = s_cut / s, tabulated as Chebyshev coefficients of g on [0, 1]
    s_cut: f64,
    cheb: Vec<f64>,
}

/// Positive root of `1 + s² − m/s`, i.e. of `s³ + s − m`; zero when `m = 0`.
pub fn horizon_radius(mass: f64) -> Result<f64> {
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(Error::Domain(format!("mass must be a nonnegative finite number, got {mass}")));
    }
    if mass == 0.0 {
        return Ok(0.0);
    }
    // s³ + s − m is increasing; bracket [0, max(1, m)] and polish with Newton
    let (mut lo, mut hi) = (0.0, mass.max(1.0));
    let f = |s: f64| s * s * s + s - mass;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..4 {
        s -= f(s) / (3.0 * s * s + 1.0);
    }
    Ok(s)
}

impl AdsSchwarzschild {
    pub fn new(mass: f64) -> Result<Self> {
        let horizon = horizon_radius(mass)?;
        let s_cut = 3.0 * horizon.max(1.0);
        let mut me = Self { mass, horizon, s_cut, cheb: Vec::new() };
        if mass > 0.0 {
            let n = CHEB_NODES;
            let mut values = Vec::with_capacity(n);
            for k in 0..n {
                // Chebyshev points of the first kind mapped to (0, 1)
                let x = ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos();
                let t = 0.5 * (x + 1.0);
                let s = s_cut / t;
                values.push(me.delta_direct(s)? / (t * t * t));
            }
            me.cheb = (0..n)
                .map(|j| {
                    let sum: f64 = (0..n)
                        .map(|k| values[k] * ((j * (2 * k + 1)) as f64 * PI / (2 * n) as f64).cos())
                        .sum();
                    sum * if j == 0 { 1.0 } else { 2.0 } / n as f64
                })
                .collect();
        }
        Ok(me)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Horizon coordinate `s₀`.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `lim_{s→∞} (r − ln 2s)`; zero under the chosen normalization.
    pub fn matching_constant(&self) -> f64 {
        0.0
    }

    fn integrand(&self, u: f64) -> f64 {
        let a = (1.0 + u * u - self.mass / u).max(0.0).sqrt();
        let b = (1.0 + u * u).sqrt();
        (self.mass / u) / (a * b * (a + b))
    }

    /// `δ(s)` by adaptive quadrature, valid for every `s ≥ s₀`.
    fn delta_direct(&self, s: f64) -> Result<f64> {
        if self.mass == 0.0 {
            return Ok(0.0);
        }
        let s0 = self.horizon;
        let big = (4.0 * s).max(4.0 * self.s_cut);
        // u = s₀ + v² removes the square-root singularity at the horizon
        let near = integrate(
            |v| {
                // u³ + u − m = (u − s₀)(u² + u s₀ + s₀² + 1), so a = v·√(k/u)
                let u = s0 + v * v;
                let k = ((u * u + u * s0 + s0 * s0 + 1.0) / u).sqrt();
                let a = v * k;
                let b = (1.0 + u * u).sqrt();
                2.0 * (self.mass / u) / (k * b * (a + b))
            },
            (s - s0).max(0.0).sqrt(),
            (big - s0).sqrt(),
            1e-17,
            1e-14,
        )?;
        // tail u = big / t, du = big / t² dt
        let tail = integrate(
            |t| {
                if t <= 0.0 {
                    0.0
                } else {
                    self.integrand(big / t) * big / (t * t)
                }
            },
            0.0,
            1.0,
            1e-19,
            1e-14,
        )?;
        Ok(near + tail)
    }

    fn delta(&self, s: f64) -> Result<f64> {
        if self.mass == 0.0 {
            return Ok(0.0);
        }
        if s >= self.s_cut {
            let t = self.s_cut / s;
            let x = 2.0 * t - 1.0;
            // Clenshaw
            let (mut b1, mut b2) = (0.0, 0.0);
            for &c in self.cheb.iter().skip(1).rev() {
                let b0 = 2.0 * x * b1 - b2 + c;
                b2 = b1;
                b1 = b0;
            }
            let g = x * b1 - b2 + self.cheb[0];
            return Ok(t * t * t * g);
        }
        self.delta_direct(s)
    }

    /// `ds/dr = √(1 + s² − m/s)`.
    pub fn lapse_inverse(&self, s: f64) -> f64 {
        ((s * s * s + s - self.mass) / s).max(0.0).sqrt()
    }

    pub fn r_of_s(&self, s: f64) -> Result<f64> {
        if !(s > self.horizon) || !s.is_finite() {
            return Err(Error::Domain(format!(
                "s = {s} is not above the horizon s₀ = {}",
                self.horizon
            )));
        }
        Ok(s.asinh() - self.delta(s)?)
    }

    /// Radial coordinate of the horizon, `r(s₀)`.
    pub fn horizon_r(&self) -> f64 {
        if self.mass == 0.0 {
            return 0.0;
        }
        self.horizon.asinh() - self.delta_direct(self.horizon).unwrap_or(0.0)
    }

    pub fn s_of_r(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::Domain(format!("r must be finite, got {r}")));
        }
        if self.mass == 0.0 {
            if r <= 0.0 {
                return Err(Error::Domain(format!("r = {r} must be positive")));
            }
            return Ok(r.sinh());
        }
        let r_h = self.horizon_r();
        if r <= r_h {
            return Err(Error::Domain(format!("r = {r} is not above the horizon image r₀ = {r_h}")));
        }
        let s0 = self.horizon;
        let mut s = r.sinh().max(s0 * (1.0 + 1e-3));
        for _ in 0..100 {
            let f = self.r_of_s(s)? - r;
            let step = f * self.lapse_inverse(s);
            let mut next = s - step;
            if !(next > s0) {
                next = 0.5 * (s + s0);
            }
            if (next - s).abs() <= 1e-15 * s {
                return Ok(next);
            }
            s = next;
        }
        let resid = self.r_of_s(s)? - r;
        if resid.abs() < 1e-12 * r.max(1.0) {
            return Ok(s);
        }
        Err(Error::Numeric(format!("s_of_r did not converge at r = {r} (residual {resid:e})")))
    }

    /// `s(r) − sinh r` without cancellation: since `asinh s = r + δ(s)`,
    /// it equals `2 cosh(r + δ/2) sinh(δ/2)`.
    pub fn sinh_excess(&self, r: f64) -> Result<f64> {
        let s = self.s_of_r(r)?;
        let d = self.delta(s)?;
        Ok(2.0 * (r + 0.5 * d).cosh() * (0.5 * d).sinh())
    }

    /// `[ψ, ψ', ψ'', ψ''']` at `r`, with `ψ = s(r)`.
    pub fn psi_jet(&self, r: f64) -> Result<[f64; 4]> {
        let s = self.s_of_r(r)?;
        Ok(self.psi_jet_at_s(s))
    }

    pub fn psi_jet_at_s(&self, s: f64) -> [f64; 4] {
        let m = self.mass;
        let p1 = self.lapse_inverse(s);
        let p2 = s + m / (2.0 * s * s);
        let p3 = p1 * (1.0 - m / (s * s * s));
        [s, p1, p2, p3]
    }

    /// Fourth derivative `ψ''''`, needed for derivatives of curvature.
    pub fn psi_fourth(&self, s: f64) -> f64 {
        let m = self.mass;
        let p1 = self.lapse_inverse(s);
        let p2 = s + m / (2.0 * s * s);
        p2 * (1.0 - m / (s * s * s)) + 3.0 * m * p1 * p1 / (s * s * s * s)
    }

    /// Mean curvature of the round sphere `{r = const}`: `2ψ'/ψ`.
    pub fn round_mean_curvature(&self, r: f64) -> Result<f64> {
        let [s, p1, ..] = self.psi_jet(r)?;
        Ok(2.0 * p1 / s)
    }

    /// Reference profile `2 coth r − m / sinh³ r`.
    pub fn reference_mean_curvature(&self, r: f64) -> f64 {
        2.0 / r.tanh() - self.mass / r.sinh().powi(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_tail_matches_direct_quadrature() {
        let b = AdsSchwarzschild::new(1.0).unwrap();
        for s in [3.0, 3.7, 10.0, 55.0, 1e3] {
            let a = b.delta(s).unwrap();
            let d = b.delta_direct(s).unwrap();
            assert!((a - d).abs() <= 1e-14 * d.abs().max(1e-300) + 1e-18, "s={s}: {a} vs {d}");
        }
    }

    #[test]
    fn delta_leading_order() {
        let b = AdsSchwarzschild::new(2.0).unwrap();
        let s = 1e4;
        let d = b.delta(s).unwrap();
        assert!((d * 6.0 * s * s * s / 2.0 - 1.0).abs() < 1e-6);
    }
}
