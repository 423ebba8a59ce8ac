//! Fully normalized associated Legendre functions and Gauss–Legendre nodes.
//!
//! Normalization: `∫_{-1}^{1} P̄_l^m(x)² dx = 1`, no Condon–Shortley phase.
//! The real spherical harmonics built on top are
//!
//! ```text
//! Y_l0  = P̄_l^0(cos θ) / √(2π)
//! Y_lm  = P̄_l^m(cos θ) cos(mφ) / √π      m > 0
//! Y_l-m = P̄_l^m(cos θ) sin(mφ) / √π      m > 0
//! ```
//!
//! and are orthonormal on the unit sphere.

use std::f64::consts::PI;

/// Gauss–Legendre nodes as colatitudes `θ_j` (ascending) with weights for
/// `∫_{-1}^{1} f(x) dx`, `x = cos θ`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut theta = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut t = PI * (i as f64 + 0.75) / (nf + 0.5);
        for _ in 0..100 {
            let (p, p_prev) = legendre_pair(n, t.cos());
            let s = t.sin();
            // dP_n/dθ = -sin θ P_n'(x) = n (x P_n - P_{n-1}) / sin θ
            let dp = nf * (t.cos() * p - p_prev) / s;
            let step = p / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (x, s) = (t.cos(), t.sin());
        let (p, p_prev) = legendre_pair(n, x);
        let deriv = nf * (p_prev - x * p);
        weights.push(2.0 * s * s / (deriv * deriv));
        theta.push(t);
    }
    (theta, weights)
}

/// Unnormalized `(P_n(x), P_{n-1}(x))`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// Recurrence coefficients for fixed order `m`.
#[inline]
pub(crate) fn recurrence_a(l: usize, m: usize) -> f64 {
    let (l, m) = (l as f64, m as f64);
    ((4.0 * l * l - 1.0) / (l * l - m * m)).sqrt()
}

#[inline]
pub(crate) fn recurrence_b(l: usize, m: usize) -> f64 {
    let (lm1, m) = ((l - 1) as f64, m as f64);
    ((lm1 * lm1 - m * m) / (4.0 * lm1 * lm1 - 1.0)).sqrt()
}

/// Coefficient in `sin θ dP̄_l^m/dθ = l x P̄_l^m - d_lm P̄_{l-1}^m`.
#[inline]
pub(crate) fn derivative_d(l: usize, m: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    let (l, m) = (l as f64, m as f64);
    ((2.0 * l + 1.0) * (l * l - m * m) / (2.0 * l - 1.0)).sqrt()
}

/// `P̄_m^m(cos θ)` for `m = 0..=m_max`.
pub(crate) fn sectoral(m_max: usize, sin_theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m_max + 1);
    let mut p = (0.5f64).sqrt();
    out.push(p);
    for m in 1..=m_max {
        let mf = m as f64;
        p *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta;
        out.push(p);
    }
    out
}

/// `P̄_l^m(cos θ)` for a single `(l, m)`.
pub fn normalized_legendre(l: usize, m: usize, theta: f64) -> f64 {
    assert!(m <= l, "order exceeds degree");
    let (x, s) = (theta.cos(), theta.sin());
    let mut p = *sectoral(m, s).last().unwrap();
    let mut p_prev = 0.0;
    for k in (m + 1)..=l {
        let next = recurrence_a(k, m) * (x * p - recurrence_b(k, m) * p_prev);
        p_prev = p;
        p = next;
    }
    p
}

/// Real orthonormal spherical harmonic `Y_lm(θ, φ)`, `-l ≤ m ≤ l`.
pub fn real_sph_harm(l: usize, m: i64, theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs() as usize;
    let p = normalized_legendre(l, am, theta);
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => p / (2.0 * PI).sqrt(),
        std::cmp::Ordering::Greater => p * (am as f64 * phi).cos() / PI.sqrt(),
        std::cmp::Ordering::Less => p * (am as f64 * phi).sin() / PI.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        for n in [3, 17, 65, 200] {
            let (theta, w) = gauss_legendre(n);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13, "n={n} sum={sum}");
            let deg = 2 * n - 1;
            let v: f64 = theta.iter().zip(&w).map(|(t, w)| w * t.cos().powi(deg as i32 - 1)).sum();
            // deg-1 is even: ∫ x^(2n-2) = 2/(2n-1)
            assert!((v - 2.0 / deg as f64).abs() < 1e-13);
            assert!(theta.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let t: f64 = 0.7;
        let (x, s) = (t.cos(), t.sin());
        assert!((normalized_legendre(0, 0, t) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((normalized_legendre(1, 0, t) - 1.5f64.sqrt() * x).abs() < 1e-15);
        assert!((normalized_legendre(1, 1, t) - 0.75f64.sqrt() * s).abs() < 1e-15);
        let p20 = (5.0f64 / 2.0).sqrt() * 0.5 * (3.0 * x * x - 1.0);
        assert!((normalized_legendre(2, 0, t) - p20).abs() < 1e-15);
        // Y_10 = sqrt(3/4π) cos θ
        let y10 = real_sph_harm(1, 0, t, 0.3);
        assert!((y10 - (3.0 / (4.0 * PI)).sqrt() * x).abs() < 1e-15);
    }
}
