use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::legendre::{derivative_d, gauss_legendre, recurrence_a, recurrence_b, sectoral};
use crate::exec;
use crate::{Error, Result};

pub const MIN_BAND_LIMIT: usize = 2;
pub const MAX_BAND_LIMIT: usize = 512;

/// Which latitude profile a transform pairs with the ring Fourier modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    Value,
    DTheta,
}

/// Gauss–Legendre × equispaced-longitude product grid on the unit sphere
/// together with its spherical-harmonic transform plan.
///
/// Nodes are stored ring-major: node `j * n_lon + k` sits at colatitude
/// `θ_j` and longitude `φ_k = 2πk / n_lon`. Real harmonic coefficients are
/// indexed by `l² + l + m`.
pub struct SphereGrid {
    band_limit: usize,
    n_lon: usize,
    theta: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    gl_weights: Vec<f64>,
    node_weight_scale: f64,
    // triangular (m-major) recurrence tables
    tri_offset: Vec<usize>,
    rec_a: Vec<f64>,
    rec_b: Vec<f64>,
    rec_d: Vec<f64>,
    // P̄_m^m(cos θ_j), ring-major
    sectoral: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("band_limit", &self.band_limit)
            .field("n_lat", &self.n_lat())
            .field("n_lon", &self.n_lon)
            .finish()
    }
}

impl SphereGrid {
    pub fn new(band_limit: usize) -> Result<Arc<Self>> {
        if band_limit < MIN_BAND_LIMIT {
            return Err(Error::Config(format!(
                "band limit below minimum: L={band_limit} < {MIN_BAND_LIMIT}"
            )));
        }
        if band_limit > MAX_BAND_LIMIT {
            return Err(Error::Config(format!(
                "band limit above maximum: L={band_limit} > {MAX_BAND_LIMIT}"
            )));
        }
        let l_max = band_limit;
        let n_lat = l_max + 1;
        let n_lon = 2 * l_max + 2;
        let (theta, gl_weights) = gauss_legendre(n_lat);
        let cos_theta: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
        let sin_theta: Vec<f64> = theta.iter().map(|t| t.sin()).collect();

        let mut tri_offset = Vec::with_capacity(l_max + 2);
        let mut acc = 0;
        for m in 0..=l_max {
            tri_offset.push(acc);
            acc += l_max + 1 - m;
        }
        tri_offset.push(acc);
        let mut rec_a = vec![0.0; acc];
        let mut rec_b = vec![0.0; acc];
        let mut rec_d = vec![0.0; acc];
        for m in 0..=l_max {
            for l in m..=l_max {
                let idx = tri_offset[m] + l - m;
                if l > m {
                    rec_a[idx] = recurrence_a(l, m);
                    rec_b[idx] = recurrence_b(l, m);
                }
                rec_d[idx] = derivative_d(l, m);
            }
        }
        let mut sect = Vec::with_capacity(n_lat * (l_max + 1));
        for &s in &sin_theta {
            sect.extend(sectoral(l_max, s));
        }

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n_lon);
        let fft_inverse = planner.plan_fft_inverse(n_lon);

        Ok(Arc::new(Self {
            band_limit,
            n_lon,
            theta,
            cos_theta,
            sin_theta,
            gl_weights,
            node_weight_scale: 2.0 * PI / n_lon as f64,
            tri_offset,
            rec_a,
            rec_b,
            rec_d,
            sectoral: sect,
            fft_forward,
            fft_inverse,
        }))
    }

    /// Grid with band limit `ceil(L · factor)`, used for evaluating nonlinear
    /// expressions with reduced aliasing.
    pub fn padded(&self, factor: f64) -> Result<Arc<Self>> {
        if !(factor >= 1.0) {
            return Err(Error::Config(format!("padding factor must be >= 1, got {factor}")));
        }
        let l = ((self.band_limit as f64) * factor).ceil() as usize;
        SphereGrid::new(l.min(MAX_BAND_LIMIT))
    }

    pub fn band_limit(&self) -> usize {
        self.band_limit
    }
    pub fn n_lat(&self) -> usize {
        self.theta.len()
    }
    pub fn n_lon(&self) -> usize {
        self.n_lon
    }
    pub fn n_nodes(&self) -> usize {
        self.n_lat() * self.n_lon
    }
    pub fn n_coeffs(&self) -> usize {
        (self.band_limit + 1) * (self.band_limit + 1)
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn cos_theta(&self) -> &[f64] {
        &self.cos_theta
    }
    pub fn sin_theta(&self) -> &[f64] {
        &self.sin_theta
    }
    pub fn gl_weights(&self) -> &[f64] {
        &self.gl_weights
    }
    pub fn phi(&self, k: usize) -> f64 {
        self.node_weight_scale * k as f64
    }
    /// Longitude spacing `2π / n_lon`.
    pub fn longitude_spacing(&self) -> f64 {
        self.node_weight_scale
    }
    /// Quadrature weight of every node on ring `j`.
    pub fn node_weight(&self, j: usize) -> f64 {
        self.gl_weights[j] * self.node_weight_scale
    }
    /// `(θ, φ)` of node `idx`.
    pub fn node(&self, idx: usize) -> (f64, f64) {
        let (j, k) = (idx / self.n_lon, idx % self.n_lon);
        (self.theta[j], self.phi(k))
    }

    pub fn coeff_index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    /// `(l, m)` for every coefficient slot, in storage order.
    pub fn degrees_orders(&self) -> impl Iterator<Item = (usize, i64)> {
        let lmax = self.band_limit;
        (0..=lmax).flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
    }

    fn tri(&self, l: usize, m: usize) -> usize {
        self.tri_offset[m] + l - m
    }

    /// Per-ring Fourier integrals `∫ f cos(mφ) dφ` and `∫ f sin(mφ) dφ` for
    /// `m = 0..=L`, exact for ring data of trigonometric degree ≤ `n_lon - 1 - m`.
    fn ring_forward(&self, samples: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let lm = self.band_limit + 1;
        let n_lon = self.n_lon;
        let scale = self.node_weight_scale;
        let rows = exec::map_indexed(self.n_lat(), |j| {
            let mut buf: Vec<Complex<f64>> = samples[j * n_lon..(j + 1) * n_lon]
                .iter()
                .map(|&v| Complex::new(v, 0.0))
                .collect();
            self.fft_forward.process(&mut buf);
            let c: Vec<f64> = (0..lm).map(|m| scale * buf[m].re).collect();
            let s: Vec<f64> = (0..lm).map(|m| -scale * buf[m].im).collect();
            (c, s)
        });
        let mut cos_part = Vec::with_capacity(self.n_lat() * lm);
        let mut sin_part = Vec::with_capacity(self.n_lat() * lm);
        for (c, s) in rows {
            cos_part.extend(c);
            sin_part.extend(s);
        }
        (cos_part, sin_part)
    }

    /// Visits `(l, value)` for `l = m..=L` on ring `j` with the latitude
    /// profile selected by `kernel`.
    #[inline]
    fn for_each_profile<F: FnMut(usize, f64)>(&self, kernel: Kernel, m: usize, j: usize, mut visit: F) {
        let lmax = self.band_limit;
        let x = self.cos_theta[j];
        let s = self.sin_theta[j];
        let mut p = self.sectoral[j * (lmax + 1) + m];
        let mut p_prev = 0.0;
        for l in m..=lmax {
            let idx = self.tri(l, m);
            if l > m {
                let next = self.rec_a[idx] * (x * p - self.rec_b[idx] * p_prev);
                p_prev = p;
                p = next;
            }
            let v = match kernel {
                Kernel::Value => p,
                Kernel::DTheta => (l as f64 * x * p - self.rec_d[idx] * p_prev) / s,
            };
            visit(l, v);
        }
    }

    /// Quadrature of every harmonic (or its θ-derivative, for `DTheta`)
    /// against `samples`.
    pub(crate) fn analyze_kernel(&self, samples: &[f64], kernel: Kernel) -> Vec<f64> {
        debug_assert_eq!(samples.len(), self.n_nodes());
        let lmax = self.band_limit;
        let lm = lmax + 1;
        let (cos_part, sin_part) = self.ring_forward(samples);
        let inv_sqrt_pi = 1.0 / PI.sqrt();
        let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
        let per_order = exec::map_indexed(lm, |m| {
            let mut acc_c = vec![0.0; lm - m];
            let mut acc_s = vec![0.0; lm - m];
            for j in 0..self.n_lat() {
                let w = self.gl_weights[j];
                let c = w * cos_part[j * lm + m];
                let s = w * sin_part[j * lm + m];
                self.for_each_profile(kernel, m, j, |l, v| {
                    acc_c[l - m] += v * c;
                    acc_s[l - m] += v * s;
                });
            }
            (acc_c, acc_s)
        });
        let mut coeffs = vec![0.0; self.n_coeffs()];
        for (m, (acc_c, acc_s)) in per_order.into_iter().enumerate() {
            for l in m..=lmax {
                let base = l * l + l;
                if m == 0 {
                    coeffs[base] = acc_c[l] * inv_sqrt_2pi;
                } else {
                    coeffs[base + m] = acc_c[l - m] * inv_sqrt_pi;
                    coeffs[base - m] = acc_s[l - m] * inv_sqrt_pi;
                }
            }
        }
        coeffs
    }

    /// Evaluates `Σ a_lm K(Y_lm)` at every node.
    pub(crate) fn synthesize_kernel(&self, coeffs: &[f64], kernel: Kernel) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.n_coeffs());
        let lmax = self.band_limit;
        let lm = lmax + 1;
        let n_lat = self.n_lat();
        let per_order = exec::map_indexed(lm, |m| {
            let mut rings = Vec::with_capacity(n_lat);
            for j in 0..n_lat {
                let (mut gc, mut gs) = (0.0, 0.0);
                self.for_each_profile(kernel, m, j, |l, v| {
                    let base = l * l + l;
                    gc += coeffs[base + m] * v;
                    if m > 0 {
                        gs += coeffs[base - m] * v;
                    }
                });
                rings.push((gc, gs));
            }
            rings
        });
        let inv_sqrt_pi = 1.0 / PI.sqrt();
        let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
        let n_lon = self.n_lon;
        let mut out = vec![0.0; self.n_nodes()];
        exec::for_each_chunk_mut(&mut out, n_lon, |j, ring| {
            let mut buf = vec![Complex::new(0.0, 0.0); n_lon];
            buf[0] = Complex::new(per_order[0][j].0 * inv_sqrt_2pi, 0.0);
            for (m, order) in per_order.iter().enumerate().skip(1) {
                let (gc, gs) = order[j];
                buf[m] = Complex::new(gc * inv_sqrt_pi, -gs * inv_sqrt_pi);
            }
            self.fft_inverse.process(&mut buf);
            for (dst, z) in ring.iter_mut().zip(&buf) {
                *dst = z.re;
            }
        });
        out
    }

    /// Evaluates a coefficient vector at an arbitrary point.
    pub fn eval_point(&self, coeffs: &[f64], theta: f64, phi: f64) -> f64 {
        let lmax = self.band_limit;
        let (x, s) = (theta.cos(), theta.sin());
        let sect = sectoral(lmax, s);
        let mut total = 0.0;
        for (m, &pmm) in sect.iter().enumerate() {
            let (cm, sm) = ((m as f64 * phi).cos(), (m as f64 * phi).sin());
            let norm = if m == 0 { 1.0 / (2.0 * PI).sqrt() } else { 1.0 / PI.sqrt() };
            let mut p = pmm;
            let mut p_prev = 0.0;
            for l in m..=lmax {
                let idx = self.tri(l, m);
                if l > m {
                    let next = self.rec_a[idx] * (x * p - self.rec_b[idx] * p_prev);
                    p_prev = p;
                    p = next;
                }
                let base = l * l + l;
                if m == 0 {
                    total += coeffs[base] * p * norm;
                } else {
                    total += (coeffs[base + m] * cm + coeffs[base - m] * sm) * p * norm;
                }
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_follow_band_limit() {
        let g = SphereGrid::new(2).unwrap();
        assert_eq!((g.n_lat(), g.n_lon(), g.n_nodes()), (3, 6, 18));
        assert!(matches!(SphereGrid::new(1), Err(Error::Config(_))));
        assert!(matches!(SphereGrid::new(513), Err(Error::Config(_))));
    }

    #[test]
    fn weights_integrate_constants_to_four_pi() {
        let g = SphereGrid::new(16).unwrap();
        let total: f64 = g.gl_weights().iter().sum::<f64>() * g.longitude_spacing() * g.n_lon() as f64;
        assert!((total - 4.0 * PI).abs() < 1e-12);
        assert!(g.gl_weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn coeff_index_layout() {
        assert_eq!(SphereGrid::coeff_index(0, 0), 0);
        assert_eq!(SphereGrid::coeff_index(1, -1), 1);
        assert_eq!(SphereGrid::coeff_index(1, 1), 3);
        assert_eq!(SphereGrid::coeff_index(3, 2), 14);
        let g = SphereGrid::new(4).unwrap();
        for (i, (l, m)) in g.degrees_orders().enumerate() {
            assert_eq!(SphereGrid::coeff_index(l, m), i);
        }
    }
}
