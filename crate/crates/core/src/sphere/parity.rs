//! Spectral θ-derivatives of ring-sampled data that is smooth across the
//! poles with a known reflection parity.
//!
//! A quantity `q(θ, φ)` extends to `θ ∈ (−π, π]` through
//! `q(−θ, φ) = p · q(θ, φ + π)`. Scalars have `p = +1`; chart components such
//! as `g(∂_θ, ∂_φ)` pick up one sign per `∂_θ` slot. Fourier mode `m` of such a
//! function then has θ-parity `p (−1)^m`, so it is a cosine series when even
//! and a sine series when odd. Collocating those series at the Gauss–Legendre
//! colatitudes gives derivative matrices that stay spectrally accurate even
//! for quantities that are not band-limited on the sphere.

use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::SphereGrid;
use crate::exec;

pub struct ParityDifferentiator {
    grid: Arc<SphereGrid>,
    // [even, odd] × [first, second]
    d1: [DMatrix<f64>; 2],
    d2: [DMatrix<f64>; 2],
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ParityDifferentiator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParityDifferentiator").field("band_limit", &self.grid.band_limit()).finish()
    }
}

/// θ- and φ-derivatives of a sampled quantity up to second order.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub d_theta2: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi2: Vec<f64>,
}

fn collocation(theta: &[f64], odd: bool) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = theta.len();
    let k_of = |c: usize| if odd { (c + 1) as f64 } else { c as f64 };
    let v = DMatrix::from_fn(n, n, |r, c| {
        let k = k_of(c);
        if odd { (k * theta[r]).sin() } else { (k * theta[r]).cos() }
    });
    let v1 = DMatrix::from_fn(n, n, |r, c| {
        let k = k_of(c);
        if odd { k * (k * theta[r]).cos() } else { -k * (k * theta[r]).sin() }
    });
    let v2 = DMatrix::from_fn(n, n, |r, c| {
        let k = k_of(c);
        if odd { -k * k * (k * theta[r]).sin() } else { -k * k * (k * theta[r]).cos() }
    });
    let inv = v.lu().try_inverse().expect("trigonometric collocation matrix is invertible");
    (v1 * &inv, v2 * &inv)
}

impl ParityDifferentiator {
    pub fn new(grid: &Arc<SphereGrid>) -> Self {
        let (e1, e2) = collocation(grid.theta(), false);
        let (o1, o2) = collocation(grid.theta(), true);
        let mut planner = FftPlanner::new();
        Self {
            grid: grid.clone(),
            d1: [e1, o1],
            d2: [e2, o2],
            fft: planner.plan_fft_forward(grid.n_lon()),
            ifft: planner.plan_fft_inverse(grid.n_lon()),
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    /// All first and second derivatives of `samples`, whose reflection
    /// parity is `parity` (±1).
    pub fn derivatives(&self, samples: &[f64], parity: i32) -> Derivatives {
        let n_lat = self.grid.n_lat();
        let n_lon = self.grid.n_lon();
        assert_eq!(samples.len(), n_lat * n_lon);
        // spectrum[j][m]
        let spectrum: Vec<Vec<Complex<f64>>> = exec::map_indexed(n_lat, |j| {
            let mut buf: Vec<Complex<f64>> =
                samples[j * n_lon..(j + 1) * n_lon].iter().map(|&v| Complex::new(v, 0.0)).collect();
            self.fft.process(&mut buf);
            buf
        });
        // signed wavenumber of FFT bin m; the Nyquist bin is treated as real cos(Nφ/2)
        let wavenumber = |m: usize| -> f64 {
            if 2 * m < n_lon {
                m as f64
            } else if 2 * m == n_lon {
                0.0
            } else {
                m as f64 - n_lon as f64
            }
        };
        let per_mode: Vec<[Vec<Complex<f64>>; 2]> = exec::map_indexed(n_lon, |m| {
            let odd_mode = (m % 2 == 1) != (parity < 0);
            let which = usize::from(odd_mode);
            let col: Vec<Complex<f64>> = (0..n_lat).map(|j| spectrum[j][m]).collect();
            let apply = |d: &DMatrix<f64>| -> Vec<Complex<f64>> {
                (0..n_lat)
                    .map(|r| {
                        let mut acc = Complex::new(0.0, 0.0);
                        for (c, z) in col.iter().enumerate() {
                            acc += z * d[(r, c)];
                        }
                        acc
                    })
                    .collect()
            };
            [apply(&self.d1[which]), apply(&self.d2[which])]
        });
        let nyq = n_lon / 2;
        let inv_n = 1.0 / n_lon as f64;
        let i = Complex::new(0.0, 1.0);
        let rings: Vec<[Vec<f64>; 5]> = exec::map_indexed(n_lat, |j| {
            let mut out: [Vec<f64>; 5] = Default::default();
            let build = |f: &dyn Fn(usize) -> Complex<f64>| -> Vec<f64> {
                let mut buf: Vec<Complex<f64>> = (0..n_lon).map(f).collect();
                self.ifft.process(&mut buf);
                buf.iter().map(|z| z.re * inv_n).collect()
            };
            out[0] = build(&|m| per_mode[m][0][j]);
            out[2] = build(&|m| per_mode[m][1][j]);
            out[1] = build(&|m| {
                let k = wavenumber(m);
                if m == nyq { Complex::new(0.0, 0.0) } else { spectrum[j][m] * i * k }
            });
            out[3] = build(&|m| {
                let k = wavenumber(m);
                if m == nyq { Complex::new(0.0, 0.0) } else { per_mode[m][0][j] * i * k }
            });
            out[4] = build(&|m| {
                let k = if m == nyq { nyq as f64 } else { wavenumber(m) };
                -spectrum[j][m] * k * k
            });
            out
        });
        let mut d = Derivatives {
            d_theta: Vec::with_capacity(samples.len()),
            d_phi: Vec::with_capacity(samples.len()),
            d_theta2: Vec::with_capacity(samples.len()),
            d_theta_phi: Vec::with_capacity(samples.len()),
            d_phi2: Vec::with_capacity(samples.len()),
        };
        for r in rings {
            let [a, b, c, e, f] = r;
            d.d_theta.extend(a);
            d.d_phi.extend(b);
            d.d_theta2.extend(c);
            d.d_theta_phi.extend(e);
            d.d_phi2.extend(f);
        }
        d
    }
}
