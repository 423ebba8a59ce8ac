use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::linalg::Mat3;
use crate::sphere::real_sph_harm;
use crate::{Error, Result};

/// Decay exponent of the built-in perturbations.
pub const DECAY_RATE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `ε e^{−5r} Y_lm(θ, φ)` times a fixed chart tensor.
    Harmonic,
}

/// Which chart tensor the harmonic profile multiplies. Components other than
/// `rr` and `conformal` are taken in the orthonormal frame of
/// `dr² + sinh²r g₀` and are therefore only smooth away from the poles unless
/// the profile vanishes there.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Rr,
    Conformal,
    RTheta,
    RPhi,
    ThetaTheta,
    ThetaPhi,
    PhiPhi,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Component::Rr,
        Component::Conformal,
        Component::RTheta,
        Component::RPhi,
        Component::ThetaTheta,
        Component::ThetaPhi,
        Component::PhiPhi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Rr => "rr",
            Component::Conformal => "conformal",
            Component::RTheta => "rtheta",
            Component::RPhi => "rphi",
            Component::ThetaTheta => "thetatheta",
            Component::ThetaPhi => "thetaphi",
            Component::PhiPhi => "phiphi",
        }
    }

    /// Frame tensor `E` in the orthonormal frame `(∂_r, e_θ, e_φ)`.
    fn frame_tensor(self) -> Mat3 {
        let mut e = [[0.0; 3]; 3];
        let mut set = |a: usize, b: usize| {
            e[a][b] = 1.0;
            e[b][a] = 1.0;
        };
        match self {
            Component::Rr => set(0, 0),
            Component::Conformal => {
                set(1, 1);
                set(2, 2);
            }
            Component::RTheta => set(0, 1),
            Component::RPhi => set(0, 2),
            Component::ThetaTheta => set(1, 1),
            Component::ThetaPhi => set(1, 2),
            Component::PhiPhi => set(2, 2),
        }
        e
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Component::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Component::ALL.iter().map(|c| c.name()).collect();
                Error::Config(format!("unknown perturbation component {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "harmonic" => Ok(Family::Harmonic),
            _ => Err(Error::Config(format!("unknown perturbation family {s:?}; expected harmonic"))),
        }
    }
}

/// User-facing description of a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub family: Family,
    pub l: usize,
    pub m: i64,
    pub component: Component,
    pub epsilon: f64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self { family: Family::Harmonic, l: 1, m: 0, component: Component::Rr, epsilon: 0.0 }
    }
}

/// Sampled evidence that `|Q|`, `|∇Q|`, `|∇²Q|` decay like `e^{−5r}`:
/// supremum over a sphere of frame norms multiplied by `e^{5r}`, per radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub radii: Vec<f64>,
    pub scaled_value: Vec<f64>,
    pub scaled_first: Vec<f64>,
    pub scaled_second: Vec<f64>,
}

impl DecayRecord {
    pub fn bound(&self) -> f64 {
        self.scaled_value
            .iter()
            .chain(&self.scaled_first)
            .chain(&self.scaled_second)
            .fold(0.0, |a: f64, &b| a.max(b))
    }
}

/// A decaying symmetric 2-tensor `Q` added to the background metric.
#[derive(Debug, Clone)]
pub struct Perturbation {
    spec: PerturbationSpec,
    frame: Mat3,
    decay: DecayRecord,
}

pub const WORKING_RANGE: (f64, f64) = (2.0, 12.0);

impl Perturbation {
    pub fn new(spec: PerturbationSpec) -> Result<Self> {
        if spec.m.unsigned_abs() as usize > spec.l {
            return Err(Error::Config(format!(
                "perturbation order |m| = {} exceeds degree l = {}",
                spec.m.unsigned_abs(),
                spec.l
            )));
        }
        if spec.l > 64 {
            return Err(Error::Config(format!("perturbation degree l = {} above 64", spec.l)));
        }
        if !spec.epsilon.is_finite() {
            return Err(Error::Config("perturbation amplitude must be finite".into()));
        }
        let mut p = Self {
            spec,
            frame: spec.component.frame_tensor(),
            decay: DecayRecord { radii: vec![], scaled_value: vec![], scaled_first: vec![], scaled_second: vec![] },
        };
        p.decay = p.sample_decay();
        let growth = p.decay.scaled_value.last().copied().unwrap_or(0.0)
            + p.decay.scaled_first.last().copied().unwrap_or(0.0)
            + p.decay.scaled_second.last().copied().unwrap_or(0.0);
        let start = p.decay.scaled_value[0] + p.decay.scaled_first[0] + p.decay.scaled_second[0];
        if growth > 10.0 * start + 1e-300 {
            return Err(Error::Validity(format!(
                "perturbation does not decay like e^(-5r): scaled size grows from {start:e} to {growth:e}"
            )));
        }
        Ok(p)
    }

    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }
    pub fn epsilon(&self) -> f64 {
        self.spec.epsilon
    }
    pub fn decay(&self) -> &DecayRecord {
        &self.decay
    }

    fn profile(&self, r: f64, theta: f64, phi: f64) -> f64 {
        self.spec.epsilon * (-DECAY_RATE * r).exp() * real_sph_harm(self.spec.l, self.spec.m, theta, phi)
    }

    /// Frame components of `Q` in the orthonormal frame of `dr² + sinh²r g₀`.
    pub fn frame_components(&self, r: f64, theta: f64, phi: f64) -> Mat3 {
        let f = self.profile(r, theta, phi);
        let mut q = self.frame;
        for row in &mut q {
            for v in row.iter_mut() {
                *v *= f;
            }
        }
        q
    }

    /// Chart components `Q_ab` in `(r, θ, φ)`.
    pub fn chart_components(&self, r: f64, theta: f64, phi: f64) -> Mat3 {
        let q = self.frame_components(r, theta, phi);
        let sh = r.sinh();
        let scale = [1.0, sh, sh * theta.sin()];
        let mut out = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                out[a][b] = q[a][b] * scale[a] * scale[b];
            }
        }
        out
    }

    fn sample_decay(&self) -> DecayRecord {
        let (r0, r1) = WORKING_RANGE;
        let radii: Vec<f64> = (0..=10).map(|i| r0 + (r1 - r0) * i as f64 / 10.0).collect();
        let angles: Vec<(f64, f64)> = (0..6)
            .flat_map(|i| (0..8).map(move |k| (0.2 + 2.7 * i as f64 / 5.0, 0.785 * k as f64)))
            .collect();
        let norm = |q: &Mat3| q.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let mut rec = DecayRecord { radii: radii.clone(), scaled_value: vec![], scaled_first: vec![], scaled_second: vec![] };
        for &r in &radii {
            let h = 1e-3;
            let sh = r.sinh();
            let (mut v0, mut v1, mut v2) = (0.0f64, 0.0f64, 0.0f64);
            for &(t, p) in &angles {
                let q = |dr: f64, dt: f64, dp: f64| self.frame_components(r + dr, t + dt, p + dp);
                let c = q(0.0, 0.0, 0.0);
                v0 = v0.max(norm(&c));
                // directional derivatives along the orthonormal frame
                let steps = [(h, 0.0, 0.0), (0.0, h / sh, 0.0), (0.0, 0.0, h / (sh * t.sin()))];
                let mut first = 0.0;
                let mut second = 0.0;
                for &(a, b, d) in &steps {
                    let plus = q(a, b, d);
                    let minus = q(-a, -b, -d);
                    let mut d1 = [[0.0; 3]; 3];
                    let mut d2 = [[0.0; 3]; 3];
                    for i in 0..3 {
                        for j in 0..3 {
                            d1[i][j] = (plus[i][j] - minus[i][j]) / (2.0 * h);
                            d2[i][j] = (plus[i][j] - 2.0 * c[i][j] + minus[i][j]) / (h * h);
                        }
                    }
                    first += norm(&d1).powi(2);
                    second += norm(&d2).powi(2);
                }
                v1 = v1.max(first.sqrt());
                v2 = v2.max(second.sqrt());
            }
            let e = (DECAY_RATE * r).exp();
            rec.scaled_value.push(v0 * e);
            rec.scaled_first.push(v1 * e);
            rec.scaled_second.push(v2 * e);
        }
        rec
    }
}
