//! Small fixed-size helpers for chart-component tensor algebra.

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];
pub type Mat2 = [[f64; 2]; 2];

pub const ZERO3: Mat3 = [[0.0; 3]; 3];

pub fn det3(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn inverse3(a: &Mat3) -> Option<Mat3> {
    let det = det3(a);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let mut out = ZERO3;
    out[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) * inv;
    out[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) * inv;
    out[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) * inv;
    out[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) * inv;
    out[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) * inv;
    out[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) * inv;
    out[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) * inv;
    out[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) * inv;
    out[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) * inv;
    Some(out)
}

pub fn mat_vec3(a: &Mat3, v: &Vec3) -> Vec3 {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn bilinear3(u: &Vec3, a: &Mat3, v: &Vec3) -> f64 {
    let av = mat_vec3(a, v);
    u[0] * av[0] + u[1] * av[1] + u[2] * av[2]
}

/// Positive definiteness by leading principal minors.
pub fn is_positive_definite3(a: &Mat3) -> bool {
    a[0][0] > 0.0 && a[0][0] * a[1][1] - a[0][1] * a[1][0] > 0.0 && det3(a) > 0.0
}

pub fn det2(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn inverse2(a: &Mat2) -> Option<Mat2> {
    let det = det2(a);
    if det <= 0.0 || !det.is_finite() {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}
