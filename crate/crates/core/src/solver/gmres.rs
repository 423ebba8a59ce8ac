//! Restarted GMRES with right preconditioning, on plain coefficient vectors.

pub(crate) struct GmresOutcome {
    pub x: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` as `A M⁻¹ y = b`, `x = M⁻¹ y`, starting from zero.
pub(crate) fn gmres<A, M>(apply: A, precond: M, b: &[f64], tol: f64, restart: usize, max_iters: usize) -> GmresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
    M: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return GmresOutcome { x, relative_residual: 0.0, iterations: 0 };
    }
    let mut total = 0;
    let mut rel = 1.0;
    while total < max_iters {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= tol {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && total < max_iters {
            let mut w = apply(&precond(&v[k]));
            // modified Gram–Schmidt
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                h[i][k] = hij;
                w.iter_mut().zip(vi).for_each(|(a, b)| *a -= hij * b);
            }
            let wn = norm(&w);
            h[k + 1][k] = wn;
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            cs[k] = h[k][k] / d;
            sn[k] = h[k + 1][k] / d;
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() / bnorm <= tol || wn == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / wn).collect());
        }
        // back substitution for y, then x += M⁻¹ V y
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            update.iter_mut().zip(vi).for_each(|(u, b)| *u += yi * b);
        }
        let dx = precond(&update);
        x.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);
        rel = g[k].abs() / bnorm;
        if rel <= tol {
            let ax = apply(&x);
            rel = norm(&b.iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()) / bnorm;
            if rel <= tol * 10.0 {
                break;
            }
        }
    }
    GmresOutcome { x, relative_residual: rel, iterations: total }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_nonsymmetric_system() {
        let a = [[4.0, 1.0, 0.0], [2.0, 5.0, 1.0], [0.0, -1.0, 3.0]];
        let apply = |x: &[f64]| (0..3).map(|i| (0..3).map(|j| a[i][j] * x[j]).sum()).collect();
        let precond = |x: &[f64]| x.iter().enumerate().map(|(i, v)| v / a[i][i]).collect();
        let b = [1.0, -2.0, 0.5];
        let out = gmres(apply, precond, &b, 1e-13, 2, 50);
        let ax: Vec<f64> = (0..3).map(|i| (0..3).map(|j| a[i][j] * out.x[j]).sum()).collect();
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-11);
        }
    }
}
