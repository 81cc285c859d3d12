//! Reproducing-kernel gradient weights on arbitrary neighbor sets.

use nalgebra::{DMatrix, SMatrix, SVector};

/// Polynomial order reproduced by a set of weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Consistency {
    Linear,
    Quadratic,
}

/// Moment matrices with reciprocal condition below this are treated as singular.
const MIN_RCOND: f64 = 1e-10;

/// Cubic B-spline window on `[0, 1]`.
fn cubic_window(r: f64) -> f64 {
    let r = r.abs();
    if r <= 0.5 {
        2.0 / 3.0 - 4.0 * r * r + 4.0 * r * r * r
    } else if r < 1.0 {
        4.0 / 3.0 * (1.0 - r).powi(3)
    } else {
        0.0
    }
}

/// Tensor-product cubic kernel with rectangular support of half-width `delta`.
pub fn kernel(xi: [f64; 2], delta: f64) -> f64 {
    cubic_window(xi[0] / delta) * cubic_window(xi[1] / delta)
}

/// Gradient weights `Φ_R V_R` for the points `xi[k] = X_R − X_P` with volumes `vol[k]`.
///
/// With these weights `Σ_R w_R (f(X_R) − f(X_P)) ≈ ∇f(X_P)`, exact for
/// polynomials up to the requested order. Returns `None` when the moment
/// matrix is too poorly conditioned.
pub fn gradient_weights(
    xi: &[[f64; 2]],
    vol: &[f64],
    delta: f64,
    order: Consistency,
) -> Option<Vec<[f64; 2]>> {
    match order {
        Consistency::Quadratic => weights_for::<5>(xi, vol, delta, quadratic_basis),
        Consistency::Linear => weights_for::<2>(xi, vol, delta, linear_basis),
    }
}

fn linear_basis(s: [f64; 2]) -> SVector<f64, 2> {
    SVector::<f64, 2>::new(s[0], s[1])
}

fn quadratic_basis(s: [f64; 2]) -> SVector<f64, 5> {
    SVector::<f64, 5>::from([s[0], s[1], s[0] * s[0], s[0] * s[1], s[1] * s[1]])
}

fn weights_for<const M: usize>(
    xi: &[[f64; 2]],
    vol: &[f64],
    delta: f64,
    basis: fn([f64; 2]) -> SVector<f64, M>,
) -> Option<Vec<[f64; 2]>> {
    if xi.len() < M {
        return None;
    }
    let mut moment = SMatrix::<f64, M, M>::zeros();
    let mut cache = Vec::with_capacity(xi.len());
    for (x, &v) in xi.iter().zip(vol) {
        let s = [x[0] / delta, x[1] / delta];
        let p = basis(s);
        let w = kernel(*x, delta) * v;
        moment += p * p.transpose() * w;
        cache.push((p, w));
    }
    let eig = DMatrix::from_iterator(M, M, moment.iter().copied()).symmetric_eigenvalues();
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e.abs())));
    if !(hi > 0.0) || !(lo / hi > MIN_RCOND) {
        return None;
    }
    let inv = moment.cholesky()?.inverse();
    // Only the two rows that map onto the first-derivative functionals are needed.
    let rows = [inv.row(0).transpose() / delta, inv.row(1).transpose() / delta];
    Some(
        cache
            .iter()
            .map(|(p, w)| [rows[0].dot(p) * w, rows[1].dot(p) * w])
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(h: f64, delta: f64) -> (Vec<[f64; 2]>, Vec<f64>) {
        let mut xi = Vec::new();
        let n = (delta / h).ceil() as i32;
        for j in -n..=n {
            for i in -n..=n {
                let x = [i as f64 * h, j as f64 * h];
                let r2 = x[0] * x[0] + x[1] * x[1];
                if r2 > 0.0 && r2 <= delta * delta * (1.0 + 1e-12) {
                    xi.push(x);
                }
            }
        }
        let vol = vec![h * h; xi.len()];
        (xi, vol)
    }

    #[test]
    fn kernel_is_partition_shaped() {
        assert!((cubic_window(0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cubic_window(1.0), 0.0);
        assert!((cubic_window(0.5) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_gradients_are_exact() {
        let h = 0.01;
        let delta = 2.5 * h;
        let (xi, vol) = lattice(h, delta);
        assert_eq!(xi.len(), 20);
        let w = gradient_weights(&xi, &vol, delta, Consistency::Quadratic).unwrap();
        let center = [0.3, -0.2];
        let fs: [(fn([f64; 2]) -> f64, [f64; 2]); 4] = [
            (|x| 3.0 + 0.0 * x[0], [0.0, 0.0]),
            (|x| x[0], [1.0, 0.0]),
            (|x| x[0] * x[1], [-0.2, 0.3]),
            (|x| 2.0 * x[1] * x[1] - x[0] * x[0], [-0.6, -0.8]),
        ];
        for (f, grad) in fs {
            let mut g = [0.0; 2];
            for (x, wr) in xi.iter().zip(&w) {
                let d = f([center[0] + x[0], center[1] + x[1]]) - f(center);
                g[0] += wr[0] * d;
                g[1] += wr[1] * d;
            }
            assert!((g[0] - grad[0]).abs() < 1e-9 && (g[1] - grad[1]).abs() < 1e-9, "{g:?} vs {grad:?}");
        }
    }

    #[test]
    fn collinear_points_are_rejected() {
        let xi: Vec<[f64; 2]> = (1..8).map(|i| [i as f64 * 0.01, 0.0]).collect();
        let vol = vec![1e-4; xi.len()];
        assert!(gradient_weights(&xi, &vol, 0.1, Consistency::Linear).is_none());
        assert!(gradient_weights(&xi, &vol, 0.1, Consistency::Quadratic).is_none());
    }
}
