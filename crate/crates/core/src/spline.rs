//! Tensor-product quadratic B-spline space on a rectangle.
//!
//! Knots are stored directly in physical coordinates, so parametric and
//! physical derivatives coincide. All rational weights are one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial degree of the background basis.
pub const DEGREE: usize = 2;
/// Active basis functions per direction on one element.
pub const LOCAL_1D: usize = DEGREE + 1;
/// Active basis functions per point in 2D.
pub const LOCAL_2D: usize = LOCAL_1D * LOCAL_1D;

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }
}

/// Open (clamped) knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// Values and first two derivatives of the `DEGREE + 1` functions active on a span.
#[derive(Debug, Clone, Copy, Default)]
pub struct Basis1D {
    /// Index of the first active function.
    pub first: usize,
    pub value: [f64; LOCAL_1D],
    pub d1: [f64; LOCAL_1D],
    pub d2: [f64; LOCAL_1D],
}

impl KnotVector {
    /// Validates and wraps a knot sequence.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree != DEGREE {
            return Err(Error::InvalidInput(format!(
                "only degree {DEGREE} is supported, got {degree}"
            )));
        }
        if knots.len() < 2 * (degree + 1) {
            return Err(Error::InvalidInput("too few knots".into()));
        }
        if knots.iter().any(|k| !k.is_finite()) || knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInput("knots must be finite and nondecreasing".into()));
        }
        let n = knots.len();
        let clamped = knots[..=degree].iter().all(|&k| k == knots[0])
            && knots[n - degree - 1..].iter().all(|&k| k == knots[n - 1]);
        if !clamped {
            return Err(Error::InvalidInput("knot vector must be open (clamped)".into()));
        }
        let interior = &knots[degree..n - degree];
        if interior.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("interior knots must be simple".into()));
        }
        Ok(Self { degree, knots })
    }

    /// Open uniform knot vector with `n_elements` spans over `[start, end]`.
    pub fn open_uniform(n_elements: usize, start: f64, end: f64) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::InvalidInput("element count must be positive".into()));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidInput(format!("degenerate interval [{start}, {end}]")));
        }
        let h = (end - start) / n_elements as f64;
        let mut knots = vec![start; DEGREE];
        knots.extend((0..=n_elements).map(|i| {
            if i == n_elements {
                end
            } else {
                start + h * i as f64
            }
        }));
        knots.extend(std::iter::repeat(end).take(DEGREE));
        Self::new(DEGREE, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn n_elements(&self) -> usize {
        self.knots.len() - 2 * self.degree - 1
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Bounds of element `e`.
    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        (self.knots[self.degree + e], self.knots[self.degree + e + 1])
    }

    /// Element containing `x`; points on an interior knot go to the lower element.
    pub fn find_element(&self, x: f64) -> Option<usize> {
        if !(x >= self.start() && x <= self.end()) {
            return None;
        }
        let nel = self.n_elements();
        let h = (self.end() - self.start()) / nel as f64;
        let mut e = (((x - self.start()) / h).floor().max(0.0) as usize).min(nel - 1);
        // Correct the arithmetic guess against the stored knots.
        while e > 0 && x <= self.element_bounds(e).0 {
            e -= 1;
        }
        while e + 1 < nel && x > self.element_bounds(e).1 {
            e += 1;
        }
        Some(e)
    }

    /// Greville abscissa of basis function `i`.
    pub fn greville(&self, i: usize) -> f64 {
        self.knots[i + 1..=i + self.degree].iter().sum::<f64>() / self.degree as f64
    }

    /// Basis values and derivatives on element `e` at `x` (Cox–de Boor with derivatives).
    pub fn eval_on_element(&self, e: usize, x: f64) -> Basis1D {
        const P: usize = DEGREE;
        let span = e + P;
        let u = &self.knots;
        let mut ndu = [[0.0; P + 1]; P + 1];
        let mut left = [0.0; P + 1];
        let mut right = [0.0; P + 1];
        ndu[0][0] = 1.0;
        for j in 1..=P {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = [[0.0; P + 1]; 3];
        for j in 0..=P {
            ders[0][j] = ndu[j][P];
        }
        let mut a = [[0.0; P + 1]; 2];
        for r in 0..=P as isize {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=2isize {
                let mut d = 0.0;
                let rk = r - k;
                let pk = P as isize - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk as usize];
                }
                let j1 = if rk >= -1 { 1 } else { -rk };
                let j2 = if r - 1 <= pk { k - 1 } else { P as isize - r };
                for j in j1..=j2 {
                    a[s2][j as usize] = (a[s1][j as usize] - a[s1][(j - 1) as usize])
                        / ndu[(pk + 1) as usize][(rk + j) as usize];
                    d += a[s2][j as usize] * ndu[(rk + j) as usize][pk as usize];
                }
                if r <= pk {
                    a[s2][k as usize] = -a[s1][(k - 1) as usize] / ndu[(pk + 1) as usize][r as usize];
                    d += a[s2][k as usize] * ndu[r as usize][pk as usize];
                }
                ders[k as usize][r as usize] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = P as f64;
        for k in 1..=2 {
            for j in 0..=P {
                ders[k][j] *= factor;
            }
            factor *= (P - k) as f64;
        }
        Basis1D {
            first: e,
            value: ders[0],
            d1: ders[1],
            d2: ders[2],
        }
    }
}

/// Basis functions active at one point, with physical gradients and Hessians.
#[derive(Debug, Clone, Copy)]
pub struct BasisEval {
    pub element: (usize, usize),
    pub index: [usize; LOCAL_2D],
    pub value: [f64; LOCAL_2D],
    pub grad: [[f64; 2]; LOCAL_2D],
    /// Second derivatives ordered (xx, xy, yy).
    pub hess: [[f64; 3]; LOCAL_2D],
}

impl BasisEval {
    fn tensor(element: (usize, usize), bx: &Basis1D, by: &Basis1D, n_x: usize) -> Self {
        let mut out = BasisEval {
            element,
            index: [0; LOCAL_2D],
            value: [0.0; LOCAL_2D],
            grad: [[0.0; 2]; LOCAL_2D],
            hess: [[0.0; 3]; LOCAL_2D],
        };
        for j in 0..LOCAL_1D {
            for i in 0..LOCAL_1D {
                let a = j * LOCAL_1D + i;
                out.index[a] = (by.first + j) * n_x + bx.first + i;
                out.value[a] = bx.value[i] * by.value[j];
                out.grad[a] = [bx.d1[i] * by.value[j], bx.value[i] * by.d1[j]];
                out.hess[a] = [
                    bx.d2[i] * by.value[j],
                    bx.d1[i] * by.d1[j],
                    bx.value[i] * by.d2[j],
                ];
            }
        }
        out
    }
}

/// Tensor-product quadratic B-spline space over a rectangle.
#[derive(Debug, Clone)]
pub struct SplineSpace2D {
    domain: Rect,
    kv_x: KnotVector,
    kv_y: KnotVector,
}

impl SplineSpace2D {
    /// Uniform open quadratic space with `nel_x × nel_y` elements.
    pub fn build_uniform(domain: Rect, nel_x: usize, nel_y: usize) -> Result<Self> {
        if nel_x < 2 || nel_y < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 elements per direction, got {nel_x} x {nel_y}"
            )));
        }
        if !(domain.area() > 0.0) || !domain.area().is_finite() {
            return Err(Error::InvalidInput("background domain has no area".into()));
        }
        Ok(Self {
            domain,
            kv_x: KnotVector::open_uniform(nel_x, domain.x0, domain.x1)?,
            kv_y: KnotVector::open_uniform(nel_y, domain.y0, domain.y1)?,
        })
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn knots_x(&self) -> &KnotVector {
        &self.kv_x
    }

    pub fn knots_y(&self) -> &KnotVector {
        &self.kv_y
    }

    pub fn n_x(&self) -> usize {
        self.kv_x.n_basis()
    }

    pub fn n_y(&self) -> usize {
        self.kv_y.n_basis()
    }

    pub fn n_cp(&self) -> usize {
        self.n_x() * self.n_y()
    }

    pub fn nel_x(&self) -> usize {
        self.kv_x.n_elements()
    }

    pub fn nel_y(&self) -> usize {
        self.kv_y.n_elements()
    }

    pub fn n_elements(&self) -> usize {
        self.nel_x() * self.nel_y()
    }

    pub fn element_size(&self) -> [f64; 2] {
        [
            self.domain.width() / self.nel_x() as f64,
            self.domain.height() / self.nel_y() as f64,
        ]
    }

    /// Characteristic element length used by stabilization and CFL estimates.
    pub fn element_length(&self) -> f64 {
        let [hx, hy] = self.element_size();
        hx.min(hy)
    }

    pub fn cp_index(&self, i: usize, j: usize) -> usize {
        j * self.n_x() + i
    }

    pub fn cp_ij(&self, a: usize) -> (usize, usize) {
        (a % self.n_x(), a / self.n_x())
    }

    /// Greville point of control point `a`.
    pub fn greville(&self, a: usize) -> [f64; 2] {
        let (i, j) = self.cp_ij(a);
        [self.kv_x.greville(i), self.kv_y.greville(j)]
    }

    /// Element containing `x`, ties toward the lower index.
    pub fn locate(&self, x: [f64; 2]) -> Result<(usize, usize)> {
        match (self.kv_x.find_element(x[0]), self.kv_y.find_element(x[1])) {
            (Some(ex), Some(ey)) => Ok((ex, ey)),
            _ => Err(Error::OutOfDomain { x: x[0], y: x[1] }),
        }
    }

    /// The nine active functions at `x`.
    pub fn eval_basis(&self, x: [f64; 2]) -> Result<BasisEval> {
        let (ex, ey) = self.locate(x)?;
        Ok(self.eval_on_element((ex, ey), x))
    }

    pub fn eval_on_element(&self, element: (usize, usize), x: [f64; 2]) -> BasisEval {
        let bx = self.kv_x.eval_on_element(element.0, x[0]);
        let by = self.kv_y.eval_on_element(element.1, x[1]);
        BasisEval::tensor(element, &bx, &by, self.n_x())
    }

    /// `Y(x) = Σ_B Y_B N_B(x)` and its gradient.
    pub fn interpolate<const N: usize>(
        &self,
        field: &ControlPointField<N>,
        x: [f64; 2],
    ) -> Result<([f64; N], [[f64; 2]; N])> {
        let basis = self.eval_basis(x)?;
        Ok(field.evaluate(&basis))
    }

    /// Whether control point `a` sits on the left/right or bottom/top edge.
    pub fn boundary_flags(&self, a: usize) -> (bool, bool) {
        let (i, j) = self.cp_ij(a);
        (i == 0 || i + 1 == self.n_x(), j == 0 || j + 1 == self.n_y())
    }
}

/// Control-point coefficients with `N` components per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointField<const N: usize> {
    pub values: Vec<[f64; N]>,
}

impl<const N: usize> ControlPointField<N> {
    pub fn zeros(n_cp: usize) -> Self {
        Self {
            values: vec![[0.0; N]; n_cp],
        }
    }

    pub fn constant(n_cp: usize, value: [f64; N]) -> Self {
        Self {
            values: vec![value; n_cp],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_finite())
    }

    /// Value and gradient given the active basis at a point.
    pub fn evaluate(&self, basis: &BasisEval) -> ([f64; N], [[f64; 2]; N]) {
        let mut val = [0.0; N];
        let mut grad = [[0.0; 2]; N];
        for a in 0..LOCAL_2D {
            let c = &self.values[basis.index[a]];
            let (n, g) = (basis.value[a], basis.grad[a]);
            for k in 0..N {
                val[k] += c[k] * n;
                grad[k][0] += c[k] * g[0];
                grad[k][1] += c[k] * g[1];
            }
        }
        (val, grad)
    }

    /// Value only.
    pub fn value_at(&self, basis: &BasisEval) -> [f64; N] {
        let mut val = [0.0; N];
        for a in 0..LOCAL_2D {
            let c = &self.values[basis.index[a]];
            for k in 0..N {
                val[k] += c[k] * basis.value[a];
            }
        }
        val
    }

    /// Second derivatives (xx, xy, yy) of each component.
    pub fn hessian_at(&self, basis: &BasisEval) -> [[f64; 3]; N] {
        let mut out = [[0.0; 3]; N];
        for a in 0..LOCAL_2D {
            let c = &self.values[basis.index[a]];
            let h = basis.hess[a];
            for k in 0..N {
                for m in 0..3 {
                    out[k][m] += c[k] * h[m];
                }
            }
        }
        out
    }
}

const GAUSS3_POINTS: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// One tabulated quadrature point of a 1D element.
#[derive(Debug, Clone, Copy)]
struct QuadPoint1D {
    x: f64,
    weight: f64,
    basis: Basis1D,
}

/// 3×3 Gauss–Legendre rule per background element, with tabulated basis.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    table_x: Vec<[QuadPoint1D; 3]>,
    table_y: Vec<[QuadPoint1D; 3]>,
    n_x: usize,
}

/// A quadrature point with its active basis.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub weight: f64,
    pub basis: BasisEval,
}

impl QuadratureRule {
    pub fn gauss3(space: &SplineSpace2D) -> Self {
        fn table(kv: &KnotVector) -> Vec<[QuadPoint1D; 3]> {
            (0..kv.n_elements())
                .map(|e| {
                    let (a, b) = kv.element_bounds(e);
                    let half = 0.5 * (b - a);
                    let mid = 0.5 * (a + b);
                    std::array::from_fn(|q| {
                        let x = mid + half * GAUSS3_POINTS[q];
                        QuadPoint1D {
                            x,
                            weight: half * GAUSS3_WEIGHTS[q],
                            basis: kv.eval_on_element(e, x),
                        }
                    })
                })
                .collect()
        }
        Self {
            table_x: table(space.knots_x()),
            table_y: table(space.knots_y()),
            n_x: space.n_x(),
        }
    }

    pub fn points_per_element(&self) -> usize {
        9
    }

    /// Parametric points and weights of element `(ex, ey)`.
    pub fn element_points(&self, element: (usize, usize)) -> impl Iterator<Item = QuadPoint> + '_ {
        let tx = &self.table_x[element.0];
        let ty = &self.table_y[element.1];
        (0..9).map(move |q| {
            let (qx, qy) = (&tx[q % 3], &ty[q / 3]);
            QuadPoint {
                x: [qx.x, qy.x],
                weight: qx.weight * qy.weight,
                basis: BasisEval::tensor(element, &qx.basis, &qy.basis, self.n_x),
            }
        })
    }

    pub fn elements(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.table_x.len();
        (0..self.table_y.len()).flat_map(move |ey| (0..nx).map(move |ex| (ex, ey)))
    }
}

/// Row-sum lumped mass of `∫ N_A N_B f dΩ`, i.e. `∫ N_A f dΩ`.
pub fn lumped_mass(
    space: &SplineSpace2D,
    quadrature: &QuadratureRule,
    integrand: impl Fn([f64; 2]) -> f64,
) -> Vec<f64> {
    let mut mass = vec![0.0; space.n_cp()];
    for element in quadrature.elements() {
        for qp in quadrature.element_points(element) {
            let f = integrand(qp.x) * qp.weight;
            for a in 0..LOCAL_2D {
                mass[qp.basis.index[a]] += qp.basis.value[a] * f;
            }
        }
    }
    mass
}

/// Lumped L2 projection `Y_A = ∫ N_A f / ∫ N_A`, integrated with
/// `subdivisions²` Gauss cells per element so discontinuous data is resolved.
///
/// The result is a convex combination of sampled values, so bounds are preserved.
pub fn project_lumped<const N: usize>(
    space: &SplineSpace2D,
    subdivisions: usize,
    f: impl Fn([f64; 2]) -> [f64; N],
) -> ControlPointField<N> {
    let sub = subdivisions.max(1);
    let mut num = vec![[0.0; N]; space.n_cp()];
    let mut den = vec![0.0; space.n_cp()];
    for ey in 0..space.nel_y() {
        let (ya, yb) = space.knots_y().element_bounds(ey);
        for ex in 0..space.nel_x() {
            let (xa, xb) = space.knots_x().element_bounds(ex);
            let (hx, hy) = ((xb - xa) / sub as f64, (yb - ya) / sub as f64);
            for sy in 0..sub {
                for sx in 0..sub {
                    for qy in 0..3 {
                        for qx in 0..3 {
                            let x = [
                                xa + hx * (sx as f64 + 0.5 * (1.0 + GAUSS3_POINTS[qx])),
                                ya + hy * (sy as f64 + 0.5 * (1.0 + GAUSS3_POINTS[qy])),
                            ];
                            let w = 0.25 * hx * hy * GAUSS3_WEIGHTS[qx] * GAUSS3_WEIGHTS[qy];
                            let basis = space.eval_on_element((ex, ey), x);
                            let val = f(x);
                            for a in 0..LOCAL_2D {
                                let nw = basis.value[a] * w;
                                let idx = basis.index[a];
                                den[idx] += nw;
                                for k in 0..N {
                                    num[idx][k] += nw * val[k];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    ControlPointField {
        values: num
            .into_iter()
            .zip(den)
            .map(|(n, d)| n.map(|v| v / d))
            .collect(),
    }
}

/// Consistent L2 projection (continuous least squares) solved by
/// Jacobi-preconditioned conjugate gradients.
pub fn project_l2<const N: usize>(
    space: &SplineSpace2D,
    quadrature: &QuadratureRule,
    f: impl Fn([f64; 2]) -> [f64; N],
) -> ControlPointField<N> {
    let n = space.n_cp();
    let mut rhs = vec![[0.0; N]; n];
    let mut points = Vec::with_capacity(space.n_elements() * 9);
    for element in quadrature.elements() {
        for qp in quadrature.element_points(element) {
            let val = f(qp.x);
            for a in 0..LOCAL_2D {
                for k in 0..N {
                    rhs[qp.basis.index[a]][k] += qp.basis.value[a] * qp.weight * val[k];
                }
            }
            points.push(qp);
        }
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for qp in &points {
            let mut s = 0.0;
            for a in 0..LOCAL_2D {
                s += qp.basis.value[a] * x[qp.basis.index[a]];
            }
            s *= qp.weight;
            for a in 0..LOCAL_2D {
                y[qp.basis.index[a]] += qp.basis.value[a] * s;
            }
        }
        y
    };
    let diag = lumped_mass(space, quadrature, |_| 1.0);
    let mut out = ControlPointField::<N>::zeros(n);
    for k in 0..N {
        let b: Vec<f64> = rhs.iter().map(|r| r[k]).collect();
        let x = conjugate_gradient(&apply, &diag, &b, 1e-14, 10 * n + 100);
        for (o, v) in out.values.iter_mut().zip(x) {
            o[k] = v;
        }
    }
    out
}

fn conjugate_gradient(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    precond_diag: &[f64],
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x: Vec<f64> = b.iter().zip(precond_diag).map(|(b, d)| b / d).collect();
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(precond_diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rel_tol * bnorm {
            break;
        }
        let ap = apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / precond_diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}
