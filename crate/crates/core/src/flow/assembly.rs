//! Stabilized residual assembly over the background space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{clamp_state, FluidMaterial};
use crate::error::Result;
use crate::spline::{BasisEval, ControlPointField, QuadratureRule, SplineSpace2D, LOCAL_2D};

/// Condition on one edge of the background rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// `v·n = 0` imposed on the boundary control points, zero natural flux otherwise.
    SlipWall,
    /// Natural condition with a prescribed constant flux `H`.
    PrescribedFlux([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeConditions {
    pub left: BoundaryCondition,
    pub right: BoundaryCondition,
    pub bottom: BoundaryCondition,
    pub top: BoundaryCondition,
}

impl EdgeConditions {
    pub fn walls() -> Self {
        Self {
            left: BoundaryCondition::SlipWall,
            right: BoundaryCondition::SlipWall,
            bottom: BoundaryCondition::SlipWall,
            top: BoundaryCondition::SlipWall,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub supg: bool,
    pub dc: bool,
    /// Pressure below which quadrature-point states are clamped.
    pub p_floor: f64,
    pub t_floor: f64,
}

impl AssemblyOptions {
    /// Full stabilization with floors at `1e-6` of the ambient state.
    pub fn stabilized(p_ambient: f64, t_ambient: f64) -> Self {
        Self {
            supg: true,
            dc: true,
            p_floor: 1e-6 * p_ambient,
            t_floor: 1e-6 * t_ambient,
        }
    }

    pub fn galerkin(p_ambient: f64, t_ambient: f64) -> Self {
        Self {
            supg: false,
            dc: false,
            ..Self::stabilized(p_ambient, t_ambient)
        }
    }
}

/// Counters gathered during one assembly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AssemblyStats {
    pub clamped: usize,
    pub max_nu_dc: f64,
}

impl AssemblyStats {
    fn merge(&mut self, other: &AssemblyStats) {
        self.clamped += other.clamped;
        self.max_nu_dc = self.max_nu_dc.max(other.max_nu_dc);
    }
}

/// Everything needed to evaluate the background residual.
#[derive(Debug, Clone)]
pub struct FluidProblem {
    pub space: SplineSpace2D,
    pub quadrature: QuadratureRule,
    pub material: FluidMaterial,
    pub bcs: EdgeConditions,
    pub source: [f64; 4],
    pub options: AssemblyOptions,
    /// `∫ N_A dΩ` for every control point.
    pub lumped: Vec<f64>,
    constrained: Vec<[bool; 4]>,
}

impl FluidProblem {
    pub fn new(
        space: SplineSpace2D,
        material: FluidMaterial,
        bcs: EdgeConditions,
        options: AssemblyOptions,
    ) -> Result<Self> {
        material.validate()?;
        let quadrature = QuadratureRule::gauss3(&space);
        let lumped = crate::spline::lumped_mass(&space, &quadrature, |_| 1.0);
        let (nx, ny) = (space.n_x(), space.n_y());
        let slip = |bc: BoundaryCondition| bc == BoundaryCondition::SlipWall;
        let constrained = (0..space.n_cp())
            .map(|a| {
                let (i, j) = space.cp_ij(a);
                let fix_x = (i == 0 && slip(bcs.left)) || (i + 1 == nx && slip(bcs.right));
                let fix_y = (j == 0 && slip(bcs.bottom)) || (j + 1 == ny && slip(bcs.top));
                [false, fix_x, fix_y, false]
            })
            .collect();
        Ok(Self {
            space,
            quadrature,
            material,
            bcs,
            source: [0.0; 4],
            options,
            lumped,
            constrained,
        })
    }

    /// Components of control point `a` held fixed by slip walls.
    pub fn constrained(&self, a: usize) -> [bool; 4] {
        self.constrained[a]
    }

    /// Zeroes the constrained slots of a per-control-point vector.
    pub fn apply_constraints<const N: usize>(&self, values: &mut [[f64; N]]) {
        for (v, c) in values.iter_mut().zip(&self.constrained) {
            for k in 0..N.min(4) {
                if c[k] {
                    v[k] = 0.0;
                }
            }
        }
    }

    pub fn element_length(&self) -> f64 {
        self.space.element_length()
    }
}

/// Point with an integration weight, used for integrals over the immersed solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedPoint {
    pub x: [f64; 2],
    pub weight: f64,
}

/// Background residual with slip-wall slots zeroed.
pub fn assemble_fluid_residual(
    problem: &FluidProblem,
    y: &ControlPointField<4>,
    y_t: &ControlPointField<4>,
) -> (Vec<[f64; 4]>, AssemblyStats) {
    let (mut r, stats) = assemble_volume(problem, y, y_t);
    add_boundary_flux(problem, &mut r);
    problem.apply_constraints(&mut r);
    (r, stats)
}

/// Residual with no boundary treatment, used by the coupled drivers.
pub(crate) fn assemble_volume(
    problem: &FluidProblem,
    y: &ControlPointField<4>,
    y_t: &ControlPointField<4>,
) -> (Vec<[f64; 4]>, AssemblyStats) {
    let h = problem.element_length();
    let elements: Vec<(usize, usize)> = problem.quadrature.elements().collect();
    let locals: Vec<([usize; LOCAL_2D], [[f64; 4]; LOCAL_2D], AssemblyStats)> = elements
        .par_iter()
        .map(|&e| {
            let mut out = [[0.0; 4]; LOCAL_2D];
            let mut stats = AssemblyStats::default();
            let mut index = [0; LOCAL_2D];
            for qp in problem.quadrature.element_points(e) {
                index = qp.basis.index;
                point_residual(problem, h, y, y_t, &qp.basis, qp.weight, &mut out, &mut stats);
            }
            (index, out, stats)
        })
        .collect();
    let mut residual = vec![[0.0; 4]; problem.space.n_cp()];
    let mut stats = AssemblyStats::default();
    for (index, out, s) in &locals {
        for a in 0..LOCAL_2D {
            for k in 0..4 {
                residual[index[a]][k] += out[a][k];
            }
        }
        stats.merge(s);
    }
    (residual, stats)
}

/// Adds `scale ×` the fluid forms evaluated at weighted points (for example
/// PD nodes) to `residual`.
pub fn assemble_at_points(
    problem: &FluidProblem,
    y: &ControlPointField<4>,
    y_t: &ControlPointField<4>,
    points: &[WeightedPoint],
    scale: f64,
    residual: &mut [[f64; 4]],
) -> Result<AssemblyStats> {
    let h = problem.element_length();
    let locals: Vec<Result<(BasisEval, [[f64; 4]; LOCAL_2D], AssemblyStats)>> = points
        .par_iter()
        .map(|pt| {
            let basis = problem.space.eval_basis(pt.x)?;
            let mut out = [[0.0; 4]; LOCAL_2D];
            let mut stats = AssemblyStats::default();
            point_residual(problem, h, y, y_t, &basis, pt.weight * scale, &mut out, &mut stats);
            Ok((basis, out, stats))
        })
        .collect();
    let mut stats = AssemblyStats::default();
    for local in locals {
        let (basis, out, s) = local?;
        for a in 0..LOCAL_2D {
            for k in 0..4 {
                residual[basis.index[a]][k] += out[a][k];
            }
        }
        stats.merge(&s);
    }
    Ok(stats)
}

/// `−∫ N_A H dΓ` on edges carrying a prescribed flux.
pub(crate) fn add_boundary_flux(problem: &FluidProblem, residual: &mut [[f64; 4]]) {
    let space = &problem.space;
    let d = space.domain();
    let gauss = [
        (-0.774_596_669_241_483_4, 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        (0.774_596_669_241_483_4, 5.0 / 9.0),
    ];
    let edges = [
        (problem.bcs.left, false, d.x0),
        (problem.bcs.right, false, d.x1),
        (problem.bcs.bottom, true, d.y0),
        (problem.bcs.top, true, d.y1),
    ];
    for (bc, horizontal, fixed) in edges {
        let BoundaryCondition::PrescribedFlux(flux) = bc else {
            continue;
        };
        let kv = if horizontal { space.knots_x() } else { space.knots_y() };
        for e in 0..kv.n_elements() {
            let (a, b) = kv.element_bounds(e);
            for (xi, w) in gauss {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
                let x = if horizontal { [s, fixed] } else { [fixed, s] };
                let basis = space.eval_basis(x).expect("edge point inside the domain");
                let jw = 0.5 * (b - a) * w;
                for k in 0..LOCAL_2D {
                    let n = basis.value[k] * jw;
                    for c in 0..4 {
                        residual[basis.index[k]][c] -= n * flux[c];
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn point_residual(
    problem: &FluidProblem,
    h: f64,
    y_field: &ControlPointField<4>,
    yt_field: &ControlPointField<4>,
    basis: &BasisEval,
    weight: f64,
    out: &mut [[f64; 4]; LOCAL_2D],
    stats: &mut AssemblyStats,
) {
    let mat = &problem.material;
    let opts = &problem.options;
    let (y_raw, grad) = y_field.evaluate(basis);
    let y_t = yt_field.value_at(basis);
    let (y, clamped) = clamp_state(y_raw, opts.p_floor, opts.t_floor);
    if clamped {
        stats.clamped += 1;
    }
    let jac = mat.jacobians(&y);
    let yt = nalgebra::Vector4::from(y_t);
    let g = |i: usize| nalgebra::Vector4::new(grad[0][i], grad[1][i], grad[2][i], grad[3][i]);
    let (gx, gy) = (g(0), g(1));
    let source = nalgebra::Vector4::from(problem.source);

    let a0_yt = jac.a0 * yt;
    let galerkin = a0_yt + jac.advective[0] * gx + jac.advective[1] * gy - source;

    let mut c = [[0.0; 4]; 2];
    for (i, ci) in c.iter_mut().enumerate() {
        let fp = mat.pressure_flux(&y, i);
        let fd = mat.diffusive_flux(&y, &grad, i);
        for k in 0..4 {
            ci[k] = fd[k] - fp[k];
        }
    }

    if opts.supg || opts.dc {
        let hess = y_field.hessian_at(basis);
        let div_fd = diffusive_divergence(mat, &y, &grad, &hess);
        let strong = a0_yt + jac.full[0] * gx + jac.full[1] * gy - div_fd - source;
        if let Some(a0_inv) = jac.a0.try_inverse() {
            if opts.supg {
                // Weighting Âᵢᵀ∇W against τ A0⁻¹ R puts Âᵢ τ A0⁻¹ R on each equation.
                // The rate term stays out: its mass-like operator is not diagonal and the
                // lumped corrector amplifies its high modes regardless of the step size.
                let tau = mat.tau(&y, h, None);
                let rate = a0_inv * (strong - a0_yt);
                let tr = nalgebra::Vector4::new(tau[0] * rate[0], tau[1] * rate[1], tau[1] * rate[2], tau[2] * rate[3]);
                for (i, ci) in c.iter_mut().enumerate() {
                    let s = jac.full[i] * tr;
                    for k in 0..4 {
                        ci[k] += s[k];
                    }
                }
            }
            if opts.dc {
                let rate = a0_inv * strong;
                let nu = mat.dc_viscosity(&y, &grad, &[rate[0], rate[1], rate[2], rate[3]], h);
                stats.max_nu_dc = stats.max_nu_dc.max(nu);
                if nu > 0.0 {
                    let dx = jac.a0 * gx * nu;
                    let dy = jac.a0 * gy * nu;
                    for k in 0..4 {
                        c[0][k] += dx[k];
                        c[1][k] += dy[k];
                    }
                }
            }
        }
    }

    for a in 0..LOCAL_2D {
        let n = basis.value[a] * weight;
        let nx = basis.grad[a][0] * weight;
        let ny = basis.grad[a][1] * weight;
        for k in 0..4 {
            out[a][k] += n * galerkin[k] + nx * c[0][k] + ny * c[1][k];
        }
    }
}

/// `Σᵢ ∂F^d_i/∂xᵢ` for constant viscosity and conductivity.
fn diffusive_divergence(
    mat: &FluidMaterial,
    y: &[f64; 4],
    grad: &[[f64; 2]; 4],
    hess: &[[f64; 3]; 4],
) -> nalgebra::Vector4<f64> {
    if mat.mu == 0.0 {
        return nalgebra::Vector4::zeros();
    }
    let mu = mat.mu;
    let ddiv = [hess[1][0] + hess[2][1], hess[1][1] + hess[2][2]];
    let div_tau = [
        mu * (hess[1][0] + hess[1][2]) + mu / 3.0 * ddiv[0],
        mu * (hess[2][0] + hess[2][2]) + mu / 3.0 * ddiv[1],
    ];
    let (tau, _) = mat.viscous_terms(grad);
    let mut work = div_tau[0] * y[1] + div_tau[1] * y[2];
    for i in 0..2 {
        for j in 0..2 {
            work += tau[i][j] * grad[1 + j][i];
        }
    }
    let heat = mat.conductivity() * (hess[3][0] + hess[3][2]);
    nalgebra::Vector4::new(0.0, div_tau[0], div_tau[1], work + heat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::Rect;

    fn problem(n: usize, options: AssemblyOptions) -> FluidProblem {
        let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 0.4, 0.4), n, n).unwrap();
        FluidProblem::new(space, FluidMaterial::air(), EdgeConditions::walls(), options).unwrap()
    }

    #[test]
    fn ambient_state_has_zero_residual() {
        for n in [3, 8, 17] {
            let p = problem(n, AssemblyOptions::stabilized(1e5, 290.0));
            let y = ControlPointField::constant(p.space.n_cp(), [1e5, 0.0, 0.0, 290.0]);
            let yt = ControlPointField::zeros(p.space.n_cp());
            let (r, stats) = assemble_fluid_residual(&p, &y, &yt);
            let scale = 1e5 * 0.4;
            let max = r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(max / scale < 1e-9, "n={n}: {max}");
            assert_eq!(stats.clamped, 0);
        }
    }

    #[test]
    fn galerkin_residual_conserves_mass_momentum_energy() {
        // Inviscid, so that no heat flux or tangential shear work crosses the walls.
        let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 0.4, 0.4), 6, 6).unwrap();
        let material = FluidMaterial { mu: 0.0, ..FluidMaterial::air() };
        let p = FluidProblem::new(space, material, EdgeConditions::walls(), AssemblyOptions::stabilized(1e5, 290.0)).unwrap();
        let mut y = ControlPointField::<4>::zeros(p.space.n_cp());
        for (a, v) in y.values.iter_mut().enumerate() {
            let x = p.space.greville(a);
            *v = [1e5 * (1.0 + 0.3 * (9.0 * x[0]).sin()), 30.0 * (7.0 * x[1]).cos(), 20.0 * (5.0 * x[0]).sin(), 290.0 + 40.0 * x[1]];
        }
        p.apply_constraints(&mut y.values);
        let yt = ControlPointField::zeros(p.space.n_cp());
        let (r, _) = assemble_volume(&p, &y, &yt);
        // Test function = 1 in mass and energy: only boundary normal fluxes survive,
        // and those vanish because v·n = 0 on the walls. The advective term is in
        // quasi-linear form, so this holds up to quadrature error.
        let mass: f64 = r.iter().map(|v| v[0]).sum();
        let energy: f64 = r.iter().map(|v| v[3]).sum();
        let scale: f64 = r.iter().map(|v| v[0].abs()).sum::<f64>().max(1e-30);
        let escale: f64 = r.iter().map(|v| v[3].abs()).sum::<f64>().max(1e-30);
        assert!(mass.abs() / scale < 1e-7, "{mass} vs {scale}");
        assert!(energy.abs() / escale < 1e-7, "{energy} vs {escale}");
    }

    #[test]
    fn prescribed_flux_enters_with_negative_sign() {
        let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 1.0, 1.0), 4, 4).unwrap();
        let mut bcs = EdgeConditions::walls();
        bcs.top = BoundaryCondition::PrescribedFlux([2.0, 0.0, 0.0, 0.0]);
        let p = FluidProblem::new(space, FluidMaterial::air(), bcs, AssemblyOptions::galerkin(1.0, 1.0)).unwrap();
        let mut r = vec![[0.0; 4]; p.space.n_cp()];
        add_boundary_flux(&p, &mut r);
        let total: f64 = r.iter().map(|v| v[0]).sum();
        assert!((total + 2.0).abs() < 1e-12);
    }
}
