//! Compressible Navier–Stokes in pressure-primitive variables `Y = (p, v₁, v₂, T)`.
//!
//! Pointwise physics lives here; [`assembly`] integrates it over the
//! background spline space.

pub mod assembly;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assembly::{
    assemble_fluid_residual, assemble_at_points, AssemblyOptions, AssemblyStats, BoundaryCondition,
    EdgeConditions, FluidProblem, WeightedPoint,
};

/// Ideal gas with constant viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidMaterial {
    pub gamma: f64,
    /// Dynamic viscosity, kg/(m·s).
    pub mu: f64,
    pub prandtl: f64,
    /// Specific gas constant, J/(kg·K).
    pub r_gas: f64,
}

impl FluidMaterial {
    /// Air with `R` chosen so that 0.1 MPa at 290 K has unit density.
    pub fn air() -> Self {
        Self {
            gamma: 1.4,
            mu: 1.81e-5,
            prandtl: 0.72,
            r_gas: 344.83,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.gamma > 1.0 && self.mu >= 0.0 && self.prandtl > 0.0 && self.r_gas > 0.0;
        if ok && [self.gamma, self.mu, self.prandtl, self.r_gas].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid fluid material {self:?}")))
        }
    }

    pub fn cv(&self) -> f64 {
        self.r_gas / (self.gamma - 1.0)
    }

    pub fn cp(&self) -> f64 {
        self.gamma * self.cv()
    }

    /// Thermal conductivity `κ = c_p μ / Pr`.
    pub fn conductivity(&self) -> f64 {
        self.cp() * self.mu / self.prandtl
    }

    /// Ideal-gas density; errors on nonpositive `p` or `T`.
    pub fn density(&self, p: f64, t: f64) -> Result<f64> {
        if p > 0.0 && t > 0.0 {
            Ok(p / (self.r_gas * t))
        } else {
            Err(Error::Inadmissible { p, t })
        }
    }

    pub fn sound_speed(&self, t: f64) -> f64 {
        (self.gamma * self.r_gas * t.max(0.0)).sqrt()
    }

    /// Conservation variables `U = (ρ, ρv₁, ρv₂, ρE)`.
    pub fn conserved(&self, y: &[f64; 4]) -> [f64; 4] {
        let rho = y[0] / (self.r_gas * y[3]);
        let e_tot = self.cv() * y[3] + 0.5 * (y[1] * y[1] + y[2] * y[2]);
        [rho, rho * y[1], rho * y[2], rho * e_tot]
    }

    /// Advective flux `v_i U` in direction `i`.
    pub fn advective_flux(&self, y: &[f64; 4], i: usize) -> [f64; 4] {
        self.conserved(y).map(|u| u * y[1 + i])
    }

    /// Pressure flux `(0, p δ₁ᵢ, p δ₂ᵢ, p vᵢ)`.
    pub fn pressure_flux(&self, y: &[f64; 4], i: usize) -> [f64; 4] {
        let mut f = [0.0; 4];
        f[1 + i] = y[0];
        f[3] = y[0] * y[1 + i];
        f
    }

    /// Viscous stress (Stokes hypothesis) and Fourier heat flux from `Y` and `∇Y`.
    pub fn viscous_terms(&self, grad: &[[f64; 2]; 4]) -> ([[f64; 2]; 2], [f64; 2]) {
        let div = grad[1][0] + grad[2][1];
        let lambda = -2.0 / 3.0 * self.mu;
        let mut tau = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                tau[i][j] = self.mu * (grad[1 + i][j] + grad[1 + j][i]);
            }
            tau[i][i] += lambda * div;
        }
        let kappa = self.conductivity();
        (tau, [-kappa * grad[3][0], -kappa * grad[3][1]])
    }

    /// Diffusive flux `F^d_i = (0, τ₁ᵢ, τ₂ᵢ, τᵢⱼvⱼ − qᵢ)`.
    pub fn diffusive_flux(&self, y: &[f64; 4], grad: &[[f64; 2]; 4], i: usize) -> [f64; 4] {
        let (tau, q) = self.viscous_terms(grad);
        [0.0, tau[0][i], tau[1][i], tau[i][0] * y[1] + tau[i][1] * y[2] - q[i]]
    }

    /// `A0 = ∂U/∂Y` and the advective and full Euler Jacobians at `y`.
    pub fn jacobians(&self, y: &[f64; 4]) -> EulerJacobians {
        let (p, v1, v2, t) = (y[0], y[1], y[2], y[3]);
        let rho = p / (self.r_gas * t);
        let rho_p = rho / p;
        let rho_t = -rho / t;
        let cv = self.cv();
        let e_tot = cv * t + 0.5 * (v1 * v1 + v2 * v2);
        #[rustfmt::skip]
        let a0 = Matrix4::new(
            rho_p,         0.0,      0.0,      rho_t,
            rho_p * v1,    rho,      0.0,      rho_t * v1,
            rho_p * v2,    0.0,      rho,      rho_t * v2,
            rho_p * e_tot, rho * v1, rho * v2, rho_t * e_tot + rho * cv,
        );
        let u = Vector4::new(rho, rho * v1, rho * v2, rho * e_tot);
        let advective: [Matrix4<f64>; 2] = std::array::from_fn(|i| {
            let mut a = a0 * y[1 + i];
            for r in 0..4 {
                a[(r, 1 + i)] += u[r];
            }
            a
        });
        let full = std::array::from_fn(|i| {
            let mut a = advective[i];
            a[(1 + i, 0)] += 1.0;
            a[(3, 0)] += y[1 + i];
            a[(3, 1 + i)] += p;
            a
        });
        EulerJacobians { a0, advective, full }
    }

    /// Stabilization time scales `(τ_c, τ_m, τ_e)` for element length `h`.
    pub fn tau(&self, y: &[f64; 4], h: f64, dt: Option<f64>) -> [f64; 3] {
        let rho = y[0] / (self.r_gas * y[3]);
        let speed = (y[1] * y[1] + y[2] * y[2]).sqrt() + self.sound_speed(y[3]);
        let adv = (2.0 * speed / h).powi(2);
        let transient = dt.map_or(0.0, |dt| (2.0 / dt).powi(2));
        let nu_m = self.mu / rho;
        let nu_e = self.conductivity() / (rho * self.cp());
        let diff = |nu: f64| (4.0 * nu / (h * h)).powi(2);
        let combine = |d: f64| {
            let s = adv + transient + d;
            if s > 0.0 {
                1.0 / s.sqrt()
            } else {
                0.0
            }
        };
        [combine(0.0), combine(diff(nu_m)), combine(diff(nu_e))]
    }

    /// Residual-based discontinuity-capturing viscosity.
    ///
    /// `y_t_equiv = A0⁻¹ R` is the strong residual expressed as a rate of `Y`.
    pub fn dc_viscosity(&self, y: &[f64; 4], grad: &[[f64; 2]; 4], y_t_equiv: &[f64; 4], h: f64) -> f64 {
        let c = self.sound_speed(y[3]);
        let scale = [y[0].abs(), c, c, y[3].abs()];
        let mut r2 = 0.0;
        let mut g2 = 0.0;
        for k in 0..4 {
            let s = scale[k].max(f64::MIN_POSITIVE);
            r2 += (y_t_equiv[k] / s).powi(2);
            g2 += (grad[k][0] / s).powi(2) + (grad[k][1] / s).powi(2);
        }
        if r2 == 0.0 || g2 == 0.0 {
            return 0.0;
        }
        let speed = (y[1] * y[1] + y[2] * y[2]).sqrt() + c;
        let nu = DC_C1 * h * r2.sqrt() / g2.sqrt();
        nu.min(DC_C2 * h * speed)
    }
}

const DC_C1: f64 = 1.0;
const DC_C2: f64 = 0.5;

/// Jacobians in pressure-primitive variables.
#[derive(Debug, Clone, Copy)]
pub struct EulerJacobians {
    pub a0: Matrix4<f64>,
    /// `∂(vᵢ U)/∂Y`, the part kept in non-divergence form in the Galerkin term.
    pub advective: [Matrix4<f64>; 2],
    /// `∂(vᵢ U + F^p_i)/∂Y`, used in the strong residual.
    pub full: [Matrix4<f64>; 2],
}

/// Returns `y` with pressure and temperature raised to the floors, and whether clamping happened.
pub fn clamp_state(y: [f64; 4], p_floor: f64, t_floor: f64) -> ([f64; 4], bool) {
    let mut out = y;
    let mut clamped = false;
    if !(out[0] >= p_floor) {
        out[0] = p_floor;
        clamped = true;
    }
    if !(out[3] >= t_floor) {
        out[3] = t_floor;
        clamped = true;
    }
    (out, clamped)
}
