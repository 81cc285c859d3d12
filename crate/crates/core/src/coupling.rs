//! Transfer between the background spline field and the PD nodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::{BasisEval, ControlPointField, SplineSpace2D, LOCAL_2D};

/// How the solid is tied to the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coupling {
    /// PD kinematics interpolated from the background; PD residual distributed back.
    Strong,
    /// Independent solid velocities tied by a volumetric velocity penalty.
    Weak(PenaltyConfig),
    /// No interaction (solid in vacuum next to an independent fluid).
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub beta: f64,
    /// Scale the penalty by `1 − d` so failed material stops being dragged.
    pub damage_scaling: bool,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            damage_scaling: false,
        }
    }
}

/// `C_pen = β E Δt / h²`, times `(1 − d)` with damage scaling, in Pa·s/m².
pub fn penalty_coefficient(youngs: f64, damage: f64, h: f64, dt: f64, config: &PenaltyConfig) -> f64 {
    let base = config.beta * youngs * dt / (h * h);
    if config.damage_scaling {
        base * (1.0 - damage.clamp(0.0, 1.0))
    } else {
        base
    }
}

/// Background basis rows at the current PD positions.
#[derive(Debug, Clone)]
pub struct InterpolationOperator {
    pub rows: Vec<BasisEval>,
}

impl InterpolationOperator {
    /// Errors with the first node found outside the background.
    pub fn build(space: &SplineSpace2D, positions: &[[f64; 2]], time: f64) -> Result<Self> {
        let rows: Vec<Result<BasisEval>> = positions.par_iter().map(|&x| space.eval_basis(x)).collect();
        let mut out = Vec::with_capacity(rows.len());
        for (node, row) in rows.into_iter().enumerate() {
            match row {
                Ok(r) => out.push(r),
                Err(_) => {
                    let [x, y] = positions[node];
                    return Err(Error::SolidEscaped { node, x, y, time });
                }
            }
        }
        Ok(Self { rows: out })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Velocity (slots 1–2) of the background field at every node.
    pub fn velocity(&self, field: &ControlPointField<4>) -> Vec<[f64; 2]> {
        self.rows
            .iter()
            .map(|row| {
                let v = field.value_at(row);
                [v[1], v[2]]
            })
            .collect()
    }

    /// Velocity and its spatial gradient `∂vᵢ/∂xⱼ` at every node.
    pub fn velocity_and_gradient(&self, field: &ControlPointField<4>) -> Vec<([f64; 2], [[f64; 2]; 2])> {
        self.rows
            .iter()
            .map(|row| {
                let (v, g) = field.evaluate(row);
                ([v[1], v[2]], [g[1], g[2]])
            })
            .collect()
    }

    /// `Πᵀ`: spreads nodal forces (N) onto the momentum slots of the control points.
    pub fn distribute(&self, n_cp: usize, forces: &[[f64; 2]]) -> Vec<[f64; 4]> {
        let mut out = vec![[0.0; 4]; n_cp];
        self.distribute_into(forces, 1.0, &mut out);
        out
    }

    pub fn distribute_into(&self, forces: &[[f64; 2]], scale: f64, out: &mut [[f64; 4]]) {
        for (row, f) in self.rows.iter().zip(forces) {
            for a in 0..LOCAL_2D {
                let n = row.value[a] * scale;
                out[row.index[a]][1] += n * f[0];
                out[row.index[a]][2] += n * f[1];
            }
        }
    }

    /// `Σ_P N_A(x_P) s_P` for a nodal scalar, as a per-control-point vector.
    pub fn distribute_scalar(&self, n_cp: usize, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n_cp];
        for (row, s) in self.rows.iter().zip(values) {
            for a in 0..LOCAL_2D {
                out[row.index[a]] += row.value[a] * s;
            }
        }
        out
    }
}

/// Penalty forces of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingForces {
    /// Force on the momentum slots of each control point, N.
    pub background: Vec<[f64; 4]>,
    /// Force density on each PD node, N/m³.
    pub solid: Vec<[f64; 2]>,
    /// Penalty coefficient used at each node.
    pub coefficient: Vec<f64>,
    /// `Σ_P C Δv V_P`, the force the fluid exerts on the solid.
    pub total: [f64; 2],
    /// `Σ_P C |Δv|² V_P`.
    pub power: f64,
}

/// Nodal data the penalty needs.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyNode {
    pub velocity: [f64; 2],
    pub volume: f64,
    pub spacing: f64,
    pub damage: f64,
}

/// Evaluates the volumetric penalty between background velocity and PD velocities.
pub fn weak_couple_forces(
    interp: &InterpolationOperator,
    field: &ControlPointField<4>,
    nodes: &[PenaltyNode],
    youngs: f64,
    config: &PenaltyConfig,
    dt: f64,
) -> CouplingForces {
    let n_cp = field.len();
    let fluid_v = interp.velocity(field);
    let mut solid = Vec::with_capacity(nodes.len());
    let mut coefficient = Vec::with_capacity(nodes.len());
    let mut nodal = Vec::with_capacity(nodes.len());
    let mut total = [0.0; 2];
    let mut power = 0.0;
    for (node, vf) in nodes.iter().zip(&fluid_v) {
        let c = penalty_coefficient(youngs, node.damage, node.spacing, dt, config);
        let dv = [vf[0] - node.velocity[0], vf[1] - node.velocity[1]];
        let f = [c * dv[0], c * dv[1]];
        solid.push(f);
        coefficient.push(c);
        nodal.push([-f[0] * node.volume, -f[1] * node.volume]);
        total[0] += f[0] * node.volume;
        total[1] += f[1] * node.volume;
        power += c * (dv[0] * dv[0] + dv[1] * dv[1]) * node.volume;
    }
    CouplingForces {
        background: interp.distribute(n_cp, &nodal),
        solid,
        coefficient,
        total,
        power,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::Rect;

    #[test]
    fn penalty_coefficient_values() {
        let cfg = PenaltyConfig { beta: 1.0, damage_scaling: false };
        let c = penalty_coefficient(200e9, 0.0, 1e-3, 0.1e-6, &cfg);
        assert!((c - 2e10).abs() < 1e-3);
        let dmg = PenaltyConfig { damage_scaling: true, ..cfg };
        assert_eq!(penalty_coefficient(200e9, 1.0, 1e-3, 0.1e-6, &dmg), 0.0);
        let c2 = penalty_coefficient(200e9, 0.0, 2e-3, 0.1e-6, &cfg);
        assert!((c2 - c / 4.0).abs() < 1e-6);
    }

    #[test]
    fn single_node_penalty_by_hand() {
        let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 0.4, 0.4), 20, 20).unwrap();
        let interp = InterpolationOperator::build(&space, &[[0.123, 0.271]], 0.0).unwrap();
        let field = ControlPointField::constant(space.n_cp(), [1e5, 1.0, 0.0, 290.0]);
        let node = PenaltyNode { velocity: [0.0, 0.0], volume: 3.5e-9, spacing: 1e-3, damage: 0.0 };
        let out = weak_couple_forces(&interp, &field, &[node], 200e9, &PenaltyConfig::default(), 0.1e-6);
        assert!((out.solid[0][0] * 3.5e-9 - 70.0).abs() < 1e-9);
        let bg: f64 = out.background.iter().map(|f| f[1]).sum();
        assert!((bg + 70.0).abs() < 1e-9);
        assert!(out.power > 0.0);
    }

    #[test]
    fn escaped_node_is_reported() {
        let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 1.0, 1.0), 4, 4).unwrap();
        let err = InterpolationOperator::build(&space, &[[0.5, 0.5], [1.5, 0.5]], 2e-4).unwrap_err();
        assert!(matches!(err, Error::SolidEscaped { node: 1, .. }));
    }
}
