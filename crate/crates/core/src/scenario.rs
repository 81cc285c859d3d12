//! Scenario definitions and their translation into a [`Simulation`].

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coupling::{Coupling, PenaltyConfig};
use crate::error::{Error, Result};
use crate::flow::{AssemblyOptions, EdgeConditions, FluidMaterial, FluidProblem};
use crate::integrator::GenAlpha;
use crate::pd::{Failure, GradientMode, PdNodes, PdSolid, Plasticity, SolidMaterial};
use crate::sim::{FluidPart, Simulation};
use crate::spline::{project_lumped, ControlPointField, Rect, SplineSpace2D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ChamberDetonation,
    DuctileSquare,
    BrittleCylinder,
    Custom,
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chamber" | "chamber_detonation" => Ok(Self::ChamberDetonation),
            "ductile" | "ductile_square" => Ok(Self::DuctileSquare),
            "brittle" | "brittle_cylinder" => Ok(Self::BrittleCylinder),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected chamber, ductile or brittle)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Coarse,
    Medium,
    Fine,
}

impl Level {
    fn pick<T: Copy>(self, values: [T; 3]) -> T {
        values[self as usize]
    }
}

impl FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(Self::Coarse),
            "medium" => Ok(Self::Medium),
            "fine" => Ok(Self::Fine),
            other => Err(Error::Config(format!("unknown level '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasPatch {
    pub pressure: f64,
    pub temperature: f64,
}

/// Hot high-pressure disk; centered on a wall it becomes a half-disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detonation {
    pub center: [f64; 2],
    pub radius: f64,
    pub state: GasPatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SolidGeometry {
    /// Cell-centered `nodes[0] × nodes[1]` grid.
    Rectangle { origin: [f64; 2], size: [f64; 2], nodes: [usize; 2] },
    /// Square frame with the given outer and inner side lengths.
    HollowSquare { center: [f64; 2], outer: f64, inner: f64, spacing: f64 },
    /// Rings of nodes, uniform in angle, with radial spacing `spacing`.
    Annulus { center: [f64; 2], inner_radius: f64, outer_radius: f64, spacing: f64 },
}

impl SolidGeometry {
    /// Material points with volumes `area × thickness`.
    pub fn nodes(&self, thickness: f64) -> Result<PdNodes> {
        match *self {
            SolidGeometry::Rectangle { origin, size, nodes } => {
                if nodes[0] == 0 || nodes[1] == 0 {
                    return Err(Error::Config("rectangle needs at least one node per direction".into()));
                }
                Ok(PdNodes::rectangle(origin, size, nodes[0], nodes[1], thickness))
            }
            SolidGeometry::HollowSquare { center, outer, inner, spacing } => {
                let n = (outer / spacing).round().max(1.0) as usize;
                let h = outer / n as f64;
                let full = PdNodes::rectangle([center[0] - 0.5 * outer, center[1] - 0.5 * outer], [outer, outer], n, n, thickness);
                let half = 0.5 * inner;
                let keep: Vec<usize> = (0..full.len())
                    .filter(|&p| {
                        let x = full.reference[p];
                        (x[0] - center[0]).abs() > half || (x[1] - center[1]).abs() > half
                    })
                    .collect();
                Ok(PdNodes {
                    reference: keep.iter().map(|&p| full.reference[p]).collect(),
                    volume: vec![h * h * thickness; keep.len()],
                    spacing: vec![h; keep.len()],
                })
            }
            SolidGeometry::Annulus { center, inner_radius, outer_radius, spacing } => {
                let rings = ((outer_radius - inner_radius) / spacing).round().max(1.0) as usize;
                let dr = (outer_radius - inner_radius) / rings as f64;
                let mut nodes = PdNodes { reference: Vec::new(), volume: Vec::new(), spacing: Vec::new() };
                for i in 0..rings {
                    let r = inner_radius + (i as f64 + 0.5) * dr;
                    let n_theta = (2.0 * PI * r / dr).round().max(3.0) as usize;
                    let dtheta = 2.0 * PI / n_theta as f64;
                    for k in 0..n_theta {
                        let t = (k as f64 + 0.5) * dtheta;
                        nodes.reference.push([center[0] + r * t.cos(), center[1] + r * t.sin()]);
                        nodes.volume.push(r * dr * dtheta * thickness);
                        nodes.spacing.push(dr.max(r * dtheta));
                    }
                }
                Ok(nodes)
            }
        }
    }

    fn bounding_box(&self) -> Rect {
        match *self {
            SolidGeometry::Rectangle { origin, size, .. } => Rect::new(origin[0], origin[1], origin[0] + size[0], origin[1] + size[1]),
            SolidGeometry::HollowSquare { center, outer, .. } => {
                Rect::new(center[0] - 0.5 * outer, center[1] - 0.5 * outer, center[0] + 0.5 * outer, center[1] + 0.5 * outer)
            }
            SolidGeometry::Annulus { center, outer_radius, .. } => Rect::new(
                center[0] - outer_radius,
                center[1] - outer_radius,
                center[0] + outer_radius,
                center[1] + outer_radius,
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSchedule {
    /// Times at which VTK snapshots are written, s.
    pub snapshots: Vec<f64>,
    /// CSV row cadence in steps.
    pub log_every: usize,
    /// Background samples per direction in VTK snapshots.
    pub lattice: usize,
}

/// Complete description of one run, in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub level: Level,
    pub domain: Rect,
    pub fluid_elements: [usize; 2],
    pub fluid: FluidMaterial,
    pub ambient: GasPatch,
    pub detonation: Detonation,
    pub solid: SolidGeometry,
    pub thickness: f64,
    pub material: SolidMaterial,
    /// Horizon as a multiple of the nodal spacing.
    pub horizon_factor: f64,
    pub gradient_mode: GradientMode,
    pub coupling: Coupling,
    /// Step used with strong coupling, s.
    pub dt_strong: f64,
    /// Weak-coupling steps are `dt_strong / weak_dt_divisor`.
    pub weak_dt_divisor: f64,
    pub end_time: f64,
    pub rho_inf: f64,
    pub passes: usize,
    /// Pressure probes: detonation center, then right-wall center.
    pub probes: [[f64; 2]; 2],
    pub output: OutputSchedule,
}

const AMBIENT: GasPatch = GasPatch { pressure: 0.1e6, temperature: 290.0 };
const BLAST: GasPatch = GasPatch { pressure: 6.75e6, temperature: 1465.0 };

fn steel_with(failure: Failure, plastic: bool) -> SolidMaterial {
    SolidMaterial {
        failure,
        plasticity: plastic.then_some(Plasticity { yield_stress: 0.4e9, hardening: 0.1e9 }),
        ..SolidMaterial::steel()
    }
}

impl ScenarioConfig {
    /// Closed 0.4 m chamber with a 0.2 × 0.1 m steel bar and a half-disk charge on the left wall.
    pub fn chamber_detonation(level: Level) -> Self {
        let n = level.pick([20, 40, 80]);
        let nodes = level.pick([[30, 15], [60, 30], [120, 60]]);
        Self {
            kind: ScenarioKind::ChamberDetonation,
            level,
            domain: Rect::new(0.0, 0.0, 0.4, 0.4),
            fluid_elements: [n, n],
            fluid: FluidMaterial::air(),
            ambient: AMBIENT,
            detonation: Detonation { center: [0.0, 0.2], radius: 6.1e-3, state: BLAST },
            solid: SolidGeometry::Rectangle { origin: [0.1, 0.15], size: [0.2, 0.1], nodes },
            thickness: 3.5e-3,
            material: steel_with(Failure::None, true),
            horizon_factor: 2.5,
            gradient_mode: GradientMode::BondAssociated,
            coupling: Coupling::Strong,
            dt_strong: level.pick([1.0e-6, 0.5e-6, 0.25e-6]),
            weak_dt_divisor: 8.0,
            end_time: 1.5e-3,
            rho_inf: 0.5,
            passes: 2,
            probes: [[0.0, 0.2], [0.4, 0.2]],
            output: OutputSchedule { snapshots: vec![0.1e-3, 0.4e-3, 0.7e-3, 1.5e-3], log_every: 10, lattice: 101 },
        }
    }

    /// Hollow steel square around a central charge, ductile failure.
    pub fn ductile_square(level: Level) -> Self {
        let h: f64 = level.pick([2e-3, 1.5e-3, 1e-3]);
        let n = (0.4 / (4.0 * h)).round() as usize;
        Self {
            kind: ScenarioKind::DuctileSquare,
            level,
            domain: Rect::new(0.0, 0.0, 0.4, 0.4),
            fluid_elements: [n, n],
            fluid: FluidMaterial::air(),
            ambient: AMBIENT,
            detonation: Detonation { center: [0.2, 0.2], radius: 0.05, state: BLAST },
            solid: SolidGeometry::HollowSquare { center: [0.2, 0.2], outer: 0.16, inner: 0.10, spacing: h },
            thickness: 3.5e-3,
            material: steel_with(Failure::Ductile { eps_threshold: 0.18, eps_critical: 0.2 }, true),
            horizon_factor: 2.5,
            gradient_mode: GradientMode::BondAssociated,
            coupling: Coupling::Strong,
            dt_strong: level.pick([0.4e-6, 0.3e-6, 0.2e-6]),
            weak_dt_divisor: 4.0,
            end_time: 300e-6,
            rho_inf: 0.5,
            passes: 2,
            probes: [[0.2, 0.2], [0.4, 0.2]],
            output: OutputSchedule { snapshots: vec![80e-6, 120e-6, 200e-6, 300e-6], log_every: 10, lattice: 101 },
        }
    }

    /// Elastic steel ring around a central charge, brittle failure.
    pub fn brittle_cylinder(level: Level) -> Self {
        let h: f64 = level.pick([2e-3, 1.5e-3, 1e-3]);
        let n = (0.3 / (3.0 * h)).round() as usize;
        Self {
            kind: ScenarioKind::BrittleCylinder,
            level,
            domain: Rect::new(0.0, 0.0, 0.3, 0.3),
            fluid_elements: [n, n],
            fluid: FluidMaterial::air(),
            ambient: AMBIENT,
            detonation: Detonation { center: [0.15, 0.15], radius: 0.035, state: BLAST },
            solid: SolidGeometry::Annulus { center: [0.15, 0.15], inner_radius: 0.07, outer_radius: 0.10, spacing: h },
            thickness: 5e-3,
            material: steel_with(Failure::Brittle { sigma_critical: 3e9 }, false),
            horizon_factor: 2.5,
            gradient_mode: GradientMode::BondAssociated,
            coupling: Coupling::Strong,
            dt_strong: level.pick([0.4e-6, 0.3e-6, 0.2e-6]),
            weak_dt_divisor: 4.0,
            end_time: 300e-6,
            rho_inf: 0.5,
            passes: 2,
            probes: [[0.15, 0.15], [0.3, 0.15]],
            output: OutputSchedule { snapshots: vec![50e-6, 67e-6, 75e-6, 150e-6, 300e-6], log_every: 10, lattice: 101 },
        }
    }

    pub fn preset(kind: ScenarioKind, level: Level) -> Result<Self> {
        match kind {
            ScenarioKind::ChamberDetonation => Ok(Self::chamber_detonation(level)),
            ScenarioKind::DuctileSquare => Ok(Self::ductile_square(level)),
            ScenarioKind::BrittleCylinder => Ok(Self::brittle_cylinder(level)),
            ScenarioKind::Custom => Err(Error::Config("custom scenarios come from a config file".into())),
        }
    }

    /// Switches to weak coupling with penalty `beta`.
    pub fn with_weak(mut self, beta: f64, damage_scaling: bool) -> Self {
        self.coupling = Coupling::Weak(PenaltyConfig { beta, damage_scaling });
        self
    }

    /// Step size for the configured coupling.
    pub fn dt(&self) -> f64 {
        match self.coupling {
            Coupling::Weak(_) => self.dt_strong / self.weak_dt_divisor,
            _ => self.dt_strong,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.domain.area() > 0.0) {
            return bad("background domain has no area");
        }
        let bb = self.solid.bounding_box();
        let d = self.domain;
        if !(bb.x0 > d.x0 && bb.y0 > d.y0 && bb.x1 < d.x1 && bb.y1 < d.y1) {
            return bad("solid must lie strictly inside the background domain");
        }
        if self.fluid_elements.iter().any(|&n| n < 2) {
            return bad("need at least 2 fluid elements per direction");
        }
        if !(self.dt_strong > 0.0 && self.end_time > 0.0 && self.weak_dt_divisor > 0.0 && self.thickness > 0.0) {
            return bad("time step, end time, thickness and dt divisor must be positive");
        }
        if !(self.horizon_factor > 0.0) {
            return bad("horizon factor must be positive");
        }
        if !(self.ambient.pressure > 0.0 && self.ambient.temperature > 0.0)
            || !(self.detonation.state.pressure > 0.0 && self.detonation.state.temperature > 0.0)
        {
            return bad("gas states need positive pressure and temperature");
        }
        for p in &self.probes {
            if !d.contains(*p) {
                return bad("probe outside the background domain");
            }
        }
        if let Coupling::Weak(p) = self.coupling {
            if !(p.beta > 0.0) {
                return bad("penalty beta must be positive");
            }
        }
        if self.output.log_every == 0 || self.output.lattice < 2 {
            return bad("log cadence must be positive and the lattice at least 2");
        }
        self.fluid.validate()?;
        self.material.validate()?;
        GenAlpha::new(self.rho_inf, self.passes)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Initial background field: lumped projection of pressure and density,
    /// temperature from the gas law.
    pub fn initial_fluid(&self, space: &SplineSpace2D) -> ControlPointField<4> {
        let r = self.fluid.r_gas;
        let det = self.detonation;
        let pd = det.state.pressure;
        let rho_d = pd / (r * det.state.temperature);
        let pa = self.ambient.pressure;
        let rho_a = pa / (r * self.ambient.temperature);
        let pr = project_lumped(space, 4, |x| {
            let d2 = (x[0] - det.center[0]).powi(2) + (x[1] - det.center[1]).powi(2);
            if d2 <= det.radius * det.radius {
                [pd, rho_d]
            } else {
                [pa, rho_a]
            }
        });
        ControlPointField {
            values: pr.values.iter().map(|&[p, rho]| [p, 0.0, 0.0, p / (r * rho)]).collect(),
        }
    }

    pub fn solid_body(&self) -> Result<PdSolid> {
        let nodes = self.solid.nodes(self.thickness)?;
        let h = nodes.spacing.iter().copied().fold(0.0, f64::max);
        PdSolid::new(nodes, self.material, self.horizon_factor * h, self.gradient_mode)
    }

    /// Builds the coupled simulation at `t = 0`.
    pub fn build(&self) -> Result<Simulation> {
        self.validate()?;
        let space = SplineSpace2D::build_uniform(self.domain, self.fluid_elements[0], self.fluid_elements[1])?;
        let y0 = self.initial_fluid(&space);
        let options = AssemblyOptions::stabilized(self.ambient.pressure, self.ambient.temperature);
        let problem = FluidProblem::new(space, self.fluid, EdgeConditions::walls(), options)?;
        let fluid = FluidPart::new(problem, y0)?;
        let solid = self.solid_body()?;
        Simulation::new(Some(fluid), Some(solid), self.coupling, GenAlpha::new(self.rho_inf, self.passes)?)
    }
}
