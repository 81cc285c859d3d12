//! Coupled background/foreground state advanced by the generalized-α scheme.

use nalgebra::{Matrix4, Vector4};

use crate::coupling::{weak_couple_forces, Coupling, InterpolationOperator, PenaltyConfig, PenaltyNode};
use crate::error::{Error, Result};
use crate::flow::assembly::{add_boundary_flux, assemble_volume};
use crate::flow::{assemble_at_points, clamp_state, FluidProblem, WeightedPoint};
use crate::integrator::{step, ExplicitSystem, GenAlpha};
use crate::pd::{BondTrial, PdSolid};
use crate::spline::ControlPointField;

/// Fraction of the fluid lumped mass kept at control points covered by the solid.
const STRONG_MASS_FLOOR: f64 = 0.05;

/// Background unknowns.
#[derive(Debug, Clone)]
pub struct FluidPart {
    pub problem: FluidProblem,
    pub y: ControlPointField<4>,
    pub y_t: ControlPointField<4>,
    y_new: ControlPointField<4>,
    yt_new: ControlPointField<4>,
}

impl FluidPart {
    pub fn new(problem: FluidProblem, mut y: ControlPointField<4>) -> Result<Self> {
        if y.len() != problem.space.n_cp() || !y.is_finite() {
            return Err(Error::InvalidInput("initial fluid field does not match the space".into()));
        }
        problem.apply_constraints(&mut y.values);
        let y_t = ControlPointField::zeros(y.len());
        Ok(Self {
            y_new: y.clone(),
            yt_new: y_t.clone(),
            problem,
            y,
            y_t,
        })
    }
}

/// Foreground unknowns. Committed kinematics live in the [`PdSolid`].
#[derive(Debug, Clone)]
pub struct SolidPart {
    pub body: PdSolid,
    x_new: Vec<[f64; 2]>,
    v_new: Vec<[f64; 2]>,
    a_new: Vec<[f64; 2]>,
    /// Internal force density at the committed state.
    force: Vec<[f64; 2]>,
    force_new: Vec<[f64; 2]>,
    trial: Option<BondTrial>,
}

impl SolidPart {
    pub fn new(body: PdSolid) -> Self {
        let force = body.internal_force(&body.x, &body.sigma);
        Self {
            x_new: body.x.clone(),
            v_new: body.v.clone(),
            a_new: body.a.clone(),
            force_new: force.clone(),
            force,
            trial: None,
            body,
        }
    }
}

/// Per-step quantities reported to the caller.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    pub clamped: usize,
    pub max_nu_dc: f64,
    /// Force the fluid exerts on the solid through the penalty, N.
    pub penalty_force: [f64; 2],
    pub penalty_power: f64,
    pub bonds_broken: usize,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub fluid: Option<FluidPart>,
    pub solid: Option<SolidPart>,
    pub coupling: Coupling,
    pub scheme: GenAlpha,
    pub time: f64,
    pub steps: usize,
    pub last: StepReport,
    pending: StepReport,
}

fn lerp(a: &[[f64; 2]], b: &[[f64; 2]], t: f64) -> Vec<[f64; 2]> {
    a.iter()
        .zip(b)
        .map(|(a, b)| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])])
        .collect()
}

fn lerp_field(a: &ControlPointField<4>, b: &ControlPointField<4>, t: f64) -> ControlPointField<4> {
    ControlPointField {
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(a, b)| std::array::from_fn(|k| a[k] + t * (b[k] - a[k])))
            .collect(),
    }
}

impl Simulation {
    pub fn new(
        fluid: Option<FluidPart>,
        solid: Option<PdSolid>,
        coupling: Coupling,
        scheme: GenAlpha,
    ) -> Result<Self> {
        if !matches!(coupling, Coupling::None) && (fluid.is_none() || solid.is_none()) {
            return Err(Error::InvalidInput("coupled runs need both a fluid and a solid".into()));
        }
        if let Coupling::Weak(p) = coupling {
            if !(p.beta > 0.0) {
                return Err(Error::InvalidInput(format!("penalty beta must be positive, got {}", p.beta)));
            }
        }
        let mut solid = solid.map(SolidPart::new);
        if let (Coupling::Strong, Some(f), Some(s)) = (&coupling, &fluid, &mut solid) {
            let interp = InterpolationOperator::build(&f.problem.space, &s.body.x, 0.0)?;
            s.body.v = interp.velocity(&f.y);
            s.v_new = s.body.v.clone();
        }
        Ok(Self {
            fluid,
            solid,
            coupling,
            scheme,
            time: 0.0,
            steps: 0,
            last: StepReport::default(),
            pending: StepReport::default(),
        })
    }

    /// Advances one step.
    pub fn advance(&mut self, dt: f64) -> Result<StepReport> {
        let scheme = self.scheme;
        step(self, &scheme, dt)?;
        Ok(self.last)
    }

    fn correct_impl(&mut self, ga: &GenAlpha, dt: f64) -> Result<()> {
        let time = self.time;
        let coupling = self.coupling;
        let mut report = StepReport {
            bonds_broken: self.pending.bonds_broken,
            ..StepReport::default()
        };

        // Solid internal force at the α_f level.
        let mut solid_eval = None;
        if let Some(s) = self.solid.as_mut() {
            let trial = s.body.trial_bonds(&s.body.x, &s.x_new, dt);
            s.force_new = s.body.internal_force(&s.x_new, &trial.sigma);
            s.trial = Some(trial);
            let f_af = lerp(&s.force, &s.force_new, ga.alpha_f);
            let x_af = lerp(&s.body.x, &s.x_new, ga.alpha_f);
            let v_af = lerp(&s.body.v, &s.v_new, ga.alpha_f);
            let a_am = lerp(&s.body.a, &s.a_new, ga.alpha_m);
            solid_eval = Some((f_af, x_af, v_af, a_am));
        }

        match (self.fluid.as_mut(), self.solid.as_mut(), coupling) {
            (Some(f), Some(s), Coupling::Strong) => {
                let (f_af, x_af, _, _) = solid_eval.expect("solid evaluated");
                let y_af = lerp_field(&f.y, &f.y_new, ga.alpha_f);
                let yt_am = lerp_field(&f.y_t, &f.yt_new, ga.alpha_m);
                let (mut r, stats) = assemble_volume(&f.problem, &y_af, &yt_am);
                add_boundary_flux(&f.problem, &mut r);
                report.clamped += stats.clamped;
                report.max_nu_dc = stats.max_nu_dc;
                let interp = InterpolationOperator::build(&f.problem.space, &x_af, time)?;
                let vol = &s.body.nodes.volume;
                let points: Vec<WeightedPoint> = x_af
                    .iter()
                    .zip(vol)
                    .map(|(&x, &w)| WeightedPoint { x, weight: w })
                    .collect();
                let sub = assemble_at_points(&f.problem, &y_af, &yt_am, &points, -1.0, &mut r)?;
                report.clamped += sub.clamped;
                // Solid residual with kinematics interpolated from the background.
                let rates = interp.velocity(&yt_am);
                let kin = interp.velocity_and_gradient(&y_af);
                let solid_r: Vec<[f64; 2]> = (0..s.body.len())
                    .map(|p| {
                        let (v, g) = kin[p];
                        let acc = [
                            rates[p][0] + g[0][0] * v[0] + g[0][1] * v[1],
                            rates[p][1] + g[1][0] * v[0] + g[1][1] * v[1],
                        ];
                        let m = s.body.mass(p);
                        [m * acc[0] - f_af[p][0] * vol[p], m * acc[1] - f_af[p][1] * vol[p]]
                    })
                    .collect();
                interp.distribute_into(&solid_r, 1.0, &mut r);
                let n_cp = f.problem.space.n_cp();
                let covered = interp.distribute_scalar(n_cp, vol);
                let masses: Vec<f64> = (0..s.body.len()).map(|p| s.body.mass(p)).collect();
                let solid_mass = interp.distribute_scalar(n_cp, &masses);
                let fluid_mass: Vec<f64> = f
                    .problem
                    .lumped
                    .iter()
                    .zip(&covered)
                    .map(|(m, c)| (m - c).max(STRONG_MASS_FLOOR * m))
                    .collect();
                let delta = solve_fluid(f, &y_af, &r, &fluid_mass, &solid_mass, ga.alpha_m);
                apply_fluid_increment(f, &delta, ga, dt);
                // PD kinematics follow the corrected background velocity.
                let interp_new = InterpolationOperator::build(&f.problem.space, &s.x_new, time + dt)?;
                s.v_new = interp_new.velocity(&f.y_new);
                for p in 0..s.body.len() {
                    for k in 0..2 {
                        s.x_new[p][k] = s.body.x[p][k] + 0.5 * dt * (s.body.v[p][k] + s.v_new[p][k]);
                        s.a_new[p][k] = (s.v_new[p][k] - s.body.v[p][k]) / (ga.gamma * dt)
                            - (1.0 - ga.gamma) / ga.gamma * s.body.a[p][k];
                    }
                }
            }
            (fluid, solid, coupling) => {
                let mut penalty = None;
                if let (Some(f), Some(s), Coupling::Weak(cfg)) = (fluid.as_deref(), solid.as_deref(), coupling) {
                    let (_, x_af, v_af, _) = solid_eval.as_ref().expect("solid evaluated");
                    let y_af = lerp_field(&f.y, &f.y_new, ga.alpha_f);
                    let interp = InterpolationOperator::build(&f.problem.space, x_af, time)?;
                    let nodes: Vec<PenaltyNode> = (0..s.body.len())
                        .map(|p| PenaltyNode {
                            velocity: v_af[p],
                            volume: s.body.nodes.volume[p],
                            spacing: s.body.nodes.spacing[p],
                            damage: s.body.damage[p],
                        })
                        .collect();
                    let forces = weak_couple_forces(&interp, &y_af, &nodes, s.body.material.youngs, &cfg, dt);
                    report.penalty_force = forces.total;
                    report.penalty_power = forces.power;
                    penalty = Some((interp, forces, nodes));
                }
                if let Some(f) = fluid {
                    let y_af = lerp_field(&f.y, &f.y_new, ga.alpha_f);
                    let yt_am = lerp_field(&f.y_t, &f.yt_new, ga.alpha_m);
                    let (mut r, stats) = assemble_volume(&f.problem, &y_af, &yt_am);
                    add_boundary_flux(&f.problem, &mut r);
                    report.clamped += stats.clamped;
                    report.max_nu_dc = stats.max_nu_dc;
                    let n_cp = f.problem.space.n_cp();
                    let mut extra = vec![0.0; n_cp];
                    if let Some((interp, forces, nodes)) = &penalty {
                        for (ra, fa) in r.iter_mut().zip(&forces.background) {
                            ra[1] -= fa[1];
                            ra[2] -= fa[2];
                        }
                        let stiff: Vec<f64> = forces
                            .coefficient
                            .iter()
                            .zip(nodes)
                            .map(|(c, n)| c * n.volume * ga.alpha_f * ga.gamma * dt / ga.alpha_m)
                            .collect();
                        extra = interp.distribute_scalar(n_cp, &stiff);
                    }
                    let fluid_mass = f.problem.lumped.clone();
                    let delta = solve_fluid(f, &y_af, &r, &fluid_mass, &extra, ga.alpha_m);
                    apply_fluid_increment(f, &delta, ga, dt);
                }
                if let Some(s) = solid {
                    let (f_af, _, _, a_am) = solid_eval.expect("solid evaluated");
                    let vol = &s.body.nodes.volume;
                    for p in 0..s.body.len() {
                        let m = s.body.mass(p);
                        let (mut fp, mut lhs) = (f_af[p], ga.alpha_m * m);
                        if let Some((_, forces, _)) = &penalty {
                            fp[0] += forces.solid[p][0];
                            fp[1] += forces.solid[p][1];
                            lhs += ga.alpha_f * ga.gamma * dt * forces.coefficient[p] * vol[p];
                        }
                        for k in 0..2 {
                            let r = m * a_am[p][k] - fp[k] * vol[p];
                            let da = -r / lhs;
                            s.a_new[p][k] += da;
                            s.v_new[p][k] += ga.gamma * dt * da;
                            s.x_new[p][k] = s.body.x[p][k] + 0.5 * dt * (s.body.v[p][k] + s.v_new[p][k]);
                        }
                    }
                }
            }
        }
        self.pending = report;
        Ok(())
    }

    /// Total linear momentum of background (per unit depth) and solid.
    pub fn momentum(&self) -> ([f64; 2], [f64; 2]) {
        let mut fluid = [0.0; 2];
        if let Some(f) = &self.fluid {
            let q = crate::spline::QuadratureRule::gauss3(&f.problem.space);
            for e in q.elements() {
                for qp in q.element_points(e) {
                    let y = f.y.value_at(&qp.basis);
                    let u = f.problem.material.conserved(&y);
                    fluid[0] += u[1] * qp.weight;
                    fluid[1] += u[2] * qp.weight;
                }
            }
        }
        let solid = self.solid.as_ref().map_or([0.0; 2], |s| s.body.momentum());
        (fluid, solid)
    }
}

/// Solves the lumped system `α_m (m_A A0(Y_A) + s_A E_v) Δ_A = −R_A` block by block,
/// where `E_v` selects the momentum slots and slip-wall slots are held at zero.
fn solve_fluid(
    f: &FluidPart,
    y_af: &ControlPointField<4>,
    r: &[[f64; 4]],
    fluid_mass: &[f64],
    momentum_mass: &[f64],
    alpha_m: f64,
) -> Vec<[f64; 4]> {
    let opts = f.problem.options;
    let mat = f.problem.material;
    (0..r.len())
        .map(|a| {
            let (y, _) = clamp_state(y_af.values[a], opts.p_floor, opts.t_floor);
            let mut m: Matrix4<f64> = mat.jacobians(&y).a0 * fluid_mass[a];
            m[(1, 1)] += momentum_mass[a];
            m[(2, 2)] += momentum_mass[a];
            m *= alpha_m;
            let mut rhs = -Vector4::from(r[a]);
            let fixed = f.problem.constrained(a);
            for k in 0..4 {
                if fixed[k] {
                    for j in 0..4 {
                        m[(k, j)] = 0.0;
                        m[(j, k)] = 0.0;
                    }
                    m[(k, k)] = 1.0;
                    rhs[k] = 0.0;
                }
            }
            let d = m.lu().solve(&rhs).unwrap_or_else(Vector4::zeros);
            [d[0], d[1], d[2], d[3]]
        })
        .collect()
}

fn apply_fluid_increment(f: &mut FluidPart, delta: &[[f64; 4]], ga: &GenAlpha, dt: f64) {
    for ((yt, y), d) in f.yt_new.values.iter_mut().zip(f.y_new.values.iter_mut()).zip(delta) {
        for k in 0..4 {
            yt[k] += d[k];
            y[k] += ga.gamma * dt * d[k];
        }
    }
}

impl ExplicitSystem for Simulation {
    fn predict(&mut self, ga: &GenAlpha, dt: f64) -> Result<()> {
        if let Some(f) = self.fluid.as_mut() {
            f.y_new = f.y.clone();
            for (n, o) in f.yt_new.values.iter_mut().zip(&f.y_t.values) {
                *n = o.map(|v| ga.predict_rate(v));
            }
        }
        if let Some(s) = self.solid.as_mut() {
            s.v_new = s.body.v.clone();
            s.a_new = s.body.a.iter().map(|a| a.map(|v| ga.predict_rate(v))).collect();
            s.x_new = s
                .body
                .x
                .iter()
                .zip(&s.body.v)
                .map(|(x, v)| [x[0] + dt * v[0], x[1] + dt * v[1]])
                .collect();
        }
        self.pending = StepReport::default();
        Ok(())
    }

    fn correct(&mut self, ga: &GenAlpha, dt: f64, _pass: usize) -> Result<()> {
        self.correct_impl(ga, dt)
    }

    fn finish(&mut self, _ga: &GenAlpha, dt: f64) -> Result<()> {
        let mut report = self.pending;
        if let Some(f) = self.fluid.as_mut() {
            std::mem::swap(&mut f.y, &mut f.y_new);
            std::mem::swap(&mut f.y_t, &mut f.yt_new);
        }
        if let Some(s) = self.solid.as_mut() {
            if let Some(trial) = s.trial.take() {
                s.body.commit(&trial);
                s.body.x.clone_from(&s.x_new);
                s.body.v.clone_from(&s.v_new);
                s.body.a.clone_from(&s.a_new);
                let broken = s.body.update_damage(&trial.distorted);
                report.bonds_broken = broken;
                s.force = if broken > 0 {
                    s.body.internal_force(&s.body.x, &s.body.sigma)
                } else {
                    std::mem::take(&mut s.force_new)
                };
            }
        }
        self.time += dt;
        self.steps += 1;
        self.last = report;
        Ok(())
    }

    fn non_finite(&self) -> Option<String> {
        if let Some(f) = &self.fluid {
            if let Some(a) = f.y_new.values.iter().position(|v| v.iter().any(|x| !x.is_finite())) {
                return Some(format!("fluid control point {a}"));
            }
        }
        if let Some(s) = &self.solid {
            let bad = |v: &[[f64; 2]]| v.iter().position(|p| !p[0].is_finite() || !p[1].is_finite());
            if let Some(p) = bad(&s.x_new).or_else(|| bad(&s.v_new)) {
                return Some(format!("PD node {p}"));
            }
        }
        None
    }

    fn time(&self) -> f64 {
        self.time
    }

    fn steps(&self) -> usize {
        self.steps
    }
}

/// Largest stable step with safety factor 0.8: fluid acoustic, solid
/// dilatational and penalty limits.
pub fn stable_dt_estimate(fluid: Option<&FluidPart>, solid: Option<&PdSolid>, penalty: Option<&PenaltyConfig>) -> f64 {
    let mut dt = f64::INFINITY;
    if let Some(f) = fluid {
        let h = f.problem.element_length();
        let mat = f.problem.material;
        for y in &f.y.values {
            let speed = (y[1] * y[1] + y[2] * y[2]).sqrt() + mat.sound_speed(y[3].max(f.problem.options.t_floor));
            dt = dt.min(h / speed);
        }
    }
    if let Some(s) = solid {
        let c = s.material.wave_speed();
        let h = s.nodes.spacing.iter().copied().fold(f64::INFINITY, f64::min);
        dt = dt.min(h / c);
        if let Some(p) = penalty {
            let limit = (2.0 * s.material.density * h * h / (p.beta * s.material.youngs)).sqrt();
            dt = dt.min(limit);
        }
    }
    0.8 * dt
}
