#![allow(dead_code)]

use imfsi::coupling::Coupling;
use nalgebra::Complex;
use imfsi::flow::{assemble_fluid_residual, AssemblyOptions, EdgeConditions, FluidMaterial, FluidProblem};
use imfsi::integrator::GenAlpha;
use imfsi::oracle::sod;
use imfsi::sim::{FluidPart, Simulation};
use imfsi::spline::{project_l2, project_lumped, ControlPointField, QuadratureRule, Rect, SplineSpace2D};

/// Nondimensional ideal gas with `R = 1`.
pub fn unit_gas(mu: f64) -> FluidMaterial {
    FluidMaterial { gamma: 1.4, mu, prandtl: 0.72, r_gas: 1.0 }
}

/// Runs the Sod problem on an `n × 2` strip of `[0, 1]` to `t = 0.2` and
/// returns the L1 density error against the exact solution along the midline.
pub fn sod_density_l1(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 1.0, 2.0 * h), n, 2).unwrap();
    let gas = unit_gas(0.0);
    let y0 = project_lumped(&space, 4, |x| if x[0] < 0.5 { [1.0, 0.0, 0.0, 1.0] } else { [0.1, 0.0, 0.0, 0.8] });
    let problem = FluidProblem::new(space, gas, EdgeConditions::walls(), AssemblyOptions::stabilized(1.0, 1.0)).unwrap();
    let fluid = FluidPart::new(problem, y0).unwrap();
    let mut sim = Simulation::new(Some(fluid), None, Coupling::None, GenAlpha::default()).unwrap();
    let dt = 0.1 * h;
    let steps = (0.2 / dt).round() as usize;
    for _ in 0..steps {
        sim.advance(dt).unwrap();
    }
    let exact = sod();
    let f = sim.fluid.as_ref().unwrap();
    let samples = 2000;
    let mut l1 = 0.0;
    for i in 0..samples {
        let x = (i as f64 + 0.5) / samples as f64;
        let (y, _) = f.problem.space.interpolate(&f.y, [x, h]).unwrap();
        let rho = y[0] / (gas.r_gas * y[3]);
        l1 += (rho - exact.sample((x - 0.5) / 0.2).rho).abs() / samples as f64;
    }
    l1
}

/// Rigid rotation about the center of the unit square, with the isothermal
/// pressure field that balances it. Steady under Euler and Navier–Stokes.
pub fn vortex(omega: f64, gas: &FluidMaterial) -> impl Fn([f64; 2]) -> [f64; 4] {
    let (p0, t0) = (1e5, 300.0);
    let r_gas = gas.r_gas;
    move |x| {
        let (dx, dy) = (x[0] - 0.5, x[1] - 0.5);
        let r2 = dx * dx + dy * dy;
        [p0 * (omega * omega * r2 / (2.0 * r_gas * t0)).exp(), -omega * dy, omega * dx, t0]
    }
}

/// Max over interior control points of the scaled rate `|A0⁻¹ R / m|` recovered
/// from the residual of the projected steady vortex, and the largest DC viscosity.
pub fn vortex_rate_error(n: usize, options: AssemblyOptions) -> (f64, f64) {
    let gas = FluidMaterial::air();
    let space = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 1.0, 1.0), n, n).unwrap();
    let q = QuadratureRule::gauss3(&space);
    let exact = vortex(300.0, &gas);
    let y = project_l2(&space, &q, &exact);
    let problem = FluidProblem::new(space, gas, EdgeConditions::walls(), options).unwrap();
    let yt = ControlPointField::zeros(problem.space.n_cp());
    let (r, stats) = assemble_fluid_residual(&problem, &y, &yt);
    let mut worst = 0.0f64;
    for (a, ra) in r.iter().enumerate() {
        let g = problem.space.greville(a);
        if !(0.25..=0.75).contains(&g[0]) || !(0.25..=0.75).contains(&g[1]) {
            continue;
        }
        let ya = y.values[a];
        let a0 = gas.jacobians(&ya).a0;
        let rate = a0.try_inverse().unwrap() * nalgebra::Vector4::from(*ra) / problem.lumped[a];
        let c = gas.sound_speed(ya[3]);
        let scaled = [rate[0] / ya[0], rate[1] / c, rate[2] / c, rate[3] / ya[3]];
        worst = worst.max(scaled.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    (worst, stats.max_nu_dc)
}

/// Observed orders between successive meshes.
pub fn orders(errors: &[f64], sizes: &[usize]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(sizes.windows(2))
        .map(|(e, n)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect()
}

/// Principal root of the amplification matrix of the explicit scheme for
/// `ẏ = λ y`, built by hand from the predictor and corrector formulas.
/// `z = λ Δt`; time is measured in steps.
pub fn principal_amplification(ga: &GenAlpha, z: Complex<f64>) -> Complex<f64> {
    let (am, af, g) = (ga.alpha_m, ga.alpha_f, ga.gamma);
    let step = |y: Complex<f64>, yd: Complex<f64>| {
        let mut yd1 = yd * ((g - 1.0) / g);
        let mut y1 = y;
        for _ in 0..ga.passes {
            let y_af = y + (y1 - y) * af;
            let yd_am = yd + (yd1 - yd) * am;
            let d = -(yd_am - z * y_af) / am;
            yd1 += d;
            y1 += d * g;
        }
        (y1, yd1)
    };
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let (a, c) = step(one, zero);
    let (b, d) = step(zero, one);
    let half_trace = (a + d) * 0.5;
    let disc = (half_trace * half_trace - (a * d - b * c)).sqrt();
    let roots = [half_trace + disc, half_trace - disc];
    let target = z.exp();
    if (roots[0] - target).norm() < (roots[1] - target).norm() {
        roots[0]
    } else {
        roots[1]
    }
}
