use imfsi::coupling::{penalty_coefficient, weak_couple_forces, InterpolationOperator, PenaltyConfig, PenaltyNode};
use imfsi::pd::{GradientMode, PdNodes, PdSolid, SolidMaterial};
use imfsi::spline::{ControlPointField, Rect, SplineSpace2D};
use proptest::prelude::*;

fn background() -> SplineSpace2D {
    SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 0.4, 0.3), 12, 9).unwrap()
}

fn node_positions() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((0.0..0.4f64, 0.0..0.3f64).prop_map(|(x, y)| [x, y]), 1..40)
}

/// A smooth but otherwise arbitrary background velocity field.
fn swirl(space: &SplineSpace2D, amp: f64) -> ControlPointField<4> {
    let mut f = ControlPointField::zeros(space.n_cp());
    for (a, v) in f.values.iter_mut().enumerate() {
        let g = space.greville(a);
        *v = [1e5, amp * (7.0 * g[1]).sin(), -amp * (5.0 * g[0]).cos(), 300.0];
    }
    f
}

fn momentum_sums(background: &[[f64; 4]]) -> [f64; 2] {
    background.iter().fold([0.0; 2], |s, f| [s[0] + f[1], s[1] + f[2]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penalty_forces_obey_action_reaction(
        x in node_positions(),
        amp in 0.0..300.0f64,
        beta in 0.1..9.0f64,
        damage in 0.0..=1.0f64,
        scaling in any::<bool>(),
    ) {
        let space = background();
        let interp = InterpolationOperator::build(&space, &x, 0.0).unwrap();
        let field = swirl(&space, amp);
        let nodes: Vec<PenaltyNode> = (0..x.len())
            .map(|p| PenaltyNode {
                velocity: [(p as f64).sin() * 40.0, (p as f64).cos() * 25.0],
                volume: 3.5e-9 * (1.0 + 0.1 * p as f64),
                spacing: 1e-3,
                damage,
            })
            .collect();
        let cfg = PenaltyConfig { beta, damage_scaling: scaling };
        let forces = weak_couple_forces(&interp, &field, &nodes, 200e9, &cfg, 1e-7);
        let on_fluid = momentum_sums(&forces.background);
        let scale = forces.solid.iter().zip(&nodes).map(|(f, n)| (f[0].abs() + f[1].abs()) * n.volume).sum::<f64>();
        prop_assert!((on_fluid[0] + forces.total[0]).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE));
        prop_assert!((on_fluid[1] + forces.total[1]).abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE));
        prop_assert!(forces.power >= 0.0);
    }

    #[test]
    fn penalty_coefficient_is_linear_in_beta_and_vanishes_for_failed_material(
        beta in 0.1..9.0f64,
        e in 1e9..3e11f64,
        h in 1e-4..1e-2f64,
        dt in 1e-9..1e-6f64,
        d in 0.0..=1.0f64,
    ) {
        let cfg = PenaltyConfig { beta, damage_scaling: true };
        prop_assert_eq!(penalty_coefficient(e, 1.0, h, dt, &cfg), 0.0);
        let plain = PenaltyConfig { damage_scaling: false, ..cfg };
        let unit = PenaltyConfig { beta: 1.0, ..plain };
        let c = penalty_coefficient(e, d, h, dt, &plain);
        prop_assert!((c - beta * penalty_coefficient(e, d, h, dt, &unit)).abs() <= 1e-14 * c);
        prop_assert!((c - beta * e * dt / (h * h)).abs() <= 1e-14 * c);
        prop_assert!((penalty_coefficient(e, d, h, dt, &cfg) - (1.0 - d) * c).abs() <= 1e-14 * c);
    }

    #[test]
    fn distributed_nodal_forces_keep_their_resultant(
        x in node_positions(),
        f in prop::array::uniform2(-1e3..1e3f64),
    ) {
        let space = background();
        let interp = InterpolationOperator::build(&space, &x, 0.0).unwrap();
        let forces = vec![f; x.len()];
        let out = momentum_sums(&interp.distribute(space.n_cp(), &forces));
        let n = x.len() as f64;
        prop_assert!((out[0] - n * f[0]).abs() <= 1e-12 * n * 1e3);
        prop_assert!((out[1] - n * f[1]).abs() <= 1e-12 * n * 1e3);
    }

    #[test]
    fn uniform_background_velocity_is_interpolated_exactly(x in node_positions(), v in prop::array::uniform2(-500.0..500.0f64)) {
        let space = background();
        let interp = InterpolationOperator::build(&space, &x, 0.0).unwrap();
        let field = ControlPointField::constant(space.n_cp(), [1e5, v[0], v[1], 300.0]);
        for (got, (_, g)) in interp.velocity(&field).iter().zip(interp.velocity_and_gradient(&field)) {
            prop_assert!((got[0] - v[0]).abs() <= 1e-12 * 500.0 && (got[1] - v[1]).abs() <= 1e-12 * 500.0);
            prop_assert!(g.iter().flatten().all(|d| d.abs() <= 1e-9));
        }
    }
}

#[test]
fn self_equilibrated_solid_forces_put_no_net_load_on_the_background() {
    let h = 2e-3;
    let nodes = PdNodes::rectangle([0.1, 0.1], [0.04, 0.02], 20, 10, 3.5e-3);
    let solid = PdSolid::new(nodes, SolidMaterial::steel(), 2.5 * h, GradientMode::BondAssociated).unwrap();
    let x: Vec<[f64; 2]> = solid.x.iter().map(|x| [x[0] * 1.002 + 1e-4 * (300.0 * x[1]).sin(), x[1] * 0.999]).collect();
    let trial = solid.trial_bonds(&solid.x, &x, 1e-6);
    let f = solid.internal_force(&x, &trial.sigma);
    let nodal: Vec<[f64; 2]> = f.iter().zip(&solid.nodes.volume).map(|(f, v)| [f[0] * v, f[1] * v]).collect();
    let space = background();
    let interp = InterpolationOperator::build(&space, &x, 0.0).unwrap();
    let net = momentum_sums(&interp.distribute(space.n_cp(), &nodal));
    let scale: f64 = nodal.iter().map(|f| f[0].abs() + f[1].abs()).sum();
    assert!(scale > 0.0);
    assert!(net[0].abs() <= 1e-10 * scale && net[1].abs() <= 1e-10 * scale, "{net:?} vs {scale}");
}

#[test]
fn nodes_outside_the_background_are_reported() {
    let err = InterpolationOperator::build(&background(), &[[0.1, 0.1], [0.5, 0.1]], 2e-6).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("node 1"), "{text}");
}
