use imfsi::spline::{
    lumped_mass, project_l2, project_lumped, KnotVector, QuadratureRule, Rect, SplineSpace2D, LOCAL_2D,
};
use proptest::prelude::*;

fn space(nx: usize, ny: usize) -> SplineSpace2D {
    SplineSpace2D::build_uniform(Rect::new(-0.3, 0.1, 0.9, 0.7), nx, ny).unwrap()
}

/// Any polynomial of total degree two.
fn quadratic(c: [f64; 6]) -> impl Fn([f64; 2]) -> [f64; 1] {
    move |x| [c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partition_of_unity(nx in 2usize..12, ny in 2usize..12, u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let s = space(nx, ny);
        let d = s.domain();
        let b = s.eval_basis([d.x0 + u * d.width(), d.y0 + v * d.height()]).unwrap();
        let sum: f64 = b.value.iter().sum();
        let gsum = b.grad.iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        let scale = b.grad.iter().map(|g| g[0].abs() + g[1].abs()).sum::<f64>();
        prop_assert!(gsum[0].abs() <= 1e-12 * scale && gsum[1].abs() <= 1e-12 * scale);
        prop_assert!(b.value.iter().all(|&n| n >= 0.0));
    }

    #[test]
    fn gradient_matches_finite_difference(nx in 2usize..10, ny in 2usize..10, u in 0.05..0.95f64, v in 0.05..0.95f64) {
        let s = space(nx, ny);
        let d = s.domain();
        let x = [d.x0 + u * d.width(), d.y0 + v * d.height()];
        let b = s.eval_basis(x).unwrap();
        // Central differences inside the same element, where the basis is a polynomial.
        let step = 1e-6 * s.element_length();
        for dir in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[dir] += step;
            xm[dir] -= step;
            let bp = s.eval_on_element(b.element, xp);
            let bm = s.eval_on_element(b.element, xm);
            for a in 0..LOCAL_2D {
                let fd = (bp.value[a] - bm.value[a]) / (2.0 * step);
                let scale = b.grad[a][dir].abs().max(1.0 / s.element_length());
                prop_assert!((fd - b.grad[a][dir]).abs() <= 1e-5 * scale, "{fd} vs {}", b.grad[a][dir]);
            }
        }
    }

    #[test]
    fn quadratics_are_reproduced(c in prop::array::uniform6(-2.0..2.0f64), u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let s = space(5, 4);
        let q = QuadratureRule::gauss3(&s);
        let f = quadratic(c);
        let field = project_l2(&s, &q, &f);
        let d = s.domain();
        let x = [d.x0 + u * d.width(), d.y0 + v * d.height()];
        let (got, _) = s.interpolate(&field, x).unwrap();
        prop_assert!((got[0] - f(x)[0]).abs() <= 1e-9);
    }

    #[test]
    fn lumped_projection_stays_within_data_bounds(lo in -5.0..0.0f64, hi in 0.0..5.0f64, r in 0.05..0.4f64) {
        let s = space(8, 6);
        let c = s.domain().center();
        let field = project_lumped(&s, 4, |x| {
            if (x[0] - c[0]).hypot(x[1] - c[1]) < r { [hi] } else { [lo] }
        });
        prop_assert!(field.values.iter().all(|v| v[0] >= lo - 1e-12 && v[0] <= hi + 1e-12));
    }
}

#[test]
fn gauss_rule_integrates_quadratic_products_exactly() {
    // ∫ N_A x² y dΩ by 3×3 Gauss against Richardson-extrapolated midpoint sums.
    let s = SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 1.0, 1.0), 3, 3).unwrap();
    let q = QuadratureRule::gauss3(&s);
    let gauss = lumped_mass(&s, &q, |x| x[0] * x[0] * x[1]);
    let midpoint = |n: usize| {
        let mut sum = vec![0.0; s.n_cp()];
        let h = 1.0 / n as f64;
        for j in 0..n {
            for i in 0..n {
                let x = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                let b = s.eval_basis(x).unwrap();
                for a in 0..LOCAL_2D {
                    sum[b.index[a]] += b.value[a] * x[0] * x[0] * x[1] * h * h;
                }
            }
        }
        sum
    };
    let (coarse, fine) = (midpoint(300), midpoint(600));
    let dense: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    for (g, d) in gauss.iter().zip(&dense) {
        assert!((g - d).abs() < 1e-9 * g.abs().max(1e-3), "{g} vs {d}");
    }
}

#[test]
fn knot_vector_rejects_bad_input() {
    assert!(KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 0.5, 1.0, 1.0]).is_err());
    assert!(KnotVector::open_uniform(0, 0.0, 1.0).is_err());
    assert!(KnotVector::open_uniform(3, 1.0, 1.0).is_err());
    assert!(SplineSpace2D::build_uniform(Rect::new(0.0, 0.0, 1.0, 1.0), 1, 4).is_err());
}

#[test]
fn interpolation_outside_the_domain_fails() {
    let s = space(4, 4);
    let field = imfsi::spline::ControlPointField::<1>::constant(s.n_cp(), [1.0]);
    assert!(s.interpolate(&field, [5.0, 0.5]).is_err());
    assert!(s.interpolate(&field, [0.0, f64::NAN]).is_err());
}
