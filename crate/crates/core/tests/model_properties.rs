use mshf::{fit_minimal, residual, ModelKind, ModelParams};
use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

fn pt(range: std::ops::Range<f64>, dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(range, dim)
}

fn check_subset(kind: ModelKind, subset: &[Vec<f64>]) -> Result<(), TestCaseError> {
    let refs: Vec<&[f64]> = subset.iter().map(Vec::as_slice).collect();
    let Ok(sols) = fit_minimal(kind, &refs) else {
        return Ok(());
    };
    prop_assert!(!sols.is_empty());
    for p in &sols {
        for s in subset {
            let r = residual(p, s);
            prop_assert!(r <= 1e-7, "{kind}: residual {r} on its own subset");
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn planar_models_pass_through_their_subsets(
        a in pt(-100.0..100.0, 2),
        b in pt(-100.0..100.0, 2),
        c in pt(-100.0..100.0, 2),
    ) {
        check_subset(ModelKind::Line2D, &[a.clone(), b.clone()])?;
        check_subset(ModelKind::Circle2D, &[a, b, c])?;
    }

    #[test]
    fn line3d_passes_through_its_subset(a in pt(-100.0..100.0, 3), b in pt(-100.0..100.0, 3)) {
        check_subset(ModelKind::Line3D, &[a, b])?;
    }

    #[test]
    fn homography_passes_through_its_subset(
        xs in proptest::collection::vec(pt(0.0..640.0, 2), 4),
        h in proptest::array::uniform8(-0.3f64..0.3),
    ) {
        let hm = Matrix3::new(1.0 + h[0], h[1], 40.0 * h[2], h[3], 1.0 + h[4], 40.0 * h[5], 1e-4 * h[6], 1e-4 * h[7], 1.0);
        let subset: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| {
                let y = hm * Vector3::new(x[0], x[1], 1.0);
                vec![x[0], x[1], y[0] / y[2], y[1] / y[2]]
            })
            .collect();
        check_subset(ModelKind::Homography, &subset)?;
    }

    #[test]
    fn fundamental_solutions_are_rank_two_and_exact(
        xs in proptest::collection::vec(pt(0.0..640.0, 4), 7),
    ) {
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        if let Ok(sols) = fit_minimal(ModelKind::Fundamental, &refs) {
            prop_assert!((1..=3).contains(&sols.len()));
            for p in &sols {
                let f = Matrix3::from_row_slice(p.values());
                let sv = f.singular_values();
                let (mx, mn) = (sv.max(), sv.min());
                prop_assert!(mn <= 1e-8 * mx, "not rank 2: {sv:?}");
                for s in &xs {
                    let x = Vector3::new(s[0], s[1], 1.0);
                    let y = Vector3::new(s[2], s[3], 1.0);
                    let alg = (y.transpose() * f * x)[0].abs() / (f.norm() * x.norm() * y.norm());
                    prop_assert!(alg <= 1e-9, "epipolar constraint {alg}");
                    prop_assert!(residual(p, s) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn exact_points_have_zero_residual(t in -50.0f64..50.0, theta in 0.0f64..std::f64::consts::TAU) {
        let line = ModelParams::from_values(ModelKind::Line2D, &[theta.cos(), theta.sin(), -3.0]).unwrap();
        let p = [3.0 * theta.cos() - t * theta.sin(), 3.0 * theta.sin() + t * theta.cos()];
        prop_assert!(residual(&line, &p) < 1e-9);
        let circle = ModelParams::from_values(ModelKind::Circle2D, &[1.0, -2.0, 5.0]).unwrap();
        let q = [1.0 + 5.0 * theta.cos(), -2.0 + 5.0 * theta.sin()];
        prop_assert!(residual(&circle, &q) < 1e-9);
    }
}

#[test]
fn point_line_distance_example() {
    let line = fit_minimal(ModelKind::Line2D, &[&[0.0, 0.0], &[2.0, 2.0]]).unwrap()[0];
    assert!((residual(&line, &[1.0, 0.0]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}
