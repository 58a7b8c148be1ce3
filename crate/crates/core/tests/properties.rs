use proptest::prelude::*;

use quermass_flow::diagnostics::sphere_fit;
use quermass_flow::elliptic::CurvatureFunction;
use quermass_flow::integrals::{ball_quermass, ball_radius_from_quermass, hsiung_minkowski_residual, newton_maclaurin_check};
use quermass_flow::{curvature, Profile, SpaceForm};

fn space_form() -> impl Strategy<Value = SpaceForm> {
    (prop_oneof![Just(1.0), Just(0.0), Just(-1.0), 0.2f64..3.0, -3.0f64..-0.2], 2usize..5)
        .prop_map(|(k, n)| SpaceForm::new(k, n).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trig_kernel_identity(sf in space_form(), t in 0.01f64..1.4) {
        let r = if sf.k() > 0.0 { t / sf.k().sqrt() } else { t };
        let (s, c) = sf.sc(r);
        prop_assert!((c * c + sf.k() * s * s - 1.0).abs() < 1e-12);
        prop_assert!(s > 0.0);
    }

    #[test]
    fn ball_quermass_inverts(sf in space_form(), ell in 0usize..4, t in 0.1f64..1.3) {
        let ell = ell.min(sf.n());
        let r = if sf.k() > 0.0 { t / sf.k().sqrt() } else { t };
        let w = ball_quermass(sf, ell, r).unwrap();
        let back = ball_radius_from_quermass(sf, ell, w).unwrap();
        prop_assert!((ball_quermass(sf, ell, back).unwrap() - w).abs() <= 1e-10 * w);
    }

    #[test]
    fn newton_maclaurin_holds(kappas in prop::collection::vec(1e-3f64..1e3, 2..6)) {
        prop_assert!(newton_maclaurin_check(&kappas).unwrap().worst_margin > -1e-12);
    }

    #[test]
    fn curvature_functions_are_homogeneous_and_monotone(
        kappas in prop::collection::vec(0.05f64..20.0, 2..5),
        scale in 0.1f64..10.0,
        bump in 0.0f64..1.0,
    ) {
        for f in CurvatureFunction::builtins() {
            let v = f.eval(&kappas).unwrap();
            let scaled: Vec<f64> = kappas.iter().map(|k| k * scale).collect();
            prop_assert!((f.eval(&scaled).unwrap() - scale * v).abs() <= 1e-12 * scale * v);
            let mut up = kappas.clone();
            up[0] += bump + 1e-3;
            prop_assert!(f.eval(&up).unwrap() > v);
            prop_assert!((f.dual().dual().eval(&kappas).unwrap() - v).abs() <= 1e-12 * v);
        }
    }

    #[test]
    fn recentering_a_sphere_keeps_it_a_sphere(r in 0.3f64..1.0, frac in -0.5f64..0.5) {
        let sf = SpaceForm::new(1.0, 2).unwrap();
        let shift = frac * r;
        let p = Profile::sphere(sf, 128, r).unwrap().recenter(shift).unwrap();
        let fit = sphere_fit(&p).unwrap();
        prop_assert!((fit.radius - r).abs() < 1e-8, "{:?}", fit);
        // the origin moved by `shift`, so the centre now sits at `-shift`
        prop_assert!((fit.center + shift).abs() < 1e-8, "{:?}", fit);
        // a moved sphere is still totally umbilic
        let cf = curvature(&p).unwrap();
        let spread = (0..cf.len()).map(|j| (cf.kappa_profile[j] - cf.kappa_rot[j]).abs()).fold(0.0, f64::max);
        prop_assert!(spread < 1e-5, "{spread}");
    }

    #[test]
    fn hsiung_minkowski_on_perturbed_spheres(r in 0.4f64..1.0, a in -0.04f64..0.04, b in -0.02f64..0.02) {
        let sf = SpaceForm::new(1.0, 2).unwrap();
        let p = Profile::from_fn(sf, 256, |phi| r + a * (2.0 * phi).cos() + b * (3.0 * phi).cos()).unwrap();
        for ell in 0..2 {
            prop_assert!(hsiung_minkowski_residual(&p, ell).unwrap() < 1e-6);
        }
    }
}
