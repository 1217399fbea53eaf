use approx::assert_relative_eq;
use kirchhoff_core::closed_form::*;
use kirchhoff_core::verify::half_line_integral;
use proptest::prelude::*;
use std::f64::consts::PI;

fn spec_strategy() -> impl Strategy<Value = BubbleSpec> {
    (
        0.1f64..10.0,
        0.1f64..10.0,
        0.3f64..3.0,
        prop::array::uniform3(-2.0f64..2.0),
    )
        .prop_map(|(a, b, lambda, x0)| {
            BubbleSpec::new(KirchhoffParams::new(a, b).unwrap(), lambda, x0).unwrap()
        })
}

fn point_near(spec: &BubbleSpec, offset: [f64; 3]) -> [f64; 3] {
    let c = spec.center();
    let l = spec.length_scale();
    [
        c[0] + l * offset[0],
        c[1] + l * offset[1],
        c[2] + l * offset[2],
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_members_solve_the_equation(
        spec in spec_strategy(),
        offset in prop::array::uniform3(-8.0f64..8.0),
    ) {
        let x = point_near(&spec, offset);
        prop_assert!(residual(spec.params(), &spec, &x).abs() < 1e-10);
        let u = spec.eval_u(&x).unwrap();
        let lap = spec.eval_laplacian_u(&x).unwrap();
        prop_assert!((lap + u.powi(5) / spec.c()).abs() <= 1e-12 * (u.powi(5) / spec.c()));
    }

    #[test]
    fn kernel_modes_are_annihilated(
        spec in spec_strategy(),
        offset in prop::array::uniform3(-8.0f64..8.0),
    ) {
        let x = point_near(&spec, offset);
        let u = spec.eval_u(&x).unwrap();
        prop_assert!((spec.a_operator_on_u(&x).unwrap() + 4.0 * u.powi(5)).abs() < 1e-10);
        prop_assert!(spec.a_operator_on_e0(&x).unwrap().abs() < 1e-10);
    }

    #[test]
    fn scaling_relation_holds(a in 1e-3f64..1e3, b in 0.0f64..1e3) {
        let p = KirchhoffParams::new(a, b).unwrap();
        let sc = p.scaling();
        prop_assert!(sc.relative_defect(p) < 1e-12);
        prop_assert!(sc.sqrt_c > b * sc.grad_q_sq);
        prop_assert!(p.kappa() < 0.5);
    }

    #[test]
    fn grad_norm_ignores_lambda_and_center(spec in spec_strategy(), lambda in 0.1f64..5.0) {
        let moved = BubbleSpec::new(spec.params(), lambda, [0.5, 0.5, -1.0]).unwrap();
        prop_assert_eq!(moved.grad_u_norm_sq(), spec.grad_u_norm_sq());
    }

    #[test]
    fn translation_covariance(spec in spec_strategy(), offset in prop::array::uniform3(-3.0f64..3.0)) {
        let centred = BubbleSpec::new(spec.params(), spec.lambda(), [0.0; 3]).unwrap();
        let c = spec.center();
        let x = point_near(&spec, offset);
        let shifted = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
        let lhs = spec.eval_u(&x).unwrap();
        let rhs = centred.eval_u(&shifted).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs);
    }
}

#[test]
fn grad_q_equals_q6_integral() {
    let q = BubbleSpec::radial(KirchhoffParams::new(1.0, 0.0).unwrap()).unwrap();
    let grad =
        4.0 * PI * half_line_integral(|r| q.du_radial(r).powi(2) * r * r, 64.0, 1e-13).unwrap();
    let sixth =
        4.0 * PI * half_line_integral(|r| q.u_radial(r).powi(6) * r * r, 64.0, 1e-13).unwrap();
    assert_relative_eq!(grad, GRAD_Q_NORM_SQ, max_relative = 1e-12);
    assert_relative_eq!(sixth, grad, max_relative = 1e-10);
    assert_relative_eq!(
        gradq_norm_sq(),
        3.0 * 3f64.sqrt() * PI * PI / 4.0,
        max_relative = 1e-15
    );
}

#[test]
fn grad_u_norm_matches_quadrature() {
    let spec = BubbleSpec::new(KirchhoffParams::new(1.0, 1.0).unwrap(), 1.7, [0.0; 3]).unwrap();
    let quad = 4.0
        * PI
        * half_line_integral(
            |r| spec.du_radial(r).powi(2) * r * r,
            64.0 * spec.length_scale(),
            1e-13,
        )
        .unwrap();
    assert_relative_eq!(quad, spec.grad_u_norm_sq(), max_relative = 1e-11);
    // √c·‖∇Q‖² with √c = 12.898520476665796271 from a 30-digit evaluation.
    assert_relative_eq!(
        spec.grad_u_norm_sq(),
        165.371_830_486_966_84,
        max_relative = 1e-13
    );
}

#[test]
fn reference_constants() {
    // 30-digit evaluations of the quadratic root.
    let cases = [
        (
            2.0,
            0.5,
            6.708_620_008_370_506,
            45.005_582_416_709_09,
            0.477_780_534_184_827_4,
        ),
        (
            100.0,
            0.01,
            10.064_310_431_215_346,
            101.290_344_455_870_01,
            0.006_369_533_358_790_131,
        ),
    ];
    for (a, b, sqrt_c, c, kappa) in cases {
        let p = KirchhoffParams::new(a, b).unwrap();
        let sc = p.scaling();
        assert_relative_eq!(sc.sqrt_c, sqrt_c, max_relative = 1e-14);
        assert_relative_eq!(sc.c, c, max_relative = 1e-14);
        assert_relative_eq!(p.kappa(), kappa, max_relative = 1e-12);
    }
    let huge = KirchhoffParams::new(1.0, 1000.0).unwrap();
    assert_relative_eq!(
        huge.scaling().c,
        164_377_843.119_879_1,
        max_relative = 1e-13
    );
}

#[test]
fn unit_profile_point() {
    let spec = BubbleSpec::radial(KirchhoffParams::new(1.0, 1.0).unwrap()).unwrap();
    let x = [spec.constants().sqrt_c, 0.0, 0.0];
    assert_relative_eq!(spec.eval_u(&x).unwrap(), 0.930_604_9, epsilon = 1e-7);
}

#[test]
fn unscaled_q_is_not_a_solution() {
    let p = KirchhoffParams::new(1.0, 1.0).unwrap();
    for x in [[0.0, 0.0, 0.0], [1.0, 2.0, -0.5]] {
        let q = StandardBubble.value(&x);
        let expected = GRAD_Q_NORM_SQ * q.powi(5);
        assert_relative_eq!(
            residual(p, &StandardBubble, &x),
            expected,
            max_relative = 1e-12
        );
    }
    let spec = BubbleSpec::radial(p).unwrap();
    let doubled = Scaled {
        factor: 2.0,
        inner: spec,
    };
    assert!(residual(p, &doubled, &[0.0; 3]) < 0.0);
}

#[test]
fn serde_round_trip_and_validation() {
    let spec = BubbleSpec::new(
        KirchhoffParams::new(2.0, 0.5).unwrap(),
        0.75,
        [1.0, -2.0, 0.5],
    )
    .unwrap();
    let json = serde_json::to_string(&spec).unwrap();
    let back: BubbleSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back.c(), spec.c());
    assert_eq!(back.x0(), spec.x0());
    let bad = json.replace("0.75", "-0.75");
    assert!(serde_json::from_str::<BubbleSpec>(&bad).is_err());
}
