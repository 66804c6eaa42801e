//! Randomized invariants: config round-tripping, operator linearity and
//! homogeneity, closed forms against quadrature, and seeded reproducibility.

use proptest::prelude::*;

use hclab::config::{
    self, BallPlan, ExperimentChoice, FunctionChoice, OutputFormat, RunConfig, parse_number,
};
use hclab::functions::TestFunction;
use hclab::kernels::{CurveSpec, KernelSpec, lp_constant};
use hclab::operators::{OperatorKind, OperatorSpec, apply_u_with, apply_v_with};
use hclab::quadrature::QuadratureConfig;
use hclab::spaces::{BallFamily, SamplingConfig, bmo_estimate_with};
use hclab::weights::{AngularProfile, build_weight};

fn arb_experiment() -> impl Strategy<Value = ExperimentChoice> {
    prop_oneof![
        Just(ExperimentChoice::Constant),
        Just(ExperimentChoice::Apply),
        Just(ExperimentChoice::Norm),
        Just(ExperimentChoice::Bmo),
        Just(ExperimentChoice::Sharpness),
        Just(ExperimentChoice::Commutator),
        Just(ExperimentChoice::Adjoint),
        Just(ExperimentChoice::HardyDemo),
    ]
}

fn arb_operator() -> impl Strategy<Value = OperatorKind> {
    prop_oneof![
        Just(OperatorKind::HardyCesaro),
        Just(OperatorKind::Cesaro),
        Just(OperatorKind::InfiniteHorizon),
        Just(OperatorKind::NdimHardy),
    ]
}

fn arb_kernel() -> impl Strategy<Value = KernelSpec> {
    let unit = prop_oneof![
        (0.0f64..5.0).prop_map(|l| KernelSpec::constant(l).unwrap()),
        (0.0f64..5.0, -0.9f64..3.0).prop_map(|(c, e)| KernelSpec::power(c, e).unwrap()),
        (0.1f64..3.0).prop_map(|o| KernelSpec::riemann_liouville(o).unwrap()),
        prop::collection::vec(0.0f64..3.0, 2..7)
            .prop_map(|v| KernelSpec::tabulated(v).unwrap()),
        (0.0f64..5.0, -0.9f64..2.0, 0.0f64..3.0)
            .prop_map(|(c, e, r)| KernelSpec::power_exp(c, e, r).unwrap()),
    ];
    let half_line = prop_oneof![
        (0.0f64..5.0, -0.9f64..2.0, 0.1f64..3.0).prop_map(|(c, e, r)| {
            KernelSpec::power_exp(c, e, r).unwrap().on_half_line().unwrap()
        }),
        (0.0f64..5.0, -0.9f64..3.0)
            .prop_map(|(c, e)| KernelSpec::power(c, e).unwrap().on_half_line().unwrap()),
    ];
    prop_oneof![4 => unit, 1 => half_line]
}

fn arb_sign() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(-1.0)]
}

fn arb_curve() -> impl Strategy<Value = CurveSpec> {
    prop_oneof![
        (arb_sign(), prop_oneof![0.2f64..3.0, -3.0f64..-0.2])
            .prop_map(|(s, e)| CurveSpec::power(s, e).unwrap()),
        Just(CurveSpec::reciprocal()),
        (
            0.2f64..2.0,
            arb_sign(),
            prop::collection::vec(0.05f64..0.95, 1..4)
        )
            .prop_map(|(e, first, mut flips)| {
                flips.sort_by(f64::total_cmp);
                flips.dedup();
                CurveSpec::sign_changing(e, first, flips).unwrap()
            }),
    ]
}

fn arb_function() -> impl Strategy<Value = FunctionChoice> {
    prop_oneof![
        (0.01f64..0.9).prop_map(|eps| FunctionChoice::OuterExtremal { eps }),
        (0.01f64..0.9).prop_map(|eps| FunctionChoice::InnerExtremal { eps }),
        (-0.9f64..2.0).prop_map(|exponent| FunctionChoice::OuterPower { exponent }),
        (-0.9f64..2.0).prop_map(|exponent| FunctionChoice::InnerPower { exponent }),
        (-0.9f64..2.0).prop_map(|exponent| FunctionChoice::RadialPower { exponent }),
        (0.1f64..5.0).prop_map(|value| FunctionChoice::Constant { value }),
        Just(FunctionChoice::SignWitness),
        Just(FunctionChoice::LogSymbol),
        (0.1f64..5.0).prop_map(|radius| FunctionChoice::BallIndicator { radius }),
    ]
}

fn arb_witness() -> impl Strategy<Value = FunctionChoice> {
    // Only the kinds the compact inline witness form can carry.
    prop_oneof![
        Just(FunctionChoice::SignWitness),
        Just(FunctionChoice::LogSymbol),
        (0.1f64..5.0).prop_map(|value| FunctionChoice::Constant { value }),
        (0.1f64..5.0).prop_map(|radius| FunctionChoice::BallIndicator { radius }),
        (-0.9f64..2.0).prop_map(|exponent| FunctionChoice::RadialPower { exponent }),
    ]
}

fn arb_balls() -> impl Strategy<Value = BallPlan> {
    (0.05f64..0.5, 1.0f64..8.0, 3usize..20, any::<bool>()).prop_map(
        |(r_min, r_max, count, include_origin)| BallPlan {
            r_min,
            r_max,
            count,
            include_origin,
        },
    )
}

fn arb_out_dir() -> impl Strategy<Value = Option<String>> {
    prop_oneof![
        Just(None),
        Just(Some("reports".to_string())),
        Just(Some("out/run-3".to_string())),
        Just(Some("a-b_c.d".to_string())),
    ]
}

prop_compose! {
    fn arb_config()(
        core in (
            arb_experiment(),
            arb_operator(),
            1.0f64..6.0,
            1usize..4,
            0.2f64..3.0,
            -0.5f64..2.0,
            any::<bool>(),
            0.2f64..3.0,
        ),
        pieces in (
            arb_kernel(),
            arb_curve(),
            prop::option::of(arb_function()),
            prop::option::of(arb_function()),
            prop::option::of(arb_function()),
            prop::collection::vec(arb_witness(), 0..4),
            prop::collection::vec(1e-3f64..0.9, 1..8),
            prop::option::of(arb_balls()),
        ),
        tail in (
            1e-12f64..1e-6,
            1e-14f64..1e-8,
            any::<u64>(),
            8usize..64,
            100usize..2000,
            arb_out_dir(),
            prop::sample::subsequence(
                vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
                1..=3,
            ),
        ),
        coords in prop::array::uniform3(-4.0f64..4.0),
    ) -> RunConfig {
        let (experiment, operator, p, dimension, hardy_b, alpha, axis, level) = core;
        let (kernel, curve, symbol, function, partner, witnesses, epsilons, balls) = pieces;
        let (rel_tol, abs_tol, seed, directions, ball_samples, out_dir, formats) = tail;
        let mut config = RunConfig::new(experiment);
        config.operator = operator;
        config.p = p;
        config.dimension = dimension;
        config.hardy_b = hardy_b;
        config.point = coords[..dimension].to_vec();
        config.kernel = kernel;
        config.curve = curve;
        config.alpha = alpha;
        config.angular = if axis {
            AngularProfile::AxisPower
        } else {
            AngularProfile::Constant(level)
        };
        config.symbol = symbol;
        config.witnesses = witnesses;
        config.function = function;
        config.partner = partner;
        config.epsilons = epsilons;
        config.balls = balls;
        config.rel_tol = rel_tol;
        config.abs_tol = abs_tol;
        config.seed = seed;
        config.directions = directions;
        config.ball_samples = ball_samples;
        config.out_dir = out_dir;
        config.formats = formats;
        config
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn config_round_trips_through_its_text_form(config in arb_config()) {
        let text = config::serialize(&config);
        let back = config::parse(&text)
            .unwrap_or_else(|e| panic!("serialized config fails to parse: {e}\n{text}"));
        prop_assert_eq!(&back, &config);
        // A second pass changes nothing: the text form is canonical.
        prop_assert_eq!(config::serialize(&back), text);
    }
}

proptest! {
    #[test]
    fn rational_literals_divide_exactly(num in -100_000i64..100_000, den in 1i64..100_000, flip in any::<bool>()) {
        let den = if flip { -den } else { den };
        let text = format!("{num}/{den}");
        let parsed = parse_number(&text).unwrap();
        prop_assert_eq!(parsed, num as f64 / den as f64);
    }

    #[test]
    fn plain_float_literals_round_trip(v in -1e9f64..1e9) {
        prop_assert_eq!(parse_number(&format!("{v}")).unwrap(), v);
        prop_assert_eq!(parse_number(&format!("{v:e}")).unwrap(), v);
    }

    #[test]
    fn division_by_zero_is_rejected(num in -100i64..100) {
        let text = format!("{num}/0");
        prop_assert!(parse_number(&text).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn unknown_keys_and_sections_are_rejected(
        key in "[a-z][a-z0-9-]{0,10}",
        section in "[a-z][a-z0-9-]{0,10}",
    ) {
        let base = config::serialize(&RunConfig::new(ExperimentChoice::Sharpness));
        // The serialized text ends inside [output]; only dir and formats live there.
        prop_assume!(key != "dir" && key != "formats");
        let with_key = format!("{base}{key} = 1\n");
        prop_assert!(config::parse(&with_key).is_err());

        let known = [
            "experiment", "kernel", "curve", "weight", "sweep",
            "quadrature", "symbol", "function", "partner", "balls", "output",
        ];
        prop_assume!(!known.contains(&section.as_str()));
        let with_section = format!("{base}\n[{section}]\nvalue = 1\n");
        prop_assert!(config::parse(&with_section).is_err());

        let duplicate_key = format!("{base}formats = csv\n");
        prop_assert!(config::parse(&duplicate_key).is_err());
        let duplicate_section = format!("{base}\n[weight]\nalpha = 1\n");
        prop_assert!(config::parse(&duplicate_section).is_err());
    }
}

// ----------------------------------------------------------------------
// operator invariants
// ----------------------------------------------------------------------

fn quick_quadrature() -> QuadratureConfig {
    QuadratureConfig {
        rel_tol: 1e-10,
        ..QuadratureConfig::default()
    }
}

fn arb_operand(n: usize) -> BoxedStrategy<TestFunction> {
    prop_oneof![
        (0.2f64..3.0).prop_map(move |r| TestFunction::ball_indicator(n, r).unwrap()),
        (-0.4f64..1.5).prop_map(move |e| TestFunction::radial_power(n, e).unwrap()),
        (0.1f64..4.0).prop_map(move |v| TestFunction::constant(n, v).unwrap()),
        Just(TestFunction::sign_witness(n).unwrap()),
    ]
    .boxed()
}

prop_compose! {
    fn arb_bounded_spec()(
        n in 1usize..3,
        coef in 0.2f64..3.0,
        kexp in 0.0f64..2.0,
        sign in arb_sign(),
        gamma in 0.3f64..1.5,
    ) -> OperatorSpec {
        let kernel = KernelSpec::power(coef, kexp).unwrap();
        let curve = CurveSpec::power(sign, gamma).unwrap();
        OperatorSpec::hardy_cesaro(kernel, curve, n).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn application_is_linear(
        spec in arb_bounded_spec(),
        pair in (1usize..3).prop_flat_map(|n| (Just(n), arb_operand(n), arb_operand(n))),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        radius in 0.3f64..3.0,
        direction_flip in any::<bool>(),
    ) {
        let (n, f, g) = pair;
        prop_assume!(n == spec.dimension());
        let mut x = vec![0.0; n];
        x[0] = if direction_flip { -radius } else { radius };
        let cfg = quick_quadrature();
        let combined = f.scaled(a).plus(&g.scaled(b)).unwrap();
        for apply in [apply_u_with, apply_v_with] {
            let lhs = apply(&spec, &combined, &x, &cfg).unwrap();
            let rhs = a * apply(&spec, &f, &x, &cfg).unwrap()
                + b * apply(&spec, &g, &x, &cfg).unwrap();
            prop_assert!(
                (lhs - rhs).abs() <= 1e-7 * (1.0 + lhs.abs().max(rhs.abs())),
                "lhs {lhs} vs rhs {rhs}"
            );
        }
    }

    #[test]
    fn homogeneous_inputs_scale_covariantly(
        spec in arb_bounded_spec(),
        degree in -0.4f64..1.2,
        radius in 0.3f64..2.0,
        lambda in 0.25f64..4.0,
    ) {
        let n = spec.dimension();
        let f = TestFunction::radial_power(n, degree).unwrap();
        let mut x = vec![0.0; n];
        x[0] = radius;
        let mut y = x.clone();
        y[0] = radius * lambda;
        let cfg = quick_quadrature();
        let at_x = apply_u_with(&spec, &f, &x, &cfg).unwrap();
        let at_y = apply_u_with(&spec, &f, &y, &cfg).unwrap();
        let predicted = lambda.powf(degree) * at_x;
        prop_assert!(
            (at_y - predicted).abs() <= 1e-7 * (1.0 + at_y.abs().max(predicted.abs())),
            "U f({lambda} x) = {at_y} vs lambda^h U f(x) = {predicted}"
        );
    }

    #[test]
    fn closed_form_constant_matches_the_applied_moment(
        coef in 0.2f64..3.0,
        kexp in 0.0f64..2.5,
        sign in arb_sign(),
        gamma in 0.3f64..2.0,
        n in 1usize..3,
        alpha in 0.0f64..0.8,
        p in 2.2f64..4.0,
    ) {
        // The operator sends |x|^q to M(gamma q) |x|^q; at q = -(n+alpha)/p
        // and |x| = 1 the value is exactly the closed-form norm constant.
        let moment_exponent = kexp - gamma * (n as f64 + alpha) / p;
        prop_assume!(moment_exponent > -0.85);
        let kernel = KernelSpec::power(coef, kexp).unwrap();
        let curve = CurveSpec::power(sign, gamma).unwrap();
        let constant = lp_constant(&kernel, &curve, n, alpha, p)
            .unwrap()
            .value()
            .expect("moment exponent above -1 keeps the constant finite");
        let spec = OperatorSpec::hardy_cesaro(kernel, curve, n).unwrap();
        let q = -(n as f64 + alpha) / p;
        let f = TestFunction::radial_power(n, q).unwrap();
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        let applied = apply_u_with(&spec, &f, &x, &quick_quadrature()).unwrap();
        prop_assert!(
            (applied - constant).abs() <= 1e-6 * (1.0 + constant.abs()),
            "quadrature {applied} vs closed form {constant}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn seeded_bmo_estimates_are_bit_reproducible(seed in any::<u64>()) {
        let f = TestFunction::sign_witness(1).unwrap();
        let w = build_weight(0.5, AngularProfile::Constant(1.0), 1).unwrap();
        let fam = BallFamily::new(1, vec![vec![0.5], vec![1.0]], 0.25, 4.0, 9, true).unwrap();
        let cfg = SamplingConfig {
            quadrature: QuadratureConfig {
                rng_seed: seed,
                ..QuadratureConfig::default()
            },
            directions: 32,
            ball_samples: 500,
            seed,
        };
        let first = bmo_estimate_with(&f, &w, &fam, 1.0, &cfg).unwrap();
        let second = bmo_estimate_with(&f, &w, &fam, 1.0, &cfg).unwrap();
        prop_assert_eq!(first.to_bits(), second.to_bits());
    }
}
