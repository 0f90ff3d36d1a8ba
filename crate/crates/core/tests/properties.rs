use proptest::prelude::*;

use ouexact::calibration::{mse_objective, CalibrationProblem, ModelTemplate, OptionQuote, ParameterTransform};
use ouexact::cftp::sample_exact_composite;
use ouexact::ggc::{BaseLaw, DirichletMeanSpec, KernelKind, ScaleVariable};
use ouexact::model::{sample_volatility_step, Factor, ModelSpec, Sampler, Variant};
use ouexact::pricing::black_scholes_call;
use ouexact::stats::Moments;
use ouexact::truncation::{sample_truncated, StickBreaker, TruncationRule};
use ouexact::RandomStream;

fn scale_strategy() -> impl Strategy<Value = ScaleVariable> {
    prop_oneof![
        (0.01f64..2.0).prop_map(|c| ScaleVariable::Constant { c }),
        (0.01f64..2.0, 0.2f64..5.0, 0.05f64..5.0).prop_map(|(c, a, b)| ScaleVariable::ScaledBeta { c, a, b }),
    ]
}

fn model_strategy() -> impl Strategy<Value = ModelSpec> {
    (
        prop_oneof![Just(Variant::OuGamma), Just(Variant::GlOuGgc)],
        -5.0f64..0.0,
        0.05f64..2.0,
        scale_strategy(),
        prop::collection::vec((0.05f64..5.0, 0.0f64..0.1), 1..=2),
    )
        .prop_map(|(variant, rho, theta, scale, fs)| {
            let scale = match (variant, scale) {
                (Variant::OuGamma, s) => ScaleVariable::Constant { c: s.bound() },
                (Variant::GlOuGgc, ScaleVariable::Constant { c }) => ScaleVariable::ScaledBeta { c, a: 1.0, b: 1.0 },
                (_, s) => s,
            };
            let mut factors: Vec<Factor> = fs.into_iter().map(|(lambda, v0)| Factor { lambda, v0 }).collect();
            factors.sort_by(|a, b| b.lambda.total_cmp(&a.lambda));
            // OU-Gamma needs rho * c < 1, which holds for rho <= 0.
            ModelSpec { variant, rho, theta, scale, factors, r: 0.03, q: 0.0 }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residual_is_product_of_complements(delta in 0.01f64..50.0, n in 1usize..300, seed: u64) {
        let mut s = RandomStream::new(seed);
        let mut sticks = StickBreaker::new(delta).unwrap();
        let mut replay = RandomStream::new(seed);
        let mut product = 1.0f64;
        for _ in 0..n {
            sticks.next_weight(&mut s);
            product *= replay.stick(delta).1;
            prop_assert!(sticks.residual() > 0.0);
            prop_assert_eq!(sticks.residual(), product);
        }
        prop_assert!((sticks.weight_sum() + sticks.residual() - 1.0).abs() < 1e-12);
        prop_assert_eq!(sticks.count(), n as u64);
    }

    #[test]
    fn kernels_add_up_per_draw(r in 0.0f64..3.0, u in 0.0f64..1.0, lambda in 0.01f64..10.0, h in 0.01f64..5.0) {
        let unit = KernelKind::Unit.apply(r, u, lambda, h);
        let decay = KernelKind::Decay.apply(r, u, lambda, h);
        let rest = KernelKind::OneMinusDecay.apply(r, u, lambda, h);
        prop_assert!((unit - (decay + rest)).abs() <= 1e-15 * unit.max(1.0));
    }

    #[test]
    fn exact_draws_stay_in_support(delta in 0.05f64..4.0, scale in scale_strategy(), seed: u64) {
        let spec = DirichletMeanSpec::new(delta, KernelKind::OneMinusDecay, 1.0, 1.0, scale).unwrap();
        let mut s = RandomStream::new(seed);
        for _ in 0..20 {
            let (m, _) = sample_exact_composite(&spec, &mut s).unwrap();
            prop_assert!(m >= 0.0 && m <= spec.y_bound());
        }
    }

    #[test]
    fn bounded_stopping_meets_tolerance(delta in 0.05f64..20.0, eps in 1e-16f64..1e-3, seed: u64) {
        let spec = DirichletMeanSpec::new(delta, KernelKind::Unit, 1.0, 1.0, ScaleVariable::ScaledBeta { c: 1.0, a: 1.0, b: 1.0 }).unwrap();
        let rule = TruncationRule::StoppingBounded { epsilon: eps };
        let mut s = RandomStream::new(seed);
        let (m, n) = sample_truncated(&spec, &rule, &mut s).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        // Replaying the same sticks must stop at the same count with the residual below eps.
        let mut replay = RandomStream::new(seed);
        let mut sticks = StickBreaker::new(delta).unwrap();
        while spec.y_bound() * sticks.residual() >= eps {
            sticks.next_weight(&mut replay);
            spec.sample_y(&mut replay);
        }
        prop_assert_eq!(sticks.count(), n);
    }

    #[test]
    fn volatility_steps_are_positive_and_ar1_exact(
        m in model_strategy(),
        dt in 0.01f64..2.0,
        seed: u64,
        n in 1u64..60,
    ) {
        let mut s = RandomStream::new(seed);
        let mut v: Vec<f64> = m.factors.iter().map(|f| f.v0).collect();
        let sampler = Sampler::Truncated(TruncationRule::FixedN { n });
        for _ in 0..3 {
            let step = sample_volatility_step(&m, &v, dt, &mut s, &sampler).unwrap();
            prop_assert!(step.tau >= 0.0 && step.lev >= 0.0);
            let fs = step.factors.unwrap();
            for ((f, fac), vj) in fs.iter().zip(&m.factors).zip(v.iter_mut()) {
                prop_assert!(f.o1 >= 0.0 && f.o2 >= 0.0 && f.tau >= 0.0 && f.v_end >= 0.0);
                let decay = (-fac.lambda * dt).exp();
                prop_assert!((f.v_end - (decay * f.v_start + f.o2)).abs() <= 1e-12 * (1.0 + f.v_end));
                let lhs = fac.lambda * f.tau;
                let rhs = f.v_start - f.v_end + f.o1;
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + f.o1 + f.v_start));
                *vj = f.v_end;
            }
        }
    }

    #[test]
    fn unconstrained_points_map_to_valid_models(
        u in prop::collection::vec(-8.0f64..8.0, 9),
        variant in prop_oneof![Just(Variant::OuGamma), Just(Variant::GlOuGgc)],
        factors in 1usize..=2,
        jump_free: bool,
    ) {
        let t = ParameterTransform::new(ModelTemplate { variant, factors, jump_free });
        let m = t.to_model(&u[..t.dim()], 0.02, 0.01).unwrap();
        prop_assert!(m.validate().is_ok());
        if factors == 2 {
            prop_assert!(m.factors[0].lambda >= m.factors[1].lambda);
        }
        if jump_free {
            prop_assert_eq!(m.theta, 0.0);
        }
    }

    #[test]
    fn transform_round_trips(m in model_strategy()) {
        let template = ModelTemplate { variant: m.variant, factors: m.factors.len(), jump_free: false };
        let mut m = m;
        for f in &mut m.factors {
            f.v0 = f.v0.max(1e-4);
        }
        let t = ParameterTransform::new(template);
        let u = t.from_model(&m).unwrap();
        let back = t.to_model(&u, m.r, m.q).unwrap();
        prop_assert!((back.rho - m.rho).abs() < 1e-9 * m.rho.abs().max(1.0));
        prop_assert!((back.theta - m.theta).abs() < 1e-9);
        prop_assert!((back.scale.bound() - m.scale.bound()).abs() < 1e-9);
        for (a, b) in back.factors.iter().zip(&m.factors) {
            prop_assert!((a.lambda - b.lambda).abs() < 1e-9 * b.lambda);
            prop_assert!((a.v0 - b.v0).abs() < 1e-9);
        }
    }

    #[test]
    fn black_scholes_within_no_arbitrage_bounds(
        spot in 1.0f64..200.0,
        strike in 1.0f64..200.0,
        r in -0.02f64..0.1,
        q in 0.0f64..0.05,
        sigma in 0.0f64..1.5,
        t in 0.01f64..5.0,
    ) {
        let c = black_scholes_call(spot, strike, r, q, sigma, t).unwrap();
        let fwd = spot * (-q * t).exp();
        let lower = (fwd - strike * (-r * t).exp()).max(0.0);
        prop_assert!(c >= lower - 1e-9 * spot);
        prop_assert!(c <= fwd + 1e-9 * spot);
        let higher = black_scholes_call(spot, strike * 1.05, r, q, sigma, t).unwrap();
        prop_assert!(higher <= c + 1e-12 * spot);
    }

    #[test]
    fn moment_merges_match_sequential(xs in prop::collection::vec(-100.0f64..100.0, 2..200), cut in 0usize..200) {
        let cut = cut % xs.len();
        let mut a = Moments::from_slice(&xs[..cut]);
        a.merge(&Moments::from_slice(&xs[cut..]));
        let whole = Moments::from_slice(&xs);
        prop_assert_eq!(a.n, whole.n);
        prop_assert!((a.mean - whole.mean).abs() < 1e-9);
        prop_assert!((a.variance() - whole.variance()).abs() < 1e-7 * (1.0 + whole.variance()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn objective_is_bitwise_deterministic(seed: u64, rho in -5.0f64..-1.0) {
        let problem = CalibrationProblem {
            quotes: vec![
                OptionQuote { strike: 95.0, maturity_years: 0.5, market_price: 7.0 },
                OptionQuote { strike: 105.0, maturity_years: 1.0, market_price: 5.0 },
            ],
            s0: 100.0,
            r: 0.03,
            q: 0.0,
            template: ModelTemplate { variant: Variant::OuGamma, factors: 1, jump_free: false },
            trials: 10_000,
            seed,
            threads: None,
        };
        let mut m = ouexact::model::calibrated(Variant::OuGamma, 1);
        m.rho = rho;
        let a = mse_objective(&problem, &m);
        let b = mse_objective(&problem, &m);
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }
}
