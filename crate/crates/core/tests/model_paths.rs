//! Model-level cross-checks between samplers and against closed forms.

use ouexact::mc;
use ouexact::model::{
    sample_path, sample_superposed_transition, sample_transition, unit_ou_gamma, Factor, ModelSpec, Sampler, Variant,
};
use ouexact::ggc::ScaleVariable;
use ouexact::stats::Moments;
use ouexact::truncation::TruncationRule;
use ouexact::RandomStream;

fn combined(a: &Moments, b: &Moments) -> (f64, f64) {
    let mean_se = a.std_error().hypot(b.std_error());
    let var_se = a.variance_std_error().hypot(b.variance_std_error());
    (mean_se, var_se)
}

fn assert_same(label: &str, a: &Moments, b: &Moments) {
    let (mse, vse) = combined(a, b);
    assert!((a.mean - b.mean).abs() <= 4.0 * mse, "{label} mean: {} vs {} ({mse})", a.mean, b.mean);
    assert!(
        (a.variance() - b.variance()).abs() <= 4.0 * vse,
        "{label} variance: {} vs {} ({vse})",
        a.variance(),
        b.variance()
    );
}

fn transition_moments(model: &ModelSpec, sampler: Sampler, n: u64, seed: u64, superposed: bool) -> Vec<Moments> {
    mc::simulate(n, &RandomStream::new(seed), 2, |s, out| {
        let (_, d) = if superposed {
            sample_superposed_transition(model, 1.0, 1.0, s, &sampler)?
        } else {
            sample_transition(model, 1.0, 1.0, s, &sampler)?
        };
        out[0] = d.tau;
        out[1] = d.log_return;
        Ok(())
    })
    .unwrap()
}

#[test]
fn exact_and_truncated_ou_gamma_agree() {
    let mut m = unit_ou_gamma(-1.0);
    m.factors[0].v0 = 0.5;
    let exact = transition_moments(&m, Sampler::Exact, 1_000_000, 21, false);
    for rule in [TruncationRule::FixedN { n: 100 }, TruncationRule::default()] {
        let approx = transition_moments(&m, Sampler::Truncated(rule), 1_000_000, 22, false);
        assert_same("tau", &exact[0], &approx[0]);
        assert_same("log-return", &exact[1], &approx[1]);
    }
}

#[test]
fn superposed_draw_matches_per_factor_sum() {
    let two = |variant, scale| ModelSpec {
        variant,
        rho: -1.0,
        theta: 1.0,
        scale,
        factors: vec![Factor { lambda: 2.0, v0: 0.3 }, Factor { lambda: 0.3, v0: 0.1 }],
        r: 0.0,
        q: 0.0,
    };
    let models = [
        two(Variant::OuGamma, ScaleVariable::Constant { c: 0.5 }),
        two(Variant::GlOuGgc, ScaleVariable::ScaledBeta { c: 1.0, a: 1.0, b: 2.0 }),
    ];
    for (i, m) in models.iter().enumerate() {
        let per_factor = transition_moments(m, Sampler::Exact, 200_000, 30 + i as u64, false);
        let superposed = transition_moments(m, Sampler::Exact, 200_000, 40 + i as u64, true);
        assert_same("tau", &per_factor[0], &superposed[0]);
        assert_same("log-return", &per_factor[1], &superposed[1]);
    }
}

/// Sample `Cov(y_1, y_2^2)` and its standard error over unit steps.
fn leverage_covariance(model: &ModelSpec, n: u64, seed: u64, stationary_c: Option<f64>) -> (f64, f64) {
    let pairs = mc::collect(n, &RandomStream::new(seed), |s| {
        let m = match stationary_c {
            Some(c) => model.with_v0(&[c * s.gamma(model.theta, 1.0)?]),
            None => model.clone(),
        };
        let path = sample_path(&m, 1.0, &[1.0, 2.0], s, &Sampler::Exact)?;
        let y1 = path[0].price.ln();
        let y2 = (path[1].price / path[0].price).ln();
        Ok((y1, y2 * y2))
    })
    .unwrap();
    let nf = n as f64;
    let m1 = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let m2 = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let z = Moments::from_slice(&pairs.iter().map(|p| (p.0 - m1) * (p.1 - m2)).collect::<Vec<_>>());
    (z.mean * nf / (nf - 1.0), z.std_error())
}

#[test]
fn negative_rho_gives_negative_leverage_covariance() {
    let mut m = unit_ou_gamma(-1.0);
    m.scale = ScaleVariable::Constant { c: 0.2 };
    m.factors[0].v0 = 0.2;
    let (cov, se) = leverage_covariance(&m, 1_000_000, 51, None);
    assert!(cov + 4.0 * se < 0.0, "cov {cov} (s.e. {se})");
}

#[test]
fn gamma_leveraged_covariance_matches_closed_form() {
    // Constant R = c, theta = lambda = 1, rho = -1, with r chosen so the
    // one-step log-return has mean zero and v0 drawn from Gamma(theta, c).
    let (c, theta, lambda, rho) = (0.05, 1.0, 1.0, -1.0);
    let mut m = ModelSpec {
        variant: Variant::GlOuGgc,
        rho,
        theta,
        scale: ScaleVariable::Constant { c },
        factors: vec![Factor { lambda, v0: 0.0 }],
        r: 0.0,
        q: 0.0,
    };
    m.r = lambda * m.kappa().unwrap() + theta * c / 2.0 - rho * theta * lambda;
    let (cov, se) = leverage_covariance(&m, 1_000_000, 52, Some(c));
    let decay = 1.0 - (-lambda).exp();
    let closed = rho * theta * c * decay * decay / lambda;
    assert!(cov < 0.0);
    assert!((cov - closed).abs() <= 4.0 * se, "cov {cov} vs {closed} (s.e. {se})");
}
