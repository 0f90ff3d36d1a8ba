//! Heavy-tailed GGC example laws, used for validation only.
//!
//! `Sigma_alpha = gamma_{1-alpha} / U^{1/alpha}` has density
//! `alpha / Gamma(1-alpha) * x^{-alpha-1} (1 - e^{-x})` and no first moment.
//! Its exponential tilt by `c_et` is sampled by rejection from it.

use statrs::function::gamma::{gamma, gamma_lr};

use crate::error::{domain, Result};
use crate::rng::RandomStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GgcExampleSpec {
    pub alpha_s: f64,
    pub c_et: f64,
}

impl GgcExampleSpec {
    pub fn new(alpha_s: f64, c_et: f64) -> Result<Self> {
        check_alpha(alpha_s)?;
        if !(c_et > 0.0 && c_et.is_finite()) {
            return Err(domain(format!("tilting constant must be positive, got {c_et}")));
        }
        Ok(Self { alpha_s, c_et })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("stable index must lie in (0, 1), got {alpha}")))
    }
}

/// `gamma / u^{1/alpha}`; `u = 1` returns the gamma draw itself.
#[inline]
pub fn bfry_from_parts(gamma_draw: f64, u: f64, alpha: f64) -> f64 {
    gamma_draw / u.powf(1.0 / alpha)
}

pub fn sample_bfry(alpha: f64, stream: &mut RandomStream) -> Result<f64> {
    check_alpha(alpha)?;
    let g = stream.std_gamma(1.0 - alpha);
    Ok(bfry_from_parts(g, stream.uniform_open(), alpha))
}

/// Tilted draw together with the number of proposals it took.
pub fn sample_tilted_bfry_counted(
    alpha: f64,
    c_et: f64,
    stream: &mut RandomStream,
) -> Result<(f64, u64)> {
    GgcExampleSpec::new(alpha, c_et)?;
    let mut proposals = 0;
    loop {
        proposals += 1;
        let x = sample_bfry(alpha, stream)?;
        if stream.uniform() < (-c_et * x).exp() {
            return Ok((x, proposals));
        }
    }
}

pub fn sample_tilted_bfry(alpha: f64, c_et: f64, stream: &mut RandomStream) -> Result<f64> {
    sample_tilted_bfry_counted(alpha, c_et, stream).map(|(x, _)| x)
}

/// Expected acceptance probability of the tilting rejection step,
/// `E[exp(-c Sigma_alpha)] = (c + 1)^alpha - c^alpha`.
pub fn tilted_acceptance_rate(alpha: f64, c_et: f64) -> f64 {
    (c_et + 1.0).powf(alpha) - c_et.powf(alpha)
}

/// CDF of `Sigma_alpha`, obtained by integrating the density by parts:
/// `P(1 - alpha, x) - x^{-alpha} (1 - e^{-x}) / Gamma(1 - alpha)`.
pub fn bfry_cdf(alpha: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 1.0 - alpha;
    (gamma_lr(a, x) - x.powf(-alpha) * -(-x).exp_m1() / gamma(a)).clamp(0.0, 1.0)
}

/// CDF of the exponentially tilted law with density proportional to
/// `x^{-alpha-1} e^{-c x} (1 - e^{-x})`.
pub fn tilted_bfry_cdf(alpha: f64, c_et: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 1.0 - alpha;
    let c1 = c_et + 1.0;
    let boundary = x.powf(-alpha) * ((-c_et * x).exp() - (-c1 * x).exp()) / gamma(a);
    let body = c1.powf(alpha) * gamma_lr(a, c1 * x) - c_et.powf(alpha) * gamma_lr(a, c_et * x);
    ((body - boundary) / tilted_acceptance_rate(alpha, c_et)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bfry_density(alpha: f64, x: f64) -> f64 {
        alpha / gamma(1.0 - alpha) * x.powf(-alpha - 1.0) * -(-x).exp_m1()
    }

    // Composite Simpson after x = t^m with m = 2 / (1 - alpha), which turns
    // the x^{-alpha} singularity at the origin into a smooth integrand.
    fn integrate_density(f: impl Fn(f64) -> f64, upper: f64, alpha: f64) -> f64 {
        let n = 20_000;
        let m = 2.0 / (1.0 - alpha);
        let b = upper.powf(1.0 / m);
        let h = b / n as f64;
        let g = |t: f64| if t == 0.0 { 0.0 } else { f(t.powf(m)) * m * t.powf(m - 1.0) };
        let mut acc = g(0.0) + g(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn closed_form_cdf_matches_quadrature() {
        for &alpha in &[0.3, 0.5, 0.8] {
            for &x in &[0.05, 0.7, 3.0, 25.0] {
                let q = integrate_density(|t| bfry_density(alpha, t), x, alpha);
                assert!((q - bfry_cdf(alpha, x)).abs() < 1e-5, "alpha {alpha} x {x}");
            }
        }
        let (alpha, c) = (0.5, 1.0);
        let norm = alpha / (tilted_acceptance_rate(alpha, c) * gamma(1.0 - alpha));
        for &x in &[0.1, 1.0, 4.0] {
            let q = integrate_density(
                |t| norm * t.powf(-alpha - 1.0) * (-c * t).exp() * -(-t).exp_m1(),
                x,
                alpha,
            );
            assert!((q - tilted_bfry_cdf(alpha, c, x)).abs() < 1e-5, "x {x}");
        }
    }

    #[test]
    fn forced_unit_uniform_returns_gamma() {
        assert_eq!(bfry_from_parts(0.37, 1.0, 0.5), 0.37);
    }

    #[test]
    fn domain_checks() {
        let mut s = RandomStream::new(1);
        assert!(sample_bfry(0.0, &mut s).is_err());
        assert!(sample_bfry(1.0, &mut s).is_err());
        assert!(sample_tilted_bfry(0.5, 0.0, &mut s).is_err());
        assert!(GgcExampleSpec::new(0.5, 2.0).is_ok());
    }

    #[test]
    fn acceptance_rate_matches_theory() {
        let mut s = RandomStream::new(2);
        let (alpha, c) = (0.5, 1.0);
        let draws = 200_000;
        let proposals: u64 = (0..draws)
            .map(|_| sample_tilted_bfry_counted(alpha, c, &mut s).unwrap().1)
            .sum();
        let rate = draws as f64 / proposals as f64;
        let expect = tilted_acceptance_rate(alpha, c);
        assert!((rate - expect).abs() < 0.005, "rate {rate} vs {expect}");
    }

    #[test]
    fn tail_index_via_hill_estimator() {
        let mut s = RandomStream::new(3);
        let alpha = 0.5;
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| sample_bfry(alpha, &mut s).unwrap()).collect();
        xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let k = 2_000;
        let hill = xs[..k].iter().map(|x| (x / xs[k]).ln()).sum::<f64>() / k as f64;
        let index = 1.0 / hill;
        assert!((index - alpha).abs() < 0.05, "tail index {index}");
    }
}
