//! Plain (PSP) and conditional Black-Scholes (FSP) Monte Carlo estimators.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::mc;
use crate::model::{kappa, sample_path, sample_volatility_step, ModelSpec, Sampler};
use crate::model::simulate::{return_drift, superposed_step};
use crate::rng::RandomStream;
use crate::stats::Moments;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EuropeanCall {
    pub strike: f64,
    pub maturity: f64,
}

impl EuropeanCall {
    pub fn validate(&self) -> Result<()> {
        if self.strike > 0.0 && self.maturity > 0.0 && self.strike.is_finite() && self.maturity.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidOption(format!("{self:?}")))
        }
    }
}

/// Pays `(S(t2) - k S(t1))^+` at `t2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardStartOption {
    pub k: f64,
    pub t1: f64,
    pub t2: f64,
}

impl ForwardStartOption {
    pub fn validate(&self) -> Result<()> {
        if self.k > 0.0 && self.t1 > 0.0 && self.t2 > self.t1 && self.t2.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidOption(format!("{self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "PSP")]
    Psp,
    #[serde(rename = "FSP")]
    Fsp,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub estimate: f64,
    pub std_error: f64,
    pub trials: u64,
    pub estimator: Estimator,
    /// Wall-clock time; excluded from serialized output to keep it reproducible.
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl MonteCarloResult {
    fn from_moments(m: &Moments, estimator: Estimator, started: Instant) -> Self {
        Self {
            estimate: m.mean,
            std_error: m.std_error(),
            trials: m.n,
            estimator,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    pub sampler: Sampler,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            threads: None,
            sampler: Sampler::Exact,
        }
    }

    pub fn with_sampler(self, sampler: Sampler) -> Self {
        Self { sampler, ..self }
    }

    pub fn with_threads(self, threads: Option<usize>) -> Self {
        Self { threads, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn black_scholes_call(spot: f64, strike: f64, rate: f64, dividend: f64, sigma: f64, tenor: f64) -> Result<f64> {
    if !(spot > 0.0 && strike > 0.0 && tenor > 0.0) || !(sigma >= 0.0) {
        return Err(Error::Domain(format!(
            "Black-Scholes needs positive spot, strike and tenor and sigma >= 0 (spot {spot}, strike {strike}, tenor {tenor}, sigma {sigma})"
        )));
    }
    let fwd_spot = spot * (-dividend * tenor).exp();
    let pv_strike = strike * (-rate * tenor).exp();
    let vol = sigma * tenor.sqrt();
    if vol == 0.0 {
        return Ok((fwd_spot - pv_strike).max(0.0));
    }
    let d1 = (fwd_spot / pv_strike).ln() / vol + vol / 2.0;
    let d2 = d1 - vol;
    Ok(fwd_spot * normal_cdf(d1) - pv_strike * normal_cdf(d2))
}

fn run(cfg: &McConfig, width: usize, f: impl Fn(&mut RandomStream, &mut [f64]) -> Result<()> + Sync + Send) -> Result<Vec<Moments>> {
    cfg.validate()?;
    let root = RandomStream::new(cfg.seed);
    mc::with_threads(cfg.threads, || mc::simulate(cfg.trials, &root, width, &f))?
}

/// Prices calls at several strikes sharing one maturity from the same draws.
pub fn price_european_strikes(
    model: &ModelSpec,
    s0: f64,
    strikes: &[f64],
    maturity: f64,
    cfg: &McConfig,
    estimator: Estimator,
) -> Result<Vec<MonteCarloResult>> {
    let started = Instant::now();
    model.validate()?;
    for &k in strikes {
        EuropeanCall { strike: k, maturity }.validate()?;
    }
    if !(s0 > 0.0) {
        return Err(Error::Domain("spot must be positive".into()));
    }
    let lk = model.lambda() * kappa(model)?;
    let discount = (-model.r * maturity).exp();
    let moments = run(cfg, strikes.len(), |stream, out| {
        let step = superposed_step(model, maturity, stream, &cfg.sampler)?;
        match estimator {
            Estimator::Psp => {
                let mu = return_drift(model, maturity, step.tau, step.lev)?;
                let s_t = s0 * (mu + step.tau.sqrt() * stream.normal()).exp();
                for (o, &k) in out.iter_mut().zip(strikes) {
                    *o = discount * (s_t - k).max(0.0);
                }
            }
            Estimator::Fsp => {
                let spot = s0 * (-lk * maturity + model.rho * step.lev).exp();
                let sigma = (step.tau / maturity).sqrt();
                for (o, &k) in out.iter_mut().zip(strikes) {
                    *o = black_scholes_call(spot, k, model.r, model.q, sigma, maturity)?;
                }
            }
        }
        Ok(())
    })?;
    Ok(moments
        .iter()
        .map(|m| MonteCarloResult::from_moments(m, estimator, started))
        .collect())
}

pub fn price_european(
    model: &ModelSpec,
    s0: f64,
    option: &EuropeanCall,
    cfg: &McConfig,
    estimator: Estimator,
) -> Result<MonteCarloResult> {
    option.validate()?;
    Ok(price_european_strikes(model, s0, &[option.strike], option.maturity, cfg, estimator)?[0])
}

pub fn price_forward_start(
    model: &ModelSpec,
    s0: f64,
    option: &ForwardStartOption,
    cfg: &McConfig,
    estimator: Estimator,
) -> Result<MonteCarloResult> {
    let started = Instant::now();
    model.validate()?;
    option.validate()?;
    let ForwardStartOption { k, t1, t2 } = *option;
    let dt2 = t2 - t1;
    let lk = model.lambda() * kappa(model)?;
    let v0: Vec<f64> = model.factors.iter().map(|f| f.v0).collect();
    let moments = run(cfg, 1, |stream, out| {
        let first = sample_volatility_step(model, &v0, t1, stream, &cfg.sampler)?;
        let v1: Vec<f64> = first
            .factors
            .as_ref()
            .expect("path steps track factor volatilities")
            .iter()
            .map(|f| f.v_end)
            .collect();
        let mu1 = return_drift(model, t1, first.tau, first.lev)?;
        let s1 = s0 * (mu1 + first.tau.sqrt() * stream.normal()).exp();
        let second = sample_volatility_step(model, &v1, dt2, stream, &cfg.sampler)?;
        out[0] = match estimator {
            Estimator::Psp => {
                let mu2 = return_drift(model, dt2, second.tau, second.lev)?;
                let s2 = s1 * (mu2 + second.tau.sqrt() * stream.normal()).exp();
                (-model.r * t2).exp() * (s2 - k * s1).max(0.0)
            }
            Estimator::Fsp => {
                let spot = (-lk * dt2 + model.rho * second.lev).exp();
                let sigma = (second.tau / dt2).sqrt();
                (-model.r * t1).exp() * s1 * black_scholes_call(spot, k, model.r, model.q, sigma, dt2)?
            }
        };
        Ok(())
    })?;
    Ok(MonteCarloResult::from_moments(&moments[0], estimator, started))
}

/// Plain simulation price of a payoff on the price vector at `times`. The
/// payoff is responsible for its own discounting.
pub fn price_path_dependent<F>(
    model: &ModelSpec,
    s0: f64,
    times: &[f64],
    payoff: F,
    cfg: &McConfig,
) -> Result<MonteCarloResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let started = Instant::now();
    model.validate()?;
    let moments = run(cfg, 1, |stream, out| {
        let path = sample_path(model, s0, times, stream, &cfg.sampler)?;
        let prices: Vec<f64> = path.iter().map(|p| p.price).collect();
        out[0] = payoff(&prices);
        Ok(())
    })?;
    Ok(MonteCarloResult::from_moments(&moments[0], Estimator::Psp, started))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{calibrated, unit_ou_gamma, Variant};

    #[test]
    fn black_scholes_reference_values() {
        assert_eq!(black_scholes_call(110.0, 100.0, 0.0, 0.0, 0.0, 1.0).unwrap(), 10.0);
        let atm = black_scholes_call(100.0, 100.0, 0.0, 0.0, 0.2, 1.0).unwrap();
        assert!((atm - 7.965567455).abs() < 1e-8);
        let v = black_scholes_call(100.0, 95.0, 0.0319, 0.01, 0.25, 0.5).unwrap();
        assert!((v - 10.21460949711392).abs() < 1e-10);
        let v = black_scholes_call(1.0, 1.1, 0.05, 0.02, 0.15, 2.0).unwrap();
        assert!((v - 0.06648795823377535).abs() < 1e-12);
        let free = black_scholes_call(100.0, 1e-12, 0.0, 0.03, 0.3, 2.0).unwrap();
        assert!((free - 100.0 * (-0.06f64).exp()).abs() < 1e-9);
        assert!(black_scholes_call(0.0, 1.0, 0.0, 0.0, 0.2, 1.0).is_err());
        assert!(black_scholes_call(1.0, 1.0, 0.0, 0.0, 0.2, 0.0).is_err());
    }

    #[test]
    fn jump_free_fsp_is_black_scholes() {
        let mut m = unit_ou_gamma(-1.0);
        m.theta = 0.0;
        m.factors[0].v0 = 0.04;
        m.r = 0.03;
        let opt = EuropeanCall { strike: 95.0, maturity: 0.75 };
        let r = price_european(&m, 100.0, &opt, &McConfig::new(2_000, 1), Estimator::Fsp).unwrap();
        let sigma = (m.deterministic_tau(0.75) / 0.75).sqrt();
        let bs = black_scholes_call(100.0, 95.0, 0.03, 0.0, sigma, 0.75).unwrap();
        assert!((r.estimate / bs - 1.0).abs() < 1e-10);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn fsp_draws_no_terminal_normal() {
        let m = calibrated(Variant::OuGamma, 1);
        let mut s = RandomStream::new(3);
        let before = s.normals_drawn();
        superposed_step(&m, 1.0, &mut s, &Sampler::Exact).unwrap();
        assert_eq!(s.normals_drawn(), before);
    }

    #[test]
    fn psp_and_fsp_agree() {
        let m = calibrated(Variant::OuGamma, 1);
        let opt = EuropeanCall { strike: 100.0, maturity: 0.5 };
        let cfg = McConfig::new(40_000, 7);
        let a = price_european(&m, 100.0, &opt, &cfg, Estimator::Psp).unwrap();
        let b = price_european(&m, 100.0, &opt, &cfg, Estimator::Fsp).unwrap();
        let tol = 3.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < tol, "{a:?} {b:?}");
        assert!(b.std_error < a.std_error);
    }

    #[test]
    fn strike_ladder_is_monotone() {
        let m = calibrated(Variant::GlOuGgc, 1);
        let strikes = [80.0, 90.0, 100.0, 110.0, 120.0];
        let res = price_european_strikes(&m, 100.0, &strikes, 0.5, &McConfig::new(5_000, 2), Estimator::Psp).unwrap();
        assert!(res.windows(2).all(|w| w[1].estimate <= w[0].estimate));
    }

    #[test]
    fn constant_payoff_has_zero_error() {
        let m = unit_ou_gamma(0.0);
        let r = price_path_dependent(&m, 1.0, &[0.5, 1.0], |_| 2.5, &McConfig::new(100, 1)).unwrap();
        assert_eq!((r.estimate, r.std_error), (2.5, 0.0));
    }

    #[test]
    fn forward_start_worthless_for_huge_k() {
        let m = calibrated(Variant::OuGamma, 1);
        let opt = ForwardStartOption { k: 1e6, t1: 1.0, t2: 2.0 };
        let r = price_forward_start(&m, 100.0, &opt, &McConfig::new(1_000, 1), Estimator::Fsp).unwrap();
        assert!(r.estimate < 1e-12);
    }

    #[test]
    fn option_validation() {
        assert!(EuropeanCall { strike: 0.0, maturity: 1.0 }.validate().is_err());
        assert!(ForwardStartOption { k: 1.0, t1: 1.0, t2: 1.0 }.validate().is_err());
    }
}
