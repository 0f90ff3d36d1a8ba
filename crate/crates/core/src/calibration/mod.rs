//! Least-squares fit of model parameters to call quotes.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ggc::ScaleVariable;
use crate::model::{Factor, ModelSpec, Variant};
use crate::pricing::{price_european_strikes, Estimator, McConfig};

pub use simplex::{nelder_mead, NelderMeadConfig, NelderMeadResult};

/// Smallest simulation budget accepted per objective evaluation.
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionQuote {
    pub strike: f64,
    pub maturity_years: f64,
    pub market_price: f64,
}

/// Which parameters are free during a fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTemplate {
    pub variant: Variant,
    pub factors: usize,
    /// Fix `theta = 0`, leaving only the deterministic volatility term structure.
    #[serde(default)]
    pub jump_free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProblem {
    pub quotes: Vec<OptionQuote>,
    pub s0: f64,
    pub r: f64,
    pub q: f64,
    pub template: ModelTemplate,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl CalibrationProblem {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProblem(m));
        if self.quotes.is_empty() {
            return bad("no quotes".into());
        }
        for q in &self.quotes {
            if !(q.strike > 0.0 && q.maturity_years > 0.0 && q.market_price > 0.0) {
                return bad(format!("quote fields must be positive: {q:?}"));
            }
        }
        if !(self.s0 > 0.0) {
            return bad("s0 must be positive".into());
        }
        if self.trials < MIN_TRIALS {
            return bad(format!("trials must be at least {MIN_TRIALS}"));
        }
        if !(1..=2).contains(&self.template.factors) {
            return bad("factor count must be 1 or 2".into());
        }
        Ok(())
    }

    /// Quotes grouped by maturity: `(maturity, [(quote index, strike)])`.
    fn maturity_groups(&self) -> Vec<(f64, Vec<(usize, f64)>)> {
        let mut groups: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
        for (i, q) in self.quotes.iter().enumerate() {
            match groups.iter_mut().find(|g| g.0 == q.maturity_years) {
                Some(g) => g.1.push((i, q.strike)),
                None => groups.push((q.maturity_years, vec![(i, q.strike)])),
            }
        }
        groups
    }

    fn pricing_config(&self) -> McConfig {
        McConfig::new(self.trials, self.seed).with_threads(self.threads)
    }
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Map between unconstrained simplex coordinates and model parameters.
///
/// Layout: `[ln(-rho), ln theta, ln c, (ln alpha, ln beta), ln v0_1, ln lambda_1,
/// (ln v0_2, logit(lambda_2 / lambda_1))]`; the jump-free template keeps only
/// the volatility coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParameterTransform {
    pub template: ModelTemplate,
}

impl ParameterTransform {
    pub fn new(template: ModelTemplate) -> Self {
        Self { template }
    }

    fn jump_dims(&self) -> usize {
        match (self.template.jump_free, self.template.variant) {
            (true, _) => 0,
            (false, Variant::OuGamma) => 3,
            (false, Variant::GlOuGgc) => 5,
        }
    }

    pub fn dim(&self) -> usize {
        self.jump_dims() + 2 * self.template.factors
    }

    /// Model parameters for coordinates `u`, with market rates `r` and `q`.
    pub fn to_model(&self, u: &[f64], r: f64, q: f64) -> Result<ModelSpec> {
        if u.len() != self.dim() {
            return Err(Error::Domain(format!("expected {} coordinates, got {}", self.dim(), u.len())));
        }
        let (rho, theta, scale) = if self.template.jump_free {
            let scale = match self.template.variant {
                Variant::OuGamma => ScaleVariable::Constant { c: 1.0 },
                Variant::GlOuGgc => ScaleVariable::ScaledBeta { c: 1.0, a: 1.0, b: 1.0 },
            };
            (0.0, 0.0, scale)
        } else {
            let c = u[2].exp();
            let scale = match self.template.variant {
                Variant::OuGamma => ScaleVariable::Constant { c },
                Variant::GlOuGgc => ScaleVariable::ScaledBeta { c, a: u[3].exp(), b: u[4].exp() },
            };
            (-u[0].exp(), u[1].exp(), scale)
        };
        let vol = &u[self.jump_dims()..];
        let lambda1 = vol[1].exp();
        let mut factors = vec![Factor { lambda: lambda1, v0: vol[0].exp() }];
        if self.template.factors == 2 {
            factors.push(Factor {
                lambda: lambda1 * sigmoid(vol[3]),
                v0: vol[2].exp(),
            });
        }
        Ok(ModelSpec {
            variant: self.template.variant,
            rho,
            theta,
            scale,
            factors,
            r,
            q,
        })
    }

    pub fn from_model(&self, m: &ModelSpec) -> Result<Vec<f64>> {
        if m.factors.len() != self.template.factors || m.variant != self.template.variant {
            return Err(Error::Domain("model does not match the calibration template".into()));
        }
        let positive = |x: f64, name: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(x.ln())
            } else {
                Err(Error::Domain(format!("{name} must be positive to enter the simplex, got {x}")))
            }
        };
        let mut u = Vec::with_capacity(self.dim());
        if !self.template.jump_free {
            u.push(positive(-m.rho, "-rho")?);
            u.push(positive(m.theta, "theta")?);
            match m.scale {
                ScaleVariable::Constant { c } => u.push(positive(c, "c")?),
                ScaleVariable::ScaledBeta { c, a, b } => {
                    u.push(positive(c, "c")?);
                    if self.template.variant == Variant::GlOuGgc {
                        u.push(positive(a, "alpha")?);
                        u.push(positive(b, "beta")?);
                    }
                }
            }
            if u.len() != self.jump_dims() {
                return Err(Error::Domain("scale law does not match the template variant".into()));
            }
        }
        u.push(positive(m.factors[0].v0, "v0_1")?);
        u.push(positive(m.factors[0].lambda, "lambda_1")?);
        if self.template.factors == 2 {
            let ratio = m.factors[1].lambda / m.factors[0].lambda;
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::Domain("start must satisfy lambda_1 > lambda_2 > 0".into()));
            }
            u.push(positive(m.factors[1].v0, "v0_2")?);
            u.push(logit(ratio));
        }
        Ok(u)
    }
}

/// Model prices (FSP, common random numbers) for every quote, in quote order.
pub fn model_prices(problem: &CalibrationProblem, model: &ModelSpec) -> Result<Vec<(f64, f64)>> {
    let cfg = problem.pricing_config();
    let mut out = vec![(0.0, 0.0); problem.quotes.len()];
    for (maturity, members) in problem.maturity_groups() {
        let strikes: Vec<f64> = members.iter().map(|m| m.1).collect();
        let prices = price_european_strikes(model, problem.s0, &strikes, maturity, &cfg, Estimator::Fsp)?;
        for ((i, _), p) in members.iter().zip(prices) {
            out[*i] = (p.estimate, p.std_error);
        }
    }
    Ok(out)
}

/// Mean squared pricing error; `+inf` if the model cannot be priced.
pub fn mse_objective(problem: &CalibrationProblem, model: &ModelSpec) -> f64 {
    match model_prices(problem, model) {
        Ok(prices) => mse(problem, &prices),
        Err(_) => f64::INFINITY,
    }
}

fn mse(problem: &CalibrationProblem, prices: &[(f64, f64)]) -> f64 {
    let sum: f64 = problem
        .quotes
        .iter()
        .zip(prices)
        .map(|(q, p)| (q.market_price - p.0).powi(2))
        .sum();
    let value = sum / problem.quotes.len() as f64;
    if value.is_finite() {
        value
    } else {
        f64::INFINITY
    }
}

/// Fitted parameters in natural units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FittedParameters {
    pub rho: f64,
    pub theta: f64,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub v0_1: f64,
    pub lambda_1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0_2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_2: Option<f64>,
    pub mse: f64,
}

impl FittedParameters {
    pub fn new(m: &ModelSpec, mse: f64) -> Self {
        let (c, alpha, beta) = match m.scale {
            ScaleVariable::Constant { c } => (c, None, None),
            ScaleVariable::ScaledBeta { c, a, b } => (c, Some(a), Some(b)),
        };
        let second = m.factors.get(1);
        Self {
            rho: m.rho,
            theta: m.theta,
            c,
            alpha,
            beta,
            v0_1: m.factors[0].v0,
            lambda_1: m.factors[0].lambda,
            v0_2: second.map(|f| f.v0),
            lambda_2: second.map(|f| f.lambda),
            mse,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub fitted: FittedParameters,
    pub model: ModelSpec,
    pub mse: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Mean squared pricing standard error at the fitted parameters.
    pub noise_floor: f64,
}

pub fn calibrate(
    problem: &CalibrationProblem,
    initial: &ModelSpec,
    cfg: &NelderMeadConfig,
) -> Result<CalibrationResult> {
    problem.validate()?;
    let transform = ParameterTransform::new(problem.template);
    let start = transform.from_model(initial)?;
    let objective = |u: &[f64]| match transform.to_model(u, problem.r, problem.q) {
        Ok(m) if m.validate().is_ok() => mse_objective(problem, &m),
        _ => f64::INFINITY,
    };
    let nm = nelder_mead(objective, &start, cfg)?;
    let model = transform.to_model(&nm.point, problem.r, problem.q)?;
    let prices = model_prices(problem, &model)?;
    let noise_floor = prices.iter().map(|p| p.1 * p.1).sum::<f64>() / prices.len() as f64;
    Ok(CalibrationResult {
        fitted: FittedParameters::new(&model, nm.value),
        model,
        mse: nm.value,
        iterations: nm.iterations,
        evaluations: nm.evaluations,
        converged: nm.converged,
        noise_floor,
    })
}
