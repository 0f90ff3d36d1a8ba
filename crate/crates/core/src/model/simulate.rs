use serde::{Deserialize, Serialize};

use super::{kappa, ModelSpec, Variant};
use crate::cftp::sample_exact_composite_with;
use crate::error::{domain, Result};
use crate::ggc::{BaseLaw, SuperposedLaw};
use crate::rng::RandomStream;
use crate::truncation::{sample_joint_pair_with, sample_truncated_with, TruncationRule};

/// How Dirichlet means are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// Double CFTP, composed over blocks when the shape exceeds one.
    Exact,
    /// Stick-breaking truncation.
    Truncated(TruncationRule),
}

/// Whether the leverage increment reuses the gamma factor of the jump part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeverageCoupling {
    #[default]
    Shared,
    /// Diagnostic only: leverage from an independent gamma draw.
    Independent,
}

/// Per-factor AR(1) innovations over one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FactorInnovation {
    /// Subordinator increment over the step.
    pub o1: f64,
    /// Decayed subordinator increment.
    pub o2: f64,
    pub gamma: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub tau: f64,
}

/// Volatility side of one step: integrated variance and leverage increment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDraw {
    pub tau: f64,
    pub lev: f64,
    /// Absent when the step was drawn in aggregate and end volatilities are unknown.
    pub factors: Option<Vec<FactorInnovation>>,
    /// Set when shared-stick truncation stands in for an exact draw.
    pub approximate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionDraw {
    pub tau: f64,
    pub lev: f64,
    pub log_return: f64,
    pub factors: Option<Vec<FactorInnovation>>,
    pub approximate: bool,
}

impl TransitionDraw {
    fn from_step(step: StepDraw, log_return: f64) -> Self {
        Self {
            tau: step.tau,
            lev: step.lev,
            log_return,
            factors: step.factors,
            approximate: step.approximate,
        }
    }

    pub fn v_end(&self) -> Option<Vec<f64>> {
        self.factors
            .as_ref()
            .map(|fs| fs.iter().map(|f| f.v_end).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathPoint {
    pub time: f64,
    pub price: f64,
    pub draw: TransitionDraw,
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("time step must be positive, got {dt}")))
    }
}

fn draw_mean<L: BaseLaw + ?Sized>(
    law: &L,
    delta: f64,
    sampler: &Sampler,
    stream: &mut RandomStream,
) -> Result<f64> {
    match sampler {
        Sampler::Exact => Ok(sample_exact_composite_with(law, delta, stream)?.0),
        Sampler::Truncated(rule) => Ok(sample_truncated_with(law, delta, rule, stream)?.0),
    }
}

/// Conditional log-return mean given `(tau, lev)`.
pub(crate) fn return_drift(model: &ModelSpec, dt: f64, tau: f64, lev: f64) -> Result<f64> {
    Ok((model.r - model.q - model.lambda() * kappa(model)?) * dt - tau / 2.0 + model.rho * lev)
}

fn draw_return(model: &ModelSpec, dt: f64, step: StepDraw, stream: &mut RandomStream) -> Result<TransitionDraw> {
    let mu = return_drift(model, dt, step.tau, step.lev)?;
    let x = mu + step.tau.sqrt() * stream.normal();
    Ok(TransitionDraw::from_step(step, x))
}

/// OU-Gamma step from `(gamma, M)` per factor; end volatilities follow exactly.
fn ou_gamma_step(
    model: &ModelSpec,
    v: &[f64],
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
    coupling: LeverageCoupling,
) -> Result<StepDraw> {
    let c = model.leverage_scale();
    let mut tau = 0.0;
    let mut lev = 0.0;
    let mut factors = Vec::with_capacity(model.factors.len());
    for (j, f) in model.factors.iter().enumerate() {
        let decay = (-f.lambda * dt).exp();
        let (gamma, jump) = if model.theta > 0.0 {
            let law = model.jump_law(j, dt)?;
            let gamma = stream.gamma(law.delta, 1.0)?;
            (gamma, gamma * draw_mean(&law, law.delta, sampler, stream)?)
        } else {
            (0.0, 0.0)
        };
        let o1 = c * gamma;
        let o2 = (o1 - jump).max(0.0);
        let v_end = decay * v[j] + o2;
        let tau_j = (-(-f.lambda * dt).exp_m1() * v[j] + jump) / f.lambda;
        tau += tau_j;
        lev += match coupling {
            LeverageCoupling::Shared => o1,
            LeverageCoupling::Independent if model.theta > 0.0 => {
                c * stream.gamma(model.theta * f.lambda * dt, 1.0)?
            }
            LeverageCoupling::Independent => 0.0,
        };
        factors.push(FactorInnovation {
            o1,
            o2,
            gamma,
            v_start: v[j],
            v_end,
            tau: tau_j,
        });
    }
    Ok(StepDraw {
        tau,
        lev,
        factors: Some(factors),
        approximate: false,
    })
}

/// Gamma-leveraged step from exact `(gamma, M)` draws; end volatilities unknown.
fn gl_aggregate_step(
    model: &ModelSpec,
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
    coupling: LeverageCoupling,
) -> Result<StepDraw> {
    let mut tau = model.deterministic_tau(dt);
    let mut lev = 0.0;
    if model.theta > 0.0 {
        for (j, f) in model.factors.iter().enumerate() {
            let law = model.jump_law(j, dt)?;
            let gamma = stream.gamma(law.delta, 1.0)?;
            tau += gamma * draw_mean(&law, law.delta, sampler, stream)? / f.lambda;
            lev += match coupling {
                LeverageCoupling::Shared => gamma,
                LeverageCoupling::Independent => stream.gamma(law.delta, 1.0)?,
            };
        }
    }
    Ok(StepDraw {
        tau,
        lev,
        factors: None,
        approximate: false,
    })
}

/// Gamma-leveraged step from shared-stick pairs; tracks end volatilities.
fn gl_path_step(
    model: &ModelSpec,
    v: &[f64],
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
) -> Result<StepDraw> {
    let rule = match sampler {
        Sampler::Exact => TruncationRule::default(),
        Sampler::Truncated(rule) => *rule,
    };
    let mut tau = 0.0;
    let mut lev = 0.0;
    let mut factors = Vec::with_capacity(model.factors.len());
    for (j, f) in model.factors.iter().enumerate() {
        let decay = (-f.lambda * dt).exp();
        let (o1, o2, gamma) = if model.theta > 0.0 {
            let delta = model.theta * f.lambda * dt;
            let p = sample_joint_pair_with(delta, f.lambda, dt, &model.scale, &rule, stream)?;
            (p.o1, p.o2, p.gamma_increment)
        } else {
            (0.0, 0.0, 0.0)
        };
        let v_end = decay * v[j] + o2;
        let tau_j = (-(-f.lambda * dt).exp_m1() * v[j] + (o1 - o2)) / f.lambda;
        tau += tau_j;
        lev += gamma;
        factors.push(FactorInnovation {
            o1,
            o2,
            gamma,
            v_start: v[j],
            v_end,
            tau: tau_j,
        });
    }
    Ok(StepDraw {
        tau,
        lev,
        factors: Some(factors),
        approximate: model.theta > 0.0,
    })
}

/// Volatility step that tracks per-factor end volatilities, as needed for paths.
pub fn sample_volatility_step(
    model: &ModelSpec,
    v: &[f64],
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
) -> Result<StepDraw> {
    check_dt(dt)?;
    if v.len() != model.factors.len() {
        return Err(domain("volatility state length does not match factor count"));
    }
    match model.variant {
        Variant::OuGamma => ou_gamma_step(model, v, dt, stream, sampler, LeverageCoupling::Shared),
        Variant::GlOuGgc => gl_path_step(model, v, dt, stream, sampler),
    }
}

pub fn sample_transition(
    model: &ModelSpec,
    s_t: f64,
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
) -> Result<(f64, TransitionDraw)> {
    sample_transition_with_coupling(model, s_t, dt, stream, sampler, LeverageCoupling::Shared)
}

/// Path-independent transition from the model's initial volatilities.
pub fn sample_transition_with_coupling(
    model: &ModelSpec,
    s_t: f64,
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
    coupling: LeverageCoupling,
) -> Result<(f64, TransitionDraw)> {
    check_dt(dt)?;
    let step = match model.variant {
        Variant::OuGamma => {
            let v0: Vec<f64> = model.factors.iter().map(|f| f.v0).collect();
            ou_gamma_step(model, &v0, dt, stream, sampler, coupling)?
        }
        Variant::GlOuGgc => gl_aggregate_step(model, dt, stream, sampler, coupling)?,
    };
    let draw = draw_return(model, dt, step, stream)?;
    Ok((s_t * draw.log_return.exp(), draw))
}

/// Aggregate draw over all factors with a single Dirichlet mean whose base
/// law mixes the factor kernels with weights `lambda_j / lambda`.
pub fn sample_superposed_transition(
    model: &ModelSpec,
    s_t: f64,
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
) -> Result<(f64, TransitionDraw)> {
    let step = superposed_step(model, dt, stream, sampler)?;
    let draw = draw_return(model, dt, step, stream)?;
    Ok((s_t * draw.log_return.exp(), draw))
}

pub(crate) fn superposed_step(
    model: &ModelSpec,
    dt: f64,
    stream: &mut RandomStream,
    sampler: &Sampler,
) -> Result<StepDraw> {
    check_dt(dt)?;
    let mut tau = model.deterministic_tau(dt);
    let mut lev = 0.0;
    if model.theta > 0.0 {
        let lambda = model.lambda();
        let rates = model
            .factors
            .iter()
            .map(|f| (f.lambda, f.lambda / lambda))
            .collect();
        let law = SuperposedLaw::new(model.scale, rates, dt)?;
        let delta = model.theta * lambda * dt;
        let gamma = stream.gamma(delta, 1.0)?;
        tau += gamma * draw_mean(&law, delta, sampler, stream)?;
        lev = model.leverage_scale() * gamma;
    }
    Ok(StepDraw {
        tau,
        lev,
        factors: None,
        approximate: false,
    })
}

/// Price path on `times` (strictly increasing, after time zero).
pub fn sample_path(
    model: &ModelSpec,
    s0: f64,
    times: &[f64],
    stream: &mut RandomStream,
    sampler: &Sampler,
) -> Result<Vec<PathPoint>> {
    let mut v: Vec<f64> = model.factors.iter().map(|f| f.v0).collect();
    let mut s = s0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &time in times {
        if !(time > t) {
            return Err(domain("path times must be strictly increasing and positive"));
        }
        let dt = time - t;
        let step = sample_volatility_step(model, &v, dt, stream, sampler)?;
        if let Some(fs) = &step.factors {
            for (vj, f) in v.iter_mut().zip(fs) {
                *vj = f.v_end;
            }
        }
        let draw = draw_return(model, dt, step, stream)?;
        s *= draw.log_return.exp();
        t = time;
        out.push(PathPoint {
            time,
            price: s,
            draw,
        });
    }
    Ok(out)
}
