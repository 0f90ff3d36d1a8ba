//! BNS OU-Gamma and gamma-leveraged OU-GGC stochastic volatility models.
//!
//! Over a step of length `Delta` the log-return is conditionally
//! `Normal(mu, tau)` with `mu = (r - q - lambda kappa) Delta - tau / 2 + rho lev`,
//! where `tau` is integrated variance and `lev` the leverage increment.

mod presets;
pub(crate) mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ggc::{dirichlet_mean_moments, dirichlet_mean_second_moment, DirichletMeanSpec, KernelKind, ScaleVariable};

pub use presets::{calibrated, unit_gl, unit_ou_gamma};
pub use simulate::{
    sample_path, sample_superposed_transition, sample_transition, sample_transition_with_coupling,
    sample_volatility_step, FactorInnovation, LeverageCoupling, PathPoint, Sampler, StepDraw,
    TransitionDraw,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Gamma BDLP; leverage on the BDLP itself.
    OuGamma,
    /// GGC BDLP with leverage on its extracted gamma component.
    GlOuGgc,
}

/// One OU volatility factor. Its weight is `lambda / sum(lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Factor {
    pub lambda: f64,
    pub v0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub variant: Variant,
    pub rho: f64,
    pub theta: f64,
    pub scale: ScaleVariable,
    pub factors: Vec<Factor>,
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub q: f64,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidModel(msg.into())
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.rho, self.theta, self.r, self.q].iter().all(|x| x.is_finite());
        if !finite {
            return Err(invalid("parameters must be finite"));
        }
        if self.rho > 0.0 {
            return Err(invalid(format!("rho must be <= 0, got {}", self.rho)));
        }
        if self.theta < 0.0 {
            return Err(invalid(format!("theta must be >= 0, got {}", self.theta)));
        }
        self.scale
            .validate()
            .map_err(|e| invalid(e.to_string()))?;
        if self.variant == Variant::OuGamma && !self.scale.is_constant() {
            return Err(invalid("OU-Gamma needs a constant scale"));
        }
        if self.factors.is_empty() {
            return Err(invalid("at least one factor is required"));
        }
        for f in &self.factors {
            if !(f.lambda > 0.0 && f.lambda.is_finite()) {
                return Err(invalid(format!("factor lambda must be positive, got {}", f.lambda)));
            }
            if !(f.v0 >= 0.0 && f.v0.is_finite()) {
                return Err(invalid(format!("factor v0 must be >= 0, got {}", f.v0)));
            }
        }
        if self.log_argument() <= 0.0 {
            return Err(invalid("1 - rho * leverage scale must be positive"));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.factors.iter().map(|f| f.lambda).sum()
    }

    pub fn weights(&self) -> Vec<f64> {
        let total = self.lambda();
        self.factors.iter().map(|f| f.lambda / total).collect()
    }

    /// Multiplier turning a gamma increment into the leverage increment:
    /// `c` for OU-Gamma, one under gamma leveraging.
    pub fn leverage_scale(&self) -> f64 {
        match self.variant {
            Variant::OuGamma => self.scale.bound(),
            Variant::GlOuGgc => 1.0,
        }
    }

    fn log_argument(&self) -> f64 {
        1.0 - self.rho * self.leverage_scale()
    }

    pub fn kappa(&self) -> Result<f64> {
        kappa(self)
    }

    /// Dirichlet-mean law of the jump part of integrated variance for factor `j`.
    pub fn jump_law(&self, j: usize, dt: f64) -> Result<DirichletMeanSpec> {
        let f = &self.factors[j];
        DirichletMeanSpec::new(self.theta * f.lambda * dt, KernelKind::OneMinusDecay, f.lambda, dt, self.scale)
    }

    /// Jump-free part of integrated variance over `dt`.
    pub fn deterministic_tau(&self, dt: f64) -> f64 {
        self.factors
            .iter()
            .map(|f| -(-f.lambda * dt).exp_m1() * f.v0 / f.lambda)
            .sum()
    }

    pub fn with_v0(&self, v0: &[f64]) -> ModelSpec {
        let mut out = self.clone();
        for (f, &v) in out.factors.iter_mut().zip(v0) {
            f.v0 = v;
        }
        out
    }
}

/// Leverage drift correction: `-theta log(1 - rho c)` for OU-Gamma and
/// `-theta log(1 - rho)` under gamma leveraging.
pub fn kappa(model: &ModelSpec) -> Result<f64> {
    let arg = model.log_argument();
    if arg <= 0.0 {
        return Err(Error::Domain(format!("kappa log argument {arg} is not positive")));
    }
    Ok(-model.theta * arg.ln())
}

/// Closed-form mean and variance of the log-return over `dt`.
pub fn model_return_moments(model: &ModelSpec, dt: f64) -> Result<(f64, f64)> {
    model.validate()?;
    let lambda = model.lambda();
    let tau_det = model.deterministic_tau(dt);
    let mut mean = (model.r - model.q - lambda * kappa(model)?) * dt - tau_det / 2.0;
    let mut e_tau = tau_det;
    let mut var_jump = 0.0;
    if model.theta > 0.0 {
        let lev = model.leverage_scale();
        let rho = model.rho;
        for (j, f) in model.factors.iter().enumerate() {
            let law = model.jump_law(j, dt)?;
            let delta = law.delta;
            let (em, _) = dirichlet_mean_moments(&law, delta);
            let em2 = dirichlet_mean_second_moment(&law, delta);
            let eb = rho * lev - em / (2.0 * f.lambda);
            let eb2 = rho * rho * lev * lev - rho * lev * em / f.lambda + em2 / (4.0 * f.lambda * f.lambda);
            mean += delta * eb;
            e_tau += delta * em / f.lambda;
            var_jump += delta * (delta + 1.0) * eb2 - delta * delta * eb * eb;
        }
    }
    Ok((mean, e_tau + var_jump))
}
