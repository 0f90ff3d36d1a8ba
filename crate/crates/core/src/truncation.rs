//! Stick-breaking truncation of Dirichlet means and the shared-stick joint
//! sampler for path-dependent simulation.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::ggc::{BaseLaw, DirichletMeanSpec, ScaleVariable};
use crate::rng::RandomStream;

/// Unit roundoff of IEEE 754 double precision, as a stopping tolerance.
pub const MACHINE_EPSILON: f64 = 2.22e-16;

const MAX_STICKS: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruncationRule {
    FixedN { n: u64 },
    /// Stop once `y_bound * residual < epsilon`.
    StoppingBounded { epsilon: f64 },
    /// Stop once `E|Y| * residual < epsilon`.
    StoppingMean { epsilon: f64 },
}

impl Default for TruncationRule {
    fn default() -> Self {
        TruncationRule::StoppingBounded {
            epsilon: MACHINE_EPSILON,
        }
    }
}

impl TruncationRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TruncationRule::FixedN { n } if n == 0 => Err(domain("FixedN needs n >= 1")),
            TruncationRule::StoppingBounded { epsilon } | TruncationRule::StoppingMean { epsilon }
                if !(epsilon > 0.0 && epsilon.is_finite()) =>
            {
                Err(domain("stopping epsilon must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Sequential stick-breaking weights `W_j = V_j prod_{i<j} (1 - V_i)`.
///
/// The unbroken remainder is kept as a running product, never as `1 - sum W`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StickBreaker {
    delta: f64,
    residual: f64,
    weight_sum: f64,
    n: u64,
}

impl StickBreaker {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidDelta(delta));
        }
        Ok(Self {
            delta,
            residual: 1.0,
            weight_sum: 0.0,
            n: 0,
        })
    }

    /// Breaks the next stick and returns its weight.
    #[inline]
    pub fn next_weight(&mut self, stream: &mut RandomStream) -> f64 {
        let (v, rest) = stream.stick(self.delta);
        let w = self.residual * v;
        self.residual *= rest;
        self.weight_sum += w;
        self.n += 1;
        w
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn weight_sum(&self) -> f64 {
        self.weight_sum
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    fn finished(&self, rule: &TruncationRule, scale: f64) -> bool {
        match *rule {
            TruncationRule::FixedN { n } => self.n >= n,
            TruncationRule::StoppingBounded { epsilon } | TruncationRule::StoppingMean { epsilon } => {
                scale * self.residual < epsilon
            }
        }
    }
}

fn stopping_scale<L: BaseLaw + ?Sized>(law: &L, rule: &TruncationRule) -> Result<f64> {
    match rule {
        TruncationRule::FixedN { .. } => Ok(0.0),
        TruncationRule::StoppingBounded { .. } => law.y_bound().ok_or(Error::UnboundedY),
        TruncationRule::StoppingMean { .. } => {
            let mean = law.y_moments().0.abs();
            if mean.is_finite() {
                Ok(mean)
            } else {
                Err(domain("StoppingMean needs a finite E|Y|"))
            }
        }
    }
}

/// Truncated draw `M^N = sum_{j<=N} W_j Y_j + residual * Y_{N+1}` and the
/// number of sticks `N`.
pub fn sample_truncated_with<L: BaseLaw + ?Sized>(
    law: &L,
    delta: f64,
    rule: &TruncationRule,
    stream: &mut RandomStream,
) -> Result<(f64, u64)> {
    rule.validate()?;
    let scale = stopping_scale(law, rule)?;
    let mut sticks = StickBreaker::new(delta)?;
    let mut value = 0.0;
    loop {
        let w = sticks.next_weight(stream);
        value += w * law.sample_y(stream);
        if sticks.finished(rule, scale) {
            break;
        }
        if sticks.count() >= MAX_STICKS {
            return Err(Error::IterationCap(MAX_STICKS));
        }
    }
    value += sticks.residual() * law.sample_y(stream);
    Ok((value, sticks.count()))
}

pub fn sample_truncated(
    spec: &DirichletMeanSpec,
    rule: &TruncationRule,
    stream: &mut RandomStream,
) -> Result<(f64, u64)> {
    sample_truncated_with(spec, spec.delta, rule, stream)
}

/// `E|Y| (delta / (delta + 1))^{n + 1}`, an L1 bound on the fixed-N error.
pub fn l1_error_bound<L: BaseLaw + ?Sized>(law: &L, delta: f64, n: u64) -> f64 {
    let ratio = delta / (delta + 1.0);
    law.y_moments().0.abs() * ratio.powf(n as f64 + 1.0)
}

/// Innovations over one step built on a single set of sticks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointPair {
    /// `gamma * sum W_j R_j`.
    pub o1: f64,
    /// `gamma * sum W_j R_j exp(-lambda U_j Delta)`.
    pub o2: f64,
    pub gamma_increment: f64,
    pub n_used: u64,
}

pub fn sample_joint_pair(
    delta: f64,
    lambda: f64,
    horizon: f64,
    scale: &ScaleVariable,
    stream: &mut RandomStream,
) -> Result<JointPair> {
    sample_joint_pair_with(delta, lambda, horizon, scale, &TruncationRule::default(), stream)
}

pub fn sample_joint_pair_with(
    delta: f64,
    lambda: f64,
    horizon: f64,
    scale: &ScaleVariable,
    rule: &TruncationRule,
    stream: &mut RandomStream,
) -> Result<JointPair> {
    rule.validate()?;
    scale.validate()?;
    if !(lambda > 0.0 && horizon > 0.0) {
        return Err(domain("joint pair needs positive lambda and horizon"));
    }
    let stop = match rule {
        TruncationRule::FixedN { .. } => 0.0,
        TruncationRule::StoppingBounded { .. } => scale.bound(),
        TruncationRule::StoppingMean { .. } => scale.mean(),
    };
    let gamma = stream.gamma(delta, 1.0)?;
    let mut sticks = StickBreaker::new(delta)?;
    let decay = -lambda * horizon;
    let (mut s1, mut s2) = (0.0, 0.0);
    loop {
        let w = sticks.next_weight(stream);
        let r = scale.sample(stream);
        let u = stream.uniform();
        s1 += w * r;
        s2 += w * r * (decay * u).exp();
        if sticks.finished(rule, stop) {
            break;
        }
        if sticks.count() >= MAX_STICKS {
            return Err(Error::IterationCap(MAX_STICKS));
        }
    }
    let rest = sticks.residual();
    let r = scale.sample(stream);
    let u = stream.uniform();
    s1 += rest * r;
    s2 += rest * r * (decay * u).exp();
    Ok(JointPair {
        o1: gamma * s1,
        o2: gamma * s2,
        gamma_increment: gamma,
        n_used: sticks.count(),
    })
}
