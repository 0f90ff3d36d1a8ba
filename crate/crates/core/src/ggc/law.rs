use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::rng::RandomStream;

/// Scale random variable `R` of a GGC subordinator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScaleVariable {
    /// `R = c` (Gamma subordinator with scale `c`).
    Constant { c: f64 },
    /// `R = c * Beta(a, b)`.
    ScaledBeta { c: f64, a: f64, b: f64 },
}

impl ScaleVariable {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        match *self {
            ScaleVariable::Constant { c } if ok(c) => Ok(()),
            ScaleVariable::ScaledBeta { c, a, b } if ok(c) && ok(a) && ok(b) => Ok(()),
            other => Err(domain(format!("scale parameters must be positive: {other:?}"))),
        }
    }

    /// Almost-sure upper bound on `R`.
    pub fn bound(&self) -> f64 {
        match *self {
            ScaleVariable::Constant { c } | ScaleVariable::ScaledBeta { c, .. } => c,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ScaleVariable::Constant { c } => c,
            ScaleVariable::ScaledBeta { c, a, b } => c * a / (a + b),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            ScaleVariable::Constant { c } => c * c,
            ScaleVariable::ScaledBeta { c, a, b } => {
                c * c * a * (a + 1.0) / ((a + b) * (a + b + 1.0))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScaleVariable::Constant { .. })
    }

    #[inline]
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match *self {
            ScaleVariable::Constant { c } => c,
            ScaleVariable::ScaledBeta { c, a, b } => c * stream.beta_unchecked(a, b),
        }
    }
}

/// Integration kernel `k(s)` against the subordinator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `k = 1`, `Y = R`.
    Unit,
    /// `k(s) = exp(-lambda (T - s))`, `Y = R exp(-lambda U Delta)`.
    Decay,
    /// `k(s) = 1 - exp(-lambda (T - s))`, `Y = R (1 - exp(-lambda U Delta))`.
    OneMinusDecay,
}

impl KernelKind {
    /// `Y` for a given scale draw `r` and kernel location `u`.
    #[inline]
    pub fn apply(self, r: f64, u: f64, lambda: f64, horizon: f64) -> f64 {
        match self {
            KernelKind::Unit => r,
            KernelKind::Decay => r * (-lambda * u * horizon).exp(),
            KernelKind::OneMinusDecay => r * -(-lambda * u * horizon).exp_m1(),
        }
    }
}

/// Base distribution of a Dirichlet mean: the law of `Y`.
pub trait BaseLaw: Sync {
    fn sample_y(&self, stream: &mut RandomStream) -> f64;

    /// Almost-sure bound on `Y`, if one is known.
    fn y_bound(&self) -> Option<f64>;

    /// `(E[Y], E[Y^2])`.
    fn y_moments(&self) -> (f64, f64);

    /// True when `Y` is a point mass.
    fn is_degenerate(&self) -> bool {
        false
    }
}

/// `(1 - e^{-k}) / k`, accurate for small `k`.
pub(crate) fn mean_exp_uniform(k: f64) -> f64 {
    if k < 1e-8 {
        1.0 - k / 2.0
    } else {
        -(-k).exp_m1() / k
    }
}

/// `1 - (1 - e^{-k}) / k`, accurate for small `k`.
fn one_minus_mean_exp_uniform(k: f64) -> f64 {
    if k < 1e-4 {
        k / 2.0 - k * k / 6.0 + k * k * k / 24.0
    } else {
        1.0 - mean_exp_uniform(k)
    }
}

/// `E[(1 - e^{-kU})^2]`.
fn second_moment_one_minus(k: f64) -> f64 {
    if k < 1e-3 {
        // k^2/3 - k^3/4 + 7k^4/60
        k * k / 3.0 - k * k * k / 4.0 + 7.0 * k.powi(4) / 60.0
    } else {
        1.0 - 2.0 * mean_exp_uniform(k) + mean_exp_uniform(2.0 * k)
    }
}

/// Dirichlet mean with shape `delta = theta * lambda * Delta`, kernel, and scale law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletMeanSpec {
    pub delta: f64,
    pub kernel: KernelKind,
    pub lambda: f64,
    pub horizon: f64,
    pub scale: ScaleVariable,
}

impl DirichletMeanSpec {
    pub fn new(
        delta: f64,
        kernel: KernelKind,
        lambda: f64,
        horizon: f64,
        scale: ScaleVariable,
    ) -> Result<Self> {
        let spec = Self {
            delta,
            kernel,
            lambda,
            horizon,
            scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.delta) {
            return Err(domain(format!("delta must be positive, got {}", self.delta)));
        }
        if !ok(self.lambda) || !ok(self.horizon) {
            return Err(domain("lambda and horizon must be positive"));
        }
        self.scale.validate()
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    /// Bound on `Y` used by CFTP and the bounded stopping rule.
    pub fn y_bound(&self) -> f64 {
        match self.kernel {
            KernelKind::Unit | KernelKind::Decay => self.scale.bound(),
            KernelKind::OneMinusDecay => {
                self.scale.bound() * -(-self.lambda * self.horizon).exp_m1()
            }
        }
    }

    /// Draw `(R, U)` without applying the kernel.
    #[inline]
    pub fn sample_parts(&self, stream: &mut RandomStream) -> (f64, f64) {
        let r = self.scale.sample(stream);
        (r, stream.uniform())
    }
}

impl BaseLaw for DirichletMeanSpec {
    #[inline]
    fn sample_y(&self, stream: &mut RandomStream) -> f64 {
        let r = self.scale.sample(stream);
        if self.kernel == KernelKind::Unit {
            return r;
        }
        self.kernel
            .apply(r, stream.uniform(), self.lambda, self.horizon)
    }

    fn y_bound(&self) -> Option<f64> {
        Some(DirichletMeanSpec::y_bound(self))
    }

    fn y_moments(&self) -> (f64, f64) {
        let (r1, r2) = (self.scale.mean(), self.scale.second_moment());
        let k = self.lambda * self.horizon;
        match self.kernel {
            KernelKind::Unit => (r1, r2),
            KernelKind::Decay => (r1 * mean_exp_uniform(k), r2 * mean_exp_uniform(2.0 * k)),
            KernelKind::OneMinusDecay => {
                (r1 * one_minus_mean_exp_uniform(k), r2 * second_moment_one_minus(k))
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        self.kernel == KernelKind::Unit && self.scale.is_constant()
    }
}

/// Base law for an aggregated superposition of OU factors:
/// `Y = R (1 - exp(-lambda_L U Delta)) / lambda_L` with `P(L = j) = p_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperposedLaw {
    pub scale: ScaleVariable,
    /// `(lambda_j, p_j)` pairs; weights sum to one.
    pub rates: Vec<(f64, f64)>,
    pub horizon: f64,
    cumulative: Vec<f64>,
}

impl SuperposedLaw {
    pub fn new(scale: ScaleVariable, rates: Vec<(f64, f64)>, horizon: f64) -> Result<Self> {
        scale.validate()?;
        if rates.is_empty() {
            return Err(domain("superposition needs at least one factor"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(domain("horizon must be positive"));
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(rates.len());
        for &(lambda, p) in &rates {
            if !(lambda > 0.0 && p > 0.0) {
                return Err(domain("factor rates and weights must be positive"));
            }
            acc += p;
            cumulative.push(acc);
        }
        if (acc - 1.0).abs() > 1e-9 {
            return Err(domain(format!("factor weights sum to {acc}, expected 1")));
        }
        Ok(Self {
            scale,
            rates,
            horizon,
            cumulative,
        })
    }

    #[inline]
    fn kernel(&self, lambda: f64, u: f64) -> f64 {
        -(-lambda * u * self.horizon).exp_m1() / lambda
    }
}

impl BaseLaw for SuperposedLaw {
    fn sample_y(&self, stream: &mut RandomStream) -> f64 {
        let lambda = if self.rates.len() == 1 {
            self.rates[0].0
        } else {
            let pick = stream.uniform() * self.cumulative[self.cumulative.len() - 1];
            let j = self
                .cumulative
                .iter()
                .position(|&c| pick < c)
                .unwrap_or(self.rates.len() - 1);
            self.rates[j].0
        };
        let r = self.scale.sample(stream);
        r * self.kernel(lambda, stream.uniform())
    }

    fn y_bound(&self) -> Option<f64> {
        let worst = self
            .rates
            .iter()
            .map(|&(lambda, _)| self.kernel(lambda, 1.0))
            .fold(0.0, f64::max);
        Some(self.scale.bound() * worst)
    }

    fn y_moments(&self) -> (f64, f64) {
        let (r1, r2) = (self.scale.mean(), self.scale.second_moment());
        let (mut m1, mut m2) = (0.0, 0.0);
        for &(lambda, p) in &self.rates {
            let k = lambda * self.horizon;
            m1 += p * one_minus_mean_exp_uniform(k) / lambda;
            m2 += p * second_moment_one_minus(k) / (lambda * lambda);
        }
        (r1 * m1, r2 * m2)
    }
}
