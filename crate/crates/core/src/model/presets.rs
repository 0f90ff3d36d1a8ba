use super::{Factor, ModelSpec, Variant};
use crate::ggc::ScaleVariable;

/// `theta = c = lambda = 1`, `v0 = 0`, `r = q = 0`.
pub fn unit_ou_gamma(rho: f64) -> ModelSpec {
    ModelSpec {
        variant: Variant::OuGamma,
        rho,
        theta: 1.0,
        scale: ScaleVariable::Constant { c: 1.0 },
        factors: vec![Factor { lambda: 1.0, v0: 0.0 }],
        r: 0.0,
        q: 0.0,
    }
}

/// Gamma-leveraged model with `R ~ Beta(alpha, beta)` and otherwise unit parameters.
pub fn unit_gl(alpha: f64, beta: f64, rho: f64) -> ModelSpec {
    ModelSpec {
        variant: Variant::GlOuGgc,
        scale: ScaleVariable::ScaledBeta { c: 1.0, a: alpha, b: beta },
        ..unit_ou_gamma(rho)
    }
}

/// Risk-neutral parameters fitted to S&P 500 calls (`r = 3.19%`, `q = 0`),
/// for one or two factors.
pub fn calibrated(variant: Variant, factors: usize) -> ModelSpec {
    let two = factors >= 2;
    let (rho, theta, scale, f) = match (variant, two) {
        (Variant::OuGamma, false) => (
            -4.88115,
            0.81303,
            ScaleVariable::Constant { c: 0.00981 },
            vec![Factor { lambda: 2.24323, v0: 0.00437 }],
        ),
        (Variant::OuGamma, true) => (
            -4.87261,
            0.79608,
            ScaleVariable::Constant { c: 0.00989 },
            vec![
                Factor { lambda: 2.27276, v0: 0.00418 },
                Factor { lambda: 0.02755, v0: 0.00006 },
            ],
        ),
        (Variant::GlOuGgc, false) => (
            -0.04455,
            0.80124,
            ScaleVariable::ScaledBeta { c: 0.00954, a: 3.61908, b: 0.10414 },
            vec![Factor { lambda: 2.68545, v0: 0.00414 }],
        ),
        (Variant::GlOuGgc, true) => (
            -0.04434,
            0.79536,
            ScaleVariable::ScaledBeta { c: 0.00971, a: 3.68861, b: 0.11126 },
            vec![
                Factor { lambda: 2.69492, v0: 0.00407 },
                Factor { lambda: 0.01442, v0: 0.00003 },
            ],
        ),
    };
    ModelSpec {
        variant,
        rho,
        theta,
        scale,
        factors: f,
        r: 0.0319,
        q: 0.0,
    }
}
