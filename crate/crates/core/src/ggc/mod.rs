//! Scale laws, kernels and Dirichlet-mean specifications.
//!
//! A Dirichlet mean `M` with shape `delta` and base law `Y` is the stationary
//! solution of `M = V*Y + (1 - V)*M` with `V ~ Beta(1, delta)`. Stochastic
//! integrals of the OU kernels against Gamma/GGC subordinators factor as
//! `gamma_delta * M` with the two factors independent.

mod bfry;
mod law;

pub use bfry::{
    bfry_cdf, bfry_from_parts, sample_bfry, sample_tilted_bfry, sample_tilted_bfry_counted,
    tilted_acceptance_rate, tilted_bfry_cdf, GgcExampleSpec,
};
pub use law::{
    BaseLaw, DirichletMeanSpec, KernelKind, ScaleVariable, SuperposedLaw,
};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// `(E[M], Var[M])` of the Dirichlet mean with shape `delta` over `law`.
pub fn dirichlet_mean_moments<L: BaseLaw + ?Sized>(law: &L, delta: f64) -> (f64, f64) {
    let (m1, m2) = law.y_moments();
    (m1, (m2 - m1 * m1) / (delta + 1.0))
}

/// `E[M^2] = (E[Y^2] + delta E[Y]^2) / (1 + delta)`.
pub fn dirichlet_mean_second_moment<L: BaseLaw + ?Sized>(law: &L, delta: f64) -> f64 {
    let (m1, m2) = law.y_moments();
    (m2 + delta * m1 * m1) / (1.0 + delta)
}

/// Split a shape into blocks of size at most one.
///
/// Shapes up to one are returned unchanged. Larger shapes use
/// `l = ceil(delta)` equal blocks of `delta / l`, which gives `l = delta`
/// unit blocks for integer shapes.
pub fn decompose_delta(delta: f64) -> Vec<f64> {
    if delta <= 1.0 {
        return vec![delta];
    }
    let l = delta.ceil();
    vec![delta / l; l as usize]
}

/// Recombine independent block samples `(shape_j, M_j)` into one draw of
/// `M_delta = sum_j (G_j / G) M_j` with `G_j ~ Gamma(shape_j, 1)`.
pub fn compose_dirichlet_mean(blocks: &[(f64, f64)], stream: &mut RandomStream) -> Result<f64> {
    match blocks {
        [] => Err(Error::EmptyBlocks),
        [(_, m)] => Ok(*m),
        _ => {
            let mut total = 0.0;
            let mut weighted = 0.0;
            for &(shape, m) in blocks {
                let g = stream.gamma(shape, 1.0)?;
                total += g;
                weighted += g * m;
            }
            Ok(weighted / total)
        }
    }
}
