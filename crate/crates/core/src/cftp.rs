//! Perfect sampling of Dirichlet means by double coupling from the past.
//!
//! Requirements: `0 < delta <= 1`, so the `Beta(1, delta)` density
//! `h(x) = delta (1 - x)^{delta - 1}` is bounded below on `[0, 1]` by
//! `c_h = delta`, and `0 < Y <= c_Y` almost surely. Larger shapes go through
//! [`sample_exact_composite`], which splits `delta` into blocks of size at
//! most one and recombines them with gamma weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ggc::{compose_dirichlet_mean, decompose_delta, BaseLaw};
use crate::rng::RandomStream;

/// Hard cap on primitive draws for a single perfect sample.
pub const MAX_PRIMITIVE_DRAWS: u64 = 1_000_000_000;

/// Constants of the multigamma coupler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CftpConfig {
    /// Lower bound of the `Beta(1, delta)` density.
    pub c_h: f64,
    /// Almost-sure bound on `Y`.
    pub c_y: f64,
}

impl CftpConfig {
    pub fn for_law<L: BaseLaw + ?Sized>(law: &L, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidDelta(delta));
        }
        if law.is_degenerate() {
            return Err(Error::DegenerateY);
        }
        let c_y = law.y_bound().ok_or(Error::UnboundedY)?;
        Ok(Self { c_h: delta, c_y })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CftpStats {
    /// Stored `(Y, Y')` pairs, summed over blocks.
    pub stack_size: u64,
    /// Backward-phase iterations.
    pub backward_steps: u64,
    /// Rejected forward-phase proposals.
    pub forward_rejections: u64,
}

impl CftpStats {
    fn absorb(&mut self, other: CftpStats) {
        self.stack_size += other.stack_size;
        self.backward_steps += other.backward_steps;
        self.forward_rejections += other.forward_rejections;
    }
}

/// Density of `X = M + V (y - M)` at `x`, for one branch of the coupler.
#[inline]
fn branch_density(x: f64, m: f64, y: f64, delta: f64) -> f64 {
    let span = y - m;
    if span == 0.0 {
        return f64::INFINITY;
    }
    let t = (x - m) / span;
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    let h = if delta == 1.0 {
        1.0
    } else {
        delta * (1.0 - t).powf(delta - 1.0)
    };
    h / span.abs()
}

/// One exact draw of `M_delta` for `delta <= 1`.
pub fn sample_exact_with<L: BaseLaw + ?Sized>(
    law: &L,
    delta: f64,
    stream: &mut RandomStream,
) -> Result<(f64, CftpStats)> {
    let CftpConfig { c_h, c_y } = CftpConfig::for_law(law, delta)?;
    let coalesce = c_h / (2.0 * c_y);
    let mut draws: u64 = 0;

    let mut stack: Vec<(f64, f64)> = Vec::with_capacity(32);
    let (u_t, lo_t) = loop {
        let u = stream.uniform();
        let y = law.sample_y(stream);
        let y_prime = law.sample_y(stream);
        stack.push((y, y_prime));
        draws += 3;
        if u <= (y - y_prime).abs() * coalesce {
            break (u, y.min(y_prime));
        }
        if draws > MAX_PRIMITIVE_DRAWS {
            return Err(Error::IterationCap(MAX_PRIMITIVE_DRAWS));
        }
    };

    let mut m = lo_t + 2.0 * c_y * u_t / c_h;
    let accept_level = c_h / c_y;
    let mut rejections = 0;
    for &(y, y_prime) in stack[..stack.len() - 1].iter().rev() {
        let (lo, hi) = (y.min(y_prime), y.max(y_prime));
        m = loop {
            let u = stream.uniform();
            let target = if stream.bernoulli_half() { y } else { y_prime };
            let (v, rest) = stream.stick(delta);
            let x = rest * m + v * target;
            draws += 4;
            if x < lo || x > hi {
                break x;
            }
            let dens = branch_density(x, m, y, delta) + branch_density(x, m, y_prime, delta);
            if u * dens > accept_level {
                break x;
            }
            rejections += 1;
            if draws > MAX_PRIMITIVE_DRAWS {
                return Err(Error::IterationCap(MAX_PRIMITIVE_DRAWS));
            }
        };
    }

    let steps = stack.len() as u64;
    Ok((
        m,
        CftpStats {
            stack_size: steps,
            backward_steps: steps,
            forward_rejections: rejections,
        },
    ))
}

/// Exact draw for any positive shape over a bounded base law.
pub fn sample_exact_composite_with<L: BaseLaw + ?Sized>(
    law: &L,
    delta: f64,
    stream: &mut RandomStream,
) -> Result<(f64, CftpStats)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    if delta <= 1.0 {
        return sample_exact_with(law, delta, stream);
    }
    let shapes = decompose_delta(delta);
    let mut stats = CftpStats::default();
    let mut blocks = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let (m, s) = sample_exact_with(law, shape, stream)?;
        stats.absorb(s);
        blocks.push((shape, m));
    }
    Ok((compose_dirichlet_mean(&blocks, stream)?, stats))
}

/// Exact draw for a [`DirichletMeanSpec`](crate::ggc::DirichletMeanSpec) with `delta <= 1`.
pub fn sample_exact(
    spec: &crate::ggc::DirichletMeanSpec,
    stream: &mut RandomStream,
) -> Result<(f64, CftpStats)> {
    sample_exact_with(spec, spec.delta, stream)
}

pub fn sample_exact_composite(
    spec: &crate::ggc::DirichletMeanSpec,
    stream: &mut RandomStream,
) -> Result<(f64, CftpStats)> {
    sample_exact_composite_with(spec, spec.delta, stream)
}
