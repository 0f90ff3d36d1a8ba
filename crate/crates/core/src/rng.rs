//! Deterministic, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream addressed by `(seed, stream_id)`.
//! Splitting derives a child `stream_id` from the parent lineage and an
//! index, so child `i` of a given parent is the same regardless of how much
//! the parent has already consumed, and regardless of which thread asks for
//! it. Monte Carlo drivers give path `i` the stream `root.split(i)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};

const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seedable source of uniform, gamma, beta and normal draws.
///
/// A stream is single-owner. Share work across threads with [`split`](Self::split).
#[derive(Clone, Debug)]
pub struct RandomStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    normals: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
            normals: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Child stream keyed by this stream's lineage and `index`.
    pub fn split(&self, index: u64) -> RandomStream {
        let child = splitmix64(self.stream_id ^ splitmix64(index).rotate_left(17));
        Self::with_stream(self.seed, child)
    }

    /// Number of standard normals handed out through [`normal`](Self::normal).
    pub fn normals_drawn(&self) -> u64 {
        self.normals
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    #[inline]
    pub fn bernoulli_half(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Standard exponential.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    /// Standard normal draw.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.normals += 1;
        self.raw_normal()
    }

    #[inline]
    fn raw_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Gamma draw with the given shape and scale.
    ///
    /// Marsaglia-Tsang squeeze/rejection for shape >= 1. Shapes below one are
    /// boosted: `G(a) = G(a + 1) * U^(1/a)`, which is exact. The product is
    /// formed in log space and floored at the smallest normal double, since
    /// tiny shapes put real mass below the representable range.
    pub fn gamma(&mut self, shape: f64, scale: f64) -> Result<f64> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(domain(format!("gamma shape must be positive, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain(format!("gamma scale must be positive, got {scale}")));
        }
        Ok(self.std_gamma(shape) * scale)
    }

    /// Unit-scale gamma; the caller guarantees `shape > 0`.
    pub(crate) fn std_gamma(&mut self, shape: f64) -> f64 {
        if shape < 1.0 {
            let boosted = self.marsaglia_tsang(shape + 1.0);
            let log_u = self.uniform_open().ln();
            (boosted.ln() + log_u / shape).exp().max(f64::MIN_POSITIVE)
        } else {
            self.marsaglia_tsang(shape)
        }
    }

    fn marsaglia_tsang(&mut self, shape: f64) -> f64 {
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.raw_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Beta(a, b) draw.
    ///
    /// `a == 1` uses the inverse CDF `1 - U^(1/b)` and `b == 1` uses `U^(1/a)`;
    /// otherwise the gamma ratio `G_a / (G_a + G_b)`.
    pub fn beta(&mut self, a: f64, b: f64) -> Result<f64> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(domain(format!("beta parameters must be positive, got ({a}, {b})")));
        }
        Ok(self.beta_unchecked(a, b))
    }

    pub(crate) fn beta_unchecked(&mut self, a: f64, b: f64) -> f64 {
        if a == 1.0 {
            1.0 - self.uniform_open().powf(1.0 / b)
        } else if b == 1.0 {
            self.uniform_open().powf(1.0 / a)
        } else {
            let x = self.std_gamma(a);
            let y = self.std_gamma(b);
            x / (x + y)
        }
    }

    /// Beta(1, delta) returned as the pair `(V, 1 - V)`, with `1 - V` computed
    /// without cancellation.
    #[inline]
    pub fn stick(&mut self, delta: f64) -> (f64, f64) {
        let rest = self.uniform_open().powf(1.0 / delta);
        (1.0 - rest, rest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn uniform_in_range_and_distinct() {
        let mut s = RandomStream::new(1);
        let a = s.uniform();
        let b = s.uniform();
        assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
        assert_ne!(a, b);
    }

    #[test]
    fn uniform_mean_clt() {
        let mut s = RandomStream::new(2);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.uniform()).collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 0.5).abs() < 0.002, "mean {m}");
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(42);
        let mut b = RandomStream::new(42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut c = RandomStream::new(43);
        assert_ne!(RandomStream::new(42).next_u64(), c.next_u64());
    }

    #[test]
    fn exponential_moments() {
        let mut s = RandomStream::new(3);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.gamma(1.0, 1.0).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 1.0).abs() < 0.003, "mean {m}");
        assert!((v - 1.0).abs() < 0.02, "var {v}");
    }

    #[test]
    fn small_shape_gamma_moments() {
        let mut s = RandomStream::new(4);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.gamma(0.5, 1.0).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 0.5).abs() < 0.01, "mean {m}");
        assert!((v - 0.5).abs() < 0.01, "var {v}");
        assert!(xs.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn gamma_scale_is_multiplicative() {
        let mut a = RandomStream::new(5);
        let mut b = RandomStream::new(5);
        for _ in 0..1000 {
            let x = a.gamma(0.7, 1.0).unwrap();
            let y = b.gamma(0.7, 3.5).unwrap();
            assert!((y - 3.5 * x).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn gamma_rejects_bad_parameters() {
        let mut s = RandomStream::new(6);
        assert!(s.gamma(0.0, 1.0).is_err());
        assert!(s.gamma(1.0, -1.0).is_err());
        assert!(s.gamma(f64::NAN, 1.0).is_err());
        assert!(s.beta(0.0, 1.0).is_err());
        assert!(s.beta(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_means() {
        let mut s = RandomStream::new(7);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.beta(1.0, 1.0).unwrap()).collect();
        assert!((mean_var(&xs).0 - 0.5).abs() < 0.002);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.beta(1.0, 2.0).unwrap()).collect();
        assert!((mean_var(&xs).0 - 1.0 / 3.0).abs() < 0.002);
        let xs: Vec<f64> = (0..200_000).map(|_| s.beta(2.0, 3.0).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 0.4).abs() < 0.003);
        assert!((v - 0.04).abs() < 0.002);
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn normal_moments() {
        let mut s = RandomStream::new(8);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.normal()).collect();
        let (m, v) = mean_var(&xs);
        let skew = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / xs.len() as f64 / v.powf(1.5);
        assert!(m.abs() < 0.003, "mean {m}");
        assert!((v - 1.0).abs() < 0.005, "var {v}");
        assert!(skew.abs() < 0.01, "skew {skew}");
        assert_eq!(s.normals_drawn(), 1_000_000);
    }

    #[test]
    fn split_is_deterministic_and_distinct() {
        let root = RandomStream::new(9);
        let mut a = root.split(0);
        let mut b = root.split(1);
        let mut a2 = root.split(0);
        let xa: Vec<u64> = (0..16).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..16).map(|_| b.next_u64()).collect();
        let xa2: Vec<u64> = (0..16).map(|_| a2.next_u64()).collect();
        assert_eq!(xa, xa2);
        assert_ne!(xa, xb);
    }

    #[test]
    fn split_ignores_parent_consumption() {
        let mut root = RandomStream::new(10);
        let before = root.split(3).next_u64();
        for _ in 0..100 {
            root.next_u64();
        }
        assert_eq!(before, root.split(3).next_u64());
    }

    #[test]
    fn split_children_uncorrelated() {
        let root = RandomStream::new(11);
        let mut a = root.split(0);
        let mut b = root.split(1);
        let n = 100_000;
        let xs: Vec<(f64, f64)> = (0..n).map(|_| (a.uniform(), b.uniform())).collect();
        let (ma, va) = mean_var(&xs.iter().map(|p| p.0).collect::<Vec<_>>());
        let (mb, vb) = mean_var(&xs.iter().map(|p| p.1).collect::<Vec<_>>());
        let cov = xs.iter().map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64;
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() < 0.01, "corr {corr}");
    }
}
