//! Seeded, parallel Monte-Carlo integration.
//!
//! Samples are split into a fixed number of contiguous chunks. Chunk `s` draws
//! from a ChaCha8 generator seeded with the master seed on stream `s`, and
//! chunk results are merged in chunk order. The output therefore depends only
//! on `(seed, samples)`: it is bitwise identical for every worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Number of independent generator streams (and jackknife batches).
pub const STREAMS: u64 = 64;

/// Smallest accepted sample count.
pub const MIN_SAMPLES: u64 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, workers: default_workers() }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Same sample count and workers on an unrelated seed.
    pub fn reseeded(&self, salt: u64) -> Self {
        Self { seed: self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15), ..*self }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::invalid(format!("{} samples requested, at least {MIN_SAMPLES} required", self.samples)));
        }
        if self.workers == 0 {
            return Err(Error::invalid("worker count must be at least 1"));
        }
        Ok(())
    }
}

/// Available parallelism, or 1 if it cannot be determined.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// An estimate with its standard error.
///
/// For complex values `std_error` is `sqrt(var(Re) + var(Im)) / sqrt(samples)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: C64,
    pub std_error: f64,
    pub samples: u64,
}

impl MCEstimate {
    pub fn exact(value: C64) -> Self {
        Self { value, std_error: 0.0, samples: 0 }
    }

    /// `|value - target| <= k · std_error`.
    pub fn within(&self, target: C64, k: f64) -> bool {
        (self.value - target).norm() <= k * self.std_error
    }
}

/// Draws points of a reference law together with importance weights.
///
/// The estimator of `∫ f dμ` is the mean of `weight · f(point)`.
pub trait Sampler: Sync {
    type Point;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(Self::Point, f64)>;
}

/// Uniform points on a box; the weight is the box volume, so the estimator targets `∫ f dx`.
#[derive(Clone, Debug)]
pub struct UniformBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    volume: f64,
}

impl UniformBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("box bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid("box bounds must be finite with lower < upper"));
        }
        let volume = lower.iter().zip(&upper).map(|(a, b)| b - a).product();
        Ok(Self { lower, upper, volume })
    }

    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], vec![1.0; dim])
    }
}

impl Sampler for UniformBox {
    type Point = Vec<f64>;
    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, f64)> {
        use rand::Rng;
        let x = self.lower.iter().zip(&self.upper).map(|(&a, &b)| a + (b - a) * rng.random::<f64>()).collect();
        Ok((x, self.volume))
    }
}

/// Running mean and co-moment matrix of a real vector (Welford updates, Chan merges).
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    count: u64,
    mean: Vec<f64>,
    comoment: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self { count: 0, mean: vec![0.0; dim], comoment: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl * inv;
        }
        for (i, (xi, mi)) in x.iter().zip(&self.mean).enumerate() {
            let after = xi - mi;
            for (c, dj) in self.comoment[i * d..(i + 1) * d].iter_mut().zip(&delta) {
                *c += dj * after;
            }
        }
    }

    pub fn merge(mut self, other: Moments) -> Moments {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let d = self.dim();
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl * nb / n;
        }
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] += other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        self.count += other.count;
        self
    }

    /// Sample covariance entry `(i, j)` (denominator `count - 1`).
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.count - 1) as f64
    }

    /// Covariance of the mean, `covariance / count`.
    pub fn mean_covariance(&self, i: usize, j: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.covariance(i, j) / self.count as f64
    }
}

/// First-order (delta-method) ratio `num / den` of complex means held in `m`
/// as `[num.re, num.im, den.re, den.im]` at offsets `num` and `den`.
pub fn ratio_estimate(m: &Moments, num: usize, den: usize) -> Result<MCEstimate> {
    let a = C64::new(m.mean[num], m.mean[num + 1]);
    let b = C64::new(m.mean[den], m.mean[den + 1]);
    if b.norm() == 0.0 || !b.is_finite() {
        return Err(Error::numerical("ratio denominator is zero"));
    }
    let c = a / b;
    // Linearization: δc = (δa - c δb) / b. Gradient of Re/Im δc w.r.t. (a.re, a.im, b.re, b.im).
    let inv_b = b.inv();
    let g_re = [inv_b.re, -inv_b.im, -(c * inv_b).re, (c * inv_b).im];
    let g_im = [inv_b.im, inv_b.re, -(c * inv_b).im, -(c * inv_b).re];
    let idx = [num, num + 1, den, den + 1];
    let quad = |g: &[f64; 4]| {
        let mut s = 0.0;
        for p in 0..4 {
            for q in 0..4 {
                s += g[p] * g[q] * m.mean_covariance(idx[p], idx[q]);
            }
        }
        s
    };
    let var = quad(&g_re) + quad(&g_im);
    Ok(MCEstimate { value: c, std_error: var.max(0.0).sqrt(), samples: m.count })
}

fn chunk_bounds(samples: u64, stream: u64) -> (u64, u64) {
    let lo = (samples as u128 * stream as u128 / STREAMS as u128) as u64;
    let hi = (samples as u128 * (stream + 1) as u128 / STREAMS as u128) as u64;
    (lo, hi)
}

/// Runs `step` over all samples and merges per-stream accumulators in stream order.
///
/// `step` receives the global sample index, the drawn point and its weight.
pub fn run_streams<S, T, I, F, M>(cfg: &McConfig, sampler: &S, init: I, step: F, merge: M) -> Result<T>
where
    S: Sampler,
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, u64, &S::Point, f64) -> Result<()> + Sync,
    M: Fn(T, T) -> T,
{
    let parts = run_streams_split(cfg, sampler, init, step)?;
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one stream");
    Ok(it.fold(first, merge))
}

/// As [`run_streams`] but returns the per-stream accumulators without merging.
pub fn run_streams_split<S, T, I, F>(cfg: &McConfig, sampler: &S, init: I, step: F) -> Result<Vec<T>>
where
    S: Sampler,
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, u64, &S::Point, f64) -> Result<()> + Sync,
{
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::numerical(format!("could not start worker pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| {
        (0..STREAMS)
            .into_par_iter()
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(s);
                let mut acc = init();
                let (lo, hi) = chunk_bounds(cfg.samples, s);
                for i in lo..hi {
                    let (p, w) = sampler.draw(&mut rng)?;
                    step(&mut acc, i, &p, w)?;
                }
                Ok(acc)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(results.len());
    let mut first_err: Option<Error> = None;
    for r in results {
        match r {
            Ok(t) => out.push(t),
            Err(e) => {
                first_err = Some(match (first_err.take(), e) {
                    (Some(Error::NonFinite { index: a }), Error::NonFinite { index: b }) => {
                        Error::NonFinite { index: a.min(b) }
                    }
                    (Some(prev), _) => prev,
                    (None, e) => e,
                })
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Monte-Carlo estimate of `∫ f dμ` where `sampler` targets `μ`.
pub fn integrate_mc<S, F>(f: F, sampler: &S, cfg: &McConfig) -> Result<MCEstimate>
where
    S: Sampler,
    F: Fn(&S::Point) -> C64 + Sync,
{
    let m = run_streams(
        cfg,
        sampler,
        || Moments::new(2),
        |acc, i, p, w| {
            let v = f(p) * w;
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            acc.push(&[v.re, v.im]);
            Ok(())
        },
        Moments::merge,
    )?;
    let var = m.mean_covariance(0, 0) + m.mean_covariance(1, 1);
    Ok(MCEstimate { value: C64::new(m.mean[0], m.mean[1]), std_error: var.max(0.0).sqrt(), samples: m.count })
}

/// Per-stream sums of a complex vector-valued integrand, for jackknife error bars.
#[derive(Clone, Debug)]
pub struct BatchSums {
    pub sums: Vec<Vec<C64>>,
    pub counts: Vec<u64>,
}

impl BatchSums {
    /// Accumulates `g(point, weight, out)` into `dim` complex slots per stream.
    pub fn collect<S, G>(cfg: &McConfig, sampler: &S, dim: usize, g: G) -> Result<Self>
    where
        S: Sampler,
        G: Fn(&S::Point, f64, &mut [C64]) + Sync,
    {
        let parts = run_streams_split(
            cfg,
            sampler,
            || (vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim], 0u64),
            |acc, i, p, w| {
                for v in acc.1.iter_mut() {
                    *v = C64::new(0.0, 0.0);
                }
                g(p, w, &mut acc.1);
                if acc.1.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { index: i });
                }
                for (s, v) in acc.0.iter_mut().zip(&acc.1) {
                    *s += v;
                }
                acc.2 += 1;
                Ok(())
            },
        )?;
        let (sums, counts) = parts.into_iter().filter(|p| p.2 > 0).map(|(s, _, c)| (s, c)).unzip();
        Ok(Self { sums, counts })
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> Vec<C64> {
        let n = self.total_count() as f64;
        let dim = self.sums.first().map_or(0, Vec::len);
        let mut m = vec![C64::new(0.0, 0.0); dim];
        for s in &self.sums {
            for (a, b) in m.iter_mut().zip(s) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Delete-one-batch jackknife of a smooth function `h` of the mean vector.
    ///
    /// Returns `h(mean)` and a per-component standard error.
    pub fn jackknife<H>(&self, h: H) -> Result<(Vec<C64>, Vec<f64>)>
    where
        H: Fn(&[C64]) -> Result<Vec<C64>>,
    {
        let full = h(&self.mean())?;
        let b = self.sums.len();
        if b < 2 {
            return Ok((full.clone(), vec![f64::INFINITY; full.len()]));
        }
        let total: Vec<C64> = {
            let mut t = vec![C64::new(0.0, 0.0); full.len().max(self.sums[0].len())];
            t.truncate(self.sums[0].len());
            for s in &self.sums {
                for (a, v) in t.iter_mut().zip(s) {
                    *a += v;
                }
            }
            t
        };
        let n = self.total_count();
        let mut reps = Vec::with_capacity(b);
        for (s, &c) in self.sums.iter().zip(&self.counts) {
            let denom = (n - c) as f64;
            let m: Vec<C64> = total.iter().zip(s).map(|(t, v)| (t - v) / denom).collect();
            reps.push(h(&m)?);
        }
        let k = full.len();
        let bf = b as f64;
        let mut err = vec![0.0; k];
        for (i, e) in err.iter_mut().enumerate() {
            let avg: C64 = reps.iter().map(|r| r[i]).sum::<C64>() / bf;
            let ss: f64 = reps.iter().map(|r| (r[i] - avg).norm_sqr()).sum();
            *e = ((bf - 1.0) / bf * ss).sqrt();
        }
        Ok((full, err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_has_zero_error() {
        let s = UniformBox::unit(1).unwrap();
        let e = integrate_mc(|_| C64::new(2.5, -1.0), &s, &McConfig::new(1000, 1)).unwrap();
        assert_eq!(e.value, C64::new(2.5, -1.0));
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.samples, 1000);
    }

    #[test]
    fn uniform_mean_and_quarter_disc() {
        let cfg = McConfig::new(200_000, 7);
        let s = UniformBox::unit(1).unwrap();
        let e = integrate_mc(|x| C64::new(x[0], 0.0), &s, &cfg).unwrap();
        assert!(e.within(C64::new(0.5, 0.0), 3.0), "{e:?}");
        let s2 = UniformBox::unit(2).unwrap();
        let q =
            integrate_mc(|x| C64::new(f64::from(u8::from(x[0] * x[0] + x[1] * x[1] <= 1.0)), 0.0), &s2, &cfg).unwrap();
        assert!(q.within(C64::new(std::f64::consts::FRAC_PI_4, 0.0), 3.0), "{q:?}");
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let s = UniformBox::unit(2).unwrap();
        let f = |x: &Vec<f64>| C64::new((x[0] * 3.0).sin(), x[1] * x[0]);
        let a = integrate_mc(f, &s, &McConfig::new(5000, 42).with_workers(1)).unwrap();
        let b = integrate_mc(f, &s, &McConfig::new(5000, 42).with_workers(3)).unwrap();
        assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
        assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn non_finite_value_reports_smallest_index() {
        let s = UniformBox::unit(1).unwrap();
        let err =
            integrate_mc(|x| C64::new(if x[0] < 0.05 { f64::NAN } else { 1.0 }, 0.0), &s, &McConfig::new(1000, 3))
                .unwrap_err();
        let Error::NonFinite { index } = err else { panic!("unexpected error {err:?}") };
        // Recompute the first offending index sequentially.
        let mut first = u64::MAX;
        for st in 0..STREAMS {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            rng.set_stream(st);
            let (lo, hi) = chunk_bounds(1000, st);
            for i in lo..hi {
                let (p, _) = s.draw(&mut rng).unwrap();
                if p[0] < 0.05 {
                    first = first.min(i);
                    break;
                }
            }
        }
        assert_eq!(index, first);
    }

    #[test]
    fn too_few_samples_is_invalid() {
        let s = UniformBox::unit(1).unwrap();
        assert!(matches!(integrate_mc(|_| C64::new(1.0, 0.0), &s, &McConfig::new(99, 0)), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn ratio_of_identical_streams_is_exact() {
        let mut m = Moments::new(4);
        for k in 0..50 {
            let v = (k as f64).sin();
            m.push(&[v, 0.0, v, 0.0]);
        }
        let r = ratio_estimate(&m, 0, 2).unwrap();
        assert_eq!(r.value, C64::new(1.0, 0.0));
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn merged_moments_match_sequential() {
        let xs: Vec<[f64; 2]> = (0..40).map(|k| [(k as f64 * 0.7).cos(), k as f64 * 0.1]).collect();
        let mut all = Moments::new(2);
        xs.iter().for_each(|x| all.push(x));
        let (mut a, mut b) = (Moments::new(2), Moments::new(2));
        xs[..13].iter().for_each(|x| a.push(x));
        xs[13..].iter().for_each(|x| b.push(x));
        let m = a.merge(b);
        for i in 0..2 {
            assert!((m.mean()[i] - all.mean()[i]).abs() < 1e-14);
            for j in 0..2 {
                assert!((m.covariance(i, j) - all.covariance(i, j)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn jackknife_of_linear_map_matches_classical_error() {
        let s = UniformBox::unit(1).unwrap();
        let cfg = McConfig::new(64_000, 5);
        let b = BatchSums::collect(&cfg, &s, 1, |x, w, out| out[0] = C64::new(x[0] * w, 0.0)).unwrap();
        let (v, e) = b.jackknife(|m| Ok(m.to_vec())).unwrap();
        let direct = integrate_mc(|x| C64::new(x[0], 0.0), &s, &cfg).unwrap();
        assert!((v[0] - direct.value).norm() < 1e-12);
        assert!((e[0] / direct.std_error - 1.0).abs() < 0.5, "{} vs {}", e[0], direct.std_error);
    }
}
