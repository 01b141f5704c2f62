//! Seeded Monte Carlo estimators used as independent, low-precision oracles.
//!
//! Randomness is counter based: samples are grouped in fixed blocks and block
//! `b` draws from the ChaCha8 stream `b` of the seed, so the result does not
//! depend on how blocks are spread over threads. Block moments are merged in
//! block order.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::geometry::{touch_points, FermiParameter};
use crate::quadrature::kernel;

pub const BLOCK_SIZE: u64 = 4096;
pub const MIN_INNER_SAMPLES: u64 = 10_000;
pub const MIN_F_SAMPLES: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McFOptions {
    /// Drop outer samples with `| |y| - √(1-a²) | < w`, matching a truncated `F`.
    pub exclude_window: Option<f64>,
    /// Antithetic inner draws per disk for each outer sample.
    pub inner_draws: u32,
}

impl Default for McFOptions {
    fn default() -> Self {
        Self {
            exclude_window: None,
            inner_draws: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64 / n as f64);
        Moments { n, mean, m2 }
    }

    fn estimate(self, seed: u64) -> McEstimate {
        let var = if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        };
        McEstimate {
            mean: self.mean,
            std_err: (var / self.n as f64).sqrt(),
            samples: self.n,
            seed,
        }
    }
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_blocks<T>(samples: u64, seed: u64, term: T) -> McEstimate
where
    T: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let n = BLOCK_SIZE.min(samples - b * BLOCK_SIZE);
            let mut m = Moments::default();
            for _ in 0..n {
                m.push(term(&mut rng));
            }
            m
        })
        .collect();
    parts
        .into_iter()
        .fold(Moments::default(), Moments::merge)
        .estimate(seed)
}

fn uniform_in_disk<R: Rng>(rng: &mut R, center: f64) -> (f64, f64) {
    let r = rng.gen::<f64>().sqrt();
    let theta = TAU * rng.gen::<f64>();
    (center + r * theta.cos(), r * theta.sin())
}

/// One antithetic draw for `∫∫ f` over the unit disk at `(center, 0)`:
/// a point whose mirror `(-x', y')` is also in the disk is averaged with it.
fn disk_term<R: Rng, F: Fn(f64, f64) -> f64>(rng: &mut R, center: f64, f: &F) -> f64 {
    let (xp, yp) = uniform_in_disk(rng, center);
    let mx = -xp - center;
    let v = if mx * mx + yp * yp < 1.0 {
        0.5 * (f(xp, yp) + f(-xp, yp))
    } else {
        f(xp, yp)
    };
    PI * v
}

/// Monte Carlo estimate of `∫∫ f(x', y')` over the unit disk at `(center, 0)`.
pub fn mc_disk_integral<F>(f: F, center: f64, samples: u64, seed: u64) -> Result<McEstimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    ensure_finite(center, "disk center")?;
    if samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    Ok(run_blocks(samples, seed, |rng| disk_term(rng, center, &f)))
}

fn inner_integrand(x: f64, y: f64) -> impl Fn(f64, f64) -> f64 + Sync {
    move |xp, yp| {
        if xp == 0.0 {
            0.0
        } else {
            kernel(x, y, xp, yp) / xp
        }
    }
}

/// Monte Carlo estimate of the inner integral `I(x, y; center)`.
pub fn mc_estimate_inner(
    x: f64,
    y: f64,
    center: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    ensure_finite(x, "x")?;
    ensure_finite(y, "y")?;
    if samples < MIN_INNER_SAMPLES {
        return Err(Error::Config(format!(
            "need at least {MIN_INNER_SAMPLES} samples, got {samples}"
        )));
    }
    mc_disk_integral(inner_integrand(x, y), center, samples, seed)
}

pub fn mc_estimate_f(a: FermiParameter, samples: u64, seed: u64) -> Result<McEstimate> {
    mc_estimate_f_with(a, samples, seed, &McFOptions::default())
}

/// Nested Monte Carlo estimate of `F(a)`.
///
/// Outer points are drawn uniformly from the bounding box of the moons and
/// paired with their mirror `(-x, y)`; each gets an independent unbiased
/// `J` estimate from `inner_draws` antithetic draws in each disk. Because
/// `F` is linear in `J`, the sample variance of the nested terms already
/// carries the inner noise.
pub fn mc_estimate_f_with(
    a: FermiParameter,
    samples: u64,
    seed: u64,
    opts: &McFOptions,
) -> Result<McEstimate> {
    let av = a.value();
    if av == 0.0 {
        return Err(Error::Domain("a = 0: moons empty".into()));
    }
    let Some((t, _)) = touch_points(a) else {
        return Err(Error::Domain(format!(
            "|a| = {} >= 1: the estimator needs 0 < |a| < 1",
            av.abs()
        )));
    };
    if samples < MIN_F_SAMPLES {
        return Err(Error::Config(format!(
            "need at least {MIN_F_SAMPLES} samples, got {samples}"
        )));
    }
    if opts.inner_draws == 0 {
        return Err(Error::Config("inner_draws must be positive".into()));
    }
    if let Some(w) = opts.exclude_window {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Config(format!(
                "exclude window must be finite and >= 0, got {w}"
            )));
        }
    }

    let half_width = 1.0 + av.abs();
    let box_area = 4.0 * half_width;
    let inside = |x: f64, y: f64, c: f64| (x - c) * (x - c) + y * y < 1.0;
    let delta = |x: f64, y: f64| inside(x, y, av) as i8 - inside(x, y, -av) as i8;

    let j_hat = |rng: &mut ChaCha8Rng, x: f64, y: f64| {
        let f = inner_integrand(x, y);
        let mut acc = 0.0;
        for _ in 0..opts.inner_draws {
            acc += disk_term(rng, av, &f) - disk_term(rng, -av, &f);
        }
        acc / opts.inner_draws as f64
    };

    Ok(run_blocks(samples, seed, |rng| {
        let x = half_width * (2.0 * rng.gen::<f64>() - 1.0);
        let y = 2.0 * rng.gen::<f64>() - 1.0;
        if opts.exclude_window.is_some_and(|w| (y.abs() - t).abs() < w) {
            return 0.0;
        }
        let d = delta(x, y);
        if d == 0 {
            return 0.0;
        }
        let here = d as f64 * j_hat(rng, x, y);
        let mirror = -(d as f64) * j_hat(rng, -x, y);
        box_area * 0.5 * (here + mirror) / (x * x)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_direct() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        data.iter().for_each(|&v| whole.push(v));
        let (l, r) = data.split_at(377);
        let mut ml = Moments::default();
        let mut mr = Moments::default();
        l.iter().for_each(|&v| ml.push(v));
        r.iter().for_each(|&v| mr.push(v));
        let merged = ml.merge(mr);
        assert_eq!(merged.n, whole.n);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn disk_area() {
        let e = mc_disk_integral(|_, _| 1.0, 0.5, 100_000, 3).unwrap();
        assert!((e.mean - PI).abs() < 1e-12);
    }

    #[test]
    fn odd_part_cancels_exactly_on_paired_region() {
        // centre 0: every draw has its mirror in the disk
        let e = mc_disk_integral(|xp, _| 1.0 / xp, 0.0, 50_000, 11).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.std_err, 0.0);
    }

    #[test]
    fn preconditions() {
        let a = FermiParameter::new(0.0).unwrap();
        assert!(matches!(
            mc_estimate_f(a, MIN_F_SAMPLES, 1),
            Err(Error::Domain(_))
        ));
        let a = FermiParameter::new(1.5).unwrap();
        assert!(mc_estimate_f(a, MIN_F_SAMPLES, 1).is_err());
        let a = FermiParameter::new(0.5).unwrap();
        assert!(mc_estimate_f(a, 10, 1).is_err());
        assert!(mc_estimate_inner(2.0, 0.0, 0.5, 100, 1).is_err());
    }

    #[test]
    fn block_streams_differ() {
        let a: f64 = block_rng(5, 0).gen();
        let b: f64 = block_rng(5, 1).gen();
        assert_ne!(a, b);
    }
}
