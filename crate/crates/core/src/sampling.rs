//! Deterministic, seeded low-discrepancy sampling.
//!
//! Checker verdicts must be bit-reproducible across runs, so sampling is
//! built on Halton radical-inverse sequences with a seeded Cranley-Patterson
//! rotation per dimension instead of a stateful RNG.

use thiserror::Error;

use crate::expr::Point;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// SplitMix64 step; the standard 64-bit mixer.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` from a SplitMix64 stream.
pub fn unit_f64(state: &mut u64) -> f64 {
    (splitmix64(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// Radical inverse of `index` in the given prime base, in `[0, 1)`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SampleError {
    #[error("sample box interval {index} is empty ({lo} > {hi})")]
    EmptyInterval { index: usize, lo: f64, hi: f64 },
    #[error("sample count must be at least 1")]
    ZeroCount,
    #[error("sample box dimension {dims} exceeds the supported maximum {max}")]
    TooManyDimensions { dims: usize, max: usize },
}

/// Domain over which a universally quantified hypothesis is sampled:
/// a time range, per-component state and control intervals, a sample count,
/// and a seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBox {
    pub t_range: (f64, f64),
    pub x_box: Vec<(f64, f64)>,
    pub u_box: Vec<(f64, f64)>,
    pub count: usize,
    pub seed: u64,
}

impl SampleBox {
    pub fn new(
        t_range: (f64, f64),
        x_box: Vec<(f64, f64)>,
        u_box: Vec<(f64, f64)>,
        count: usize,
        seed: u64,
    ) -> Result<Self, SampleError> {
        if count == 0 {
            return Err(SampleError::ZeroCount);
        }
        let dims = 1 + x_box.len() + u_box.len();
        if dims > PRIMES.len() {
            return Err(SampleError::TooManyDimensions {
                dims,
                max: PRIMES.len(),
            });
        }
        for (index, &(lo, hi)) in std::iter::once(&t_range)
            .chain(x_box.iter())
            .chain(u_box.iter())
            .enumerate()
        {
            if !(lo <= hi) {
                return Err(SampleError::EmptyInterval { index, lo, hi });
            }
        }
        Ok(SampleBox {
            t_range,
            x_box,
            u_box,
            count,
            seed,
        })
    }

    fn offsets(&self) -> Vec<f64> {
        let dims = 1 + self.x_box.len() + self.u_box.len();
        let mut state = self.seed ^ 0xA5A5_5A5A_DEAD_BEEF;
        (0..dims).map(|_| unit_f64(&mut state)).collect()
    }

    fn coord(index: u64, dim: usize, offset: f64, (lo, hi): (f64, f64)) -> f64 {
        let v = (halton(index, PRIMES[dim]) + offset).fract();
        lo + v * (hi - lo)
    }

    /// The `i`-th sample point (0-based). Deterministic in `(seed, i)`.
    pub fn point(&self, i: usize) -> Point {
        let offsets = self.offsets();
        self.point_with_offsets(i, &offsets)
    }

    fn point_with_offsets(&self, i: usize, offsets: &[f64]) -> Point {
        let index = i as u64 + 1;
        let t = Self::coord(index, 0, offsets[0], self.t_range);
        let x = self
            .x_box
            .iter()
            .enumerate()
            .map(|(j, &iv)| Self::coord(index, 1 + j, offsets[1 + j], iv))
            .collect();
        let u = self
            .u_box
            .iter()
            .enumerate()
            .map(|(j, &iv)| {
                Self::coord(index, 1 + self.x_box.len() + j, offsets[1 + self.x_box.len() + j], iv)
            })
            .collect();
        Point::new(t, x, u)
    }

    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        let offsets = self.offsets();
        (0..self.count).map(move |i| self.point_with_offsets(i, &offsets))
    }

    /// Same box with every control interval widened by `factor` about its
    /// center. Used by the built-in escalation passes.
    pub fn scale_u(&self, factor: f64) -> SampleBox {
        let u_box = self
            .u_box
            .iter()
            .map(|&(lo, hi)| {
                let c = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * factor;
                (c - half, c + half)
            })
            .collect();
        SampleBox {
            u_box,
            ..self.clone()
        }
    }
}
