//! Deterministic sample generators: a Halton sequence for hypothesis checks
//! and seeded random trigonometric sums for function ensembles.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, GridFunction};
use crate::{Error, Result};

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Halton low-discrepancy sequence in `[0, 1)^D`. The seed offsets the
/// starting index so different seeds give different, reproducible streams.
#[derive(Debug, Clone)]
pub struct Halton<const D: usize> {
    index: u64,
}

impl<const D: usize> Halton<D> {
    pub fn new(seed: u64) -> Self {
        assert!(D <= PRIMES.len(), "at most {} dimensions", PRIMES.len());
        Halton { index: seed.wrapping_add(1) }
    }

    pub fn next_point(&mut self) -> [f64; D] {
        let i = self.index;
        self.index += 1;
        std::array::from_fn(|d| radical_inverse(i, PRIMES[d]))
    }
}

impl<const D: usize> Iterator for Halton<D> {
    type Item = [f64; D];

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.next_point())
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Where sampled values of x, y (and ensemble members) live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleDomain {
    /// `[-r, r]`
    #[default]
    Symmetric,
    /// `[0, r]`, for problems whose f is only defined on ℝ⁺.
    Nonnegative,
}

impl SampleDomain {
    /// Maps `u ∈ [0, 1)` onto the interval of radius `r`.
    pub fn scale(self, u: f64, r: f64) -> f64 {
        match self {
            SampleDomain::Symmetric => r * (2.0 * u - 1.0),
            SampleDomain::Nonnegative => r * u,
        }
    }
}

impl FromStr for SampleDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "symmetric" => Ok(SampleDomain::Symmetric),
            "nonnegative" => Ok(SampleDomain::Nonnegative),
            other => {
                Err(Error::Invalid(format!("unknown sample domain {other:?} (expected symmetric or nonnegative)")))
            }
        }
    }
}

impl fmt::Display for SampleDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SampleDomain::Symmetric => "symmetric",
            SampleDomain::Nonnegative => "nonnegative",
        })
    }
}

/// Random truncated trigonometric sums
/// `c₀ + Σₖ aₖ sin(ωₖ t + θₖ)`, rescaled into the ball of radius `r`.
#[derive(Debug, Clone, Copy)]
pub struct TrigSums {
    pub terms: usize,
    /// Largest angular frequency ωₖ.
    pub max_freq: f64,
}

impl Default for TrigSums {
    fn default() -> Self {
        TrigSums { terms: 4, max_freq: 2.0 }
    }
}

impl TrigSums {
    pub fn sample<R: Rng>(&self, rng: &mut R, grid: Grid, radius: f64, domain: SampleDomain) -> GridFunction {
        let c0: f64 = rng.random_range(-1.0..1.0);
        let terms: Vec<(f64, f64, f64)> = (0..self.terms)
            .map(|_| {
                (
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.0..self.max_freq),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let amplitude: f64 = rng.random_range(0.1..1.0);
        let raw: Vec<f64> =
            grid.nodes().map(|t| c0 + terms.iter().map(|(a, w, th)| a * (w * t + th).sin()).sum::<f64>()).collect();
        let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let scale = radius * amplitude;
        let values = match domain {
            SampleDomain::Symmetric => {
                let m = lo.abs().max(hi.abs());
                if m == 0.0 {
                    vec![0.0; raw.len()]
                } else {
                    raw.iter().map(|v| scale * v / m).collect()
                }
            }
            SampleDomain::Nonnegative => {
                if hi == lo {
                    vec![0.5 * scale; raw.len()]
                } else {
                    raw.iter().map(|v| scale * (v - lo) / (hi - lo)).collect()
                }
            }
        };
        GridFunction::new(grid, values).expect("trig sums are finite")
    }

    /// `count` members drawn from a generator seeded with `seed`.
    pub fn ensemble(
        &self,
        grid: Grid,
        count: usize,
        radius: f64,
        domain: SampleDomain,
        seed: u64,
    ) -> Vec<GridFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng, grid, radius, domain)).collect()
    }
}
