// SPDX-License-Identifier: MIT OR Apache-2.0

//! Random valid instances for simulations and property tests.

use rand::Rng;

use crate::signal::{validate_function, PiecewiseConstantFunction, SamplingGrid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstanceParams {
    pub min_regions: usize,
    pub max_regions: usize,
    /// Smallest allowed `|g_{i+1} - g_i|`, including the outer jumps.
    pub min_jump: f64,
    pub max_level: f64,
    /// Region lengths are drawn from `[min_len, max_len)` in units of `T`;
    /// `min_len` must be at least 1.
    pub min_len: f64,
    pub max_len: f64,
    pub t: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self {
            min_regions: 1,
            max_regions: 6,
            min_jump: 0.5,
            max_level: 3.0,
            min_len: 1.0,
            max_len: 4.0,
            t: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub function: PiecewiseConstantFunction,
    pub grids: [SamplingGrid; 2],
}

impl Instance {
    pub fn len(&self) -> usize {
        self.grids[0].count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A function satisfying every modelling assumption.
pub fn random_function<R: Rng + ?Sized>(rng: &mut R, p: &InstanceParams) -> PiecewiseConstantFunction {
    loop {
        let m = rng.random_range(p.min_regions..=p.max_regions);
        let Some(levels) = random_levels(rng, m, p) else {
            continue;
        };
        let lengths: Vec<f64> = (0..m).map(|_| rng.random_range(p.min_len..p.max_len)).collect();
        let Ok(f) = PiecewiseConstantFunction::from_lengths_in_t(levels, &lengths, p.t) else {
            continue;
        };
        if validate_function(&f).is_empty() {
            return f;
        }
    }
}

fn random_levels<R: Rng + ?Sized>(rng: &mut R, m: usize, p: &InstanceParams) -> Option<Vec<f64>> {
    let mut levels = Vec::with_capacity(m);
    let mut prev = 0.0;
    for i in 0..m {
        let last = i + 1 == m;
        let ok = (0..100)
            .map(|_| rng.random_range(-p.max_level..=p.max_level))
            .find(|&g: &f64| (g - prev).abs() >= p.min_jump && (!last || g.abs() >= p.min_jump))?;
        levels.push(ok);
        prev = ok;
    }
    Some(levels)
}

/// Two grids of equal length whose first samples fall in `[-2T, -T)`,
/// so both sequences start and end with at least one sample outside the
/// support.
pub fn random_grids<R: Rng + ?Sized>(rng: &mut R, f: &PiecewiseConstantFunction) -> [SamplingGrid; 2] {
    let t = f.sampling_interval();
    let total: f64 = f.region_lengths().iter().sum();
    let n = (total / t).ceil() as usize + 4;
    [(); 2].map(|_| SamplingGrid::new(rng.random_range(-2.0..-1.0) * t, n, t))
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, p: &InstanceParams) -> Instance {
    let function = random_function(rng, p);
    let grids = random_grids(rng, &function);
    Instance { function, grids }
}
