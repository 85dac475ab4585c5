// SPDX-License-Identifier: MIT OR Apache-2.0

//! Edge-weight statistics under additive white Gaussian noise.
//!
//! Away from the first position, a difference component is `a + e[j] -
//! e[j-1]`, so with i.i.d. `N(0, sigma^2)` sample noise it is `N(a,
//! 2 sigma^2)`. The closed forms below treat the two components feeding
//! an edge as independent; the Monte Carlo routines check them and also
//! cover laws without a closed form.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::dp::{edge_weight, WeightKind};
use crate::noise::{chunked, NoiseSpec, Seed};
use crate::{Error, Result};

/// Standard normal upper tail `P(Z > z)`.
pub fn q_function(z: f64) -> f64 {
    0.5 * libm::erfc(z / SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeNoiseContext {
    /// Noiseless difference values feeding the edge.
    pub a: f64,
    pub b: f64,
    pub v: f64,
    /// Per-sample noise standard deviation.
    pub sigma: f64,
}

impl EdgeNoiseContext {
    pub fn new(a: f64, b: f64, v: f64, sigma: f64) -> Result<Self> {
        let ctx = Self { a, b, v, sigma };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.a, self.b, self.v, self.sigma].iter().all(|x| x.is_finite());
        if finite && self.v > 0.0 && self.sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad edge noise context {self:?}")))
        }
    }

    fn scale(&self) -> f64 {
        self.sigma * SQRT_2
    }
}

/// Probability that the indicator weight of the edge is one.
pub fn prob_w1_positive(ctx: &EdgeNoiseContext) -> f64 {
    let s = ctx.scale();
    let (a, b, v) = (ctx.a, ctx.b, ctx.v);
    q_function((v - a) / s) * q_function((v - b) / s) + q_function((v + a) / s) * q_function((v + b) / s)
}

/// Expected product weight of the edge.
pub fn expected_w2(ctx: &EdgeNoiseContext) -> f64 {
    let s = ctx.scale();
    let (a, b, v, sigma) = (ctx.a, ctx.b, ctx.v, ctx.sigma);
    let bump = |u: f64| sigma / PI.sqrt() * (-u * u / (4.0 * sigma * sigma)).exp();
    // E[d; d >= v] and E[d; d <= -v] for d ~ N(c, 2 sigma^2).
    let upper = |c: f64| c * q_function((v - c) / s) + bump(v - c);
    let lower = |c: f64| c * q_function((v + c) / s) - bump(v + c);
    upper(a) * upper(b) + lower(a) * lower(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeStats {
    pub trials: u64,
    pub positive_rate: f64,
    pub positive_rate_se: f64,
    pub mean_weight: f64,
    pub mean_weight_se: f64,
}

/// Simulated edge weights with Gaussian sample noise of deviation
/// `ctx.sigma`.
pub fn monte_carlo_edge_stats(kind: WeightKind, ctx: &EdgeNoiseContext, trials: u64, seed: Seed) -> Result<EdgeStats> {
    monte_carlo_edge_stats_with(kind, ctx, &NoiseSpec::Gaussian { sigma: ctx.sigma }, trials, seed)
}

/// Simulated edge weights where each difference component is `a + e - e'`
/// for independent draws `e, e'` from `law`. `ctx.sigma` is ignored.
pub fn monte_carlo_edge_stats_with(
    kind: WeightKind,
    ctx: &EdgeNoiseContext,
    law: &NoiseSpec,
    trials: u64,
    seed: Seed,
) -> Result<EdgeStats> {
    law.validate()?;
    if !law.is_stochastic() {
        return Err(Error::InvalidParameter(
            "edge statistics need a random noise law".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    if !(ctx.v.is_finite() && ctx.v > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be positive, got {}",
            ctx.v
        )));
    }
    let parts = chunked(trials, |range| {
        range.fold((0u64, 0.0, 0.0), |(hits, sum, sum_sq), i| {
            let mut rng = seed.rng_at(i);
            let d1 = ctx.a + law.draw(&mut rng) - law.draw(&mut rng);
            let d2 = ctx.b + law.draw(&mut rng) - law.draw(&mut rng);
            let w = edge_weight(kind, d1, d2, ctx.v);
            (hits + u64::from(w > 0.0), sum + w, sum_sq + w * w)
        })
    });
    let (hits, sum, sum_sq) = parts
        .into_iter()
        .fold((0u64, 0.0, 0.0), |(h, s, q), (a, b, c)| (h + a, s + b, q + c));
    let n = trials as f64;
    let rate = hits as f64 / n;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(EdgeStats {
        trials,
        positive_rate: rate,
        positive_rate_se: (rate * (1.0 - rate) / n).sqrt(),
        mean_weight: mean,
        mean_weight_se: (var / n).sqrt(),
    })
}
