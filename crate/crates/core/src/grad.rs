//! Gaussian-smoothed finite-difference gradient estimation.
//!
//! For an objective `f` and smoothing factor `sigma` the estimate is
//!
//! ```text
//! g = 1/N * sum_n (f(theta + sigma*u_n) - f(theta)) / sigma * u_n,   u_n ~ N(0, I)
//! ```
//!
//! which is an unbiased estimate of the gradient of the smoothed objective
//! `E[f(theta + sigma*u)]`. `f(theta)` is evaluated once and shared by all
//! samples, so one estimate costs `N + 1` evaluations regardless of the
//! dimension of `theta`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig<F> {
    samples: usize,
    sigma: F,
}

impl<F: Scalar> EstimatorConfig<F> {
    pub fn new(samples: usize, sigma: F) -> Result<Self> {
        if samples == 0 {
            return Err(Error::contract("estimator needs at least one sample"));
        }
        if !(sigma > F::zero()) || !sigma.is_finite() {
            return Err(Error::contract(format!(
                "smoothing factor must be positive, got {sigma}"
            )));
        }
        Ok(Self { samples, sigma })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate<F> {
    pub gradient: Vec<F>,
    pub evaluations_used: usize,
}

/// Stream layout: the base point is evaluated with `rng.child(0)`; sample `n`
/// draws its direction from `rng.child(n + 1).child(0)` and evaluates `f`
/// with `rng.child(n + 1).child(1)`.
pub fn estimate_gradient<F, Obj>(
    f: Obj,
    theta: &[F],
    cfg: &EstimatorConfig<F>,
    rng: RngStream,
) -> Result<GradientEstimate<F>>
where
    F: Scalar,
    Obj: Fn(&[F], RngStream) -> Result<F> + Sync,
{
    let base = f(theta, rng.child(0))?;
    if !base.is_finite() {
        return Err(Error::NonFinite {
            sample: None,
            value: base.as_f64(),
        });
    }
    let sigma = cfg.sigma;
    let terms = (0..cfg.samples)
        .into_par_iter()
        .map(|n| {
            let stream = rng.child(n as u64 + 1);
            let u = normal_vector::<F>(theta.len(), stream.child(0));
            let perturbed: Vec<F> = theta.iter().zip(&u).map(|(&t, &z)| t + sigma * z).collect();
            let value = f(&perturbed, stream.child(1))?;
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    sample: Some(n),
                    value: value.as_f64(),
                });
            }
            Ok(((value - base) / sigma, u))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut gradient = vec![F::zero(); theta.len()];
    for (scale, u) in &terms {
        for (g, &z) in gradient.iter_mut().zip(u) {
            *g += *scale * z;
        }
    }
    let n = F::from_usize_(cfg.samples);
    for g in &mut gradient {
        *g /= n;
    }
    Ok(GradientEstimate {
        gradient,
        evaluations_used: cfg.samples + 1,
    })
}

fn normal_vector<F: Scalar>(dim: usize, rng: RngStream) -> Vec<F> {
    let mut gen = rng.generator();
    (0..dim).map(|_| F::lit(gen.sample::<f64, _>(StandardNormal))).collect()
}

/// Central differences `(f(theta + h e_i) - f(theta - h e_i)) / 2h`.
pub fn finite_difference_oracle<F, Obj>(f: Obj, theta: &[F], h: F) -> Result<Vec<F>>
where
    F: Scalar,
    Obj: Fn(&[F]) -> F,
{
    if !(h > F::zero()) {
        return Err(Error::contract(format!("step must be positive, got {h}")));
    }
    let mut point = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            point[i] = theta[i] + h;
            let up = f(&point);
            point[i] = theta[i] - h;
            let down = f(&point);
            point[i] = theta[i];
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFinite {
                    sample: Some(i),
                    value: if up.is_finite() { down.as_f64() } else { up.as_f64() },
                });
            }
            Ok((up - down) / (h + h))
        })
        .collect()
}
