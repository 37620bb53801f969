//! Adam and the outer descent loop.

use crate::error::{Error, Result};
use crate::grad::{estimate_gradient, EstimatorConfig};
use crate::loss::Objective;
use crate::model::{ReactionSystem, State};
use crate::problems::ProblemEncoding;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Default number of descent steps.
pub const DEFAULT_STEPS: usize = 200;
/// Default number of independent descents per experiment.
pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub eta: F,
    pub beta1: F,
    pub beta2: F,
    pub epsilon: F,
    pub m: Vec<F>,
    pub v: Vec<F>,
    pub step: u64,
}

impl<F: Scalar> AdamState<F> {
    /// Fresh state with the usual defaults (0.9, 0.999, 1e-8).
    pub fn new(eta: F, dim: usize) -> Result<Self> {
        Self::with_moments(eta, F::lit(0.9), F::lit(0.999), F::lit(1e-8), dim)
    }

    pub fn with_moments(eta: F, beta1: F, beta2: F, epsilon: F, dim: usize) -> Result<Self> {
        if !(eta > F::zero()) || !eta.is_finite() {
            return Err(Error::contract(format!("learning rate must be positive, got {eta}")));
        }
        for (name, b) in [("beta1", beta1), ("beta2", beta2)] {
            if !(b >= F::zero() && b < F::one()) {
                return Err(Error::contract(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(epsilon > F::zero()) {
            return Err(Error::contract(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            eta,
            beta1,
            beta2,
            epsilon,
            m: vec![F::zero(); dim],
            v: vec![F::zero(); dim],
            step: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    /// One bias-corrected update of `theta` in place. On error neither the
    /// state nor `theta` is modified.
    pub fn update(&mut self, theta: &mut [F], g: &[F]) -> Result<()> {
        if theta.len() != self.dim() || g.len() != self.dim() {
            return Err(Error::contract(format!(
                "dimension mismatch: state {}, theta {}, gradient {}",
                self.dim(),
                theta.len(),
                g.len()
            )));
        }
        if let Some(i) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                sample: None,
                value: g[i].as_f64(),
            });
        }
        self.step += 1;
        let t = i32::try_from(self.step).unwrap_or(i32::MAX);
        let c1 = F::one() - self.beta1.powi(t);
        let c2 = F::one() - self.beta2.powi(t);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (F::one() - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (F::one() - self.beta2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            theta[i] -= self.eta * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Functional form of [`AdamState::update`].
pub fn adam_step<F: Scalar>(state: &AdamState<F>, theta: &[F], g: &[F]) -> Result<(AdamState<F>, Vec<F>)> {
    let mut next = state.clone();
    let mut theta = theta.to_vec();
    next.update(&mut theta, g)?;
    Ok((next, theta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<F> {
    pub step: usize,
    /// Unsmoothed loss as reported (minimum over systems for library of systems).
    pub loss: F,
    /// Value the descent minimizes (the sum over systems for library of systems).
    pub objective: F,
    pub theta: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace<F> {
    pub records: Vec<TraceRecord<F>>,
    /// Extracted model at the last recorded parameters.
    pub model: Option<ReactionSystem<F>>,
    /// Per-system losses of the last record.
    pub final_losses: Vec<F>,
}

impl<F: Scalar> ConvergenceTrace<F> {
    pub fn losses(&self) -> Vec<F> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn initial_loss(&self) -> Option<F> {
        self.records.first().map(|r| r.loss)
    }

    pub fn final_loss(&self) -> Option<F> {
        self.records.last().map(|r| r.loss)
    }

    pub fn final_theta(&self) -> Option<&[F]> {
        self.records.last().map(|r| r.theta.as_slice())
    }
}

/// A descent that stopped early, with everything recorded before the failure.
#[derive(Debug)]
pub struct DescentFailure<F> {
    pub trace: ConvergenceTrace<F>,
    pub error: Error,
}

impl<F> std::fmt::Display for DescentFailure<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "descent aborted after {} records: {}",
            self.trace.records.len(),
            self.error
        )
    }
}

impl<F: std::fmt::Debug> std::error::Error for DescentFailure<F> {}

#[derive(Debug, Clone, Copy)]
pub struct Descent<'a, F> {
    pub problem: &'a ProblemEncoding<F>,
    pub objective: &'a Objective<F>,
    pub init: &'a State,
    pub estimator: &'a EstimatorConfig<F>,
}

/// Runs `steps` Adam updates from `init_theta`. Step `s` uses stream
/// `rng.child(s)`: the recorded loss is evaluated with `.child(0)` and the
/// gradient estimated with `.child(1)`. The trace holds `steps + 1` records,
/// the last one after the final update.
#[allow(clippy::result_large_err)]
pub fn run_descent<F: Scalar>(
    descent: Descent<'_, F>,
    adam: AdamState<F>,
    steps: usize,
    init_theta: Vec<F>,
    rng: RngStream,
) -> std::result::Result<ConvergenceTrace<F>, DescentFailure<F>> {
    run_descent_with(descent, adam, steps, init_theta, rng, |_| {})
}

/// [`run_descent`] calling `observe` after every record.
#[allow(clippy::result_large_err)]
pub fn run_descent_with<F: Scalar>(
    descent: Descent<'_, F>,
    mut adam: AdamState<F>,
    steps: usize,
    init_theta: Vec<F>,
    rng: RngStream,
    mut observe: impl FnMut(&TraceRecord<F>),
) -> std::result::Result<ConvergenceTrace<F>, DescentFailure<F>> {
    let Descent {
        problem,
        objective,
        init,
        estimator,
    } = descent;
    let mut trace = ConvergenceTrace {
        records: Vec::with_capacity(steps + 1),
        model: None,
        final_losses: Vec::new(),
    };
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => return Err(DescentFailure { trace, error }),
            }
        };
    }
    if init_theta.len() != problem.dimension() || adam.dim() != problem.dimension() {
        let error = Error::contract(format!(
            "{} has dimension {}, got parameters of length {} and optimizer of dimension {}",
            problem.kind(),
            problem.dimension(),
            init_theta.len(),
            adam.dim()
        ));
        return Err(DescentFailure { trace, error });
    }

    let mut theta = init_theta;
    let f = |t: &[F], r: RngStream| Ok(problem.evaluate(t, objective, init, r)?.optimized);
    for s in 0..=steps {
        let stream = rng.child(s as u64);
        let loss = attempt!(problem.evaluate(&theta, objective, init, stream.child(0)));
        let record = TraceRecord {
            step: s,
            loss: loss.reported,
            objective: loss.optimized,
            theta: theta.clone(),
        };
        observe(&record);
        trace.records.push(record);
        if s == steps {
            trace.model = Some(attempt!(problem.extract(&theta, Some(&loss.per_system))));
            trace.final_losses = loss.per_system;
            break;
        }
        let grad = attempt!(estimate_gradient(f, &theta, estimator, stream.child(1)));
        attempt!(adam.update(&mut theta, &grad.gradient));
    }
    Ok(trace)
}
