//! Logarithmic rate reparametrization `rate = exp(a*raw + c) - exp(c)`.
//!
//! Raw coordinate 0 maps to rate 0, and equal raw steps correspond to equal
//! rate ratios away from zero, so a single step size and smoothing factor
//! serve rates spanning several orders of magnitude.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReparamConfig<F> {
    a: F,
    c: F,
}

impl<F: Scalar> Default for ReparamConfig<F> {
    fn default() -> Self {
        Self {
            a: F::lit(0.25),
            c: F::lit(-20.0),
        }
    }
}

impl<F: Scalar> ReparamConfig<F> {
    pub fn new(a: F, c: F) -> Result<Self> {
        if !(a > F::zero()) || !a.is_finite() || !c.is_finite() {
            return Err(Error::Domain(format!(
                "reparametrization needs a > 0, got a = {a}, c = {c}"
            )));
        }
        Ok(Self { a, c })
    }

    pub fn a(&self) -> F {
        self.a
    }

    pub fn c(&self) -> F {
        self.c
    }

    pub fn to_rate(&self, raw: F) -> F {
        // exp(c) * expm1(a*raw) keeps to_rate(0) exactly 0 and small rates accurate.
        self.c.exp() * (self.a * raw).exp_m1()
    }

    pub fn from_rate(&self, rate: F) -> Result<F> {
        let offset = self.c.exp();
        if !(rate > -offset) || !rate.is_finite() {
            return Err(Error::Domain(format!(
                "rate {rate} outside the image of the reparametrization (must exceed {})",
                -offset
            )));
        }
        Ok((rate / offset).ln_1p() / self.a)
    }
}

pub fn to_rate<F: Scalar>(raw: F, cfg: &ReparamConfig<F>) -> F {
    cfg.to_rate(raw)
}

pub fn from_rate<F: Scalar>(rate: F, cfg: &ReparamConfig<F>) -> Result<F> {
    cfg.from_rate(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The displayed formula evaluated literally.
    fn literal(raw: f64) -> f64 {
        (0.25 * raw - 20.0).exp() - (-20.0f64).exp()
    }

    /// Closed-form inverse `4 (ln(rate + e^-20) + 20)`.
    fn literal_inverse(rate: f64) -> f64 {
        4.0 * ((rate + (-20.0f64).exp()).ln() + 20.0)
    }

    #[test]
    fn zero_maps_to_zero() {
        let cfg = ReparamConfig::<f64>::default();
        assert_eq!(cfg.to_rate(0.0), 0.0);
        assert_eq!(cfg.from_rate(0.0).unwrap(), 0.0);
        assert_eq!(ReparamConfig::<f32>::default().to_rate(0.0), 0.0);
    }

    #[test]
    fn reference_values() {
        let cfg = ReparamConfig::<f64>::default();
        assert!((cfg.to_rate(80.0) - literal(80.0)).abs() < 1e-14);
        assert!((cfg.to_rate(80.0) - 0.999_999_997_938_846_4).abs() < 1e-12);
        assert!((cfg.to_rate(96.0) - 54.598_150_031_083_08).abs() < 1e-9);
        let r = cfg.from_rate(0.02).unwrap();
        assert!((r - literal_inverse(0.02)).abs() < 1e-9);
        assert!((r - 64.351_908).abs() < 1e-5, "{r}");
        let r = cfg.from_rate(5.0).unwrap();
        assert!((r - literal_inverse(5.0)).abs() < 1e-9);
        assert!((r - 86.437_752).abs() < 1e-5, "{r}");
    }

    #[test]
    fn dynamic_range_is_compressed() {
        let cfg = ReparamConfig::<f64>::default();
        let lo = cfg.from_rate(1e-4).unwrap();
        let hi = cfg.from_rate(1e2).unwrap();
        assert!((lo - literal_inverse(1e-4)).abs() < 1e-9);
        assert!((lo - 43.16).abs() < 0.01, "{lo}");
        assert!((hi - 98.42).abs() < 0.01, "{hi}");
    }

    #[test]
    fn out_of_domain_rates_are_rejected() {
        let cfg = ReparamConfig::<f64>::default();
        assert!(matches!(cfg.from_rate(-1.0), Err(Error::Domain(_))));
        assert!(matches!(cfg.from_rate(-(-20.0f64).exp()), Err(Error::Domain(_))));
        assert!(ReparamConfig::new(0.0, -20.0).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(x in 0.0f64..120.0) {
            let cfg = ReparamConfig::<f64>::default();
            let back = cfg.from_rate(cfg.to_rate(x)).unwrap();
            prop_assert!((back - x).abs() / x.abs().max(1.0) < 1e-9);
        }

        #[test]
        fn strictly_increasing(x in -50.0f64..120.0, dx in 1e-6f64..10.0) {
            let cfg = ReparamConfig::<f64>::default();
            prop_assert!(cfg.to_rate(x) < cfg.to_rate(x + dx));
        }
    }
}
