//! Truncation-order advisor.
//!
//! Given the coupling scale `h`, the relaxation rate `r` (same unit, only
//! `h/r` matters) and a tolerance `ξ`, [`required_order`] returns the smallest
//! correlation order `k` for which the stationary norm leaking above `k` is a
//! fraction below `ξ` of the whole.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::normflow::leak_ratio;
use crate::scalar::Real;
use crate::spinsys::RelaxationLaw;

pub use crate::special::{erfc, erfc_inv, exp_integral};

const SQRT_K_CAP: f64 = 1e6;
const SQRT_K_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundQuery<T = f64> {
    pub h: T,
    pub r: T,
    pub xi: T,
    pub law: RelaxationLaw,
}

impl<T: Real> BoundQuery<T> {
    pub fn new(h: T, r: T, xi: T, law: RelaxationLaw) -> Result<Self> {
        let q = Self { h, r, xi, law };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > T::zero()) || !self.h.is_finite() {
            return Err(invalid("h", format!("must be finite and > 0, got {}", self.h)));
        }
        if !(self.r > T::zero()) || !self.r.is_finite() {
            return Err(invalid("r", format!("must be finite and > 0, got {}", self.r)));
        }
        if !(self.xi > T::zero() && self.xi <= T::one()) {
            return Err(invalid("xi", format!("must lie in (0, 1], got {}", self.xi)));
        }
        if self.law == RelaxationLaw::None {
            return Err(invalid("law", "expected linear, sqrt or constant"));
        }
        Ok(())
    }
}

/// Law-specific quantities behind a bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum Intermediates {
    /// `k = 2√(h/r) · erfc⁻¹(ξ · erfc(½√(r/h)))`.
    Linear {
        erfc_argument: f64,
        erfc_value: f64,
        scaled_target: f64,
        erfc_inv_value: f64,
    },
    /// Bisection on `k E_{1/3}(k^{3/2} r/3h) / E_{1/3}(r/3h) = ξ`.
    Sqrt {
        e13_argument: f64,
        e13_value: f64,
        ratio_at_k: f64,
        iterations: usize,
    },
    /// `k = (2h/r) ln(1/ξ) + 1`.
    Constant { log_inverse_xi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundResult<T = f64> {
    pub k_real: T,
    pub k_int: usize,
    pub intermediates: Intermediates,
}

/// Smallest integer strictly above `k_real`, and at least 1.
pub fn strict_ceiling(k_real: f64) -> usize {
    let c = k_real.ceil();
    let k = if c == k_real { c + 1.0 } else { c };
    k.max(1.0) as usize
}

/// Truncation order needed so that at most a fraction `ξ` of the stationary
/// norm lies above it.
pub fn required_order<T: Real>(q: &BoundQuery<T>) -> Result<BoundResult<T>> {
    q.validate()?;
    let (h, r, xi) = (q.h.as_f64(), q.r.as_f64(), q.xi.as_f64());
    let (k_real, intermediates) = match q.law {
        RelaxationLaw::Linear => {
            let arg = 0.5 * (r / h).sqrt();
            let value = erfc(arg);
            let target = xi * value;
            if target <= 0.0 {
                return Err(invalid(
                    "r",
                    format!("r/h = {} drains so fast that erfc underflows", r / h),
                ));
            }
            let inv = erfc_inv(target)?;
            let k = 2.0 * (h / r).sqrt() * inv;
            let im = Intermediates::Linear {
                erfc_argument: arg,
                erfc_value: value,
                scaled_target: target,
                erfc_inv_value: inv,
            };
            (k, im)
        }
        RelaxationLaw::Constant => {
            let log = (1.0 / xi).ln();
            (2.0 * h / r * log + 1.0, Intermediates::Constant { log_inverse_xi: log })
        }
        RelaxationLaw::Sqrt => sqrt_law_order(h, r, xi)?,
        RelaxationLaw::None => unreachable!("rejected by validate"),
    };
    Ok(BoundResult {
        k_real: T::lit(k_real),
        k_int: strict_ceiling(k_real),
        intermediates,
    })
}

fn sqrt_law_order(h: f64, r: f64, xi: f64) -> Result<(f64, Intermediates)> {
    let a = r / (3.0 * h);
    let e13 = exp_integral(1.0 / 3.0, a)?;
    let ratio = |k: f64| leak_ratio(RelaxationLaw::Sqrt, h, r, k);
    let mut iterations = 0;
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    if xi < 1.0 {
        while ratio(hi)? >= xi {
            lo = hi;
            hi *= 2.0;
            iterations += 1;
            if hi > SQRT_K_CAP {
                return Err(Error::Bracket(format!(
                    "tail ratio stays above xi = {xi} for all k <= {SQRT_K_CAP:e}"
                )));
            }
        }
        while hi - lo > SQRT_K_TOL {
            let mid = 0.5 * (lo + hi);
            if ratio(mid)? >= xi {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
    } else {
        hi = 1.0;
    }
    let k = if xi < 1.0 { 0.5 * (lo + hi) } else { 1.0 };
    let im = Intermediates::Sqrt {
        e13_argument: a,
        e13_value: e13,
        ratio_at_k: ratio(k)?,
        iterations,
    };
    Ok((k, im))
}

/// Time `(k − 1)/2h` during which a `k`-restricted run stays exact even
/// without relaxation: norm climbs at most `2h` orders per unit time.
pub fn short_time_horizon<T: Real>(k: usize, h: T) -> T {
    T::from_usize_lossy(k.saturating_sub(1)) / (T::lit(2.0) * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAWS: [RelaxationLaw; 3] = [RelaxationLaw::Linear, RelaxationLaw::Sqrt, RelaxationLaw::Constant];

    fn order(h: f64, r: f64, xi: f64, law: RelaxationLaw) -> BoundResult {
        required_order(&BoundQuery::new(h, r, xi, law).unwrap()).unwrap()
    }

    #[test]
    fn strict_ceiling_convention() {
        assert_eq!(strict_ceiling(8.45), 9);
        assert_eq!(strict_ceiling(8.0), 9);
        assert_eq!(strict_ceiling(1.0), 2);
        assert_eq!(strict_ceiling(0.3), 1);
    }

    #[test]
    fn linear_example() {
        let b = order(5.0, 1.0, 0.01, RelaxationLaw::Linear);
        assert!((8.3..=8.6).contains(&b.k_real), "{}", b.k_real);
        assert_eq!(b.k_int, 9);
        match b.intermediates {
            Intermediates::Linear { erfc_argument, scaled_target, .. } => {
                assert!((erfc_argument - 0.5 * 0.2f64.sqrt()).abs() < 1e-15);
                assert!((scaled_target - 0.01 * erfc(erfc_argument)).abs() < 1e-18);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_example() {
        let b = order(5.0, 1.0, 0.01, RelaxationLaw::Constant);
        assert!((b.k_real - (10.0 * 100f64.ln() + 1.0)).abs() < 1e-9);
        assert_eq!(b.k_int, 48);
    }

    #[test]
    fn unit_tolerance_collapses() {
        for law in LAWS {
            assert!((order(5.0, 1.0, 1.0, law).k_real - 1.0).abs() < 1e-12, "{law}");
        }
    }

    #[test]
    fn sqrt_ratio_hits_tolerance() {
        let b = order(5.0, 1.0, 0.01, RelaxationLaw::Sqrt);
        match b.intermediates {
            Intermediates::Sqrt { ratio_at_k, .. } => assert!((ratio_at_k - 0.01).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bracket_failure_is_reported() {
        let q = BoundQuery::new(1e9, 1.0, 1e-3, RelaxationLaw::Sqrt).unwrap();
        assert!(matches!(required_order(&q), Err(Error::Bracket(_))));
    }

    #[test]
    fn query_validation() {
        assert!(BoundQuery::new(0.0, 1.0, 0.1, RelaxationLaw::Linear).is_err());
        assert!(BoundQuery::new(1.0, 0.0, 0.1, RelaxationLaw::Linear).is_err());
        assert!(BoundQuery::new(1.0, 1.0, 1.5, RelaxationLaw::Linear).is_err());
        assert!(BoundQuery::new(1.0, 1.0, 0.0, RelaxationLaw::Linear).is_err());
        assert!(BoundQuery::new(1.0, 1.0, 0.5, RelaxationLaw::None).is_err());
    }

    #[test]
    fn law_ordering() {
        for hr in [0.5, 2.0, 5.0, 40.0] {
            for xi in [0.1, 0.01, 1e-4] {
                let k: Vec<f64> = LAWS.iter().map(|&l| order(hr, 1.0, xi, l).k_real).collect();
                assert!(k[2] >= k[1] && k[1] >= k[0], "h/r={hr} xi={xi}: {k:?}");
            }
        }
    }

    #[test]
    fn scale_invariance() {
        for law in LAWS {
            let base = order(5.0, 1.0, 0.01, law).k_real;
            for c in [1e-3, 1e3] {
                let scaled = order(5.0 * c, c, 0.01, law).k_real;
                assert!((scaled - base).abs() < 1e-8 * base, "{law} c={c}");
            }
        }
    }

    #[test]
    fn horizon() {
        assert_eq!(short_time_horizon(1, 5.0f64), 0.0);
        assert!((short_time_horizon(8, 5.0f64) - 0.7).abs() < 1e-15);
        assert_eq!(short_time_horizon(8, 10.0f64), short_time_horizon(8, 5.0f64) / 2.0);
    }

    #[test]
    fn generic_query() {
        let q = BoundQuery::<f32>::new(5.0, 1.0, 0.01, RelaxationLaw::Linear).unwrap();
        assert_eq!(required_order(&q).unwrap().k_int, 9);
    }
}
