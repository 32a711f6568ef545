//! Special functions for the truncation bounds: `erfc`, its inverse, and the
//! generalized exponential integral `E_n(x)` for real `n`.
//!
//! These work in `f64`; the generic modules convert at the call site.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{invalid, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x <= 2.0 {
        1.0 - erf_series(x)
    } else if x < 27.3 {
        erfc_continued_fraction(x)
    } else {
        0.0
    }
}

/// Scaled complementary error function `e^{x²} erfc(x)`, finite for large `x`.
pub fn erfcx(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 2.0 {
        (x * x).exp() * erfc(x)
    } else {
        1.0 / (PI.sqrt() * erfc_fraction(x))
    }
}

pub fn erf(x: f64) -> f64 {
    if x.abs() <= 2.0 {
        erf_series(x)
    } else {
        1.0 - erfc(x)
    }
}

/// `erf(x) = 2/√π e^{−x²} Σ (2x²)^n x / (2n+1)!!`; every term is positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    (-x * x).exp() / (PI.sqrt() * erfc_fraction(x))
}

/// Modified Lentz evaluation of `x + ½/(x + 1/(x + 3/2/(x + …)))`, so that
/// `erfc(x) = e^{−x²}/√π / fraction`.
fn erfc_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..20_000 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

/// Inverse of [`erfc`] on `(0, 2)`.
pub fn erfc_inv(y: f64) -> Result<f64> {
    if !(y > 0.0 && y < 2.0) {
        return Err(invalid("y", format!("erfc_inv needs 0 < y < 2, got {y}")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    if y > 1.0 {
        return erfc_inv(2.0 - y).map(|x| -x);
    }
    // Normal-quantile rational start (p = y/2 <= 1/2), then Halley on erfc.
    let t = (-2.0 * (0.5 * y).ln()).sqrt();
    let z = t
        - (2.515_517 + 0.802_853 * t + 0.010_328 * t * t)
            / (1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t);
    let mut x = z / std::f64::consts::SQRT_2;
    for _ in 0..100 {
        let f = erfc(x) - y;
        let df = -FRAC_2_SQRT_PI * (-x * x).exp();
        if df == 0.0 {
            break;
        }
        let u = f / df;
        let step = u / (1.0 + x * u);
        x -= step;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Generalized exponential integral `E_n(x) = ∫₁^∞ e^{−xt} t^{−n} dt`, `n >= 0`, `x > 0`.
pub fn exp_integral(n: f64, x: f64) -> Result<f64> {
    Ok(exp_integral_scaled(n, x)? * (-x).exp())
}

/// `e^x E_n(x)`, finite for large `x` where `E_n` itself underflows.
pub fn exp_integral_scaled(n: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid("x", format!("E_n(x) needs finite x > 0, got {x}")));
    }
    if !(n >= 0.0 && n.is_finite()) {
        return Err(invalid("n", format!("E_n(x) needs finite n >= 0, got {n}")));
    }
    if n == 0.0 {
        return Ok(1.0 / x);
    }
    // t = 1 + u/x:  e^x E_n(x) = (1/x) ∫₀^∞ e^{−u} (1 + u/x)^{−n} du.
    // The integrand is below e^{−u}, so cutting at u = 60 loses < 1e-26.
    let integrand = |u: f64| (-u).exp() * (1.0 + u / x).powf(-n);
    let value = integrate(integrand, 0.0, 60.0, 1e-300, 1e-14);
    Ok(value / x)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let (value, err) = gk15(&f, a, b);
    let mut heap = BinaryHeap::from([Panel { a, b, value, err }]);
    let (mut total, mut total_err) = (value, err);
    for _ in 0..4000 {
        if total_err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let p = heap.pop().expect("at least one panel");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Panel { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Panel { a: m, b: p.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated update round-off
    heap.iter().map(|p| p.value).sum()
}
