//! Scalar norm-transport model.
//!
//! The discrete chain tracks one norm per correlation order: level `k` is fed
//! from below and drained upward at rate `h`, and relaxes at rate `r_k` set by
//! the relaxation law. Level 1 is replenished at rate `r0`. Its continuum limit
//! is the transport equation
//!
//! ```text
//! ∂ρ/∂t = −2h ∂ρ/∂x − r(x) ρ + r0 δ(x − 1),   ρ(x, 0) = δ(x − 1)
//! ```
//!
//! whose stationary and transient solutions are available in closed form.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::special::{erfcx, exp_integral_scaled};
use crate::spinsys::RelaxationLaw;

/// Parameters of the norm-transport model. Rates share one unit (s⁻¹ or Hz).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormFlowParams<T> {
    /// Coupling scale.
    pub h: T,
    /// Base relaxation rate.
    pub r: T,
    /// Equilibrium replenishment of level 1.
    pub r0: T,
    /// Number of chain levels.
    pub levels: usize,
    pub law: RelaxationLaw,
}

impl<T: Real> NormFlowParams<T> {
    /// Validates the parameters. `h = 0` is accepted for the degenerate
    /// transport oracle; operations that divide by `h` reject it.
    pub fn new(h: T, r: T, r0: T, levels: usize, law: RelaxationLaw) -> Result<Self> {
        let p = Self { h, r, r0, levels, law };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h", self.h), ("r", self.r), ("r0", self.r0)] {
            if !v.is_finite() || v < T::zero() {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.levels < 2 {
            return Err(invalid("levels", format!("need at least 2 levels, got {}", self.levels)));
        }
        if self.law == RelaxationLaw::None {
            return Err(invalid("law", "the transport model needs linear, sqrt or constant"));
        }
        Ok(())
    }

    fn require_h(&self) -> Result<()> {
        if self.h > T::zero() {
            Ok(())
        } else {
            Err(invalid("h", "must be > 0 for this operation"))
        }
    }

    /// Relaxation rate at (possibly fractional) order `x`.
    pub fn rate_at(&self, x: T) -> T {
        law_rate(self.law, self.r, x)
    }
}

fn law_rate<T: Real>(law: RelaxationLaw, r: T, x: T) -> T {
    match law {
        RelaxationLaw::Linear => r * x,
        RelaxationLaw::Sqrt => r * x.sqrt(),
        RelaxationLaw::Constant => r,
        RelaxationLaw::None => T::zero(),
    }
}

/// `∫₁^x r(y) dy / r`: the accumulated decay exponent per unit rate.
fn decay_primitive<T: Real>(law: RelaxationLaw, x: T) -> T {
    let one = T::one();
    match law {
        RelaxationLaw::Linear => (x * x - one) / T::lit(2.0),
        RelaxationLaw::Sqrt => (x * x.sqrt() - one) * T::lit(2.0) / T::lit(3.0),
        RelaxationLaw::Constant => x - one,
        RelaxationLaw::None => T::zero(),
    }
}

/// Norm trajectory of the chain, one row per output time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainTrajectory<T> {
    pub times: Vec<T>,
    /// `levels[i][k]` is the norm of level `k + 1` at `times[i]`.
    pub levels: Vec<Vec<T>>,
}

impl<T: Real> ChainTrajectory<T> {
    pub fn last(&self) -> &[T] {
        self.levels.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.levels.first().map_or(0, Vec::len);
        write!(w, "t")?;
        for k in 1..=n {
            write!(w, ",level_{k}")?;
        }
        writeln!(w)?;
        for (t, row) in self.times.iter().zip(&self.levels) {
            write!(w, "{:.8e}", t.as_f64())?;
            for v in row {
                write!(w, ",{:.8e}", v.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn chain_rhs<T: Real>(p: &NormFlowParams<T>, rates: &[T], y: &[T], dy: &mut [T]) {
    let n = y.len();
    for k in 0..n {
        let up = if k + 1 < n { y[k + 1] } else { T::zero() };
        let down = if k > 0 { y[k - 1] } else { T::zero() };
        dy[k] = -p.h * (up - down) - rates[k] * y[k];
    }
    dy[0] += p.r0;
}

/// Integrates the norm chain from `init` and samples it every `dt` up to `t_total`.
pub fn solve_chain<T: Real>(
    params: &NormFlowParams<T>,
    init: &[T],
    t_total: T,
    dt: T,
) -> Result<ChainTrajectory<T>> {
    params.validate()?;
    if init.len() != params.levels {
        return Err(invalid(
            "init",
            format!("length {} != levels {}", init.len(), params.levels),
        ));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_total >= T::zero()) || !t_total.is_finite() {
        return Err(invalid("t_total", format!("must be >= 0, got {t_total}")));
    }
    let rates: Vec<T> = (1..=params.levels)
        .map(|k| params.rate_at(T::from_usize_lossy(k)))
        .collect();
    let steps = output_steps(t_total, dt);
    let mut solver = Dopri5::new(init.to_vec());
    let mut out = ChainTrajectory {
        times: vec![T::zero()],
        levels: vec![init.to_vec()],
    };
    let f = |y: &[T], dy: &mut [T]| chain_rhs(params, &rates, y, dy);
    for i in 1..=steps {
        let target = if i == steps { t_total } else { dt * T::from_usize_lossy(i) };
        solver.advance_to(&f, target)?;
        out.times.push(target);
        out.levels.push(solver.y.clone());
    }
    Ok(out)
}

/// Number of output intervals; a trailing partial interval is kept.
fn output_steps<T: Real>(t_total: T, dt: T) -> usize {
    let ratio = (t_total / dt).as_f64();
    let n = ratio.round();
    if (ratio - n).abs() <= 1e-9 * ratio.max(1.0) {
        n as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Dormand–Prince 5(4) with PI-free standard step control, autonomous systems only.
struct Dopri5<T> {
    t: T,
    y: Vec<T>,
    h: Option<T>,
    k: [Vec<T>; 7],
    tmp: Vec<T>,
}

impl<T: Real> Dopri5<T> {
    const MAX_STEPS: usize = 10_000_000;

    fn new(y: Vec<T>) -> Self {
        let n = y.len();
        Self {
            t: T::zero(),
            y,
            h: None,
            k: std::array::from_fn(|_| vec![T::zero(); n]),
            tmp: vec![T::zero(); n],
        }
    }

    fn tolerances() -> (T, T) {
        let floor = T::epsilon() * T::lit(100.0);
        (T::lit(1e-12).max(floor), T::lit(1e-11).max(floor))
    }

    fn advance_to(&mut self, f: &impl Fn(&[T], &mut [T]), t_end: T) -> Result<()> {
        const C: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        // fifth minus fourth order weights
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let (atol, rtol) = Self::tolerances();
        let n = self.y.len();
        if self.h.is_none() {
            f(&self.y, &mut self.k[0]);
            let scale = self.y.iter().fold(T::zero(), |m, v| m.max(v.abs())) + atol;
            let slope = self.k[0].iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let guess = if slope > T::zero() { T::lit(0.01) * scale / slope } else { t_end - self.t };
            self.h = Some(guess.max(T::epsilon()));
        }
        let mut steps = 0usize;
        while self.t < t_end {
            steps += 1;
            if steps > Self::MAX_STEPS {
                return Err(Error::Integration(format!(
                    "chain integrator exceeded {} steps",
                    Self::MAX_STEPS
                )));
            }
            let remaining = t_end - self.t;
            let mut h = self.h.unwrap_or(remaining);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            f(&self.y, &mut self.k[0]);
            for s in 0..6 {
                for i in 0..n {
                    let mut acc = T::zero();
                    for j in 0..=s {
                        acc += T::lit(C[s][j]) * self.k[j][i];
                    }
                    self.tmp[i] = self.y[i] + h * acc;
                }
                let (_, rest) = self.k.split_at_mut(s + 1);
                f(&self.tmp, &mut rest[0]);
            }
            // tmp now holds the fifth-order solution (FSAL stage)
            let mut err = T::zero();
            for i in 0..n {
                let mut e = T::zero();
                for (j, w) in E.iter().enumerate() {
                    e += T::lit(*w) * self.k[j][i];
                }
                let sc = atol + rtol * self.y[i].abs().max(self.tmp[i].abs());
                let q = h * e / sc;
                err += q * q;
            }
            let err = (err / T::from_usize_lossy(n.max(1))).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite { step: steps });
            }
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            if err <= T::one() {
                std::mem::swap(&mut self.y, &mut self.tmp);
                self.t = if last { t_end } else { self.t + h };
                if !last || factor < T::one() {
                    self.h = Some(h * factor);
                }
            } else {
                self.h = Some(h * factor.min(T::one()));
            }
        }
        Ok(())
    }
}

/// Exact solution of the two-level chain started from `(1, 0)`:
/// `y1' = −r1 y1 − h y2 + r0`, `y2' = h y1 − r2 y2`. Returns `(y1, y2)` at `t`.
pub fn two_level_closed_form(h: f64, r1: f64, r2: f64, r0: f64, t: f64) -> Result<(f64, f64)> {
    for (name, v) in [("h", h), ("r1", r1), ("r2", r2), ("r0", r0), ("t", t)] {
        if !v.is_finite() {
            return Err(invalid(name, format!("must be finite, got {v}")));
        }
    }
    // A = [[−r1, −h], [h, −r2]]; e^{At} = e^{τt/2} (c I + s (A − τ/2 I))
    let a = [[-r1, -h], [h, -r2]];
    let half_tr = -(r1 + r2) / 2.0;
    let det = r1 * r2 + h * h;
    let mu2 = (r1 - r2) * (r1 - r2) / 4.0 - h * h;
    let (c, s) = if mu2 > 0.0 {
        let mu = mu2.sqrt();
        ((mu * t).cosh(), (mu * t).sinh() / mu)
    } else if mu2 < 0.0 {
        let nu = (-mu2).sqrt();
        ((nu * t).cos(), (nu * t).sin() / nu)
    } else {
        (1.0, t)
    };
    let g = (half_tr * t).exp();
    let mut e = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let shifted = a[i][j] - if i == j { half_tr } else { 0.0 };
            e[i][j] = g * (if i == j { c } else { 0.0 } + s * shifted);
        }
    }
    let (mut y1, mut y2) = (e[0][0], e[1][0]);
    if r0 != 0.0 {
        if det != 0.0 {
            // A⁻¹ (e^{At} − I) b with b = (r0, 0)
            let m = [e[0][0] - 1.0, e[1][0]];
            let (u, v) = (m[0] * r0, m[1] * r0);
            y1 += (-r2 * u + h * v) / det;
            y2 += (-h * u - r1 * v) / det;
        } else {
            // h = 0 with r1 r2 = 0: level 1 decouples and level 2 never fills
            y1 += if r1 == 0.0 { r0 * t } else { r0 * (-(-r1 * t).exp_m1()) / r1 };
        }
    }
    Ok((y1, y2))
}

/// Continuum norm profile; an optional point mass models the travelling initial condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormProfile<T> {
    pub x_grid: Vec<T>,
    pub smooth: Vec<T>,
    pub delta_position: Option<T>,
    pub delta_weight: Option<T>,
}

#[derive(Serialize)]
struct DeltaSidecar {
    delta_position: f64,
    delta_weight: f64,
}

impl<T: Real> NormProfile<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,rho")?;
        for (x, v) in self.x_grid.iter().zip(&self.smooth) {
            writeln!(w, "{:.8e},{:.8e}", x.as_f64(), v.as_f64())?;
        }
        Ok(())
    }

    /// JSON description of the point mass, if there is one.
    pub fn sidecar_json(&self) -> Option<String> {
        let doc = DeltaSidecar {
            delta_position: self.delta_position?.as_f64(),
            delta_weight: self.delta_weight?.as_f64(),
        };
        Some(serde_json::to_string_pretty(&doc).expect("plain struct serializes"))
    }
}

fn check_grid<T: Real>(x_grid: &[T]) -> Result<()> {
    if x_grid.iter().any(|x| !x.is_finite() || *x < T::zero()) {
        return Err(invalid("x_grid", "points must be finite and >= 0"));
    }
    if x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("x_grid", "points must be strictly increasing"));
    }
    Ok(())
}

fn stationary_value<T: Real>(p: &NormFlowParams<T>, x: T) -> T {
    if x < T::one() {
        return T::zero();
    }
    let two_h = T::lit(2.0) * p.h;
    p.r0 / two_h * (-(p.r / two_h) * decay_primitive(p.law, x)).exp()
}

/// Stationary solution `ρ(x) = (r0/2h) exp(−∫₁^x r(y) dy / 2h)` for `x >= 1`, zero below.
pub fn stationary_profile<T: Real>(params: &NormFlowParams<T>, x_grid: &[T]) -> Result<NormProfile<T>> {
    params.validate()?;
    params.require_h()?;
    check_grid(x_grid)?;
    Ok(NormProfile {
        x_grid: x_grid.to_vec(),
        smooth: x_grid.iter().map(|&x| stationary_value(params, x)).collect(),
        delta_position: None,
        delta_weight: None,
    })
}

/// Solution at time `t` from `ρ(x, 0) = δ(x − 1)`: the stationary shape on
/// `[1, 1 + 2ht)` plus a point mass at the front `1 + 2ht`, whose weight has
/// decayed along the characteristic `x(s) = 1 + 2hs`.
pub fn transient_profile<T: Real>(
    params: &NormFlowParams<T>,
    x_grid: &[T],
    t: T,
) -> Result<NormProfile<T>> {
    params.validate()?;
    check_grid(x_grid)?;
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    let front = T::one() + T::lit(2.0) * params.h * t;
    let weight = if params.h > T::zero() {
        (-(params.r / (T::lit(2.0) * params.h)) * decay_primitive(params.law, front)).exp()
    } else {
        (-params.rate_at(T::one()) * t).exp()
    };
    let smooth = x_grid
        .iter()
        .map(|&x| {
            if x >= T::one() && x < front {
                stationary_value(params, x)
            } else {
                T::zero()
            }
        })
        .collect();
    Ok(NormProfile {
        x_grid: x_grid.to_vec(),
        smooth,
        delta_position: Some(front),
        delta_weight: Some(weight),
    })
}

/// Fraction of the stationary norm above order `k`: `∫ₖ^∞ ρ / ∫₁^∞ ρ`.
pub fn leaked_fraction<T: Real>(params: &NormFlowParams<T>, k: T) -> Result<T> {
    params.validate()?;
    params.require_h()?;
    if !(k >= T::one()) || !k.is_finite() {
        return Err(invalid("k", format!("must be finite and >= 1, got {k}")));
    }
    leak_ratio(params.law, params.h.as_f64(), params.r.as_f64(), k.as_f64()).map(T::lit)
}

/// Tail ratio for each law, in `f64`. Shared with the order advisor.
pub(crate) fn leak_ratio(law: RelaxationLaw, h: f64, r: f64, k: f64) -> Result<f64> {
    if r == 0.0 || k == 1.0 {
        return Ok(1.0);
    }
    Ok(match law {
        RelaxationLaw::Linear => {
            // erfc(k a) / erfc(a), a = √(r/4h), via the scaled function
            let a = (r / (4.0 * h)).sqrt();
            erfcx(k * a) / erfcx(a) * (-(k * k - 1.0) * a * a).exp()
        }
        RelaxationLaw::Sqrt => {
            // ∫ₖ^∞ e^{−a x^{3/2}} dx = (2k/3) E_{1/3}(a k^{3/2}), a = r/3h
            let a = r / (3.0 * h);
            let top = a * k * k.sqrt();
            k * exp_integral_scaled(1.0 / 3.0, top)? / exp_integral_scaled(1.0 / 3.0, a)?
                * (-(top - a)).exp()
        }
        RelaxationLaw::Constant => (-r * (k - 1.0) / (2.0 * h)).exp(),
        RelaxationLaw::None => {
            return Err(invalid("law", "the transport model needs linear, sqrt or constant"))
        }
    })
}

/// First-order upwind solution of the transport equation on cell centres in
/// `[0, x_max]`, started from the delta at `x = 1` spread over one cell.
pub fn fd_transport_solve<T: Real>(
    params: &NormFlowParams<T>,
    x_max: T,
    nx: usize,
    t_total: T,
    dt: T,
) -> Result<NormProfile<T>> {
    let (dx, _) = fd_grid::<T>(x_max, nx)?;
    let mut initial = vec![T::zero(); nx];
    if let Some(c) = source_cell(dx, nx) {
        initial[c] = T::one() / dx;
    }
    fd_transport_evolve(params, x_max, &initial, t_total, dt)
}

fn fd_grid<T: Real>(x_max: T, nx: usize) -> Result<(T, Vec<T>)> {
    if !(x_max > T::zero()) || !x_max.is_finite() {
        return Err(invalid("x_max", format!("must be finite and > 0, got {x_max}")));
    }
    if nx < 2 {
        return Err(invalid("nx", format!("need at least 2 cells, got {nx}")));
    }
    let dx = x_max / T::from_usize_lossy(nx);
    let centers = (0..nx)
        .map(|i| (T::from_usize_lossy(i) + T::lit(0.5)) * dx)
        .collect();
    Ok((dx, centers))
}

fn source_cell<T: Real>(dx: T, nx: usize) -> Option<usize> {
    let c = (T::one() / dx).floor().as_f64() as usize;
    (c < nx).then_some(c)
}

/// Upwind evolution of an arbitrary initial cell profile (cell averages on `nx = initial.len()` cells).
pub fn fd_transport_evolve<T: Real>(
    params: &NormFlowParams<T>,
    x_max: T,
    initial: &[T],
    t_total: T,
    dt: T,
) -> Result<NormProfile<T>> {
    params.validate()?;
    let nx = initial.len();
    let (dx, centers) = fd_grid(x_max, nx)?;
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_total >= T::zero()) || !t_total.is_finite() {
        return Err(invalid("t_total", format!("must be >= 0, got {t_total}")));
    }
    let speed = T::lit(2.0) * params.h;
    if speed * dt > dx {
        return Err(invalid(
            "dt",
            format!(
                "upwind stability needs 2h*dt <= dx; 2h*dt = {}, dx = {}",
                speed * dt,
                dx
            ),
        ));
    }
    let steps = (t_total / dt).ceil().as_f64().max(0.0) as usize;
    let step = if steps > 0 { t_total / T::from_usize_lossy(steps) } else { dt };
    let courant = speed * step / dx;
    let decay: Vec<T> = centers.iter().map(|&x| (-params.rate_at(x) * step).exp()).collect();
    let src = source_cell(dx, nx);
    let mut rho = initial.to_vec();
    let mut next = vec![T::zero(); nx];
    for _ in 0..steps {
        for i in 0..nx {
            let left = if i > 0 { rho[i - 1] } else { T::zero() };
            next[i] = rho[i] - courant * (rho[i] - left);
        }
        if let Some(c) = src {
            next[c] += params.r0 * step / dx;
        }
        for (v, d) in next.iter_mut().zip(&decay) {
            *v *= *d;
        }
        std::mem::swap(&mut rho, &mut next);
    }
    Ok(NormProfile {
        x_grid: centers,
        smooth: rho,
        delta_position: None,
        delta_weight: None,
    })
}
