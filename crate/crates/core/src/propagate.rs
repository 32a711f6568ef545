//! Time evolution of `dρ/dt = Lρ + drive` and per-order diagnostics.
//!
//! The generator is constant, so each output interval applies the same step
//! propagator. The drive is folded in by augmenting the state with a constant
//! unit slot: `d/dt [ρ; 1] = [[L, drive], [0, 0]] [ρ; 1]`. Small systems use a
//! dense exponential of the augmented matrix; larger ones an adaptive Krylov
//! (Arnoldi) exponential-times-vector with local error control.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{order_norms, Basis, StateVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{czero, creal, vdot, vec_norm, Cx, Real};
use crate::sparse::CsrMatrix;
use crate::spinsys::{initial_state, InitialSpec, SpinSystem};
use crate::superop::{build_h2, liouvillian_for, Superoperator};

/// Default cap on the Liouville dimension of a full-space comparison run.
pub const FULL_DIMENSION_CAP: u128 = 65_536;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvolveOptions {
    /// Relative local error per step.
    pub tol: f64,
    /// Augmented dimensions up to this use the dense step propagator.
    pub dense_limit: usize,
    /// Maximum Krylov subspace dimension.
    pub krylov_dim: usize,
    /// Krylov substeps allowed per output step before giving up.
    pub max_substeps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            dense_limit: 300,
            krylov_dim: 30,
            max_substeps: 100_000,
        }
    }
}

enum Stepper<T> {
    /// No dynamics at all.
    Identity,
    /// `exp(M dt)` of the augmented matrix.
    Dense(DenseMatrix<T>),
    Krylov {
        l: CsrMatrix<T>,
        drive: Vec<Cx<T>>,
        anorm: T,
    },
}

/// Step propagator for a fixed generator, drive and output interval.
pub struct Propagator<T> {
    n: usize,
    dt: T,
    tol: T,
    opts: EvolveOptions,
    stepper: Stepper<T>,
}

impl<T: Real> Propagator<T> {
    pub fn new(
        l: &Superoperator<T>,
        drive: &StateVector<T>,
        dt: T,
        opts: &EvolveOptions,
    ) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(invalid("dt", format!("must be finite and > 0, got {dt}")));
        }
        let n = l.dim();
        if drive.len() != n {
            return Err(Error::Mismatch(format!(
                "drive length {} != generator dimension {n}",
                drive.len()
            )));
        }
        if !(opts.tol > 0.0) || opts.krylov_dim < 2 {
            return Err(invalid("opts", "tol must be > 0 and krylov_dim >= 2"));
        }
        let tol = T::lit(opts.tol).max(T::epsilon() * T::lit(100.0));
        let drive_sum = drive.coeffs().iter().fold(T::zero(), |s, z| s + z.norm());
        let anorm = l.matrix().norm1().max(drive_sum);
        let stepper = if anorm == T::zero() {
            Stepper::Identity
        } else if n < opts.dense_limit {
            let mut m = DenseMatrix::zeros(n + 1, n + 1);
            let scale = creal(dt);
            for (i, j, v) in l.matrix().triplets() {
                m[(i, j)] = v * scale;
            }
            for (i, d) in drive.coeffs().iter().enumerate() {
                m[(i, n)] = d * scale;
            }
            Stepper::Dense(m.expm())
        } else {
            Stepper::Krylov {
                l: l.matrix().clone(),
                drive: drive.coeffs().to_vec(),
                anorm,
            }
        };
        Ok(Self {
            n,
            dt,
            tol,
            opts: *opts,
            stepper,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// Advances `rho` by one output interval.
    pub fn step(&self, rho: &StateVector<T>) -> Result<StateVector<T>> {
        if rho.len() != self.n {
            return Err(Error::Mismatch(format!(
                "state length {} != generator dimension {}",
                rho.len(),
                self.n
            )));
        }
        let mut aug = rho.coeffs().to_vec();
        aug.push(creal(T::one()));
        let out = match &self.stepper {
            Stepper::Identity => aug,
            Stepper::Dense(p) => p.matvec(&aug),
            Stepper::Krylov { l, drive, anorm } => {
                let op = |x: &[Cx<T>], y: &mut [Cx<T>]| {
                    let n = self.n;
                    l.matvec_into(&x[..n], &mut y[..n]);
                    let s = x[n];
                    if s.re != T::zero() || s.im != T::zero() {
                        for (yi, d) in y[..n].iter_mut().zip(drive) {
                            *yi += d * s;
                        }
                    }
                    y[n] = czero();
                };
                expv(op, &aug, self.dt, *anorm, self.tol, &self.opts)?
            }
        };
        let mut coeffs = out;
        coeffs.truncate(self.n);
        Ok(StateVector::from_coeffs(coeffs))
    }
}

fn parallel_dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    if a.len() >= 1 << 14 {
        a.par_chunks(4096)
            .zip(b.par_chunks(4096))
            .map(|(x, y)| vdot(x, y))
            .reduce(czero, |u, v| u + v)
    } else {
        vdot(a, b)
    }
}

fn axpy<T: Real>(alpha: Cx<T>, x: &[Cx<T>], y: &mut [Cx<T>]) {
    if y.len() >= 1 << 14 {
        y.par_chunks_mut(4096)
            .zip(x.par_chunks(4096))
            .for_each(|(yc, xc)| yc.iter_mut().zip(xc).for_each(|(a, b)| *a += alpha * b));
    } else {
        y.iter_mut().zip(x).for_each(|(a, b)| *a += alpha * b);
    }
}

/// Rounds a step size down to two significant digits, as in Expokit.
fn round_step<T: Real>(t: T) -> T {
    let s = T::lit(10f64.powf((t.as_f64()).log10().floor() - 1.0));
    (t / s).ceil() * s
}

/// `exp(t A) v` by adaptive Krylov substeps with Expokit's error estimate.
fn expv<T: Real>(
    op: impl Fn(&[Cx<T>], &mut [Cx<T>]),
    v: &[Cx<T>],
    t_out: T,
    anorm: T,
    tol: T,
    opts: &EvolveOptions,
) -> Result<Vec<Cx<T>>> {
    const MAX_REJECT: usize = 20;
    let n = v.len();
    let m = opts.krylov_dim.min(n);
    let gamma = T::lit(0.9);
    let delta = T::lit(1.2);
    let breakdown = T::lit(1e-13) * anorm;
    let mut w = v.to_vec();
    let mut beta = vec_norm(&w);
    if beta == T::zero() {
        return Ok(w);
    }
    let mf = T::from_usize_lossy(m);
    let fact = ((mf + T::one()) / T::E()).powf(mf + T::one())
        * (T::lit(2.0) * T::PI() * (mf + T::one())).sqrt();
    let mut t_new = (T::one() / anorm)
        * ((fact * tol) / (T::lit(4.0) * beta * anorm)).powf(T::one() / mf);
    t_new = round_step(t_new);
    let mut t_now = T::zero();
    let mut substeps = 0usize;
    let mut basis: Vec<Vec<Cx<T>>> = Vec::with_capacity(m + 1);
    let mut p = vec![czero(); n];
    while t_now < t_out {
        substeps += 1;
        if substeps > opts.max_substeps {
            return Err(Error::StepRejection {
                rejections: substeps,
                suggested_dt: (t_out / T::from_usize_lossy(substeps)).as_f64(),
            });
        }
        let mut t_step = (t_out - t_now).min(t_new);
        basis.clear();
        basis.push(w.iter().map(|z| z / beta).collect());
        let mut hess = DenseMatrix::zeros(m + 2, m + 2);
        let mut mb = m;
        let mut happy = false;
        for j in 0..m {
            op(&basis[j], &mut p);
            for (i, vi) in basis.iter().enumerate() {
                let hij = parallel_dot(vi, &p);
                hess[(i, j)] = hij;
                axpy(-hij, vi, &mut p);
            }
            let s = vec_norm(&p);
            if s < breakdown {
                happy = true;
                mb = j + 1;
                t_step = t_out - t_now;
                break;
            }
            hess[(j + 1, j)] = creal(s);
            basis.push(p.iter().map(|z| z / s).collect());
        }
        let mut avnorm = T::zero();
        if !happy {
            hess[(m + 1, m)] = creal(T::one());
            op(&basis[m], &mut p);
            avnorm = vec_norm(&p);
        }
        let mut rejections = 0usize;
        let (f, err_loc, xm) = loop {
            let mx = if happy { mb } else { mb + 2 };
            let small = DenseMatrix::from_fn(mx, mx, |i, j| hess[(i, j)] * creal(t_step));
            let f = small.expm();
            if happy {
                break (f, T::zero(), T::one() / mf);
            }
            let phi1 = (f[(m, 0)] * creal(beta)).norm();
            let phi2 = (f[(m + 1, 0)] * creal(beta * avnorm)).norm();
            let (err, xm) = if phi1 > T::lit(10.0) * phi2 {
                (phi2, T::one() / mf)
            } else if phi1 > phi2 {
                (phi1 * phi2 / (phi1 - phi2), T::one() / mf)
            } else {
                (phi1, T::one() / (mf - T::one()))
            };
            if err <= delta * t_step * tol {
                break (f, err, xm);
            }
            rejections += 1;
            if rejections > MAX_REJECT {
                return Err(Error::StepRejection {
                    rejections,
                    suggested_dt: t_step.as_f64(),
                });
            }
            t_step = round_step(gamma * t_step * (t_step * tol / err).powf(xm));
        };
        let mx = if happy { mb } else { mb + 1 };
        w.iter_mut().for_each(|z| *z = czero());
        for (i, vi) in basis.iter().take(mx).enumerate() {
            axpy(f[(i, 0)] * creal(beta), vi, &mut w);
        }
        beta = vec_norm(&w);
        if !beta.is_finite() {
            return Err(Error::NonFinite { step: substeps });
        }
        t_now += t_step;
        if happy || err_loc == T::zero() {
            t_new = t_out;
        } else {
            t_new = round_step(gamma * t_step * (t_step * tol / err_loc).powf(xm));
        }
        if beta == T::zero() {
            break;
        }
    }
    Ok(w)
}

/// States at `t = 0, dt, …, nsteps·dt`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<StateVector<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Solves `dρ/dt = Lρ + drive` from `rho0` with default options.
pub fn evolve<T: Real>(
    l: &Superoperator<T>,
    drive: &StateVector<T>,
    rho0: &StateVector<T>,
    dt: T,
    nsteps: usize,
) -> Result<Trajectory<T>> {
    evolve_with(l, drive, rho0, dt, nsteps, &EvolveOptions::default())
}

pub fn evolve_with<T: Real>(
    l: &Superoperator<T>,
    drive: &StateVector<T>,
    rho0: &StateVector<T>,
    dt: T,
    nsteps: usize,
    opts: &EvolveOptions,
) -> Result<Trajectory<T>> {
    let prop = Propagator::new(l, drive, dt, opts)?;
    let mut out = Trajectory {
        times: Vec::with_capacity(nsteps + 1),
        states: Vec::with_capacity(nsteps + 1),
    };
    out.times.push(T::zero());
    out.states.push(rho0.clone());
    for step in 1..=nsteps {
        let next = prop.step(&out.states[step - 1])?;
        if !next.is_finite() {
            return Err(Error::NonFinite { step });
        }
        out.times.push(dt * T::from_usize_lossy(step));
        out.states.push(next);
    }
    Ok(out)
}

/// Per-order norms `‖ρₖ(t)‖` along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormTrajectory<T> {
    pub times: Vec<T>,
    /// `norms[i][k]` is `‖ρₖ‖` at `times[i]`.
    pub norms: Vec<Vec<T>>,
    pub total: Vec<T>,
}

impl<T: Real> NormTrajectory<T> {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            norms: Vec::with_capacity(n),
            total: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: T, rho: &StateVector<T>, basis: &Basis) -> Result<()> {
        self.times.push(t);
        self.norms.push(order_norms(rho, basis)?);
        self.total.push(rho.norm());
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let k = self.norms.first().map_or(0, Vec::len);
        write!(w, "t")?;
        for j in 0..k {
            write!(w, ",order_{j}")?;
        }
        writeln!(w, ",total")?;
        for ((t, row), total) in self.times.iter().zip(&self.norms).zip(&self.total) {
            write!(w, "{:.8e}", t.as_f64())?;
            for v in row {
                write!(w, ",{:.8e}", v.as_f64())?;
            }
            writeln!(w, ",{:.8e}", total.as_f64())?;
        }
        Ok(())
    }
}

pub fn norm_trajectory<T: Real>(traj: &Trajectory<T>, basis: &Basis) -> Result<NormTrajectory<T>> {
    let mut out = NormTrajectory::with_capacity(traj.len());
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        out.push(*t, rho, basis)?;
    }
    Ok(out)
}

/// `⟨obs|ρ(t)⟩` along the trajectory.
pub fn observe<T: Real>(traj: &Trajectory<T>, obs: &StateVector<T>) -> Result<Vec<Cx<T>>> {
    traj.states
        .iter()
        .map(|rho| {
            if rho.len() != obs.len() {
                return Err(Error::Mismatch(format!(
                    "observable length {} != state length {}",
                    obs.len(),
                    rho.len()
                )));
            }
            Ok(obs.dot(rho))
        })
        .collect()
}

/// Measured transport coefficients; `None` where a norm is below the floor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientTrace<T> {
    pub times: Vec<T>,
    /// `h_k[i][k] = Im⟨ρₖ₊₁|H2|ρₖ⟩ / (‖ρₖ₊₁‖ ‖ρₖ‖)` for `k = 0..K−1`.
    pub h_k: Vec<Vec<Option<T>>>,
    /// `r_k[i][k] = −⟨ρₖ|R1|ρₖ⟩ / ‖ρₖ‖²` for `k = 0..=K`.
    pub r_k: Vec<Vec<Option<T>>>,
}

/// Relative norm floor below which a coefficient ratio is undefined.
pub const COEFFICIENT_FLOOR: f64 = 1e-9;

fn segments<T: Real>(rho: &StateVector<T>, basis: &Basis) -> Vec<StateVector<T>> {
    (0..=basis.max_order())
        .map(|k| {
            let mut v = StateVector::zeros(rho.len());
            let seg = basis.segment(k);
            v.coeffs_mut()[seg.clone()].copy_from_slice(&rho.coeffs()[seg]);
            v
        })
        .collect()
}

fn check_operator<T: Real>(name: &str, op: &Superoperator<T>, basis: &Basis) -> Result<()> {
    if op.dim() != basis.dim() || op.basis_fingerprint() != basis.fingerprint() {
        return Err(Error::Mismatch(format!(
            "{name} was built on a different basis (dimension {} vs {})",
            op.dim(),
            basis.dim()
        )));
    }
    Ok(())
}

pub fn effective_coefficients<T: Real>(
    traj: &Trajectory<T>,
    basis: &Basis,
    h2: &Superoperator<T>,
    r1: &Superoperator<T>,
) -> Result<CoefficientTrace<T>> {
    check_operator("H2", h2, basis)?;
    check_operator("R1", r1, basis)?;
    let kmax = basis.max_order();
    let mut out = CoefficientTrace {
        times: traj.times.clone(),
        h_k: Vec::with_capacity(traj.len()),
        r_k: Vec::with_capacity(traj.len()),
    };
    for rho in &traj.states {
        basis.check_len(rho)?;
        let floor = T::lit(COEFFICIENT_FLOOR) * rho.norm();
        let parts = segments(rho, basis);
        let norms: Vec<T> = parts.iter().map(StateVector::norm).collect();
        let defined = |k: usize| norms[k] > floor && norms[k] > T::zero();
        let h2_parts: Vec<StateVector<T>> = parts.iter().map(|p| h2.apply(p)).collect();
        let h_row = (0..kmax)
            .map(|k| {
                (defined(k) && defined(k + 1))
                    .then(|| parts[k + 1].dot(&h2_parts[k]).im / (norms[k + 1] * norms[k]))
            })
            .collect();
        let r_row = (0..=kmax)
            .map(|k| {
                defined(k).then(|| -r1.expectation(&parts[k], &parts[k]).re / (norms[k] * norms[k]))
            })
            .collect();
        out.h_k.push(h_row);
        out.r_k.push(r_row);
    }
    Ok(out)
}

/// Right-hand side of the norm balance `d‖ρₖ‖²/dt` for every order:
/// `−2 Im⟨ρₖ₊₁|H2|ρₖ⟩ + 2 Im⟨ρₖ|H2|ρₖ₋₁⟩ + 2⟨ρₖ|R1|ρₖ⟩ − 2 Re⟨ρₖ|R1|ρ_eq⟩`.
pub fn norm_balance<T: Real>(
    rho: &StateVector<T>,
    basis: &Basis,
    h2: &Superoperator<T>,
    r1: &Superoperator<T>,
    rho_eq: &StateVector<T>,
) -> Result<Vec<T>> {
    check_operator("H2", h2, basis)?;
    check_operator("R1", r1, basis)?;
    basis.check_len(rho)?;
    basis.check_len(rho_eq)?;
    let kmax = basis.max_order();
    let parts = segments(rho, basis);
    let two = T::lit(2.0);
    let r1_eq = r1.apply(rho_eq);
    Ok((0..=kmax)
        .map(|k| {
            let mut v = two * r1.expectation(&parts[k], &parts[k]).re;
            if k < kmax {
                v -= two * h2.expectation(&parts[k + 1], &parts[k]).im;
            }
            if k > 0 {
                v += two * h2.expectation(&parts[k], &parts[k - 1]).im;
            }
            v - two * parts[k].dot(&r1_eq).re
        })
        .collect())
}

/// Outcome of running the same experiment in a restricted and the full space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorReport<T> {
    pub k: usize,
    pub restricted_dim: usize,
    pub full_dim: usize,
    /// `max_t |⟨obs|ρ_full⟩ − ⟨obs|ρ_k⟩|`.
    pub max_obs_error: T,
    /// `max_t (Σ_{j>k} ‖ρⱼ‖² / Σ_{j≥1} ‖ρⱼ‖²)^{1/2}` of the full run.
    pub leaked_fraction: T,
    pub observable_restricted: Vec<Cx<T>>,
    pub observable_full: Vec<Cx<T>>,
    pub restricted: NormTrajectory<T>,
    pub full: NormTrajectory<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompareOptions {
    pub evolve: EvolveOptions,
    /// Largest full Liouville dimension allowed.
    pub cap: u128,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            evolve: EvolveOptions::default(),
            cap: FULL_DIMENSION_CAP,
        }
    }
}

/// Norms and detected signal of a run, without the states themselves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StreamedRun<T> {
    pub norms: NormTrajectory<T>,
    /// `⟨obs|ρ(t)⟩`; empty when no observable was given.
    pub observable: Vec<Cx<T>>,
}

/// Like [`evolve`] followed by [`norm_trajectory`] and [`observe`], but keeps
/// only the current state in memory.
#[allow(clippy::too_many_arguments)]
pub fn run_streamed<T: Real>(
    l: &Superoperator<T>,
    drive: &StateVector<T>,
    rho0: &StateVector<T>,
    obs: Option<&StateVector<T>>,
    basis: &Basis,
    dt: T,
    nsteps: usize,
    opts: &EvolveOptions,
) -> Result<StreamedRun<T>> {
    basis.check_len(rho0)?;
    if let Some(o) = obs {
        basis.check_len(o)?;
    }
    let prop = Propagator::new(l, drive, dt, opts)?;
    let mut rho = rho0.clone();
    let mut run = StreamedRun {
        norms: NormTrajectory::with_capacity(nsteps + 1),
        observable: Vec::with_capacity(if obs.is_some() { nsteps + 1 } else { 0 }),
    };
    let record = |run: &mut StreamedRun<T>, t: T, rho: &StateVector<T>| -> Result<()> {
        run.norms.push(t, rho, basis)?;
        if let Some(o) = obs {
            run.observable.push(o.dot(rho));
        }
        Ok(())
    };
    record(&mut run, T::zero(), &rho)?;
    for step in 1..=nsteps {
        rho = prop.step(&rho)?;
        if !rho.is_finite() {
            return Err(Error::NonFinite { step });
        }
        record(&mut run, dt * T::from_usize_lossy(step), &rho)?;
    }
    Ok(run)
}

fn system_run<T: Real>(
    system: &SpinSystem,
    basis: &Basis,
    rho0: InitialSpec,
    obs: InitialSpec,
    dt: T,
    nsteps: usize,
    opts: &EvolveOptions,
) -> Result<StreamedRun<T>> {
    let (l, drive) = liouvillian_for::<T>(system, basis)?;
    let obs_vec = initial_state::<T>(system, basis, obs)?;
    let rho = initial_state::<T>(system, basis, rho0)?;
    run_streamed(&l, &drive, &rho, Some(&obs_vec), basis, dt, nsteps, opts)
}

/// Runs `system` from `rho0` in the order-`k` space and in the full space and
/// compares the detected signal `⟨obs|ρ(t)⟩` over `[0, t_total]`.
pub fn compare_restricted_full<T: Real>(
    system: &SpinSystem,
    k: usize,
    rho0: InitialSpec,
    obs: InitialSpec,
    t_total: T,
    dt: T,
) -> Result<ErrorReport<T>> {
    compare_restricted_full_with(system, k, rho0, obs, t_total, dt, &CompareOptions::default())
}

pub fn compare_restricted_full_with<T: Real>(
    system: &SpinSystem,
    k: usize,
    rho0: InitialSpec,
    obs: InitialSpec,
    t_total: T,
    dt: T,
    opts: &CompareOptions,
) -> Result<ErrorReport<T>> {
    let n = system.len();
    let full_dim = crate::basis::basis_dimension(&system.multiplicities(), n)?;
    if full_dim > opts.cap {
        return Err(Error::CapExceeded {
            dim: full_dim,
            cap: opts.cap,
        });
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be finite and > 0, got {dt}")));
    }
    if !(t_total >= T::zero()) || !t_total.is_finite() {
        return Err(invalid("t_total", format!("must be finite and >= 0, got {t_total}")));
    }
    let nsteps = (t_total / dt).round().as_f64() as usize;
    let restricted_basis = Basis::build(system, k)?;
    let full_basis = Basis::build(system, n)?;
    let (restricted, full) = rayon::join(
        || system_run(system, &restricted_basis, rho0, obs, dt, nsteps, &opts.evolve),
        || system_run(system, &full_basis, rho0, obs, dt, nsteps, &opts.evolve),
    );
    let (restricted, full) = (restricted?, full?);
    let max_obs_error = restricted
        .observable
        .iter()
        .zip(&full.observable)
        .fold(T::zero(), |m, (a, b)| m.max((a - b).norm()));
    let leaked_fraction = full
        .norms
        .norms
        .iter()
        .map(|row| {
            let above: T = row.iter().skip(k + 1).fold(T::zero(), |s, v| s + *v * *v);
            let all: T = row.iter().skip(1).fold(T::zero(), |s, v| s + *v * *v);
            if all > T::zero() {
                (above / all).sqrt()
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max);
    Ok(ErrorReport {
        k,
        restricted_dim: restricted_basis.dim(),
        full_dim: full_basis.dim(),
        max_obs_error,
        leaked_fraction,
        observable_restricted: restricted.observable,
        observable_full: full.observable,
        restricted: restricted.norms,
        full: full.norms,
    })
}

/// `‖H2‖` of the system's full-space coupling superoperator, in rad/s.
pub fn coupling_norm(system: &SpinSystem) -> Result<f64> {
    let basis = Basis::build(system, system.len())?;
    let h2 = build_h2::<f64>(system, &basis)?;
    Ok(crate::superop::spectral_norm_estimate(&h2, 1e-10).value)
}
