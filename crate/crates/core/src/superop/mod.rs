//! Sparse commutation and relaxation superoperators over a restricted basis.
//!
//! Matrix elements are assembled spin-locally from per-multiplicity
//! multiplication tables; no full-space matrix is ever formed. Commutator
//! outputs whose correlation order exceeds the basis maximum are dropped,
//! which is exactly the state-space restriction.

pub mod local;

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{Basis, StateVector};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{czero, creal, vec_norm, Cx, Real};
use crate::sparse::CsrMatrix;
use crate::spinsys::{RelaxationLaw, SpinSystem};

use self::local::{table_floor, SpinTables};

pub use self::local::{local_operator_set, spin_matrices, LocalOperatorSet, SpinMatrices};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Role {
    H1,
    H2,
    R1,
    Liouvillian,
}

/// Square sparse matrix acting on [`StateVector`]s of one basis.
#[derive(Clone, Debug)]
pub struct Superoperator<T> {
    matrix: CsrMatrix<T>,
    role: Role,
    basis_fingerprint: u64,
}

impl<T: Real> Superoperator<T> {
    pub fn new(matrix: CsrMatrix<T>, role: Role, basis_fingerprint: u64) -> Self {
        Self {
            matrix,
            role,
            basis_fingerprint,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn basis_fingerprint(&self) -> u64 {
        self.basis_fingerprint
    }

    pub fn matrix(&self) -> &CsrMatrix<T> {
        &self.matrix
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        self.matrix.get(i, j)
    }

    pub fn apply(&self, v: &StateVector<T>) -> StateVector<T> {
        StateVector::from_coeffs(self.matrix.matvec(v.coeffs()))
    }

    /// `⟨a| self |b⟩`.
    pub fn expectation(&self, a: &StateVector<T>, b: &StateVector<T>) -> Cx<T> {
        a.dot(&self.apply(b))
    }

    pub fn scaled(&self, s: Cx<T>) -> Self {
        Self {
            matrix: self.matrix.map_values(|v| v * s),
            ..self.clone()
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            ..self.clone()
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut d = DenseMatrix::zeros(self.dim(), self.dim());
        for (i, j, v) in self.matrix.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Coordinate text export: `row col re im` per line, zero-based.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "% {} {} {}", self.dim(), self.dim(), self.nnz())?;
        for (i, j, v) in self.matrix.triplets() {
            writeln!(w, "{i} {j} {:.17e} {:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

fn check(system: &SpinSystem, basis: &Basis) -> Result<()> {
    if !basis.matches(system) {
        return Err(Error::Mismatch(format!(
            "basis fingerprint {:#x} does not belong to a system with multiplicities {:?}",
            basis.system_fingerprint(),
            system.multiplicities()
        )));
    }
    Ok(())
}

fn tables_for<T: Real>(system: &SpinSystem) -> HashMap<u32, SpinTables<T>> {
    let mut map = HashMap::new();
    for m in system.multiplicities() {
        map.entry(m).or_insert_with(|| SpinTables::new(m));
    }
    map
}

/// Column generator: for column state `col` yields `(row, value)` pairs.
fn assemble<T, F>(basis: &Basis, role: Role, column: F) -> Superoperator<T>
where
    T: Real,
    F: Fn(usize, &mut Vec<u8>, &mut Vec<(usize, usize, Cx<T>)>) + Sync,
{
    let triplets: Vec<_> = (0..basis.dim())
        .into_par_iter()
        .fold(
            || (Vec::new(), vec![0u8; basis.num_spins()]),
            |(mut out, mut scratch), col| {
                scratch.copy_from_slice(basis.states()[col].local_ops());
                column(col, &mut scratch, &mut out);
                (out, scratch)
            },
        )
        .map(|(out, _)| out)
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        });
    Superoperator::new(
        CsrMatrix::from_triplets(basis.dim(), triplets),
        role,
        basis.fingerprint(),
    )
}

/// Commutation superoperator of the single-spin terms
/// `Σ_n ω_n Sz + ω_drive (cos φ Sx + sin φ Sy)`.
pub fn build_h1<T: Real>(system: &SpinSystem, basis: &Basis) -> Result<Superoperator<T>> {
    check(system, basis)?;
    let tables = tables_for::<T>(system);
    let per_spin: Vec<Option<DenseMatrix<T>>> = system
        .spins()
        .iter()
        .map(|s| {
            let w = s.drive.angular();
            let weights = [
                w * s.drive_phase_rad.cos(),
                w * s.drive_phase_rad.sin(),
                s.offset.angular(),
            ];
            if weights.iter().all(|&x| x == 0.0) {
                None
            } else {
                Some(tables[&s.multiplicity].commutator(weights.map(T::lit)))
            }
        })
        .collect();

    Ok(assemble(basis, Role::H1, |col, ops, out| {
        for (n, table) in per_spin.iter().enumerate() {
            let Some(table) = table else { continue };
            let b = ops[n] as usize;
            if b == 0 {
                continue;
            }
            for c in 1..table.rows() {
                let v = table[(c, b)];
                if v == czero() {
                    continue;
                }
                ops[n] = c as u8;
                let row = basis.index_of(ops).expect("same-order state present");
                out.push((row, col, v));
            }
            ops[n] = b as u8;
        }
    }))
}

/// Two-site commutation table of one coupling: for each input pair `(x, y)`
/// the nonzero outputs `(c, d, value)`.
struct PairTable<T> {
    size_j: usize,
    outputs: Vec<Vec<(u8, u8, Cx<T>)>>,
}

impl<T: Real> PairTable<T> {
    fn new(ti: &SpinTables<T>, tj: &SpinTables<T>, weights: [T; 3]) -> Self {
        let (ni, nj) = (ti.size, tj.size);
        let scale = weights.iter().fold(T::zero(), |m, w| m.max(w.abs()));
        let floor = table_floor(scale);
        let mut outputs = vec![Vec::new(); ni * nj];
        for x in 0..ni {
            for y in 0..nj {
                if x == 0 && y == 0 {
                    continue;
                }
                for c in 0..ni {
                    for d in 0..nj {
                        if c == 0 && d == 0 {
                            continue;
                        }
                        // [A⊗B, X⊗Y] = AX⊗BY − XA⊗YB
                        let mut v = czero::<T>();
                        for a in 0..3 {
                            if weights[a] == T::zero() {
                                continue;
                            }
                            let term = ti.left[a][(c, x)] * tj.left[a][(d, y)]
                                - ti.right[a][(c, x)] * tj.right[a][(d, y)];
                            v += term * weights[a];
                        }
                        if v.norm() > floor {
                            outputs[x * nj + y].push((c as u8, d as u8, v));
                        }
                    }
                }
            }
        }
        Self {
            size_j: nj,
            outputs,
        }
    }

    fn outputs(&self, x: u8, y: u8) -> &[(u8, u8, Cx<T>)] {
        &self.outputs[x as usize * self.size_j + y as usize]
    }
}

/// Commutation superoperator of the couplings
/// `2πJ (I·S) + 2πD · 2 IzSz`, truncated to the basis.
pub fn build_h2<T: Real>(system: &SpinSystem, basis: &Basis) -> Result<Superoperator<T>> {
    check(system, basis)?;
    let tables = tables_for::<T>(system);
    let mults = system.multiplicities();
    let pairs: Vec<(usize, usize, PairTable<T>)> = system
        .couplings()
        .iter()
        .filter_map(|c| {
            let j = c.isotropic.angular();
            let zz = j + 2.0 * c.secular_zz.angular();
            let weights = [j, j, zz];
            if weights.iter().all(|&w| w == 0.0) {
                return None;
            }
            let table = PairTable::new(
                &tables[&mults[c.i]],
                &tables[&mults[c.j]],
                weights.map(T::lit),
            );
            Some((c.i, c.j, table))
        })
        .collect();
    let max_order = basis.max_order();

    Ok(assemble(basis, Role::H2, |col, ops, out| {
        let order = basis.order_of_index(col);
        for (i, j, table) in &pairs {
            let (x, y) = (ops[*i], ops[*j]);
            let base = order - usize::from(x != 0) - usize::from(y != 0);
            for &(c, d, v) in table.outputs(x, y) {
                if base + usize::from(c != 0) + usize::from(d != 0) > max_order {
                    continue;
                }
                ops[*i] = c;
                ops[*j] = d;
                let row = basis.index_of(ops).expect("order within restriction");
                out.push((row, col, v));
            }
            ops[*i] = x;
            ops[*j] = y;
        }
    }))
}

/// Relaxation rate (rad/s, positive) of one basis state under the model.
///
/// With uniform rates r this is k·r, √k·r or r for an order-k state. Per-spin
/// overrides generalize as: linear sums the rates of the correlated spins,
/// sqrt scales their mean by √k, constant takes their maximum.
pub fn state_relaxation_rate(system: &SpinSystem, local_ops: &[u8]) -> f64 {
    let rates: Vec<f64> = local_ops
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0)
        .map(|(n, _)| system.spin_rate(n).angular())
        .collect();
    if rates.is_empty() {
        return 0.0;
    }
    let k = rates.len() as f64;
    match system.relaxation().law {
        RelaxationLaw::None => 0.0,
        RelaxationLaw::Linear => rates.iter().sum(),
        RelaxationLaw::Sqrt => k.sqrt() * rates.iter().sum::<f64>() / k,
        RelaxationLaw::Constant => rates.iter().copied().fold(0.0, f64::max),
    }
}

/// Diagonal phenomenological relaxation superoperator (entries ≤ 0).
pub fn build_r1<T: Real>(system: &SpinSystem, basis: &Basis) -> Result<Superoperator<T>> {
    check(system, basis)?;
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let rate = state_relaxation_rate(system, s.local_ops());
            (rate != 0.0).then(|| (i, i, creal(-T::lit(rate))))
        })
        .collect();
    Ok(Superoperator::new(
        CsrMatrix::from_triplets(basis.dim(), triplets),
        Role::R1,
        basis.fingerprint(),
    ))
}

/// `L = −i(H1 + H2) + R1` and the constant drive `−R1 ρ_eq`, so that
/// `dρ/dt = Lρ + drive` is the inhomogeneous master equation.
pub fn assemble_liouvillian<T: Real>(
    h1: &Superoperator<T>,
    h2: &Superoperator<T>,
    r1: &Superoperator<T>,
    rho_eq: &StateVector<T>,
) -> Result<(Superoperator<T>, StateVector<T>)> {
    let fp = h1.basis_fingerprint;
    for (name, op) in [("H2", h2), ("R1", r1)] {
        if op.dim() != h1.dim() || op.basis_fingerprint != fp {
            return Err(Error::Mismatch(format!(
                "{name} has dimension {} (basis {:#x}), H1 has {} (basis {fp:#x})",
                op.dim(),
                op.basis_fingerprint,
                h1.dim()
            )));
        }
    }
    if rho_eq.len() != h1.dim() {
        return Err(Error::Mismatch(format!(
            "equilibrium state length {} != {}",
            rho_eq.len(),
            h1.dim()
        )));
    }
    let minus_i = Cx::new(T::zero(), -T::one());
    let ham = h1.matrix.add(&h2.matrix).map_values(|v| v * minus_i);
    let l = ham.add(&r1.matrix);
    let drive = r1.apply(rho_eq).scaled(creal(-T::one()));
    Ok((Superoperator::new(l, Role::Liouvillian, fp), drive))
}

/// Builds `H1`, `H2`, `R1` and assembles the Liouvillian and drive for `system`.
pub fn liouvillian_for<T: Real>(
    system: &SpinSystem,
    basis: &Basis,
) -> Result<(Superoperator<T>, StateVector<T>)> {
    let h1 = build_h1(system, basis)?;
    let h2 = build_h2(system, basis)?;
    let r1 = build_r1(system, basis)?;
    let eq = crate::spinsys::equilibrium_state(system, basis)?;
    assemble_liouvillian(&h1, &h2, &r1, &eq)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormEstimate<T> {
    pub value: T,
    pub converged: bool,
    pub iterations: usize,
}

const NORM_ITER_CAP: usize = 20_000;
const NORM_SEED: u64 = 0x5eed_2011;

/// Largest singular value by power iteration on `A†A` from a fixed random start.
pub fn spectral_norm_estimate<T: Real>(op: &Superoperator<T>, tol: T) -> NormEstimate<T> {
    let n = op.dim();
    if n == 0 || op.nnz() == 0 {
        return NormEstimate {
            value: T::zero(),
            converged: true,
            iterations: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    let mut x: Vec<Cx<T>> = (0..n)
        .map(|_| Cx::new(T::lit(rng.gen_range(-1.0..1.0)), T::lit(rng.gen_range(-1.0..1.0))))
        .collect();
    let nx = vec_norm(&x);
    x.iter_mut().for_each(|z| *z = *z / nx);
    let mut sigma = T::zero();
    for it in 1..=NORM_ITER_CAP {
        let y = op.matrix.matvec(&x);
        let next = vec_norm(&y);
        let z = op.matrix.adjoint_matvec(&y);
        let nz = vec_norm(&z);
        if nz == T::zero() {
            return NormEstimate {
                value: next,
                converged: true,
                iterations: it,
            };
        }
        x = z.into_iter().map(|v| v / nz).collect();
        if (next - sigma).abs() <= tol * next {
            return NormEstimate {
                value: next,
                converged: true,
                iterations: it,
            };
        }
        sigma = next;
    }
    NormEstimate {
        value: sigma,
        converged: false,
        iterations: NORM_ITER_CAP,
    }
}
