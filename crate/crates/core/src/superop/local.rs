//! Single-spin operator algebra: spin matrices, the normalized irreducible
//! spherical tensor basis, and the multiplication tables used to assemble
//! superoperators spin-locally.

use crate::linalg::DenseMatrix;
use crate::scalar::{czero, creal, Cx, Real};

/// Angular momentum matrices in the |s, m⟩ basis ordered m = s, s−1, …, −s.
#[derive(Clone, Debug)]
pub struct SpinMatrices<T> {
    pub x: DenseMatrix<T>,
    pub y: DenseMatrix<T>,
    pub z: DenseMatrix<T>,
    pub plus: DenseMatrix<T>,
    pub minus: DenseMatrix<T>,
}

pub fn spin_matrices<T: Real>(multiplicity: u32) -> SpinMatrices<T> {
    let m = multiplicity as usize;
    let s = (m as f64 - 1.0) / 2.0;
    let mz = |i: usize| s - i as f64;
    let z = DenseMatrix::from_fn(m, m, |i, j| {
        if i == j {
            creal(T::lit(mz(i)))
        } else {
            czero()
        }
    });
    let plus = DenseMatrix::from_fn(m, m, |i, j| {
        if j == i + 1 {
            let mj = mz(j);
            creal(T::lit((s * (s + 1.0) - mj * (mj + 1.0)).sqrt()))
        } else {
            czero()
        }
    });
    let minus = plus.adjoint();
    let half = creal(T::lit(0.5));
    let x = plus.add(&minus).scale(half);
    let y = plus.sub(&minus).scale(Cx::new(T::zero(), -T::lit(0.5)));
    SpinMatrices {
        x,
        y,
        z,
        plus,
        minus,
    }
}

/// Orthonormal (under `Tr(A†B)`) operator basis of one spin: the scaled
/// identity followed by `T(l, q)` for `l = 1..2s`, `q = l..−l`.
#[derive(Clone, Debug)]
pub struct LocalOperatorSet<T> {
    multiplicity: u32,
    ops: Vec<DenseMatrix<T>>,
    ranks: Vec<(u32, i32)>,
}

impl<T: Real> LocalOperatorSet<T> {
    pub fn new(multiplicity: u32) -> Self {
        assert!(multiplicity >= 2, "multiplicity must be >= 2");
        let m = multiplicity as usize;
        let sm = spin_matrices::<T>(multiplicity);
        let normalized = |a: DenseMatrix<T>| {
            let n = a.hs_inner(&a).re.sqrt();
            a.scale(creal(T::one() / n))
        };
        let mut ops = vec![normalized(DenseMatrix::identity(m))];
        let mut ranks = vec![(0, 0)];
        for l in 1..m as u32 {
            // T(l, l) ∝ (−1)^l (S+)^l, then lower with [S−, ·].
            let mut top = DenseMatrix::identity(m);
            for _ in 0..l {
                top = top.matmul(&sm.plus);
            }
            if l % 2 == 1 {
                top = top.scale(creal(-T::one()));
            }
            let mut t = normalized(top);
            ops.push(t.clone());
            ranks.push((l, l as i32));
            for q in (-(l as i32)..l as i32).rev() {
                t = normalized(sm.minus.matmul(&t).sub(&t.matmul(&sm.minus)));
                ops.push(t.clone());
                ranks.push((l, q));
            }
        }
        debug_assert_eq!(ops.len(), m * m);
        Self {
            multiplicity,
            ops,
            ranks,
        }
    }

    pub fn multiplicity(&self) -> u32 {
        self.multiplicity
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[DenseMatrix<T>] {
        &self.ops
    }

    /// `(l, q)` of each member; the identity is `(0, 0)`.
    pub fn ranks(&self) -> &[(u32, i32)] {
        &self.ranks
    }

    /// Index of `T(l, q)`.
    pub fn index_of(&self, l: u32, q: i32) -> Option<usize> {
        self.ranks.iter().position(|&r| r == (l, q))
    }

    /// Expansion coefficient `⟨T_c|A⟩`.
    pub fn coefficient_of(&self, c: usize, a: &DenseMatrix<T>) -> Cx<T> {
        self.ops[c].hs_inner(a)
    }

    /// `[c][b] = ⟨T_c| A T_b⟩`: left multiplication by `A` in this basis.
    pub fn left_table(&self, a: &DenseMatrix<T>) -> DenseMatrix<T> {
        let products: Vec<_> = self.ops.iter().map(|tb| a.matmul(tb)).collect();
        DenseMatrix::from_fn(self.len(), self.len(), |c, b| self.ops[c].hs_inner(&products[b]))
    }

    /// `[c][b] = ⟨T_c| T_b A⟩`: right multiplication by `A` in this basis.
    pub fn right_table(&self, a: &DenseMatrix<T>) -> DenseMatrix<T> {
        let products: Vec<_> = self.ops.iter().map(|tb| tb.matmul(a)).collect();
        DenseMatrix::from_fn(self.len(), self.len(), |c, b| self.ops[c].hs_inner(&products[b]))
    }
}

/// The set returned by the public operation of the same name.
pub fn local_operator_set<T: Real>(multiplicity: u32) -> Vec<DenseMatrix<T>> {
    LocalOperatorSet::new(multiplicity).ops
}

/// Round-off floor for table entries: anything smaller is an exact zero.
pub(crate) fn table_floor<T: Real>(scale: T) -> T {
    T::lit(64.0) * T::epsilon() * scale
}

/// Left/right multiplication tables of Sx, Sy, Sz for one multiplicity.
#[derive(Clone, Debug)]
pub(crate) struct SpinTables<T> {
    pub size: usize,
    pub left: [DenseMatrix<T>; 3],
    pub right: [DenseMatrix<T>; 3],
}

impl<T: Real> SpinTables<T> {
    pub fn new(multiplicity: u32) -> Self {
        let set = LocalOperatorSet::<T>::new(multiplicity);
        let sm = spin_matrices::<T>(multiplicity);
        let axes = [&sm.x, &sm.y, &sm.z];
        Self {
            size: set.len(),
            left: axes.map(|a| set.left_table(a)),
            right: axes.map(|a| set.right_table(a)),
        }
    }

    /// Commutation table of `Σ_a w_a S_a`, with identity row and column pinned to zero.
    pub fn commutator(&self, weights: [T; 3]) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.size, self.size);
        for a in 0..3 {
            if weights[a] == T::zero() {
                continue;
            }
            let ad = self.left[a].sub(&self.right[a]).scale(creal(weights[a]));
            out = out.add(&ad);
        }
        let scale = weights.iter().fold(T::zero(), |m, w| m.max(w.abs()));
        let floor = table_floor(scale);
        DenseMatrix::from_fn(self.size, self.size, |c, b| {
            let v = out[(c, b)];
            if c == 0 || b == 0 || v.norm() <= floor {
                czero()
            } else {
                v
            }
        })
    }
}
