//! Correlation-order-restricted product-operator basis.
//!
//! States are products of one local operator per spin; index 0 is the
//! (normalized) identity. The correlation order of a state is the number of
//! non-identity factors. States are stored sorted by order and then
//! lexicographically, so every order forms one contiguous segment.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{czero, vdot, vec_norm, Cx, Real};
use crate::spinsys::SpinSystem;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    local_ops: Box<[u8]>,
    order: usize,
}

impl BasisState {
    pub fn new(local_ops: Vec<u8>) -> Self {
        let order = local_ops.iter().filter(|&&a| a != 0).count();
        Self {
            local_ops: local_ops.into_boxed_slice(),
            order,
        }
    }

    pub fn local_ops(&self) -> &[u8] {
        &self.local_ops
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Number of non-identity factors in `state`.
pub fn correlation_order(state: &BasisState) -> usize {
    state.local_ops.iter().filter(|&&a| a != 0).count()
}

#[derive(Clone, Debug)]
pub struct Basis {
    multiplicities: Vec<u32>,
    states: Vec<BasisState>,
    order_offsets: Vec<usize>,
    max_order: usize,
    system_fingerprint: u64,
    fingerprint: u64,
    index: HashMap<Box<[u8]>, usize>,
}

fn hash_of(x: impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

impl Basis {
    /// All product states of correlation order `<= k` for `system`.
    pub fn build(system: &SpinSystem, k: usize) -> Result<Self> {
        Self::from_multiplicities(&system.multiplicities(), k)
    }

    pub fn from_multiplicities(multiplicities: &[u32], k: usize) -> Result<Self> {
        let n = multiplicities.len();
        if n == 0 {
            return Err(Error::Basis("no spins".into()));
        }
        if k > n {
            return Err(Error::Basis(format!(
                "max order {k} exceeds the number of spins {n}"
            )));
        }
        if let Some(&m) = multiplicities.iter().find(|&&m| !(2..=16).contains(&m)) {
            return Err(Error::Basis(format!("unsupported multiplicity {m}")));
        }
        let dim = basis_dimension(multiplicities, k)?;
        let dim = usize::try_from(dim)
            .map_err(|_| Error::Basis(format!("basis dimension {dim} does not fit in memory")))?;

        let mut states = Vec::with_capacity(dim);
        let mut order_offsets = vec![0];
        for order in 0..=k {
            let start = states.len();
            let mut subset: Vec<usize> = (0..order).collect();
            loop {
                push_assignments(multiplicities, &subset, &mut states);
                if !next_combination(&mut subset, n) {
                    break;
                }
            }
            states[start..].sort_unstable_by(|a, b| a.local_ops.cmp(&b.local_ops));
            order_offsets.push(states.len());
        }
        debug_assert_eq!(states.len(), dim);

        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.local_ops.clone(), i))
            .collect();
        let system_fingerprint = hash_of(multiplicities);
        Ok(Self {
            multiplicities: multiplicities.to_vec(),
            states,
            order_offsets,
            max_order: k,
            system_fingerprint,
            fingerprint: hash_of((system_fingerprint, k)),
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn num_spins(&self) -> usize {
        self.multiplicities.len()
    }

    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    /// Index range of the order-`k` segment.
    pub fn segment(&self, k: usize) -> Range<usize> {
        self.order_offsets[k]..self.order_offsets[k + 1]
    }

    pub fn order_offsets(&self) -> &[usize] {
        &self.order_offsets
    }

    pub fn order_of_index(&self, i: usize) -> usize {
        self.states[i].order
    }

    pub fn index_of(&self, local_ops: &[u8]) -> Option<usize> {
        self.index.get(local_ops).copied()
    }

    pub fn system_fingerprint(&self) -> u64 {
        self.system_fingerprint
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn matches(&self, system: &SpinSystem) -> bool {
        self.multiplicities == system.multiplicities()
    }

    pub(crate) fn check_len<T>(&self, v: &StateVector<T>) -> Result<()> {
        if v.coeffs.len() != self.dim() {
            return Err(Error::Mismatch(format!(
                "state vector length {} != basis dimension {}",
                v.coeffs.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

fn push_assignments(mults: &[u32], subset: &[usize], out: &mut Vec<BasisState>) {
    let mut ops = vec![0u8; mults.len()];
    for &s in subset {
        ops[s] = 1;
    }
    loop {
        out.push(BasisState {
            local_ops: ops.clone().into_boxed_slice(),
            order: subset.len(),
        });
        // odometer over the chosen spins, each running 1..m²-1
        let mut carry = true;
        for &s in subset.iter().rev() {
            let top = (mults[s] * mults[s] - 1) as u8;
            if ops[s] < top {
                ops[s] += 1;
                carry = false;
                break;
            }
            ops[s] = 1;
        }
        if carry {
            return;
        }
    }
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Number of product states of order `<= k`: the sum of the elementary
/// symmetric polynomials of `(m_i² − 1)` up to degree `k`.
pub fn basis_dimension(multiplicities: &[u32], k: usize) -> Result<u128> {
    if k > multiplicities.len() {
        return Err(Error::Basis(format!(
            "max order {k} exceeds the number of spins {}",
            multiplicities.len()
        )));
    }
    let mut e = vec![0u128; k + 1];
    e[0] = 1;
    for &m in multiplicities {
        let w = u128::from(m) * u128::from(m) - 1;
        for j in (1..=k).rev() {
            e[j] += e[j - 1] * w;
        }
    }
    Ok(e.into_iter().sum())
}

/// Coefficients of a density operator in an orthonormal product-operator basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StateVector<T> {
    coeffs: Vec<Cx<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            coeffs: vec![czero(); dim],
        }
    }

    pub fn from_coeffs(coeffs: Vec<Cx<T>>) -> Self {
        Self { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Cx<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Cx<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Cx<T>> {
        self.coeffs
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.coeffs)
    }

    /// `⟨self|other⟩`.
    pub fn dot(&self, other: &Self) -> Cx<T> {
        vdot(&self.coeffs, &other.coeffs)
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > T::zero() {
            self.coeffs.iter_mut().for_each(|z| *z = *z / n);
        }
    }

    pub fn scaled(&self, s: Cx<T>) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// π̂ₖ: keeps only the order-`k` segment.
pub fn project_order<T: Real>(v: &StateVector<T>, k: usize, basis: &Basis) -> Result<StateVector<T>> {
    basis.check_len(v)?;
    if k > basis.max_order() {
        return Err(Error::Basis(format!(
            "order {k} outside basis max order {}",
            basis.max_order()
        )));
    }
    let mut out = StateVector::zeros(v.len());
    let seg = basis.segment(k);
    out.coeffs[seg.clone()].copy_from_slice(&v.coeffs[seg]);
    Ok(out)
}

/// 2-norm of every order segment, index = correlation order.
pub fn order_norms<T: Real>(v: &StateVector<T>, basis: &Basis) -> Result<Vec<T>> {
    basis.check_len(v)?;
    Ok((0..=basis.max_order())
        .map(|k| vec_norm(&v.coeffs[basis.segment(k)]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn binom(n: u128, k: u128) -> u128 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn dimensions() {
        assert_eq!(basis_dimension(&[2], 0).unwrap(), 1);
        assert_eq!(basis_dimension(&[2; 4], 2).unwrap(), 67);
        assert_eq!(basis_dimension(&[2, 3], 2).unwrap(), 36);
        assert!(basis_dimension(&[2, 2], 3).is_err());
    }

    #[test]
    fn dimension_22_spins_order_5() {
        // Σ_j C(22, j) 3^j, j <= 5, evaluated independently.
        let oracle: u128 = (0..=5u32).map(|j| binom(22, j as u128) * 3u128.pow(j)).sum();
        assert_eq!(oracle, 7_035_403);
        assert_eq!(basis_dimension(&[2; 22], 5).unwrap(), oracle);
    }

    #[test]
    fn build_small_bases() {
        let b = Basis::from_multiplicities(&[2, 2], 2).unwrap();
        assert_eq!(b.dim(), 16);
        let b = Basis::from_multiplicities(&[2, 2, 2], 1).unwrap();
        assert_eq!(b.dim(), 10);
        assert_eq!(b.segment(0), 0..1);
        assert_eq!(b.segment(1), 1..10);
        assert!(Basis::from_multiplicities(&[2, 2], 3).is_err());
    }

    #[test]
    fn build_matches_exhaustive_enumeration() {
        let mults = [2u32, 3, 2];
        for k in 0..=3 {
            let b = Basis::from_multiplicities(&mults, k).unwrap();
            let mut oracle = Vec::new();
            for a in 0..4u8 {
                for c in 0..9u8 {
                    for d in 0..4u8 {
                        let s = BasisState::new(vec![a, c, d]);
                        if s.order() <= k {
                            oracle.push(s);
                        }
                    }
                }
            }
            oracle.sort_by(|x, y| (x.order(), x.local_ops()).cmp(&(y.order(), y.local_ops())));
            assert_eq!(b.states(), &oracle[..]);
            for (i, s) in b.states().iter().enumerate() {
                assert_eq!(b.index_of(s.local_ops()), Some(i));
                assert!(b.segment(s.order()).contains(&i));
            }
        }
    }

    #[test]
    fn full_basis_spans_liouville_space() {
        let b = Basis::from_multiplicities(&[2, 3, 4], 3).unwrap();
        assert_eq!(b.dim(), 4 * 9 * 16);
    }

    #[test]
    fn deterministic_ordering() {
        let a = Basis::from_multiplicities(&[3, 2, 2, 3], 2).unwrap();
        let b = Basis::from_multiplicities(&[3, 2, 2, 3], 2).unwrap();
        assert_eq!(a.states(), b.states());
        assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn orders() {
        assert_eq!(correlation_order(&BasisState::new(vec![0, 0, 0])), 0);
        assert_eq!(correlation_order(&BasisState::new(vec![0, 2, 0])), 1);
        // L_Z S_+ I_- pattern
        assert_eq!(correlation_order(&BasisState::new(vec![2, 1, 3])), 3);
    }

    #[test]
    fn projector_basics() {
        let b = Basis::from_multiplicities(&[2, 2, 2], 3).unwrap();
        let mut v = StateVector::<f64>::zeros(b.dim());
        v.coeffs_mut()[b.segment(1).start] = Complex64::new(1.0, 0.0);
        assert_eq!(project_order(&v, 2, &b).unwrap().norm(), 0.0);
        assert!(project_order(&v, 4, &b).is_err());

        let mut u = StateVector::<f64>::zeros(b.dim());
        u.coeffs_mut()[b.segment(3).start + 1] = Complex64::new(1.0, 0.0);
        assert_eq!(order_norms(&u, &b).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn projectors_idempotent_complete_and_pythagorean(
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 64)
        ) {
            let b = Basis::from_multiplicities(&[2, 2, 2], 3).unwrap();
            let v = StateVector::from_coeffs(raw.iter().map(|&(r, i)| Complex64::new(r, i)).collect());
            let mut sum = StateVector::<f64>::zeros(b.dim());
            for k in 0..=3 {
                let p = project_order(&v, k, &b).unwrap();
                prop_assert_eq!(&project_order(&p, k, &b).unwrap(), &p);
                sum = sum.add(&p);
            }
            prop_assert_eq!(&sum, &v);
            let norms = order_norms(&v, &b).unwrap();
            let sq: f64 = norms.iter().map(|n| n * n).sum();
            prop_assert!((sq - v.norm().powi(2)).abs() < 1e-12);
        }
    }
}
