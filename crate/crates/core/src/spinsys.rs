//! Spin-system description, its JSON document form, and the standard
//! equilibrium and initial states.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{Basis, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Real};
use crate::superop::local::{spin_matrices, LocalOperatorSet};

/// Largest supported multiplicity; local operator indices are stored as `u8`.
pub const MAX_MULTIPLICITY: u32 = 16;

/// A linear frequency as read from input files (Hz).
///
/// The Hz → rad/s factor is applied in exactly one place, [`Frequency::angular`].
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    pub fn from_hz(hz: f64) -> Self {
        Frequency(hz)
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    /// Angular frequency in rad/s.
    pub fn angular(self) -> f64 {
        std::f64::consts::TAU * self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spin {
    pub label: String,
    /// 2s + 1.
    pub multiplicity: u32,
    /// Rotating-frame Larmor offset.
    pub offset: Frequency,
    /// Transverse drive amplitude.
    pub drive: Frequency,
    pub drive_phase_rad: f64,
    /// Per-spin relaxation rate; falls back to the model's base rate.
    pub relaxation: Option<Frequency>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    /// Isotropic scalar coupling, full `I·S` form.
    pub isotropic: Frequency,
    /// Coefficient of the secular `2 IzSz` term.
    pub secular_zz: Frequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationLaw {
    /// Rate proportional to the number of correlated spins.
    Linear,
    /// Rate proportional to the square root of the correlation order.
    Sqrt,
    /// Same rate for every order.
    Constant,
    None,
}

impl FromStr for RelaxationLaw {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "linear" => Ok(Self::Linear),
            "sqrt" => Ok(Self::Sqrt),
            "constant" => Ok(Self::Constant),
            "none" => Ok(Self::None),
            other => Err(format!(
                "unknown relaxation law `{other}` (expected linear, sqrt, constant or none)"
            )),
        }
    }
}

impl fmt::Display for RelaxationLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Sqrt => "sqrt",
            Self::Constant => "constant",
            Self::None => "none",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    None,
    UnitZ,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelaxationModel {
    pub law: RelaxationLaw,
    pub base_rate: Frequency,
    /// Equilibrium replenishment rate of the scalar norm model.
    pub equilibrium_drive: Frequency,
    pub equilibrium: EquilibriumKind,
}

impl RelaxationModel {
    pub fn none() -> Self {
        Self {
            law: RelaxationLaw::None,
            base_rate: Frequency::ZERO,
            equilibrium_drive: Frequency::ZERO,
            equilibrium: EquilibriumKind::None,
        }
    }
}

/// Validated spin system. Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    spins: Vec<Spin>,
    couplings: Vec<Coupling>,
    relaxation: RelaxationModel,
}

impl SpinSystem {
    /// Validates and normalizes (coupling indices become `i < j`).
    pub fn new(
        spins: Vec<Spin>,
        mut couplings: Vec<Coupling>,
        relaxation: RelaxationModel,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidSystem(msg));
        if spins.is_empty() {
            return bad("`spins` must contain at least one spin".into());
        }
        for (n, s) in spins.iter().enumerate() {
            if s.multiplicity < 2 {
                return bad(format!(
                    "spins[{n}].multiplicity must be >= 2, got {}",
                    s.multiplicity
                ));
            }
            if s.multiplicity > MAX_MULTIPLICITY {
                return bad(format!(
                    "spins[{n}].multiplicity must be <= {MAX_MULTIPLICITY}, got {}",
                    s.multiplicity
                ));
            }
            if !s.offset.hz().is_finite() {
                return bad(format!("spins[{n}].offset_hz must be finite"));
            }
            if !(s.drive.hz().is_finite() && s.drive.hz() >= 0.0) {
                return bad(format!("spins[{n}].drive_hz must be finite and >= 0"));
            }
            if !s.drive_phase_rad.is_finite() {
                return bad(format!("spins[{n}].drive_phase_rad must be finite"));
            }
            if let Some(r) = s.relaxation {
                if !(r.hz().is_finite() && r.hz() >= 0.0) {
                    return bad(format!("spins[{n}].relaxation_hz must be finite and >= 0"));
                }
            }
        }
        let nspins = spins.len();
        let mut seen = std::collections::HashSet::new();
        for (n, c) in couplings.iter_mut().enumerate() {
            if c.i == c.j {
                return bad(format!("couplings[{n}]: self-coupling of spin {}", c.i));
            }
            if c.i >= nspins || c.j >= nspins {
                return bad(format!(
                    "couplings[{n}]: spin index out of range ({}, {}) for {nspins} spins",
                    c.i, c.j
                ));
            }
            if c.i > c.j {
                std::mem::swap(&mut c.i, &mut c.j);
            }
            if !(c.isotropic.hz().is_finite() && c.secular_zz.hz().is_finite()) {
                return bad(format!("couplings[{n}]: j_hz and d_hz must be finite"));
            }
            if !seen.insert((c.i, c.j)) {
                return bad(format!(
                    "couplings[{n}]: duplicate coupling for pair ({}, {})",
                    c.i, c.j
                ));
            }
        }
        let r = &relaxation;
        for (name, v) in [
            ("relaxation.base_rate_hz", r.base_rate.hz()),
            ("relaxation.equilibrium_drive_hz", r.equilibrium_drive.hz()),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0"));
            }
        }
        if r.law == RelaxationLaw::None
            && (r.base_rate.hz() != 0.0 || r.equilibrium_drive.hz() != 0.0)
        {
            return bad(
                "relaxation.law = none requires base_rate_hz = 0 and equilibrium_drive_hz = 0"
                    .into(),
            );
        }
        Ok(Self {
            spins,
            couplings,
            relaxation,
        })
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn relaxation(&self) -> &RelaxationModel {
        &self.relaxation
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn multiplicities(&self) -> Vec<u32> {
        self.spins.iter().map(|s| s.multiplicity).collect()
    }

    /// Relaxation rate of spin `n` (Hz), honouring per-spin overrides.
    pub fn spin_rate(&self, n: usize) -> Frequency {
        self.spins[n].relaxation.unwrap_or(self.relaxation.base_rate)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SystemDoc::from(self)).expect("system serializes")
    }
}

impl FromStr for SpinSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_system(s)
    }
}

// On-disk document form. Frequencies are Hz.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    spins: Vec<SpinDoc>,
    #[serde(default)]
    couplings: Vec<CouplingDoc>,
    #[serde(default = "RelaxationDoc::none")]
    relaxation: RelaxationDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpinDoc {
    label: String,
    multiplicity: u32,
    #[serde(default)]
    offset_hz: f64,
    #[serde(default)]
    drive_hz: f64,
    #[serde(default)]
    drive_phase_rad: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relaxation_hz: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingDoc {
    i: usize,
    j: usize,
    #[serde(default)]
    j_hz: f64,
    #[serde(default)]
    d_hz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelaxationDoc {
    law: RelaxationLaw,
    #[serde(default)]
    base_rate_hz: f64,
    #[serde(default)]
    equilibrium_drive_hz: f64,
    #[serde(default = "default_equilibrium")]
    equilibrium: EquilibriumKind,
}

fn default_equilibrium() -> EquilibriumKind {
    EquilibriumKind::None
}

impl RelaxationDoc {
    fn none() -> Self {
        Self {
            law: RelaxationLaw::None,
            base_rate_hz: 0.0,
            equilibrium_drive_hz: 0.0,
            equilibrium: EquilibriumKind::None,
        }
    }
}

impl From<&SpinSystem> for SystemDoc {
    fn from(s: &SpinSystem) -> Self {
        SystemDoc {
            spins: s
                .spins
                .iter()
                .map(|p| SpinDoc {
                    label: p.label.clone(),
                    multiplicity: p.multiplicity,
                    offset_hz: p.offset.hz(),
                    drive_hz: p.drive.hz(),
                    drive_phase_rad: p.drive_phase_rad,
                    relaxation_hz: p.relaxation.map(Frequency::hz),
                })
                .collect(),
            couplings: s
                .couplings
                .iter()
                .map(|c| CouplingDoc {
                    i: c.i,
                    j: c.j,
                    j_hz: c.isotropic.hz(),
                    d_hz: c.secular_zz.hz(),
                })
                .collect(),
            relaxation: RelaxationDoc {
                law: s.relaxation.law,
                base_rate_hz: s.relaxation.base_rate.hz(),
                equilibrium_drive_hz: s.relaxation.equilibrium_drive.hz(),
                equilibrium: s.relaxation.equilibrium,
            },
        }
    }
}

/// Parses and validates a JSON spin-system document. Unknown keys are rejected.
pub fn parse_system(text: &str) -> Result<SpinSystem> {
    let doc: SystemDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let spins = doc
        .spins
        .into_iter()
        .map(|s| Spin {
            label: s.label,
            multiplicity: s.multiplicity,
            offset: Frequency::from_hz(s.offset_hz),
            drive: Frequency::from_hz(s.drive_hz),
            drive_phase_rad: s.drive_phase_rad,
            relaxation: s.relaxation_hz.map(Frequency::from_hz),
        })
        .collect();
    let couplings = doc
        .couplings
        .into_iter()
        .map(|c| Coupling {
            i: c.i,
            j: c.j,
            isotropic: Frequency::from_hz(c.j_hz),
            secular_zz: Frequency::from_hz(c.d_hz),
        })
        .collect();
    let r = doc.relaxation;
    SpinSystem::new(
        spins,
        couplings,
        RelaxationModel {
            law: r.law,
            base_rate: Frequency::from_hz(r.base_rate_hz),
            equilibrium_drive: Frequency::from_hz(r.equilibrium_drive_hz),
            equilibrium: r.equilibrium,
        },
    )
}

/// Which state a simulation starts from (or is detected with).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialSpec {
    /// Σ Sx over all spins.
    AllX,
    /// Σ Sz over all spins.
    AllZ,
    /// Two-spin singlet order between spins `i` and `j` (both spin-1/2).
    Singlet(usize, usize),
}

impl InitialSpec {
    /// Lowest restriction order that can hold the state.
    pub fn min_order(self) -> usize {
        match self {
            Self::AllX | Self::AllZ => 1,
            Self::Singlet(..) => 2,
        }
    }
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all_x" => return Ok(Self::AllX),
            "all_z" => return Ok(Self::AllZ),
            _ => {}
        }
        let pair = s
            .strip_prefix("singlet:")
            .or_else(|| s.strip_prefix("singlet(").and_then(|r| r.strip_suffix(')')))
            .ok_or_else(|| {
                format!("unknown state `{s}` (expected all_x, all_z or singlet:I,J)")
            })?;
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| format!("singlet needs two spin indices, got `{pair}`"))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|e| format!("bad spin index `{x}`: {e}"))
        };
        Ok(Self::Singlet(parse(a)?, parse(b)?))
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AllX => f.write_str("all_x"),
            Self::AllZ => f.write_str("all_z"),
            Self::Singlet(i, j) => write!(f, "singlet:{i},{j}"),
        }
    }
}

fn check_basis(system: &SpinSystem, basis: &Basis) -> Result<()> {
    if !basis.matches(system) {
        return Err(Error::Mismatch(format!(
            "basis built for multiplicities {:?}, system has {:?}",
            basis.multiplicities(),
            system.multiplicities()
        )));
    }
    Ok(())
}

/// Σ over spins of a single-spin operator (given per multiplicity), in order-1 states.
fn sum_single_spin<T: Real>(
    system: &SpinSystem,
    basis: &Basis,
    op: impl Fn(u32) -> crate::linalg::DenseMatrix<T>,
) -> Result<StateVector<T>> {
    if basis.max_order() < 1 {
        return Err(Error::InitialState(
            "single-spin states need a basis with max order >= 1".into(),
        ));
    }
    let mut v = StateVector::zeros(basis.dim());
    let mut local = vec![0u8; system.len()];
    for (n, spin) in system.spins().iter().enumerate() {
        let set = LocalOperatorSet::<T>::new(spin.multiplicity);
        let a = op(spin.multiplicity);
        for c in 1..set.len() {
            let coeff = set.coefficient_of(c, &a);
            if coeff == czero() {
                continue;
            }
            local[n] = c as u8;
            let idx = basis.index_of(&local).expect("order-1 state present");
            v.coeffs_mut()[idx] += coeff;
        }
        local[n] = 0;
    }
    v.normalize();
    Ok(v)
}

/// High-temperature equilibrium: equal-weight Σ Sz, scaled to unit norm.
/// Zero vector when the relaxation model has no equilibrium.
pub fn equilibrium_state<T: Real>(system: &SpinSystem, basis: &Basis) -> Result<StateVector<T>> {
    check_basis(system, basis)?;
    if system.relaxation().equilibrium == EquilibriumKind::None {
        return Ok(StateVector::zeros(basis.dim()));
    }
    sum_single_spin(system, basis, |m| spin_matrices::<T>(m).z)
}

/// Builds a unit-norm starting state.
pub fn initial_state<T: Real>(
    system: &SpinSystem,
    basis: &Basis,
    spec: InitialSpec,
) -> Result<StateVector<T>> {
    check_basis(system, basis)?;
    if basis.max_order() < spec.min_order() {
        return Err(Error::InitialState(format!(
            "{spec} needs max order >= {}, basis has {}",
            spec.min_order(),
            basis.max_order()
        )));
    }
    match spec {
        InitialSpec::AllX => sum_single_spin(system, basis, |m| spin_matrices::<T>(m).x),
        InitialSpec::AllZ => sum_single_spin(system, basis, |m| spin_matrices::<T>(m).z),
        InitialSpec::Singlet(i, j) => singlet_state(system, basis, i, j),
    }
}

/// Traceless part of the singlet projector `¼ − Si·Sj`, i.e. `−Si·Sj`, normalized.
fn singlet_state<T: Real>(
    system: &SpinSystem,
    basis: &Basis,
    i: usize,
    j: usize,
) -> Result<StateVector<T>> {
    let n = system.len();
    if i == j || i >= n || j >= n {
        return Err(Error::InitialState(format!(
            "singlet needs two distinct spins below {n}, got ({i}, {j})"
        )));
    }
    for k in [i, j] {
        if system.spins()[k].multiplicity != 2 {
            return Err(Error::InitialState(format!(
                "singlet requires spin-1/2 partners; spin {k} has multiplicity {}",
                system.spins()[k].multiplicity
            )));
        }
    }
    let set = LocalOperatorSet::<T>::new(2);
    let s = spin_matrices::<T>(2);
    let mut v = StateVector::zeros(basis.dim());
    let mut local = vec![0u8; n];
    for a in 1..4 {
        for b in 1..4 {
            let coeff: Cx<T> = [&s.x, &s.y, &s.z]
                .iter()
                .map(|op| set.coefficient_of(a, op) * set.coefficient_of(b, op))
                .fold(czero(), |acc, z| acc + z);
            if coeff == czero() {
                continue;
            }
            local[i] = a as u8;
            local[j] = b as u8;
            let idx = basis.index_of(&local).expect("order-2 state present");
            v.coeffs_mut()[idx] -= coeff;
        }
    }
    v.normalize();
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{order_norms, Basis};

    const TWO_SPINS: &str = r#"{
        "spins": [
            {"label": "H1", "multiplicity": 2, "offset_hz": 10.0, "drive_hz": 0.0, "drive_phase_rad": 0.0},
            {"label": "H2", "multiplicity": 2, "offset_hz": -4.0, "drive_hz": 0.0, "drive_phase_rad": 0.0}
        ],
        "couplings": [{"i": 0, "j": 1, "j_hz": 5.0, "d_hz": 0.0}],
        "relaxation": {"law": "linear", "base_rate_hz": 1.0, "equilibrium_drive_hz": 1.0, "equilibrium": "unit_z"}
    }"#;

    fn uniform(n: usize) -> SpinSystem {
        let spins = (0..n)
            .map(|k| Spin {
                label: format!("H{k}"),
                multiplicity: 2,
                offset: Frequency::ZERO,
                drive: Frequency::ZERO,
                drive_phase_rad: 0.0,
                relaxation: None,
            })
            .collect();
        SpinSystem::new(
            spins,
            vec![],
            RelaxationModel {
                law: RelaxationLaw::Linear,
                base_rate: Frequency::from_hz(1.0),
                equilibrium_drive: Frequency::from_hz(1.0),
                equilibrium: EquilibriumKind::UnitZ,
            },
        )
        .unwrap()
    }

    #[test]
    fn minimal_document() {
        let s = parse_system(r#"{"spins": [{"label": "e", "multiplicity": 2}], "couplings": []}"#)
            .unwrap();
        assert_eq!(s.len(), 1);
        assert!(s.couplings().is_empty());
    }

    #[test]
    fn coupling_converted_to_angular() {
        let s = parse_system(TWO_SPINS).unwrap();
        assert_eq!(s.couplings().len(), 1);
        let w = s.couplings()[0].isotropic.angular();
        assert!((w - 2.0 * std::f64::consts::PI * 5.0).abs() < 1e-12);
    }

    #[test]
    fn self_coupling_rejected() {
        let err = parse_system(
            r#"{"spins": [{"label": "a", "multiplicity": 2}, {"label": "b", "multiplicity": 2}],
                "couplings": [{"i": 1, "j": 1, "j_hz": 3.0, "d_hz": 0.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("self-coupling"), "{err}");
    }

    #[test]
    fn duplicate_pair_rejected_in_either_orientation() {
        let err = parse_system(
            r#"{"spins": [{"label": "a", "multiplicity": 2}, {"label": "b", "multiplicity": 2}],
                "couplings": [{"i": 0, "j": 1, "j_hz": 3.0}, {"i": 1, "j": 0, "d_hz": 1.0}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn low_multiplicity_rejected() {
        let err = parse_system(r#"{"spins": [{"label": "a", "multiplicity": 1}]}"#).unwrap_err();
        assert!(err.to_string().contains("multiplicity"), "{err}");
    }

    #[test]
    fn unknown_key_names_field() {
        let err = parse_system(r#"{"spins": [{"label": "a", "multiplicity": 2, "gamma": 1.0}]}"#)
            .unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        let err = parse_system(r#"{"spins": [{"multiplicity": 2}]}"#).unwrap_err();
        assert!(err.to_string().contains("label"), "{err}");
    }

    #[test]
    fn law_none_with_rate_rejected() {
        let err = parse_system(
            r#"{"spins": [{"label": "a", "multiplicity": 2}],
                "relaxation": {"law": "none", "base_rate_hz": 1.0}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("law = none"), "{err}");
    }

    #[test]
    fn serialize_round_trip() {
        let s = parse_system(TWO_SPINS).unwrap();
        assert_eq!(parse_system(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn equilibrium_single_spin() {
        let sys = uniform(1);
        let basis = Basis::build(&sys, 1).unwrap();
        let eq: StateVector<f64> = equilibrium_state(&sys, &basis).unwrap();
        let nz: Vec<_> = eq.coeffs().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert!((nz[0].re - 1.0).abs() < 1e-15 && nz[0].im == 0.0);
    }

    #[test]
    fn equilibrium_three_spins_equal_weights() {
        let sys = uniform(3);
        let basis = Basis::build(&sys, 2).unwrap();
        let eq: StateVector<f64> = equilibrium_state(&sys, &basis).unwrap();
        let nz: Vec<_> = eq.coeffs().iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 3);
        for z in nz {
            assert!((z.re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        let norms = order_norms(&eq, &basis).unwrap();
        assert_eq!(norms[0], 0.0);
        assert_eq!(norms[2], 0.0);
        assert!((norms[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_none_is_zero() {
        let sys = SpinSystem::new(uniform(2).spins().to_vec(), vec![], RelaxationModel::none())
            .unwrap();
        let basis = Basis::build(&sys, 2).unwrap();
        let eq: StateVector<f64> = equilibrium_state(&sys, &basis).unwrap();
        assert_eq!(eq.norm(), 0.0);
    }

    #[test]
    fn all_x_single_spin_is_one_state_direction() {
        let sys = uniform(1);
        let basis = Basis::build(&sys, 1).unwrap();
        let x: StateVector<f64> = initial_state(&sys, &basis, InitialSpec::AllX).unwrap();
        assert!((x.norm() - 1.0).abs() < 1e-15);
        // Sx spreads over the T(1,+1) and T(1,-1) members.
        let nz = x.coeffs().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nz, 2);
        let z: StateVector<f64> = initial_state(&sys, &basis, InitialSpec::AllZ).unwrap();
        assert!(x.dot(&z).norm() < 1e-15);
    }

    #[test]
    fn all_z_matches_equilibrium() {
        let sys = uniform(3);
        let basis = Basis::build(&sys, 3).unwrap();
        let z: StateVector<f64> = initial_state(&sys, &basis, InitialSpec::AllZ).unwrap();
        let eq: StateVector<f64> = equilibrium_state(&sys, &basis).unwrap();
        assert_eq!(z, eq);
    }

    #[test]
    fn singlet_is_pure_order_two() {
        let sys = uniform(3);
        let basis = Basis::build(&sys, 2).unwrap();
        let s: StateVector<f64> = initial_state(&sys, &basis, InitialSpec::Singlet(0, 2)).unwrap();
        assert!((s.norm() - 1.0).abs() < 1e-14);
        for (k, z) in s.coeffs().iter().enumerate() {
            if z.norm() > 0.0 {
                assert_eq!(basis.states()[k].order(), 2);
            }
        }
    }

    #[test]
    fn singlet_errors() {
        let sys = uniform(2);
        let b1 = Basis::build(&sys, 1).unwrap();
        assert!(initial_state::<f64>(&sys, &b1, InitialSpec::Singlet(0, 1)).is_err());
        let b2 = Basis::build(&sys, 2).unwrap();
        assert!(initial_state::<f64>(&sys, &b2, InitialSpec::Singlet(0, 0)).is_err());
        let mut spins = sys.spins().to_vec();
        spins[1].multiplicity = 3;
        let sys3 = SpinSystem::new(spins, vec![], RelaxationModel::none()).unwrap();
        let b3 = Basis::build(&sys3, 2).unwrap();
        assert!(initial_state::<f64>(&sys3, &b3, InitialSpec::Singlet(0, 1)).is_err());
    }

    #[test]
    fn basis_mismatch_detected() {
        let basis = Basis::build(&uniform(2), 1).unwrap();
        assert!(equilibrium_state::<f64>(&uniform(3), &basis).is_err());
    }

    #[test]
    fn initial_spec_parsing() {
        assert_eq!("all_x".parse::<InitialSpec>().unwrap(), InitialSpec::AllX);
        assert_eq!("singlet:0,3".parse::<InitialSpec>().unwrap(), InitialSpec::Singlet(0, 3));
        assert_eq!("singlet(1,2)".parse::<InitialSpec>().unwrap(), InitialSpec::Singlet(1, 2));
        assert!("bogus".parse::<InitialSpec>().is_err());
    }
}
