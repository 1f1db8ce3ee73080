//! Truncated discrete mode basis and the state/operator algebra built on it.
//!
//! A [`ModeSpace`] enumerates every (path, ℓ, polarization) mode inside a
//! finite OAM window, plus one absorbing sink pseudo-mode that collects
//! amplitude an element would push outside the window. Keeping the sink in
//! the basis makes probability accounting exact: for every built-in element
//! and every basis input, the squared output amplitudes (sink included) sum
//! to one.
//!
//! Basis ordering is deterministic: path-major, then ℓ ascending, then H
//! before V when polarization is enabled, sink last.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2, s};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default OAM window used when none is specified. Wide enough for the
/// outermost built-in cycle family plus one hologram shift.
pub const DEFAULT_L_MIN: i32 = -8;
/// See [`DEFAULT_L_MIN`].
pub const DEFAULT_L_MAX: i32 = 8;

/// Linear polarization label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::H => write!(f, "H"),
            Polarization::V => write!(f, "V"),
        }
    }
}

/// One basis mode: a path token, an integer OAM value, and optionally a
/// polarization (present exactly when the owning space enables it).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub path: String,
    pub ell: i32,
    pub pol: Option<Polarization>,
}

impl ModeLabel {
    pub fn new(path: impl Into<String>, ell: i32) -> Self {
        ModeLabel { path: path.into(), ell, pol: None }
    }

    pub fn with_pol(path: impl Into<String>, ell: i32, pol: Polarization) -> Self {
        ModeLabel { path: path.into(), ell, pol: Some(pol) }
    }
}

/// Labels print as `path:ell` or `path:ell:H`, the same syntax the CLI accepts.
impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pol {
            Some(p) => write!(f, "{}:{}:{}", self.path, self.ell, p),
            None => write!(f, "{}:{}", self.path, self.ell),
        }
    }
}

impl FromStr for ModeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadLabel(s.to_string());
        let mut parts = s.split(':');
        let path = parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?;
        let ell: i32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let pol = match parts.next() {
            None => None,
            Some("H") | Some("h") => Some(Polarization::H),
            Some("V") | Some("v") => Some(Polarization::V),
            Some(_) => return Err(bad()),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(ModeLabel { path: path.to_string(), ell, pol })
    }
}

/// Truncated basis of (path, ℓ, polarization) modes plus a loss sink.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpace {
    l_min: i32,
    l_max: i32,
    paths: Vec<String>,
    pol_enabled: bool,
}

impl ModeSpace {
    /// Builds a space over the given window and paths. Paths must be
    /// non-empty and unique; the window must satisfy `l_min < l_max`.
    pub fn new<S: AsRef<str>>(l_min: i32, l_max: i32, paths: &[S], pol_enabled: bool) -> Result<Self> {
        if l_min >= l_max {
            return Err(Error::InvalidWindow { l_min, l_max });
        }
        if paths.is_empty() {
            return Err(Error::EmptyPaths);
        }
        let paths: Vec<String> = paths.iter().map(|p| p.as_ref().to_string()).collect();
        for (i, p) in paths.iter().enumerate() {
            if paths[..i].contains(p) {
                return Err(Error::DuplicatePath(p.clone()));
            }
        }
        Ok(ModeSpace { l_min, l_max, paths, pol_enabled })
    }

    /// Space over the default [-8, 8] window.
    pub fn default_window<S: AsRef<str>>(paths: &[S], pol_enabled: bool) -> Result<Self> {
        ModeSpace::new(DEFAULT_L_MIN, DEFAULT_L_MAX, paths, pol_enabled)
    }

    pub fn l_min(&self) -> i32 {
        self.l_min
    }

    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn pol_enabled(&self) -> bool {
        self.pol_enabled
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    fn ell_count(&self) -> usize {
        (self.l_max - self.l_min + 1) as usize
    }

    fn pol_count(&self) -> usize {
        if self.pol_enabled { 2 } else { 1 }
    }

    /// Total basis size including the sink.
    pub fn dimension(&self) -> usize {
        self.paths.len() * self.ell_count() * self.pol_count() + 1
    }

    /// Index of the loss-sink pseudo-mode (always the last basis slot).
    pub fn sink_index(&self) -> usize {
        self.dimension() - 1
    }

    pub fn path_index(&self, path: &str) -> Result<usize> {
        self.paths
            .iter()
            .position(|p| p == path)
            .ok_or_else(|| Error::UnknownPath(path.to_string()))
    }

    pub fn contains_ell(&self, ell: i32) -> bool {
        (self.l_min..=self.l_max).contains(&ell)
    }

    pub(crate) fn index_parts(&self, path_idx: usize, ell: i32, pol_idx: usize) -> usize {
        let ell_off = (ell - self.l_min) as usize;
        (path_idx * self.ell_count() + ell_off) * self.pol_count() + pol_idx
    }

    /// Basis index of a label, validating path, window and polarization.
    pub fn index_of(&self, label: &ModeLabel) -> Result<usize> {
        let path_idx = self.path_index(&label.path)?;
        if !self.contains_ell(label.ell) {
            return Err(Error::OutOfWindow { ell: label.ell, l_min: self.l_min, l_max: self.l_max });
        }
        let pol_idx = match (self.pol_enabled, label.pol) {
            (false, None) => 0,
            (true, Some(Polarization::H)) => 0,
            (true, Some(Polarization::V)) => 1,
            (false, Some(_)) => return Err(Error::UnexpectedPolarization),
            (true, None) => return Err(Error::MissingPolarization),
        };
        Ok(self.index_parts(path_idx, label.ell, pol_idx))
    }

    /// Label of a basis slot; `None` for the sink.
    pub fn label_at(&self, index: usize) -> Option<ModeLabel> {
        if index >= self.sink_index() {
            return None;
        }
        let pc = self.pol_count();
        let ec = self.ell_count();
        let pol_idx = index % pc;
        let ell_off = (index / pc) % ec;
        let path_idx = index / (pc * ec);
        Some(ModeLabel {
            path: self.paths[path_idx].clone(),
            ell: self.l_min + ell_off as i32,
            pol: if self.pol_enabled {
                Some(if pol_idx == 0 { Polarization::H } else { Polarization::V })
            } else {
                None
            },
        })
    }

    /// Iterates every non-sink label in basis order.
    pub fn labels(&self) -> impl Iterator<Item = ModeLabel> + '_ {
        (0..self.sink_index()).map(|i| self.label_at(i).expect("non-sink index"))
    }

    pub fn contains(&self, label: &ModeLabel) -> bool {
        self.index_of(label).is_ok()
    }
}

/// Builds a mode space; see [`ModeSpace::new`].
pub fn make_mode_space<S: AsRef<str>>(
    l_min: i32,
    l_max: i32,
    paths: &[S],
    pol_enabled: bool,
) -> Result<ModeSpace> {
    ModeSpace::new(l_min, l_max, paths, pol_enabled)
}

/// Probabilities per mode, with the sink reported separately.
#[derive(Debug, Clone, Serialize)]
pub struct ModeProbabilities {
    pub modes: Vec<(ModeLabel, f64)>,
    pub sink: f64,
}

impl ModeProbabilities {
    /// Sum over all modes including the sink.
    pub fn total(&self) -> f64 {
        self.modes.iter().map(|(_, p)| p).sum::<f64>() + self.sink
    }

    /// Entries with probability above `threshold`, in basis order.
    pub fn nonzero(&self, threshold: f64) -> Vec<(ModeLabel, f64)> {
        self.modes.iter().filter(|(_, p)| *p > threshold).cloned().collect()
    }
}

/// Complex amplitudes over a mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    space: ModeSpace,
    amps: Array1<Complex64>,
}

impl StateVector {
    /// All-zero state (not normalized).
    pub fn zero(space: &ModeSpace) -> Self {
        StateVector { space: space.clone(), amps: Array1::zeros(space.dimension()) }
    }

    /// Unit amplitude on one labeled mode, zero elsewhere.
    pub fn basis(space: &ModeSpace, label: &ModeLabel) -> Result<Self> {
        let idx = space.index_of(label)?;
        let mut s = StateVector::zero(space);
        s.amps[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(space: &ModeSpace, amps: Array1<Complex64>) -> Result<Self> {
        if amps.len() != space.dimension() {
            return Err(Error::DimensionMismatch {
                rows: amps.len(),
                cols: 1,
                dim: space.dimension(),
            });
        }
        Ok(StateVector { space: space.clone(), amps })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, label: &ModeLabel) -> Result<Complex64> {
        Ok(self.amps[self.space.index_of(label)?])
    }

    pub fn sink_probability(&self) -> f64 {
        self.amps[self.space.sink_index()].norm_sqr()
    }

    /// Squared norm over every slot including the sink.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// |amplitude|² per non-sink mode plus the sink population.
    pub fn mode_probabilities(&self) -> ModeProbabilities {
        let modes = self
            .space
            .labels()
            .enumerate()
            .map(|(i, l)| (l, self.amps[i].norm_sqr()))
            .collect();
        ModeProbabilities { modes, sink: self.sink_probability() }
    }
}

/// Verdict of a unitarity check on the non-sink subspace.
#[derive(Debug, Clone, Serialize)]
pub struct UnitarityReport {
    pub unitary: bool,
    /// max |U†U - I| over the non-sink block.
    pub max_deviation: f64,
    /// Largest per-column probability routed to the sink.
    pub leaked_probability: f64,
}

/// Dense complex matrix over a mode space. Element constructors keep columns
/// normalized by routing out-of-window amplitude to the sink row, so the
/// operator is unitary exactly when nothing leaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: ModeSpace,
    matrix: Array2<Complex64>,
}

impl Operator {
    pub fn identity(space: &ModeSpace) -> Self {
        Operator { space: space.clone(), matrix: Array2::eye(space.dimension()) }
    }

    pub fn from_matrix(space: &ModeSpace, matrix: Array2<Complex64>) -> Result<Self> {
        let dim = space.dimension();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                dim,
            });
        }
        Ok(Operator { space: space.clone(), matrix })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.matrix
    }

    pub fn entry(&self, output: &ModeLabel, input: &ModeLabel) -> Result<Complex64> {
        Ok(self.matrix[(self.space.index_of(output)?, self.space.index_of(input)?)])
    }

    /// Matrix-vector product.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.space != state.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(StateVector { space: self.space.clone(), amps: self.matrix.dot(&state.amps) })
    }

    /// Matrix product `second · first`: `first` acts on the beam first.
    pub fn compose(second: &Operator, first: &Operator) -> Result<Operator> {
        if second.space != first.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Operator {
            space: second.space.clone(),
            matrix: second.matrix.dot(&first.matrix),
        })
    }

    /// `self` first, then `next`.
    pub fn then(&self, next: &Operator) -> Result<Operator> {
        Operator::compose(next, self)
    }

    fn non_sink_block(&self) -> ArrayView2<'_, Complex64> {
        let d = self.space.sink_index();
        self.matrix.slice(s![..d, ..d])
    }

    /// Checks `U†U = I` on the non-sink block and reports sink leakage
    /// (largest |sink row entry|² over non-sink columns) separately.
    pub fn is_unitary(&self, tol: f64) -> Result<UnitarityReport> {
        if tol <= 0.0 {
            return Err(Error::NonPositiveTolerance);
        }
        let block = self.non_sink_block();
        let d = block.nrows();
        let mut max_dev = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let mut g = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    g += block[(k, i)].conj() * block[(k, j)];
                }
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                max_dev = max_dev.max((g - target).norm());
            }
        }
        let sink = self.space.sink_index();
        let leak = (0..d).map(|c| self.matrix[(sink, c)].norm_sqr()).fold(0.0f64, f64::max);
        Ok(UnitarityReport { unitary: max_dev <= tol, max_deviation: max_dev, leaked_probability: leak })
    }

    /// Largest elementwise |a - b| between two operators.
    pub fn max_abs_diff(&self, other: &Operator) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Largest elementwise ||a| - |b||; the default, phase-insensitive way
    /// to compare operators.
    pub fn max_modulus_diff(&self, other: &Operator) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max))
    }
}

/// See [`StateVector::basis`].
pub fn basis_state(space: &ModeSpace, label: &ModeLabel) -> Result<StateVector> {
    StateVector::basis(space, label)
}

/// See [`Operator::apply`].
pub fn apply(op: &Operator, state: &StateVector) -> Result<StateVector> {
    op.apply(state)
}

/// See [`Operator::compose`].
pub fn compose(second: &Operator, first: &Operator) -> Result<Operator> {
    Operator::compose(second, first)
}

/// See [`StateVector::mode_probabilities`].
pub fn mode_probabilities(state: &StateVector) -> ModeProbabilities {
    state.mode_probabilities()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn label(path: &str, ell: i32) -> ModeLabel {
        ModeLabel::new(path, ell)
    }

    #[test]
    fn dimension_examples() {
        let s = ModeSpace::new(-4, 4, &["a"], false).unwrap();
        assert_eq!(s.dimension(), 10);
        let s = ModeSpace::new(-4, 4, &["a", "b"], false).unwrap();
        assert_eq!(s.dimension(), 19);
        let s = ModeSpace::new(-1, 1, &["a", "b"], true).unwrap();
        assert_eq!(s.dimension(), 13);
    }

    #[test]
    fn constructor_errors() {
        assert_eq!(ModeSpace::new(2, 2, &["a"], false), Err(Error::InvalidWindow { l_min: 2, l_max: 2 }));
        assert_eq!(ModeSpace::new(3, -3, &["a"], false), Err(Error::InvalidWindow { l_min: 3, l_max: -3 }));
        let empty: &[&str] = &[];
        assert_eq!(ModeSpace::new(-1, 1, empty, false), Err(Error::EmptyPaths));
        assert_eq!(
            ModeSpace::new(-1, 1, &["a", "a"], false),
            Err(Error::DuplicatePath("a".into()))
        );
    }

    #[test]
    fn basis_ordering_is_path_major_ell_ascending_h_before_v() {
        let s = ModeSpace::new(-1, 1, &["a", "b"], true).unwrap();
        let labels: Vec<ModeLabel> = s.labels().collect();
        assert_eq!(labels[0], ModeLabel::with_pol("a", -1, Polarization::H));
        assert_eq!(labels[1], ModeLabel::with_pol("a", -1, Polarization::V));
        assert_eq!(labels[2], ModeLabel::with_pol("a", 0, Polarization::H));
        assert_eq!(labels[6], ModeLabel::with_pol("b", -1, Polarization::H));
        assert_eq!(s.sink_index(), 12);
        // round-trip through index_of / label_at
        for (i, l) in s.labels().enumerate() {
            assert_eq!(s.index_of(&l).unwrap(), i);
            assert_eq!(s.label_at(i).unwrap(), l);
        }
    }

    #[test]
    fn equal_parameters_index_identically() {
        let s1 = ModeSpace::new(-3, 3, &["a", "b"], false).unwrap();
        let s2 = ModeSpace::new(-3, 3, &["a", "b"], false).unwrap();
        assert_eq!(s1, s2);
        for l in s1.labels() {
            assert_eq!(s1.index_of(&l).unwrap(), s2.index_of(&l).unwrap());
        }
    }

    #[test]
    fn basis_state_examples() {
        let s = ModeSpace::new(-2, 2, &["a"], false).unwrap();
        let v = StateVector::basis(&s, &label("a", 0)).unwrap();
        assert_abs_diff_eq!(v.norm_sq(), 1.0);
        assert_eq!(v.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 1);

        let err = StateVector::basis(&s, &label("a", 3)).unwrap_err();
        assert_eq!(err, Error::OutOfWindow { ell: 3, l_min: -2, l_max: 2 });
        assert!(StateVector::basis(&s, &label("c", 0)).is_err());

        let sp = ModeSpace::new(-2, 2, &["a"], true).unwrap();
        let v = StateVector::basis(&sp, &ModeLabel::with_pol("a", 1, Polarization::H)).unwrap();
        let idx = sp.index_of(&ModeLabel::with_pol("a", 1, Polarization::H)).unwrap();
        assert_eq!(v.amplitudes()[idx], Complex64::new(1.0, 0.0));
        // pol mismatch both ways
        assert_eq!(StateVector::basis(&sp, &label("a", 1)).unwrap_err(), Error::MissingPolarization);
        assert_eq!(
            StateVector::basis(&s, &ModeLabel::with_pol("a", 1, Polarization::H)).unwrap_err(),
            Error::UnexpectedPolarization
        );
    }

    #[test]
    fn identity_apply_and_compose() {
        let s = ModeSpace::new(-2, 2, &["a", "b"], false).unwrap();
        let id = Operator::identity(&s);
        let v = StateVector::basis(&s, &label("b", -1)).unwrap();
        assert_eq!(id.apply(&v).unwrap(), v);
        let composed = Operator::compose(&id, &id).unwrap();
        assert_eq!(composed.max_abs_diff(&id).unwrap(), 0.0);
    }

    #[test]
    fn space_mismatch_is_rejected() {
        let s1 = ModeSpace::new(-2, 2, &["a"], false).unwrap();
        let s2 = ModeSpace::new(-3, 3, &["a"], false).unwrap();
        let v = StateVector::basis(&s2, &label("a", 0)).unwrap();
        assert_eq!(Operator::identity(&s1).apply(&v).unwrap_err(), Error::SpaceMismatch);
        assert_eq!(
            Operator::compose(&Operator::identity(&s1), &Operator::identity(&s2)).unwrap_err(),
            Error::SpaceMismatch
        );
    }

    #[test]
    fn identity_is_unitary_with_zero_deviation() {
        let s = ModeSpace::new(-2, 2, &["a"], false).unwrap();
        let rep = Operator::identity(&s).is_unitary(1e-12).unwrap();
        assert!(rep.unitary);
        assert_eq!(rep.max_deviation, 0.0);
        assert_eq!(rep.leaked_probability, 0.0);
        assert!(Operator::identity(&s).is_unitary(0.0).is_err());
    }

    #[test]
    fn probability_table_examples() {
        let s = ModeSpace::new(-2, 2, &["a"], false).unwrap();
        let v = StateVector::basis(&s, &label("a", 1)).unwrap();
        let probs = v.mode_probabilities();
        assert_abs_diff_eq!(probs.total(), 1.0, epsilon = 1e-12);
        assert_eq!(probs.nonzero(1e-12), vec![(label("a", 1), 1.0)]);

        // equal two-mode superposition
        let mut amps = Array1::zeros(s.dimension());
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[s.index_of(&label("a", -1)).unwrap()] = r;
        amps[s.index_of(&label("a", 2)).unwrap()] = r;
        let v = StateVector::from_amplitudes(&s, amps).unwrap();
        let probs = v.mode_probabilities();
        let nz = probs.nonzero(1e-12);
        assert_eq!(nz.len(), 2);
        for (_, p) in nz {
            assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn label_parse_round_trip() {
        for text in ["a:-2", "beam_1:3", "a:1:H", "b:-4:V"] {
            let l: ModeLabel = text.parse().unwrap();
            assert_eq!(l.to_string(), text);
        }
        assert!("".parse::<ModeLabel>().is_err());
        assert!("a".parse::<ModeLabel>().is_err());
        assert!("a:x".parse::<ModeLabel>().is_err());
        assert!("a:1:Q".parse::<ModeLabel>().is_err());
        assert!("a:1:H:extra".parse::<ModeLabel>().is_err());
    }
}
