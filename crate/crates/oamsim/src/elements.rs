//! Operator constructors for the optical elements and circuit composition.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * Every physical reflection (mirror, beamsplitter reflection, PBS
//!   reflection) flips the OAM sign. Beamsplitter reflections carry the
//!   factor i of the symmetric 50:50 convention.
//! * A Dove prism at physical rotation angle β maps |ℓ⟩ to e^{i2ℓβ}|-ℓ⟩:
//!   image inversion plus a rotation-doubled phase. Two prisms offset by
//!   π/2 therefore give the parity-splitting relative phase ℓπ between two
//!   interferometer arms.
//! * The OAM parity sorter routes odd ℓ straight through (amplitude 1, ℓ
//!   kept) and sends even ℓ to the other port with amplitude -1 and ℓ
//!   flipped. The flip on the crossing port is forced by reflection
//!   counting: the straight and crossed routes through a two-splitter
//!   interferometer always differ by exactly one reflection, so the two
//!   ports cannot both preserve ℓ. The same counting makes the composed
//!   Mach-Zehnder model below reproduce this operator entry for entry in
//!   modulus.
//! * Amplitude that an element would move outside the ℓ window lands in the
//!   sink row, column by column, so basis-state probability is conserved
//!   exactly.

use crate::error::{Error, Result};
use crate::space::{ModeSpace, Operator};
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Matrix under construction: identity on the sink, zeros elsewhere until
/// columns are filled.
struct OpBuilder<'a> {
    space: &'a ModeSpace,
    matrix: Array2<Complex64>,
}

impl<'a> OpBuilder<'a> {
    fn new(space: &'a ModeSpace) -> Self {
        let dim = space.dimension();
        let mut matrix = Array2::zeros((dim, dim));
        matrix[(space.sink_index(), space.sink_index())] = ONE;
        OpBuilder { space, matrix }
    }

    /// Adds `amp` at (path, ell, pol slot) in column `col`, or into the sink
    /// row when ell lies outside the window.
    fn put(&mut self, col: usize, path_idx: usize, ell: i32, pol_idx: usize, amp: Complex64) {
        let row = if self.space.contains_ell(ell) {
            self.space.index_parts(path_idx, ell, pol_idx)
        } else {
            self.space.sink_index()
        };
        self.matrix[(row, col)] += amp;
    }

    fn identity_column(&mut self, col: usize) {
        self.matrix[(col, col)] = ONE;
    }

    fn finish(self) -> Operator {
        Operator::from_matrix(self.space, self.matrix).expect("builder shape")
    }
}

/// Iterates non-sink columns as (col, path_idx, ell, pol_idx).
fn for_each_mode(space: &ModeSpace, mut f: impl FnMut(usize, usize, i32, usize)) {
    let pols = if space.pol_enabled() { 2 } else { 1 };
    for (path_idx, _) in space.paths().iter().enumerate() {
        for ell in space.l_min()..=space.l_max() {
            for pol_idx in 0..pols {
                f(space.index_parts(path_idx, ell, pol_idx), path_idx, ell, pol_idx);
            }
        }
    }
}

/// Spiral phase hologram: |path, ℓ⟩ → |path, ℓ+charge⟩.
pub fn spiral_phase(space: &ModeSpace, path: &str, charge: i32) -> Result<Operator> {
    if charge == 0 {
        return Err(Error::ZeroCharge);
    }
    let target = space.path_index(path)?;
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == target {
            b.put(col, p, ell + charge, pol, ONE);
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

/// Mirror: |path, ℓ⟩ → |path, -ℓ⟩, polarization untouched.
pub fn mirror(space: &ModeSpace, path: &str) -> Result<Operator> {
    let target = space.path_index(path)?;
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == target {
            b.put(col, p, -ell, pol, ONE);
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

/// Dove prism at rotation angle `beta`: |path, ℓ⟩ → e^{i2ℓβ} |path, -ℓ⟩.
pub fn dove_prism(space: &ModeSpace, path: &str, beta: f64) -> Result<Operator> {
    let target = space.path_index(path)?;
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == target {
            let phase = Complex64::from_polar(1.0, 2.0 * ell as f64 * beta);
            b.put(col, p, -ell, pol, phase);
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

/// Symmetric 50:50 beamsplitter between two paths: transmission 1/√2 keeps
/// the path and ℓ, reflection i/√2 swaps paths and flips ℓ.
pub fn beamsplitter(space: &ModeSpace, path_a: &str, path_b: &str) -> Result<Operator> {
    let t = std::f64::consts::FRAC_1_SQRT_2;
    beamsplitter_with_ratio(space, path_a, path_b, t, t)
}

/// Beamsplitter with explicit transmission/reflection amplitudes t, r
/// (unitary when t² + r² = 1).
pub(crate) fn beamsplitter_with_ratio(
    space: &ModeSpace,
    path_a: &str,
    path_b: &str,
    t: f64,
    r: f64,
) -> Result<Operator> {
    let (pa, pb) = two_paths(space, path_a, path_b)?;
    let t = Complex64::new(t, 0.0);
    let ir = Complex64::new(0.0, r);
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == pa {
            b.put(col, pa, ell, pol, t);
            b.put(col, pb, -ell, pol, ir);
        } else if p == pb {
            b.put(col, pb, ell, pol, t);
            b.put(col, pa, -ell, pol, ir);
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

/// Ideal OAM parity sorter between two paths: odd ℓ passes straight with
/// amplitude 1, even ℓ crosses with amplitude -1 and ℓ flipped.
pub fn oam_bs_blackbox(space: &ModeSpace, path_a: &str, path_b: &str) -> Result<Operator> {
    let (pa, pb) = two_paths(space, path_a, path_b)?;
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == pa || p == pb {
            if ell.rem_euclid(2) == 1 {
                b.put(col, p, ell, pol, ONE);
            } else {
                let other = if p == pa { pb } else { pa };
                b.put(col, other, -ell, pol, -ONE);
            }
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

/// Parity sorter assembled from primitives: splitter, one Dove prism and one
/// mirror per arm (prisms offset by π/2), second splitter. Equals
/// [`oam_bs_blackbox`] entry for entry in modulus; phases differ by a fixed
/// diagonal per parity sector.
pub fn oam_bs_composed(space: &ModeSpace, path_a: &str, path_b: &str) -> Result<Operator> {
    two_paths(space, path_a, path_b)?;
    let stages = [
        beamsplitter(space, path_a, path_b)?,
        dove_prism(space, path_a, 0.0)?,
        dove_prism(space, path_b, FRAC_PI_2)?,
        mirror(space, path_a)?,
        mirror(space, path_b)?,
        beamsplitter(space, path_a, path_b)?,
    ];
    let mut op = Operator::identity(space);
    for stage in &stages {
        op = Operator::compose(stage, &op)?;
    }
    Ok(op)
}

/// Parity sorter as a Mach-Zehnder with splitter amplitudes (t, r) and an
/// extra phase e^{iφ} in the second arm, gauged so the ideal point
/// (t = r = 1/√2, φ = 0) reproduces [`oam_bs_blackbox`] exactly.
pub(crate) fn oam_bs_mzi(
    space: &ModeSpace,
    path_a: &str,
    path_b: &str,
    t: f64,
    r: f64,
    phase: f64,
) -> Result<Operator> {
    let (pa, pb) = two_paths(space, path_a, path_b)?;
    let e = Complex64::from_polar(1.0, phase);
    let t2 = Complex64::new(t * t, 0.0);
    let r2 = Complex64::new(r * r, 0.0);
    let tr = t * r;
    let i = Complex64::new(0.0, 1.0);
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p != pa && p != pb {
            b.identity_column(col);
            return;
        }
        let other = if p == pa { pb } else { pa };
        if ell.rem_euclid(2) == 1 {
            // Straight port keeps ℓ; residue leaks to the crossing port.
            let (stay, leak) = if p == pa {
                (t2 + r2 * e, -i * tr * (ONE - e))
            } else {
                (r2 + t2 * e, i * tr * (ONE - e))
            };
            b.put(col, p, ell, pol, stay);
            b.put(col, other, -ell, pol, leak);
        } else {
            let stay = if p == pa { i * (t2 - r2 * e) } else { i * (t2 * e - r2) };
            let cross = -(ONE + e) * Complex64::new(tr, 0.0);
            b.put(col, p, ell, pol, stay);
            b.put(col, other, -ell, pol, cross);
        }
    });
    Ok(b.finish())
}

/// Half-wave plate at `angle` (fast-axis angle, radians).
pub fn half_wave_plate(space: &ModeSpace, path: &str, angle: f64) -> Result<Operator> {
    let (c, s) = ((2.0 * angle).cos(), (2.0 * angle).sin());
    let jones = [
        [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        [Complex64::new(s, 0.0), Complex64::new(-c, 0.0)],
    ];
    jones_element(space, path, jones)
}

/// Quarter-wave plate at `angle` (fast-axis angle, radians).
pub fn quarter_wave_plate(space: &ModeSpace, path: &str, angle: f64) -> Result<Operator> {
    let (c, s) = (angle.cos(), angle.sin());
    let i = Complex64::new(0.0, 1.0);
    let c2 = Complex64::new(c * c, 0.0);
    let s2 = Complex64::new(s * s, 0.0);
    let cs = Complex64::new(c * s, 0.0);
    let jones = [[c2 + i * s2, cs - i * cs], [cs - i * cs, s2 + i * c2]];
    jones_element(space, path, jones)
}

fn jones_element(space: &ModeSpace, path: &str, jones: [[Complex64; 2]; 2]) -> Result<Operator> {
    if !space.pol_enabled() {
        return Err(Error::PolarizationDisabled);
    }
    let target = space.path_index(path)?;
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == target {
            b.put(col, p, ell, 0, jones[0][pol]);
            b.put(col, p, ell, 1, jones[1][pol]);
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

/// Polarizing beamsplitter: H transmits (path and ℓ kept), V reflects into
/// the other path with ℓ flipped.
pub fn polarizing_beamsplitter(space: &ModeSpace, path_a: &str, path_b: &str) -> Result<Operator> {
    if !space.pol_enabled() {
        return Err(Error::PolarizationDisabled);
    }
    let (pa, pb) = two_paths(space, path_a, path_b)?;
    let mut b = OpBuilder::new(space);
    for_each_mode(space, |col, p, ell, pol| {
        if p == pa || p == pb {
            if pol == 0 {
                b.put(col, p, ell, 0, ONE);
            } else {
                let other = if p == pa { pb } else { pa };
                b.put(col, other, -ell, 1, ONE);
            }
        } else {
            b.identity_column(col);
        }
    });
    Ok(b.finish())
}

fn two_paths(space: &ModeSpace, a: &str, b: &str) -> Result<(usize, usize)> {
    if a == b {
        return Err(Error::IdenticalPaths(a.to_string()));
    }
    Ok((space.path_index(a)?, space.path_index(b)?))
}

/// Kind tags for toolbox configuration and the setup format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    #[serde(rename = "spp")]
    SpiralPhase,
    Mirror,
    #[serde(rename = "dove")]
    DovePrism,
    #[serde(rename = "bs")]
    BeamSplitter,
    #[serde(rename = "oambs")]
    OamBeamSplitter,
    #[serde(rename = "hwp")]
    HalfWavePlate,
    #[serde(rename = "qwp")]
    QuarterWavePlate,
    #[serde(rename = "pbs")]
    PolarizingBeamSplitter,
}

impl ElementKind {
    /// Keyword used in setup files and toolbox lists.
    pub fn keyword(&self) -> &'static str {
        match self {
            ElementKind::SpiralPhase => "spp",
            ElementKind::Mirror => "mirror",
            ElementKind::DovePrism => "dove",
            ElementKind::BeamSplitter => "bs",
            ElementKind::OamBeamSplitter => "oambs",
            ElementKind::HalfWavePlate => "hwp",
            ElementKind::QuarterWavePlate => "qwp",
            ElementKind::PolarizingBeamSplitter => "pbs",
        }
    }

    pub fn from_keyword(word: &str) -> Option<ElementKind> {
        Some(match word {
            "spp" => ElementKind::SpiralPhase,
            "mirror" => ElementKind::Mirror,
            "dove" => ElementKind::DovePrism,
            "bs" => ElementKind::BeamSplitter,
            "oambs" => ElementKind::OamBeamSplitter,
            "hwp" => ElementKind::HalfWavePlate,
            "qwp" => ElementKind::QuarterWavePlate,
            "pbs" => ElementKind::PolarizingBeamSplitter,
        _ => return None,
        })
    }

    /// True for kinds that only exist in polarization-enabled spaces.
    pub fn needs_polarization(&self) -> bool {
        matches!(
            self,
            ElementKind::HalfWavePlate | ElementKind::QuarterWavePlate | ElementKind::PolarizingBeamSplitter
        )
    }
}

/// One parameterized optical element applied to named paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Element {
    SpiralPhase { path: String, charge: i32 },
    Mirror { path: String },
    DovePrism { path: String, beta: f64 },
    BeamSplitter { a: String, b: String },
    OamBeamSplitter { a: String, b: String },
    HalfWavePlate { path: String, angle: f64 },
    QuarterWavePlate { path: String, angle: f64 },
    PolarizingBeamSplitter { a: String, b: String },
}

impl Element {
    pub fn kind(&self) -> ElementKind {
        match self {
            Element::SpiralPhase { .. } => ElementKind::SpiralPhase,
            Element::Mirror { .. } => ElementKind::Mirror,
            Element::DovePrism { .. } => ElementKind::DovePrism,
            Element::BeamSplitter { .. } => ElementKind::BeamSplitter,
            Element::OamBeamSplitter { .. } => ElementKind::OamBeamSplitter,
            Element::HalfWavePlate { .. } => ElementKind::HalfWavePlate,
            Element::QuarterWavePlate { .. } => ElementKind::QuarterWavePlate,
            Element::PolarizingBeamSplitter { .. } => ElementKind::PolarizingBeamSplitter,
        }
    }

    /// Operator for this element over `space`.
    pub fn operator(&self, space: &ModeSpace) -> Result<Operator> {
        match self {
            Element::SpiralPhase { path, charge } => spiral_phase(space, path, *charge),
            Element::Mirror { path } => mirror(space, path),
            Element::DovePrism { path, beta } => dove_prism(space, path, *beta),
            Element::BeamSplitter { a, b } => beamsplitter(space, a, b),
            Element::OamBeamSplitter { a, b } => oam_bs_blackbox(space, a, b),
            Element::HalfWavePlate { path, angle } => half_wave_plate(space, path, *angle),
            Element::QuarterWavePlate { path, angle } => quarter_wave_plate(space, path, *angle),
            Element::PolarizingBeamSplitter { a, b } => polarizing_beamsplitter(space, a, b),
        }
    }

    /// Validates paths, parameters and polarization requirements without
    /// building the matrix.
    pub fn validate(&self, space: &ModeSpace) -> Result<()> {
        match self {
            Element::SpiralPhase { path, charge } => {
                if *charge == 0 {
                    return Err(Error::ZeroCharge);
                }
                space.path_index(path).map(|_| ())
            }
            Element::Mirror { path } | Element::DovePrism { path, .. } => {
                space.path_index(path).map(|_| ())
            }
            Element::BeamSplitter { a, b } | Element::OamBeamSplitter { a, b } => {
                two_paths(space, a, b).map(|_| ())
            }
            Element::HalfWavePlate { path, .. } | Element::QuarterWavePlate { path, .. } => {
                if !space.pol_enabled() {
                    return Err(Error::PolarizationDisabled);
                }
                space.path_index(path).map(|_| ())
            }
            Element::PolarizingBeamSplitter { a, b } => {
                if !space.pol_enabled() {
                    return Err(Error::PolarizationDisabled);
                }
                two_paths(space, a, b).map(|_| ())
            }
        }
    }
}

/// Ordered list of elements over one mode space; list order is beam order.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    space: ModeSpace,
    elements: Vec<Element>,
}

impl Circuit {
    pub fn new(space: ModeSpace, elements: Vec<Element>) -> Result<Self> {
        for e in &elements {
            e.validate(&space)?;
        }
        Ok(Circuit { space, elements })
    }

    pub fn empty(space: ModeSpace) -> Self {
        Circuit { space, elements: Vec::new() }
    }

    pub fn push(&mut self, element: Element) -> Result<()> {
        element.validate(&self.space)?;
        self.elements.push(element);
        Ok(())
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Circuit with the element at `index` removed.
    pub fn without(&self, index: usize) -> Result<Circuit> {
        if index >= self.elements.len() {
            return Err(Error::IndexOutOfRange { index, len: self.elements.len() });
        }
        let mut elements = self.elements.clone();
        elements.remove(index);
        Ok(Circuit { space: self.space.clone(), elements })
    }

    /// Left-fold of element operators in beam order.
    pub fn build(&self) -> Result<Operator> {
        let mut op = Operator::identity(&self.space);
        for e in &self.elements {
            op = Operator::compose(&e.operator(&self.space)?, &op)?;
        }
        Ok(op)
    }
}

/// See [`Circuit::build`].
pub fn build_circuit(circuit: &Circuit) -> Result<Operator> {
    circuit.build()
}

/// The built-in four-fold cycle setup: hologram adding one OAM quantum on
/// path `a`, a parity sorter, one reflection in the even arm `b`, and a
/// second parity sorter. Requires paths `a` and `b` and a window covering
/// [-3, 3].
pub fn four_fold_cycle_circuit(space: &ModeSpace) -> Result<Circuit> {
    if space.l_min() > -3 || space.l_max() < 3 {
        return Err(Error::WindowTooNarrow);
    }
    space.path_index("a")?;
    space.path_index("b")?;
    Circuit::new(
        space.clone(),
        vec![
            Element::SpiralPhase { path: "a".into(), charge: 1 },
            Element::OamBeamSplitter { a: "a".into(), b: "b".into() },
            Element::Mirror { path: "b".into() },
            Element::OamBeamSplitter { a: "a".into(), b: "b".into() },
        ],
    )
}
