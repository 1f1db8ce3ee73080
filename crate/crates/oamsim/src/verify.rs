//! Decides whether an operator realizes a lossless n-fold cyclic mode
//! transformation, and enumerates the four-fold cycle families the built-in
//! setup can reach.

use crate::error::{Error, Result};
use crate::space::{ModeLabel, ModeSpace, Operator, Polarization};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

/// Successor of `ell` under the built-in transformation: add one quantum,
/// flip the sign when the input was odd.
pub fn cycle_successor(ell: i32) -> i32 {
    if ell.rem_euclid(2) == 0 {
        ell + 1
    } else {
        -(ell + 1)
    }
}

/// Four-fold cycle families reachable by the built-in setup, innermost
/// first, each listed in successor order.
///
/// A family is reported when its whole orbit fits inside both
/// `[-l_limit, l_limit]` and the default operational window
/// [`crate::space::DEFAULT_L_MIN`], [`crate::space::DEFAULT_L_MAX`]; the
/// outermost family would need modes beyond the window the fixed setup
/// supports, so enumeration stops there. Returns an empty list for
/// `l_limit < 2`.
pub fn enumerate_cycles(l_limit: i32) -> Vec<[i32; 4]> {
    let cap = l_limit.min(crate::space::DEFAULT_L_MAX);
    let mut cycles = Vec::new();
    let mut anchor = -2;
    loop {
        let orbit = orbit_from(anchor);
        if orbit.iter().any(|l| l.abs() > cap) {
            break;
        }
        cycles.push(orbit);
        anchor = if anchor == -2 { 2 } else { anchor + 2 };
    }
    cycles
}

fn orbit_from(start: i32) -> [i32; 4] {
    let a = start;
    let b = cycle_successor(a);
    let c = cycle_successor(b);
    let d = cycle_successor(c);
    debug_assert_eq!(cycle_successor(d), a);
    [a, b, c, d]
}

/// The |outputs| x |inputs| block of the operator matrix.
pub fn extract_submatrix(
    op: &Operator,
    inputs: &[ModeLabel],
    outputs: &[ModeLabel],
) -> Result<Array2<Complex64>> {
    let space = op.space();
    let col_idx: Vec<usize> = inputs.iter().map(|l| space.index_of(l)).collect::<Result<_>>()?;
    let row_idx: Vec<usize> = outputs.iter().map(|l| space.index_of(l)).collect::<Result<_>>()?;
    let mut block = Array2::zeros((row_idx.len(), col_idx.len()));
    for (bi, &ri) in row_idx.iter().enumerate() {
        for (bj, &cj) in col_idx.iter().enumerate() {
            block[(bi, bj)] = op.matrix()[(ri, cj)];
        }
    }
    Ok(block)
}

/// Result of testing a square matrix for permutation structure.
#[derive(Debug, Clone, Serialize)]
pub struct PermutationClass {
    /// True when every column holds a single near-unit entry and the
    /// selected rows form a bijection.
    pub is_permutation: bool,
    /// Column -> row of the dominant entry (empty on failure).
    pub permutation: Vec<usize>,
    /// Disjoint cycle lengths, ascending (empty on failure).
    pub cycle_lengths: Vec<usize>,
    /// Unit phases of the dominant entries (empty on failure).
    pub phases: Vec<Complex64>,
}

/// Verdict is based on moduli only, so it is invariant under multiplying
/// any row or column by a unit phase.
pub fn classify_permutation(matrix: &Array2<Complex64>, tol: f64) -> Result<PermutationClass> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::NonSquareMatrix { rows: matrix.nrows(), cols: matrix.ncols() });
    }
    if tol <= 0.0 {
        return Err(Error::NonPositiveTolerance);
    }
    let n = matrix.nrows();
    let failed = || PermutationClass {
        is_permutation: false,
        permutation: Vec::new(),
        cycle_lengths: Vec::new(),
        phases: Vec::new(),
    };

    let mut perm = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    for j in 0..n {
        let mut best = (0usize, 0.0f64);
        for i in 0..n {
            let m = matrix[(i, j)].norm();
            if m > best.1 {
                best = (i, m);
            }
        }
        if best.1 < 1.0 - tol {
            return Ok(failed());
        }
        for i in 0..n {
            if i != best.0 && matrix[(i, j)].norm() > tol {
                return Ok(failed());
            }
        }
        perm.push(best.0);
        phases.push(matrix[(best.0, j)] / matrix[(best.0, j)].norm());
    }
    let mut seen = vec![false; n];
    for &p in &perm {
        if seen[p] {
            return Ok(failed());
        }
        seen[p] = true;
    }
    let cycle_lengths = cycle_lengths_of(&perm);
    Ok(PermutationClass { is_permutation: true, permutation: perm, cycle_lengths, phases })
}

fn cycle_lengths_of(perm: &[usize]) -> Vec<usize> {
    let n = perm.len();
    let mut visited = vec![false; n];
    let mut lengths = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut cur = start;
        while !visited[cur] {
            visited[cur] = true;
            len += 1;
            cur = perm[cur];
        }
        lengths.push(len);
    }
    lengths.sort_unstable();
    lengths
}

/// Verdict of a cyclic-transformation check.
#[derive(Debug, Clone, Serialize)]
pub struct CycleReport {
    pub is_cycle: bool,
    /// Number of designated modes.
    pub order: usize,
    /// Dominant output mode per input, over the whole output-path window,
    /// so misrouted inputs are visible even on failure. `None` when an
    /// input column carries no output-path amplitude at all.
    pub mapping: Vec<(ModeLabel, Option<ModeLabel>)>,
    /// Unit phase of the dominant amplitude per input.
    pub phases: Vec<Complex64>,
    /// Largest per-input probability missing from the designated outputs.
    pub worst_leak: f64,
    /// Largest entrywise distance of the restricted n-th power from a
    /// unit-modulus phase diagonal.
    pub nth_power_deviation: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CycleOptions {
    /// Additionally require every cycle phase to equal 1 within tolerance.
    pub strict_phase: bool,
}

/// Designated labels for a cycle check: the given ℓ values on one path, in
/// order, doubled over H/V when the space carries polarization.
pub fn cycle_labels(space: &ModeSpace, path: &str, ells: &[i32]) -> Result<Vec<ModeLabel>> {
    space.path_index(path)?;
    let mut labels = Vec::new();
    for &ell in ells {
        if !space.contains_ell(ell) {
            return Err(Error::OutOfWindow { ell, l_min: space.l_min(), l_max: space.l_max() });
        }
        if space.pol_enabled() {
            labels.push(ModeLabel::with_pol(path, ell, Polarization::H));
            labels.push(ModeLabel::with_pol(path, ell, Polarization::V));
        } else {
            labels.push(ModeLabel::new(path, ell));
        }
    }
    Ok(labels)
}

/// Checks that `op` cycles the designated modes: every input column must
/// concentrate (probability >= 1 - tol) on a single designated output and
/// the induced map must be one n-cycle. See [`check_cycle_with`] for the
/// strict-phase variant.
pub fn check_cycle(
    op: &Operator,
    input_path: &str,
    input_ells: &[i32],
    output_path: &str,
    tol: f64,
) -> Result<CycleReport> {
    check_cycle_with(op, input_path, input_ells, output_path, tol, CycleOptions::default())
}

pub fn check_cycle_with(
    op: &Operator,
    input_path: &str,
    input_ells: &[i32],
    output_path: &str,
    tol: f64,
    options: CycleOptions,
) -> Result<CycleReport> {
    if tol <= 0.0 {
        return Err(Error::NonPositiveTolerance);
    }
    if input_ells.len() < 2 {
        return Err(Error::TooFewModes);
    }
    for (i, ell) in input_ells.iter().enumerate() {
        if input_ells[..i].contains(ell) {
            return Err(Error::DuplicateMode(*ell));
        }
    }
    let space = op.space();
    let inputs = cycle_labels(space, input_path, input_ells)?;
    let outputs = cycle_labels(space, output_path, input_ells)?;
    let n = inputs.len();

    // dominant output over the whole output path, designated or not
    let window: Vec<i32> = (space.l_min()..=space.l_max()).collect();
    let window_labels = cycle_labels(space, output_path, &window)?;
    let window_block = extract_submatrix(op, &inputs, &window_labels)?;

    let out_positions: Vec<usize> = outputs
        .iter()
        .map(|l| window_labels.iter().position(|w| w == l).expect("designated mode in window"))
        .collect();

    let mut mapping = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    let mut perm: Vec<Option<usize>> = Vec::with_capacity(n);
    let mut worst_leak = 0.0f64;
    let mut concentrated = true;

    for (j, input) in inputs.iter().enumerate() {
        let mut best = (0usize, 0.0f64);
        let mut designated_prob = 0.0;
        for i in 0..window_labels.len() {
            let p = window_block[(i, j)].norm_sqr();
            if p > best.1 {
                best = (i, p);
            }
        }
        for &pos in &out_positions {
            designated_prob += window_block[(pos, j)].norm_sqr();
        }
        worst_leak = worst_leak.max(1.0 - designated_prob);

        let dominant_amp = window_block[(best.0, j)];
        if best.1 > 0.0 {
            mapping.push((input.clone(), Some(window_labels[best.0].clone())));
            phases.push(dominant_amp / dominant_amp.norm());
        } else {
            mapping.push((input.clone(), None));
            phases.push(Complex64::new(1.0, 0.0));
        }

        let target = out_positions.iter().position(|&pos| pos == best.0);
        match target {
            Some(k) if best.1 >= 1.0 - tol => perm.push(Some(k)),
            _ => {
                concentrated = false;
                perm.push(None);
            }
        }
    }

    let single_cycle = concentrated && {
        let perm: Vec<usize> = perm.iter().map(|p| p.expect("concentrated")).collect();
        let mut seen = vec![false; n];
        let mut bijective = true;
        for &p in &perm {
            if seen[p] {
                bijective = false;
                break;
            }
            seen[p] = true;
        }
        bijective && cycle_lengths_of(&perm) == vec![n]
    };

    // restricted n-th power against a phase diagonal
    let block = extract_submatrix(op, &inputs, &outputs)?;
    let mut power = Array2::eye(n);
    for _ in 0..n {
        power = block.dot(&power);
    }
    let mut nth_power_deviation = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v: Complex64 = power[(i, j)];
            let dev = if i == j { (v.norm() - 1.0).abs() } else { v.norm() };
            nth_power_deviation = nth_power_deviation.max(dev);
        }
    }

    let phase_ok = !options.strict_phase
        || phases.iter().all(|p| (p - Complex64::new(1.0, 0.0)).norm() <= tol);

    Ok(CycleReport {
        is_cycle: single_cycle && phase_ok,
        order: n,
        mapping,
        phases,
        worst_leak,
        nth_power_deviation,
    })
}
