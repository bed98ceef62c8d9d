//! Bound states in the gap and the λ-sweep tally.
//!
//! The mismatch `Δ(E) = θ_int(E) − θ_ext(E)` decreases strictly on
//! `[−M, M]` (interior angle falls with E, exterior angle rises), and a
//! bound state is a solution of `Δ(E) = nπ`. The number of interior roots is
//! therefore the number of multiples of π strictly between `Δ(M)` and
//! `Δ(−M)`; critical end points are classified separately.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::exec::{self, ExecMode};
use crate::potential::{PotentialKind, ProblemSpec, Tail};
use crate::radial::{exterior_ratio, integrate_interior, Energy, SolverOptions, Threshold};
use crate::scattering::{
    minus_index, plus_index, threshold_angles, threshold_interior, ThresholdAngles,
};

/// Largest `|j|` the solver is validated for.
pub const MAX_J: f64 = 20.5;
/// Largest `|V| / M` the solver is validated for.
pub const MAX_DEPTH_OVER_M: f64 = 100.0;
/// Initial energy grid.
pub const MIN_GRID: usize = 256;
/// Largest energy grid before giving up.
pub const MAX_GRID: usize = 1 << 16;
/// Initial λ grid for the sweep tally.
pub const LAMBDA_GRID: usize = 64;

/// Half-bound state flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfBound {
    None,
    AtPlusM,
    AtMinusM,
}

impl HalfBound {
    pub fn flip(self) -> Self {
        match self {
            HalfBound::None => HalfBound::None,
            HalfBound::AtPlusM => HalfBound::AtMinusM,
            HalfBound::AtMinusM => HalfBound::AtPlusM,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HalfBound::None => "none",
            HalfBound::AtPlusM => "at_plus_M",
            HalfBound::AtMinusM => "at_minus_M",
        }
    }
}

/// Direct search versus λ-sweep count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodAgreement {
    pub direct: i64,
    /// `None` when the sweep hit a crossing at λ = 1.
    pub lambda_sweep: Option<i64>,
}

impl MethodAgreement {
    pub fn agree(&self) -> bool {
        self.lambda_sweep.map(|n| n == self.direct).unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub j: f64,
    /// Bound energies strictly inside `(−M, M)`, ascending.
    pub bound_energies: Vec<f64>,
    /// Bound states sitting exactly at a threshold (counted in `n_j`).
    pub threshold_bound: Vec<Threshold>,
    pub n_j: i64,
    pub half_bound: HalfBound,
    /// Thresholds where the interior ratio sits inside the `tol_half` band.
    pub critical: Vec<Threshold>,
    pub method_agreement: MethodAgreement,
    pub grid_points: usize,
}

/// Rejects inputs outside the validated range.
pub fn validate_range(spec: &ProblemSpec) -> Result<()> {
    if spec.j.abs() > MAX_J {
        return Err(SolverError::OutOfValidatedRange(format!(
            "|j| = {} exceeds {MAX_J}",
            spec.j.abs()
        )));
    }
    let limit = MAX_DEPTH_OVER_M * spec.mass;
    let pot = &spec.potential;
    let r0 = pot.r0();
    let depth = match pot.kind() {
        PotentialKind::SquareWell { depth } => depth.abs(),
        PotentialKind::PiecewiseLinear { knots } | PotentialKind::SampledTable { knots, .. } => {
            knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max)
        }
        PotentialKind::Custom { .. } => (1..=1000)
            .map(|i| {
                pot.evaluate(r0 * i as f64 / 1000.0, 1.0)
                    .map(f64::abs)
                    .unwrap_or(0.0)
            })
            .fold(0.0, f64::max),
    };
    let depth = depth * spec.lambda.abs().max(1.0);
    if depth > limit {
        return Err(SolverError::OutOfValidatedRange(format!(
            "potential depth {depth} exceeds {MAX_DEPTH_OVER_M} M"
        )));
    }
    Ok(())
}

/// `Δ(E) = θ_int − θ_ext` at coupling `spec.lambda`.
pub fn mismatch(spec: &ProblemSpec, e: f64, opts: &SolverOptions) -> Result<f64> {
    let en = Energy::new(e, spec.mass);
    if e.abs() == spec.mass {
        let side = if e > 0.0 {
            Threshold::PlusM
        } else {
            Threshold::MinusM
        };
        return Ok(threshold_angles(spec, side, opts)?.mismatch());
    }
    let int = integrate_interior(spec, en, opts)?;
    let ext = exterior_ratio(spec, en, opts)?;
    Ok(int.theta - ext.theta)
}

/// Endpoint status of the mismatch at both thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoints {
    pub plus: ThresholdAngles,
    pub minus: ThresholdAngles,
    pub plus_critical: bool,
    pub minus_critical: bool,
}

pub fn endpoints(spec: &ProblemSpec, opts: &SolverOptions, tol_half: f64) -> Result<Endpoints> {
    let plus = threshold_angles(spec, Threshold::PlusM, opts)?;
    let minus = threshold_angles(spec, Threshold::MinusM, opts)?;
    Ok(Endpoints {
        plus,
        minus,
        plus_critical: plus.is_critical(tol_half),
        minus_critical: minus.is_critical(tol_half),
    })
}

/// Multiples `n` with `Δ(M) < nπ < Δ(−M)`, dropping those that belong to a
/// critical end point.
fn interior_targets(ends: &Endpoints) -> Vec<i64> {
    let lo = ends.plus.mismatch() / PI;
    let hi = ends.minus.mismatch() / PI;
    let mut first = lo.floor() as i64 + 1;
    let mut last = hi.ceil() as i64 - 1;
    if ends.plus_critical && (first as f64 - lo).abs() < 0.25 {
        first += 1;
    }
    if ends.minus_critical && (hi - last as f64).abs() < 0.25 {
        last -= 1;
    }
    (first..=last).collect()
}

/// Bound energies inside `(−M, M)` to `tol_e`, located by scanning `Δ` on a
/// grid of at least [`MIN_GRID`] points and bisecting.
pub fn find_bound_energies(
    spec: &ProblemSpec,
    tol_e: f64,
    tol_half: f64,
    opts: &SolverOptions,
    mode: ExecMode,
) -> Result<(Vec<f64>, usize)> {
    validate_range(spec)?;
    let ends = endpoints(spec, opts, tol_half)?;
    let targets = interior_targets(&ends);
    if targets.is_empty() {
        return Ok((Vec::new(), 0));
    }
    let mass = spec.mass;
    let mut n = MIN_GRID;
    let (grid, values) = loop {
        // Cosine spacing: cells shrink like 1/n² at the gap edges, where
        // weakly bound states of long-range potentials accumulate.
        let grid: Vec<f64> = (0..n)
            .map(|i| match i {
                0 => -mass,
                _ if i == n - 1 => mass,
                _ => -mass * (PI * i as f64 / (n - 1) as f64).cos(),
            })
            .collect();
        let values = exec::try_map(mode, &grid, |&e| mismatch(spec, e, opts))?;
        // Levels tπ with Δ(b) ≤ tπ < Δ(a); two of them means two roots share a cell.
        let coarse = values
            .windows(2)
            .any(|w| (w[0] / PI).ceil() - (w[1] / PI).ceil() > 1.0);
        if !coarse {
            break (grid, values);
        }
        if n >= MAX_GRID {
            return Err(SolverError::GridInsufficient { points: n });
        }
        log::debug!(
            "j = {}: two roots share a cell at {n} points, refining",
            spec.j
        );
        n = (2 * n).min(MAX_GRID);
    };
    let brackets: Vec<(i64, usize)> = targets
        .iter()
        .filter_map(|&t| {
            let level = t as f64 * PI;
            values
                .windows(2)
                .position(|w| w[0] > level && w[1] <= level)
                .map(|i| (t, i))
        })
        .collect();
    if brackets.len() != targets.len() {
        return Err(SolverError::GridInsufficient { points: n });
    }
    let mut roots = exec::try_map(mode, &brackets, |&(t, i)| {
        bisect(spec, t as f64 * PI, grid[i], grid[i + 1], tol_e, opts)
    })?;
    roots.sort_by(f64::total_cmp);
    Ok((roots, n))
}

fn bisect(
    spec: &ProblemSpec,
    level: f64,
    mut a: f64,
    mut b: f64,
    tol_e: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    // Invariant: Δ(a) > level ≥ Δ(b).
    while b - a > tol_e {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if mismatch(spec, m, opts)? > level {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Half-bound classification at `λ = spec.lambda` for `j > 0`.
pub fn detect_half_bound(
    spec: &ProblemSpec,
    opts: &SolverOptions,
    tol_half: f64,
) -> Result<HalfBound> {
    let ends = endpoints(spec, opts, tol_half)?;
    Ok(classify_half_bound(spec, &ends))
}

fn has_tail(spec: &ProblemSpec) -> bool {
    matches!(spec.potential.tail(), Tail::Power { b, .. } if b != 0.0) && spec.lambda != 0.0
}

fn classify_half_bound(spec: &ProblemSpec, ends: &Endpoints) -> HalfBound {
    if has_tail(spec) {
        return HalfBound::None;
    }
    let j = spec.j;
    if ends.plus_critical && (j == 0.5 || j == 1.5) {
        HalfBound::AtPlusM
    } else if ends.minus_critical && j == 0.5 {
        HalfBound::AtMinusM
    } else {
        HalfBound::None
    }
}

fn threshold_bound_states(spec: &ProblemSpec, ends: &Endpoints) -> Vec<Threshold> {
    if has_tail(spec) {
        return Vec::new();
    }
    let mut out = Vec::new();
    if ends.minus_critical && spec.j >= 1.5 {
        out.push(Threshold::MinusM);
    }
    if ends.plus_critical && spec.j > 1.5 {
        out.push(Threshold::PlusM);
    }
    out
}

/// Signed crossing counts along `λ ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaTally {
    /// `A(M, λ)` decreasing through the exterior threshold ratio.
    pub plus_down: i64,
    pub plus_up: i64,
    /// `A(−M, λ)` decreasing through the exterior threshold ratio.
    pub minus_down: i64,
    pub minus_up: i64,
}

impl LambdaTally {
    pub fn count(&self) -> i64 {
        self.plus_down - self.plus_up - self.minus_down + self.minus_up
    }

    /// Net `η(M)/π` implied by the +M crossings.
    pub fn plus_net(&self) -> i64 {
        self.plus_down - self.plus_up
    }

    /// Net `η(−M)/π` implied by the −M crossings.
    pub fn minus_net(&self) -> i64 {
        self.minus_up - self.minus_down
    }
}

/// Threshold mismatch at coupling λ against the closed-form exterior ratio.
fn sweep_mismatch(
    spec: &ProblemSpec,
    side: Threshold,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let at = spec.with_lambda(lambda);
    let int = threshold_interior(&at, side, opts)?;
    let b = match at.potential.tail() {
        Tail::Power { b, n: 2.0 } => lambda * b,
        _ => 0.0,
    };
    let ext = crate::radial::exterior_tail_ratio(at.j, side, at.potential.r0(), at.mass, b)?;
    Ok(int.theta - ext.theta)
}

/// λ-sweep count of bound states: crossings of `A(±M, λ)` through the
/// exterior threshold ratios as λ runs from 0 to `spec.lambda`.
pub fn lambda_sweep_count(
    spec: &ProblemSpec,
    opts: &SolverOptions,
    tol_half: f64,
    mode: ExecMode,
) -> Result<LambdaTally> {
    let target = spec.lambda;
    if target == 0.0 || spec.potential.is_free() {
        return Ok(LambdaTally::default());
    }
    let ends = endpoints(spec, opts, tol_half)?;
    if ends.plus_critical || ends.minus_critical {
        return Err(SolverError::CrossingAmbiguity { lambda: target });
    }
    let grid: Vec<f64> = (0..=LAMBDA_GRID)
        .map(|i| target * i as f64 / LAMBDA_GRID as f64)
        .collect();
    let mut tally = LambdaTally::default();
    for side in [Threshold::PlusM, Threshold::MinusM] {
        let values = exec::try_map(mode, &grid, |&l| sweep_mismatch(spec, side, l, opts))?;
        let mut nodes: Vec<(f64, f64)> = grid.iter().copied().zip(values).collect();
        nodes = refine_sweep(spec, side, nodes, opts)?;
        for w in nodes.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            let step = match side {
                Threshold::PlusM => plus_index(spec.j, b) - plus_index(spec.j, a),
                Threshold::MinusM => minus_index(b) - minus_index(a),
            };
            match (side, step.signum()) {
                (Threshold::PlusM, 1) => tally.plus_down += step,
                (Threshold::PlusM, -1) => tally.plus_up -= step,
                (Threshold::MinusM, 1) => tally.minus_up += step,
                (Threshold::MinusM, -1) => tally.minus_down -= step,
                _ => {}
            }
        }
    }
    Ok(tally)
}

fn refine_sweep(
    spec: &ProblemSpec,
    side: Threshold,
    nodes: Vec<(f64, f64)>,
    opts: &SolverOptions,
) -> Result<Vec<(f64, f64)>> {
    let mut out = vec![nodes[0]];
    for w in nodes.windows(2) {
        let mut stack = vec![(w[0], w[1])];
        let mut seg = Vec::new();
        while let Some((a, b)) = stack.pop() {
            if (b.1 - a.1).abs() < PI / 2.0 {
                seg.push(b);
                continue;
            }
            if (b.0 - a.0).abs() < crate::scattering::MIN_PATH_STEP {
                return Err(SolverError::CrossingAmbiguity { lambda: b.0 });
            }
            let lm = 0.5 * (a.0 + b.0);
            let mid = (lm, sweep_mismatch(spec, side, lm, opts)?);
            stack.push((mid, b));
            stack.push((a, mid));
        }
        out.extend(seg);
    }
    Ok(out)
}

/// Direct search, half-bound classification and the λ-sweep cross-check.
pub fn spectrum(
    spec: &ProblemSpec,
    tol_e: f64,
    tol_half: f64,
    opts: &SolverOptions,
    mode: ExecMode,
) -> Result<SpectrumReport> {
    let ends = endpoints(spec, opts, tol_half)?;
    let (bound_energies, grid_points) = find_bound_energies(spec, tol_e, tol_half, opts, mode)?;
    let threshold_bound = threshold_bound_states(spec, &ends);
    let n_j = (bound_energies.len() + threshold_bound.len()) as i64;
    let half_bound = classify_half_bound(spec, &ends);
    let mut critical = Vec::new();
    if ends.plus_critical {
        critical.push(Threshold::PlusM);
    }
    if ends.minus_critical {
        critical.push(Threshold::MinusM);
    }
    let lambda_sweep = match lambda_sweep_count(spec, opts, tol_half, mode) {
        Ok(t) => Some(t.count()),
        Err(SolverError::CrossingAmbiguity { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SpectrumReport {
        j: spec.j,
        bound_energies,
        threshold_bound,
        n_j,
        half_bound,
        critical,
        method_agreement: MethodAgreement {
            direct: n_j,
            lambda_sweep,
        },
        grid_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialModel;

    fn well(depth: f64, j: f64) -> ProblemSpec {
        ProblemSpec::new(
            PotentialModel::square_well(depth, 1.0).unwrap(),
            1.0,
            j,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn free_has_no_bound_states() {
        let opts = SolverOptions::default();
        for &j in &[0.5, 1.5, 2.5] {
            let r = spectrum(&well(0.0, j), 1e-10, 1e-6, &opts, ExecMode::Sequential).unwrap();
            assert_eq!(r.n_j, 0);
            assert!(r.bound_energies.is_empty());
            let expect = if j == 0.5 {
                HalfBound::AtPlusM
            } else {
                HalfBound::None
            };
            assert_eq!(r.half_bound, expect, "j = {j}");
        }
    }

    #[test]
    fn mismatch_decreases() {
        let opts = SolverOptions::default();
        let spec = well(-5.0, 0.5);
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let e = -1.0 + 2.0 * i as f64 / 40.0;
            let d = mismatch(&spec, e, &opts).unwrap();
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn bound_energy_satisfies_match() {
        let opts = SolverOptions::default();
        let spec = well(-4.0, 0.5);
        let (roots, _) =
            find_bound_energies(&spec, 1e-10, 1e-6, &opts, ExecMode::Parallel).unwrap();
        assert!(!roots.is_empty());
        for e in roots {
            let d = mismatch(&spec, e, &opts).unwrap();
            assert!((d / PI - (d / PI).round()).abs() < 1e-6);
        }
    }

    #[test]
    fn sweep_agrees_with_direct_search() {
        let opts = SolverOptions::default();
        for &depth in &[-2.0, -4.0, -9.0, 3.0, 6.0] {
            let spec = well(depth, 0.5);
            let r = spectrum(&spec, 1e-10, 1e-6, &opts, ExecMode::Parallel).unwrap();
            assert!(
                r.method_agreement.agree(),
                "depth {depth}: {:?}",
                r.method_agreement
            );
        }
    }

    #[test]
    fn range_limits() {
        assert!(matches!(
            validate_range(&well(-150.0, 0.5)),
            Err(SolverError::OutOfValidatedRange(_))
        ));
        assert!(matches!(
            validate_range(&well(-1.0, 21.5)),
            Err(SolverError::OutOfValidatedRange(_))
        ));
        assert!(validate_range(&well(-99.0, 20.5)).is_ok());
    }

    #[test]
    fn half_bound_flip() {
        assert_eq!(HalfBound::AtPlusM.flip(), HalfBound::AtMinusM);
        assert_eq!(HalfBound::None.flip(), HalfBound::None);
    }
}
