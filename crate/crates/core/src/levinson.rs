//! The theorem check: `η_j(M) + η_j(−M)` against the bound-state count.
//!
//! Positive `j` is solved directly. Negative `j` goes through the symmetry
//! `(f, g, E, λ, j) → (g, f, −E, −λ, −j)`: the report for `(V, −j)` is the
//! mapped report for `(−V, j)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::exec::{self, ExecMode};
use crate::potential::{PotentialModel, ProblemSpec, Tail};
use crate::radial::{SolverOptions, Threshold};
use crate::scattering::{tail_exponent_squares, threshold_phase, ThresholdMethod, ThresholdPhase};
use crate::spectrum::{self, HalfBound, MethodAgreement};

/// Bound on `|V| r²` beyond the effective radius used for `n > 2` tails.
pub const TAIL_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Bound-energy resolution, relative to `M`.
    pub tol_e: f64,
    /// Relative width of the critical band.
    pub tol_half: f64,
    /// Largest `|residual|` accepted as verified, in units of π.
    pub residual: f64,
    pub solver: SolverOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_e: 1e-10,
            tol_half: 1e-6,
            residual: 0.05,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Verified,
    Violated,
    CriticalAmbiguous,
    UnsupportedRegime,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Verified => "VERIFIED",
            Classification::Violated => "VIOLATED",
            Classification::CriticalAmbiguous => "CRITICAL_AMBIGUOUS",
            Classification::UnsupportedRegime => "UNSUPPORTED_REGIME",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailExponents {
    pub alpha: f64,
    pub beta: f64,
}

/// Effective Bessel orders for a `b/r²` tail.
pub fn tail_exponents(j: f64, mass: f64, b: f64) -> Result<TailExponents> {
    if b == 0.0 {
        return Ok(TailExponents {
            alpha: (j - 0.5).abs(),
            beta: (j + 0.5).abs(),
        });
    }
    let (a2, b2) = tail_exponent_squares(j, mass, b);
    if a2 < 0.0 || b2 < 0.0 {
        return Err(SolverError::InfiniteSpectrum(format!(
            "alpha^2 = {a2}, beta^2 = {b2}"
        )));
    }
    if a2 == 0.0 || b2 == 0.0 {
        return Err(SolverError::ExcludedCase(format!(
            "alpha^2 = {a2}, beta^2 = {b2}"
        )));
    }
    Ok(TailExponents {
        alpha: a2.sqrt(),
        beta: b2.sqrt(),
    })
}

/// Everything beyond the headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub method_plus: ThresholdMethod,
    pub method_minus: ThresholdMethod,
    /// Angle-rule values of `η(±M)/π`, for comparison with the extrapolation.
    pub angle_rule_plus: i64,
    pub angle_rule_minus: i64,
    pub spread_plus: Option<f64>,
    pub spread_minus: Option<f64>,
    pub critical: Vec<Threshold>,
    pub method_agreement: MethodAgreement,
    pub threshold_bound: Vec<Threshold>,
    pub tail: Option<TailExponents>,
    pub effective_r0: f64,
    /// Computed as the mirror of the `(−V, |j|)` problem.
    pub via_symmetry: bool,
    /// A bound state sitting at `E = ±M` has already been counted.
    pub inclusive_threshold: bool,
    pub grid_points: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevinsonReport {
    pub j: f64,
    /// `η_j(M) + η_j(−M)`.
    pub lhs: f64,
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub eta_plus_multiple: i64,
    pub eta_minus_multiple: i64,
    pub n_j: i64,
    pub bound_energies: Vec<f64>,
    pub half_bound: HalfBound,
    pub correction: i64,
    pub tail_offset: f64,
    pub residual: f64,
    /// Residuals against `n_j π` and `(n_j + 1) π` in critical cases.
    pub dual_residuals: Option<[f64; 2]>,
    pub classification: Classification,
    pub metadata: ReportMetadata,
}

/// `1` exactly on the half-bound branches that shift the count.
pub fn correction_for(j: f64, half_bound: HalfBound) -> i64 {
    match half_bound {
        HalfBound::AtPlusM if j == 1.5 || j == -0.5 => 1,
        HalfBound::AtMinusM if j == 0.5 || j == -1.5 => 1,
        _ => 0,
    }
}

/// Report for `(−V, −j)` from the report for `(V, j)`.
pub fn symmetry_map(report: &LevinsonReport) -> LevinsonReport {
    let mut r = report.clone();
    r.j = -report.j;
    r.eta_plus = report.eta_minus;
    r.eta_minus = report.eta_plus;
    r.eta_plus_multiple = report.eta_minus_multiple;
    r.eta_minus_multiple = report.eta_plus_multiple;
    r.bound_energies = report.bound_energies.iter().rev().map(|e| -e).collect();
    r.half_bound = report.half_bound.flip();
    r.correction = correction_for(r.j, r.half_bound);
    let m = &mut r.metadata;
    let o = &report.metadata;
    m.method_plus = o.method_minus;
    m.method_minus = o.method_plus;
    m.angle_rule_plus = o.angle_rule_minus;
    m.angle_rule_minus = o.angle_rule_plus;
    m.spread_plus = o.spread_minus;
    m.spread_minus = o.spread_plus;
    m.critical = o.critical.iter().rev().map(|t| t.flip()).collect();
    m.threshold_bound = o.threshold_bound.iter().rev().map(|t| t.flip()).collect();
    m.tail = o.tail.map(|t| TailExponents {
        alpha: t.beta,
        beta: t.alpha,
    });
    m.via_symmetry = !o.via_symmetry;
    r
}

fn eta_value(p: &ThresholdPhase) -> f64 {
    match (p.method, p.raw_over_pi) {
        (ThresholdMethod::Extrapolated, Some(raw)) => raw * PI,
        _ => p.multiple as f64 * PI,
    }
}

/// Runs the full check for one `(V, M, j)`.
pub fn verify(
    potential: &PotentialModel,
    mass: f64,
    j: f64,
    tol: &Tolerances,
    mode: ExecMode,
) -> Result<LevinsonReport> {
    if j < 0.0 {
        let mirrored = verify(&potential.negated(), mass, -j, tol, mode)?;
        return Ok(symmetry_map(&mirrored));
    }
    let integrability = potential.check_integrability();
    if !integrability.is_ok() {
        let crate::potential::Integrability::Divergent { diagnostic, .. } = integrability else {
            unreachable!()
        };
        return Err(SolverError::NotIntegrable(diagnostic));
    }
    match potential.tail() {
        Tail::Power { b, n } if b != 0.0 && n == 2.0 => {
            verify_tail(potential, mass, j, b, tol, mode)
        }
        Tail::Power { n, .. } if n < 2.0 => Err(SolverError::UnsupportedRegime(format!(
            "tail exponent n = {n} below 2"
        ))),
        Tail::Power { b, n } if b != 0.0 => {
            let r0 = potential.r0();
            let r_eff = r0.max((b.abs() / TAIL_EPSILON).powf(1.0 / (n - 2.0)));
            verify_cutoff(&potential.fold_tail(r_eff)?, mass, j, tol, mode)
        }
        _ => verify_cutoff(potential, mass, j, tol, mode),
    }
}

/// [`verify`] for an `n > 2` tail at a chosen effective radius.
pub fn verify_folded(
    potential: &PotentialModel,
    mass: f64,
    j: f64,
    r_eff: f64,
    tol: &Tolerances,
    mode: ExecMode,
) -> Result<LevinsonReport> {
    if j < 0.0 {
        let mirrored = verify_folded(&potential.negated(), mass, -j, r_eff, tol, mode)?;
        return Ok(symmetry_map(&mirrored));
    }
    verify_cutoff(&potential.fold_tail(r_eff)?, mass, j, tol, mode)
}

struct Pieces {
    spec: ProblemSpec,
    spectrum: spectrum::SpectrumReport,
    plus: ThresholdPhase,
    minus: ThresholdPhase,
}

fn solve_pieces(
    potential: &PotentialModel,
    mass: f64,
    j: f64,
    tol: &Tolerances,
    mode: ExecMode,
) -> Result<Pieces> {
    let spec = ProblemSpec::new(potential.clone(), mass, j, 1.0)?;
    spectrum::validate_range(&spec)?;
    let opts = &tol.solver;
    let spectrum = spectrum::spectrum(&spec, tol.tol_e * mass, tol.tol_half, opts, mode)?;
    let sides = [Threshold::PlusM, Threshold::MinusM];
    let mut phases = exec::try_map(mode, &sides, |&s| {
        threshold_phase(&spec, s, opts, tol.tol_half)
    })?;
    let minus = phases.pop().expect("two sides");
    let plus = phases.pop().expect("two sides");
    Ok(Pieces {
        spec,
        spectrum,
        plus,
        minus,
    })
}

fn metadata(p: &Pieces, tail: Option<TailExponents>) -> ReportMetadata {
    ReportMetadata {
        method_plus: p.plus.method,
        method_minus: p.minus.method,
        angle_rule_plus: p.plus.angle_rule,
        angle_rule_minus: p.minus.angle_rule,
        spread_plus: p.plus.spread_over_pi,
        spread_minus: p.minus.spread_over_pi,
        critical: p.spectrum.critical.clone(),
        method_agreement: p.spectrum.method_agreement,
        threshold_bound: p.spectrum.threshold_bound.clone(),
        tail,
        effective_r0: p.spec.potential.r0(),
        via_symmetry: false,
        inclusive_threshold: true,
        grid_points: p.spectrum.grid_points,
        note: None,
    }
}

fn verify_cutoff(
    potential: &PotentialModel,
    mass: f64,
    j: f64,
    tol: &Tolerances,
    mode: ExecMode,
) -> Result<LevinsonReport> {
    let p = solve_pieces(potential, mass, j, tol, mode)?;
    let free = potential.is_free();
    let eta_plus = eta_value(&p.plus);
    let eta_minus = eta_value(&p.minus);
    let lhs = eta_plus + eta_minus;
    let n_j = p.spectrum.n_j;
    let half_bound = p.spectrum.half_bound;
    let correction = correction_for(j, half_bound);
    let residual = lhs - (n_j + correction) as f64 * PI;
    let critical = !free && !p.spectrum.critical.is_empty();
    let dual_residuals = critical.then(|| [lhs - n_j as f64 * PI, lhs - (n_j + 1) as f64 * PI]);
    let classification = if critical {
        Classification::CriticalAmbiguous
    } else if residual.abs() < tol.residual * PI {
        Classification::Verified
    } else {
        Classification::Violated
    };
    Ok(LevinsonReport {
        j,
        lhs,
        eta_plus,
        eta_minus,
        eta_plus_multiple: p.plus.multiple,
        eta_minus_multiple: p.minus.multiple,
        n_j,
        bound_energies: p.spectrum.bound_energies.clone(),
        half_bound,
        correction,
        tail_offset: 0.0,
        residual,
        dual_residuals,
        classification,
        metadata: metadata(&p, None),
    })
}

fn verify_tail(
    potential: &PotentialModel,
    mass: f64,
    j: f64,
    b: f64,
    tol: &Tolerances,
    mode: ExecMode,
) -> Result<LevinsonReport> {
    let exps =
        tail_exponents(j, mass, b).map_err(|e| SolverError::UnsupportedRegime(e.to_string()))?;
    let p = solve_pieces(potential, mass, j, tol, mode)?;
    let tail_offset = (2.0 * j - exps.alpha - exps.beta) * FRAC_PI_2;
    let eta_plus = p.plus.multiple as f64 * PI + (j - exps.alpha - 0.5) * FRAC_PI_2;
    let eta_minus = p.minus.multiple as f64 * PI + (j - exps.beta + 0.5) * FRAC_PI_2;
    let lhs = eta_plus + eta_minus;
    let n_j = p.spectrum.n_j;
    let residual = lhs - n_j as f64 * PI - tail_offset;
    let plus_critical = p.spectrum.critical.contains(&Threshold::PlusM);
    let minus_critical = p.spectrum.critical.contains(&Threshold::MinusM);
    let unsupported = (plus_critical && exps.alpha < 1.0) || (minus_critical && exps.beta < 1.0);
    let critical = plus_critical || minus_critical;
    let classification = if unsupported {
        Classification::UnsupportedRegime
    } else if critical {
        Classification::CriticalAmbiguous
    } else if residual.abs() < tol.residual * PI {
        Classification::Verified
    } else {
        Classification::Violated
    };
    let mut metadata = metadata(&p, Some(exps));
    if unsupported {
        metadata.note = Some("critical tail case with an exponent below 1".into());
    }
    Ok(LevinsonReport {
        j,
        lhs,
        eta_plus,
        eta_minus,
        eta_plus_multiple: p.plus.multiple,
        eta_minus_multiple: p.minus.multiple,
        n_j,
        bound_energies: p.spectrum.bound_energies.clone(),
        half_bound: HalfBound::None,
        correction: 0,
        tail_offset,
        residual,
        dual_residuals: critical.then_some([residual, residual - PI]),
        classification,
        metadata,
    })
}

/// [`verify`] for several `j` values, in input order.
pub fn verify_all(
    potential: &PotentialModel,
    mass: f64,
    js: &[f64],
    tol: &Tolerances,
    mode: ExecMode,
) -> Vec<Result<LevinsonReport>> {
    exec::map(mode, js, |&j| verify(potential, mass, j, tol, mode))
}
