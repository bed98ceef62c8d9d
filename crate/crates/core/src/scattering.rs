//! Phase shifts for `|E| > M` and their threshold limits.
//!
//! Outside `r0` the free solutions are `√r J_{j∓1/2}(kr)`, `√r N_{j∓1/2}(kr)`,
//! giving
//!
//! ```text
//! tan η = (A J₊ − B J₋) / (A N₊ − B N₋),   J± = J_{j±1/2}(kr0)
//! ```
//!
//! In projective form the numerator and denominator are
//! `sin θ J₊ − B cos θ J₋` and `sin θ N₊ − B cos θ N₋`, so `atan2` of the pair
//! fixes η modulo 2π. As θ advances by π this angle moves monotonically by
//! `−π` (E > M) or `+π` (E < −M), which lets η be lifted to an absolute value
//! from the interior angle alone: `η(λ) = F(θ_λ) − F(θ_0)` with `F` the
//! continuous lift and `θ_0` the free angle at the same energy. No λ path is
//! needed for the value; [`phase_sweep`] still records one.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::potential::{ProblemSpec, Tail};
use crate::radial::{
    exterior_ratio, exterior_tail_ratio, free_interior_ratio, integrate_interior, Energy,
    MatchRatio, SolverOptions, Threshold,
};
use crate::special::{cylinder_pair, gamma};

/// `k_min · r0` for threshold extrapolation.
pub const THRESHOLD_KR_MIN: f64 = 1e-3;
/// Largest spread of the threshold extrapolants, in units of π.
pub const THRESHOLD_SPREAD_TOL: f64 = 0.05;
/// Smallest path step (in λ and in E/M) before a phase jump is declared ambiguous.
pub const MIN_PATH_STEP: f64 = 1e-8;

fn momentum(e: Energy) -> Result<f64> {
    e.k().ok_or_else(|| {
        SolverError::Domain(format!("|E| = {} is not above M = {}", e.e.abs(), e.mass))
    })
}

/// `B(E)`: `√((E+M)/(E−M))` above the gap, `−√((|E|−M)/(|E|+M))` below it.
pub fn b_factor(e: Energy) -> Result<f64> {
    let k = momentum(e)?;
    let a = e.e.abs();
    Ok(if e.e > 0.0 {
        (a + e.mass) / k
    } else {
        -k / (a + e.mass)
    })
}

struct Cylinders {
    jm: f64,
    jp: f64,
    nm: f64,
    np: f64,
}

fn cylinders(j: f64, x: f64) -> Result<Cylinders> {
    let lo = cylinder_pair(j - 0.5, x)?;
    let hi = cylinder_pair(j + 0.5, x)?;
    Ok(Cylinders {
        jm: lo.j,
        jp: hi.j,
        nm: lo.y,
        np: hi.y,
    })
}

/// `tan η` from the match ratio. A finite `A` uses the direct form, a pole
/// uses the inverse-ratio form.
pub fn tan_phase_shift(j: f64, e: Energy, a: &MatchRatio, r0: f64) -> Result<f64> {
    if a.is_pole() {
        tan_phase_shift_inverse(j, e, 0.0, r0)
    } else {
        tan_phase_shift_direct(j, e, a.value, r0)
    }
}

/// `tan η = (J₊/N₊)·(A − B J₋/J₊)/(A − B N₋/N₊)`.
pub fn tan_phase_shift_direct(j: f64, e: Energy, a: f64, r0: f64) -> Result<f64> {
    let k = momentum(e)?;
    let b = b_factor(e)?;
    let c = cylinders(j, k * r0)?;
    Ok((c.jp / c.np) * (a - b * c.jm / c.jp) / (a - b * c.nm / c.np))
}

/// `tan η = (J₋/N₋)·(A⁻¹ − B⁻¹ J₊/J₋)/(A⁻¹ − B⁻¹ N₊/N₋)`.
pub fn tan_phase_shift_inverse(j: f64, e: Energy, a_inv: f64, r0: f64) -> Result<f64> {
    let k = momentum(e)?;
    let b = b_factor(e)?;
    let c = cylinders(j, k * r0)?;
    Ok((c.jm / c.nm) * (a_inv - c.jp / (b * c.jm)) / (a_inv - c.np / (b * c.nm)))
}

/// η modulo 2π from the projective pair `(numerator, denominator)`.
pub fn raw_phase(j: f64, e: Energy, theta: f64, r0: f64) -> Result<f64> {
    raw_phase_k(j, momentum(e)?, b_factor(e)?, theta, r0)
}

fn raw_phase_k(j: f64, k: f64, b: f64, theta: f64, r0: f64) -> Result<f64> {
    let c = cylinders(j, k * r0)?;
    let (s, co) = exact_sin_cos(theta);
    Ok((s * c.jp - b * co * c.jm).atan2(s * c.np - b * co * c.nm))
}

/// `sin_cos` that returns an exact zero cosine at the pole angle `π/2`,
/// which matters once the cosine is multiplied by `B ~ 1/k`.
fn exact_sin_cos(theta: f64) -> (f64, f64) {
    if theta == FRAC_PI_2 {
        (1.0, 0.0)
    } else {
        theta.sin_cos()
    }
}

/// Direction in which η moves as θ increases: `−1` above the gap, `+1` below.
pub fn phase_orientation(e: Energy) -> f64 {
    if e.e > 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Absolute η for interior angle `theta` given the free angle `theta_free`
/// at the same energy.
pub fn lifted_phase(j: f64, e: Energy, theta: f64, theta_free: f64, r0: f64) -> Result<f64> {
    lifted_phase_k(
        j,
        phase_orientation(e),
        momentum(e)?,
        b_factor(e)?,
        theta,
        theta_free,
        r0,
    )
}

fn lifted_phase_k(
    j: f64,
    s: f64,
    k: f64,
    b: f64,
    theta: f64,
    theta_free: f64,
    r0: f64,
) -> Result<f64> {
    if theta == theta_free {
        return Ok(0.0);
    }
    let m = ((theta - theta_free) / PI).floor();
    // The raw angle also advances by π per period of θ; remove that, then
    // the remainder is known mod 2π and lies in s·[0, π).
    let d = raw_phase_k(j, k, b, theta, r0)? - raw_phase_k(j, k, b, theta_free, r0)? - m * PI;
    let centre = s * FRAC_PI_2;
    let d = d - 2.0 * PI * ((d - centre) / (2.0 * PI)).round();
    Ok(s * m * PI + d)
}

/// Free interior angle at any energy.
pub fn free_angle(spec: &ProblemSpec, e: Energy, opts: &SolverOptions) -> Result<f64> {
    if e.e.abs() <= e.mass {
        return Ok(free_interior_ratio(spec.j, e, spec.potential.r0(), e.mass)?.theta);
    }
    Ok(integrate_interior(&spec.with_lambda(0.0), e, opts)?.theta)
}

/// `η_j(E, λ)` for `|E| > M` with the free convention `η(E, 0) = 0`.
pub fn phase_shift(spec: &ProblemSpec, e: Energy, opts: &SolverOptions) -> Result<f64> {
    let theta = integrate_interior(spec, e, opts)?.theta;
    let theta0 = integrate_interior(&spec.with_lambda(0.0), e, opts)?.theta;
    lifted_phase(spec.j, e, theta, theta0, spec.potential.r0())
}

/// One node of a phase sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub lambda: f64,
    pub e: f64,
    pub k: f64,
    pub tan_eta: f64,
    pub eta: f64,
}

/// Phase shifts along a `(λ, E)` path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseShiftRecord {
    pub j: f64,
    pub samples: Vec<PhaseSample>,
    /// Sharp transitions of η (|Δη| ≥ π/2 before refinement) met along the path.
    pub transitions: usize,
    pub eta_at_plus_m: Option<f64>,
    pub eta_at_minus_m: Option<f64>,
}

/// Walk a `(λ, E)` path, bisecting segments where η moves by `π/2` or more.
/// The path must start at `λ = 0`.
pub fn phase_sweep(
    spec: &ProblemSpec,
    path: &[(f64, f64)],
    opts: &SolverOptions,
) -> Result<PhaseShiftRecord> {
    let mass = spec.mass;
    let r0 = spec.potential.r0();
    if let Some(&(l0, _)) = path.first() {
        if l0 != 0.0 {
            return Err(SolverError::Domain(format!(
                "phase path must start at lambda = 0, got {l0}"
            )));
        }
    }
    let mut free_cache: HashMap<u64, f64> = HashMap::new();
    let mut eval = |lambda: f64, e: f64| -> Result<PhaseSample> {
        let en = Energy::new(e, mass);
        let k = momentum(en)?;
        let theta0 = match free_cache.get(&e.to_bits()) {
            Some(&t) => t,
            None => {
                let t = free_angle(spec, en, opts)?;
                free_cache.insert(e.to_bits(), t);
                t
            }
        };
        let ratio = if lambda == 0.0 {
            MatchRatio::from_angle(theta0)
        } else {
            integrate_interior(&spec.with_lambda(lambda), en, opts)?
        };
        let eta = lifted_phase(spec.j, en, ratio.theta, theta0, r0)?;
        Ok(PhaseSample {
            lambda,
            e,
            k,
            tan_eta: eta.tan(),
            eta,
        })
    };

    let mut samples: Vec<PhaseSample> = Vec::with_capacity(path.len());
    let mut transitions = 0;
    for &(lambda, e) in path {
        let next = eval(lambda, e)?;
        let Some(&prev) = samples.last() else {
            samples.push(next);
            continue;
        };
        if (next.eta - prev.eta).abs() < FRAC_PI_2 {
            samples.push(next);
            continue;
        }
        transitions += 1;
        // Bisect until every step moves η by less than π/2.
        let mut stack = vec![(prev, next)];
        let mut refined = Vec::new();
        while let Some((a, b)) = stack.pop() {
            if (b.eta - a.eta).abs() < FRAC_PI_2 {
                refined.push(b);
                continue;
            }
            let step = (b.lambda - a.lambda).abs().max((b.e - a.e).abs() / mass);
            if step < MIN_PATH_STEP {
                return Err(SolverError::BranchAmbiguity {
                    lambda: b.lambda,
                    energy: b.e,
                });
            }
            let mid = eval(0.5 * (a.lambda + b.lambda), 0.5 * (a.e + b.e))?;
            stack.push((mid, b));
            stack.push((a, mid));
        }
        samples.extend(refined);
    }
    Ok(PhaseShiftRecord {
        j: spec.j,
        samples,
        transitions,
        eta_at_plus_m: None,
        eta_at_minus_m: None,
    })
}

/// How a threshold phase was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMethod {
    /// Richardson extrapolation of η(k) to k = 0.
    Extrapolated,
    /// Exact count from the interior and exterior threshold angles.
    AngleRule,
}

/// Interior and exterior angles at a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAngles {
    pub side: Threshold,
    pub interior: MatchRatio,
    pub exterior: MatchRatio,
}

impl ThresholdAngles {
    /// `θ_int − θ_ext`.
    pub fn mismatch(&self) -> f64 {
        self.interior.theta - self.exterior.theta
    }

    /// True when `A_int` lies within the `tol_half` band of the exterior
    /// threshold ratio.
    pub fn is_critical(&self, tol_half: f64) -> bool {
        let a = self.interior;
        let c = self.exterior;
        if c.is_pole() || c.theta_mod_pi() == FRAC_PI_2 {
            return a.inverse().abs() < tol_half;
        }
        if a.is_pole() {
            return false;
        }
        (a.value - c.value).abs() < tol_half * (1.0 + c.value.abs())
    }
}

/// Interior angle at `E = ±M`. Free problems use the closed form so that
/// exactly critical cases stay exact.
pub fn threshold_interior(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
) -> Result<MatchRatio> {
    let e = side.energy(spec.mass);
    if spec.lambda == 0.0 || spec.potential.is_free() {
        return free_interior_ratio(spec.j, e, spec.potential.r0(), spec.mass);
    }
    integrate_interior(spec, e, opts)
}

/// Threshold angles against the exterior solution used for bound-state matching.
pub fn threshold_angles(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
) -> Result<ThresholdAngles> {
    let interior = threshold_interior(spec, side, opts)?;
    let exterior = exterior_ratio(spec, side.energy(spec.mass), opts)?;
    Ok(ThresholdAngles {
        side,
        interior,
        exterior,
    })
}

/// Closed-form exterior threshold ratio at coupling `λ` (cutoff or `r⁻²` tail).
fn closed_exterior(spec: &ProblemSpec, side: Threshold) -> Result<MatchRatio> {
    let r0 = spec.potential.r0();
    let b = match spec.potential.tail() {
        Tail::Power { b, n: 2.0 } => spec.lambda * b,
        _ => 0.0,
    };
    exterior_tail_ratio(spec.j, side, r0, spec.mass, b)
}

pub(crate) fn plus_index(j: f64, mismatch: f64) -> i64 {
    // A mismatch sitting exactly on a multiple of π is "already bound" for
    // j ≥ 3/2 and "not yet bound" for j = 1/2.
    if j > 0.5 {
        -(mismatch / PI).ceil() as i64
    } else {
        -(mismatch / PI).floor() as i64
    }
}

pub(crate) fn minus_index(mismatch: f64) -> i64 {
    (mismatch / PI).floor() as i64
}

/// `η(±M)/π` from the threshold angles: the number of times the interior
/// angle has crossed the exterior threshold angle (mod π) on the way from
/// zero coupling.
pub fn threshold_angle_rule(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
) -> Result<i64> {
    let ext_now = closed_exterior(spec, side)?;
    let ext_free = closed_exterior(&spec.with_lambda(0.0), side)?;
    let int_now = threshold_interior(spec, side, opts)?;
    let int_free = free_interior_ratio(
        spec.j,
        side.energy(spec.mass),
        spec.potential.r0(),
        spec.mass,
    )?;
    let now = int_now.theta - ext_now.theta;
    let free = int_free.theta - ext_free.theta;
    Ok(match side {
        Threshold::PlusM => plus_index(spec.j, now) - plus_index(spec.j, free),
        Threshold::MinusM => minus_index(now) - minus_index(free),
    })
}

/// Threshold limit `η(±M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPhase {
    pub side: Threshold,
    /// `η(±M)/π`, an integer.
    pub multiple: i64,
    /// Unrounded extrapolated value, in units of π (absent for the angle rule).
    pub raw_over_pi: Option<f64>,
    /// Largest disagreement between the extrapolants, in units of π.
    pub spread_over_pi: Option<f64>,
    pub method: ThresholdMethod,
    /// Independent angle-rule value.
    pub angle_rule: i64,
    pub critical: bool,
}

impl ThresholdPhase {
    pub fn value(&self) -> f64 {
        self.multiple as f64 * PI
    }
}

/// Extrapolate η(k) at `k_i = k_min 2^i`, `i = 0..3`, to `k = 0`.
///
/// Returns the Richardson estimate (in k²) and the spread of the four
/// extrapolants, both in units of π.
pub fn extrapolate_threshold(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    if let Some(kr) = log_branch_kr(spec.j, side) {
        return extrapolate_log_branch(spec, side, kr, opts);
    }
    let r0 = spec.potential.r0();
    let k_min = THRESHOLD_KR_MIN / r0;
    let mut eta = [0.0; 4];
    for (i, v) in eta.iter_mut().enumerate() {
        let k = k_min * (1u32 << i) as f64;
        *v = phase_shift(spec, Energy::from_k(k, side.sign(), spec.mass), opts)?;
    }
    let rich = |a: f64, b: f64| (4.0 * a - b) / 3.0;
    let ext = [
        eta[0],
        rich(eta[0], eta[1]),
        rich(eta[1], eta[2]),
        rich(eta[2], eta[3]),
    ];
    let lo = ext.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ext.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((ext[1] / PI, (hi - lo) / PI))
}

/// Branches whose critical (or, for j = 1/2 at `+M`, generic) approach to
/// threshold is logarithmic, with the `kr0` values used for them. The
/// j = 3/2 values stay above 1e-80 so that `N₂(kr0)` remains finite.
fn log_branch_kr(j: f64, side: Threshold) -> Option<[f64; 4]> {
    match (j, side) {
        (0.5, _) => Some([1e-20, 1e-40, 1e-80, 1e-160]),
        (1.5, Threshold::PlusM) => Some([1e-10, 1e-20, 1e-40, 1e-80]),
        _ => None,
    }
}

/// Threshold limit on a logarithmic branch.
///
/// Here `cot η` becomes linear in `L = ln(kr0/2)`, so η creeps towards its
/// limit like `1/L` and a k² extrapolation cannot see it. At the tiny `kr0`
/// used here the interior angle equals its threshold value to working
/// precision; η is evaluated with that frozen angle. If η already sits on a
/// multiple of π (the power-law case) that multiple is the limit. Otherwise
/// `cot η` is fitted against `L` and the limit is the multiple of π that η
/// approaches as `L → −∞`. The spread is the largest fit residual converted
/// to an angle.
fn extrapolate_log_branch(
    spec: &ProblemSpec,
    side: Threshold,
    kr: [f64; 4],
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    let r0 = spec.potential.r0();
    let mass = spec.mass;
    let e = side.energy(mass);
    let theta = threshold_interior(spec, side, opts)?.theta;
    let theta_free = free_interior_ratio(spec.j, e, r0, mass)?.theta;
    let mut eta = [0.0; 4];
    let mut l = [0.0; 4];
    for (i, &x) in kr.iter().enumerate() {
        let k = x / r0;
        let (s, b) = match side {
            Threshold::PlusM => (-1.0, 2.0 * mass / k),
            Threshold::MinusM => (1.0, -k / (2.0 * mass)),
        };
        eta[i] = lifted_phase_k(spec.j, s, k, b, theta, theta_free, r0)?;
        l[i] = (x / 2.0).ln();
    }
    let last = eta[3] / PI;
    let settled = eta
        .iter()
        .map(|v| (v / PI - last.round()).abs())
        .fold(0.0, f64::max);
    if settled < 1e-9 {
        return Ok((last.round(), settled));
    }
    let cot: Vec<f64> = eta.iter().map(|v| v.cos() / v.sin()).collect();
    let n = 4.0;
    let lm = l.iter().sum::<f64>() / n;
    let cm = cot.iter().sum::<f64>() / n;
    let sxx: f64 = l.iter().map(|x| (x - lm).powi(2)).sum();
    let sxy: f64 = l.iter().zip(&cot).map(|(x, y)| (x - lm) * (y - cm)).sum();
    let slope = sxy / sxx;
    let spread = l
        .iter()
        .zip(&cot)
        .map(|(x, c)| {
            let fit = cm + slope * (x - lm);
            (c - fit).abs() / (1.0 + c * c) / PI
        })
        .fold(0.0, f64::max);
    // cot η decreases with L when the slope is positive, so η rises.
    let limit = if slope > 0.0 {
        last.ceil()
    } else {
        last.floor()
    };
    Ok((limit, spread))
}

/// `η(±M)` rounded to a multiple of π, with the angle rule as fallback when
/// the extrapolation does not settle and as a cross-check otherwise.
pub fn threshold_phase(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
    tol_half: f64,
) -> Result<ThresholdPhase> {
    let angles = threshold_angles(spec, side, opts)?;
    let free = spec.lambda == 0.0 || spec.potential.is_free();
    let critical = !free && angles.is_critical(tol_half);
    let tail_n2 = matches!(spec.potential.tail(), Tail::Power { n, .. } if n == 2.0);
    let angle_rule = threshold_angle_rule(spec, side, opts)?;
    if tail_n2 {
        return Ok(ThresholdPhase {
            side,
            multiple: angle_rule,
            raw_over_pi: None,
            spread_over_pi: None,
            method: ThresholdMethod::AngleRule,
            angle_rule,
            critical,
        });
    }
    let (raw, spread) = extrapolate_threshold(spec, side, opts)?;
    let converged = spread <= THRESHOLD_SPREAD_TOL;
    let (multiple, method) = if converged {
        (raw.round() as i64, ThresholdMethod::Extrapolated)
    } else {
        log::warn!(
            "j = {} at {side:?}: extrapolation spread {spread:.3}π, using the angle rule",
            spec.j
        );
        (angle_rule, ThresholdMethod::AngleRule)
    };
    Ok(ThresholdPhase {
        side,
        multiple,
        raw_over_pi: Some(raw),
        spread_over_pi: Some(spread),
        method,
        angle_rule,
        critical,
    })
}

/// Strict variant of [`extrapolate_threshold`] that fails instead of
/// falling back.
pub fn threshold_phase_extrapolated(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
) -> Result<i64> {
    let (raw, spread) = extrapolate_threshold(spec, side, opts)?;
    if spread > THRESHOLD_SPREAD_TOL {
        return Err(SolverError::NotConverged {
            spread_over_pi: spread,
        });
    }
    Ok(raw.round() as i64)
}

/// Near-threshold curvature of the interior ratio:
/// `A(E) = A(M) − c₁² k² + …` above, `A(E) = A(−M) + c₂² k² + …` below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub c1_sq: f64,
    pub c2_sq: f64,
}

/// Quadratic-in-k² least-squares fit `A ≈ a0 + a1 k² + a2 k⁴` of `(k, A)`
/// samples. Returns `(a0, a1)`.
pub fn fit_threshold_side(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 4 {
        return Err(SolverError::IllConditioned(format!(
            "{} samples, need at least 4",
            samples.len()
        )));
    }
    let k2: Vec<f64> = samples.iter().map(|s| s.0 * s.0).collect();
    let (lo, hi) = k2
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(hi >= (100.0 - 1e-9) * lo) {
        return Err(SolverError::IllConditioned(
            "k^2 must span two decades".into(),
        ));
    }
    // Scale k² to O(1) before forming normal equations.
    let u: Vec<f64> = k2.iter().map(|v| v / hi).collect();
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (ui, &(_, a)) in u.iter().zip(samples) {
        let row = [1.0, *ui, ui * ui];
        for r in 0..3 {
            atb[r] += row[r] * a;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let coef = solve3(ata, atb)
        .ok_or_else(|| SolverError::IllConditioned("singular normal equations".into()))?;
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let span = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = u
        .iter()
        .zip(&values)
        .map(|(ui, a)| (coef[0] + coef[1] * ui + coef[2] * ui * ui - a).abs())
        .fold(0.0, f64::max);
    if worst > 0.01 * span.max(f64::MIN_POSITIVE) && worst > 1e-12 * values[0].abs().max(1.0) {
        return Err(SolverError::IllConditioned(format!(
            "fit residual {worst:e} exceeds 1% of the variation {span:e}"
        )));
    }
    Ok((coef[0], coef[1] / hi))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Samples of the interior ratio at `k r0 = 1e-3 … 1e-2` on one side.
pub fn threshold_samples(
    spec: &ProblemSpec,
    side: Threshold,
    opts: &SolverOptions,
) -> Result<Vec<(f64, f64)>> {
    let r0 = spec.potential.r0();
    (0..8)
        .map(|i| {
            let k = 1e-3 / r0 * 10f64.powf(i as f64 / 7.0);
            let a = integrate_interior(spec, Energy::from_k(k, side.sign(), spec.mass), opts)?;
            Ok((k, a.value))
        })
        .collect()
}

/// Fit `c₁²` and `c₂²` for the problem at its own coupling.
pub fn threshold_fit(spec: &ProblemSpec, opts: &SolverOptions) -> Result<ThresholdFit> {
    let (_, up) = fit_threshold_side(&threshold_samples(spec, Threshold::PlusM, opts)?)?;
    let (_, down) = fit_threshold_side(&threshold_samples(spec, Threshold::MinusM, opts)?)?;
    Ok(ThresholdFit {
        c1_sq: -up,
        c2_sq: down,
    })
}

/// Which small-k form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticBranch {
    AbovePowerLaw,
    AboveJThreeHalves,
    AboveJHalf,
    BelowPowerLaw,
    BelowJHalf,
}

pub fn asymptotic_branch(j: f64, e: Energy) -> AsymptoticBranch {
    match (e.e > 0.0, j) {
        (true, j) if j > 1.5 => AsymptoticBranch::AbovePowerLaw,
        (true, 1.5) => AsymptoticBranch::AboveJThreeHalves,
        (true, _) => AsymptoticBranch::AboveJHalf,
        (false, j) if j >= 1.5 => AsymptoticBranch::BelowPowerLaw,
        (false, _) => AsymptoticBranch::BelowJHalf,
    }
}

/// Leading plus next-leading small-k form of `tan η`, given the threshold
/// ratio `A(±M)` and the fitted curvature. Validation use only.
pub fn asymptotic_tan_eta(
    j: f64,
    e: Energy,
    a_threshold: f64,
    fit: &ThresholdFit,
    r0: f64,
) -> Result<f64> {
    let k = momentum(e)?;
    let mass = e.mass;
    let x = k * r0;
    let fact = gamma(j + 1.5) * gamma(j + 0.5);
    let a = a_threshold;
    let k2 = k * k;
    Ok(match asymptotic_branch(j, e) {
        AsymptoticBranch::AbovePowerLaw => {
            let num = a - 2.0 * mass * (2.0 * j + 1.0) / (k2 * r0);
            let den = a
                - fit.c1_sq * k2
                - 2.0 * mass * r0 / (2.0 * j - 1.0)
                    * (1.0 + x * x / ((2.0 * j - 1.0) * (2.0 * j - 3.0)));
            -PI * (x / 2.0).powf(2.0 * j + 1.0) / fact * num / den
        }
        AsymptoticBranch::AboveJThreeHalves => {
            let num = a - 8.0 * mass / (k2 * r0);
            let den = a - fit.c1_sq * k2 - mass * r0 * (1.0 - x * x / 2.0 * x.ln());
            -FRAC_PI_2 * (x / 2.0).powi(4) * num / den
        }
        AsymptoticBranch::AboveJHalf => {
            let inv = 1.0 / a;
            let num = inv + fit.c1_sq * k2 - k2 * r0 / (4.0 * mass);
            let den = inv + fit.c1_sq * k2 + 1.0 / (2.0 * mass * r0 * x.ln());
            PI / (2.0 * x.ln()) * num / den
        }
        AsymptoticBranch::BelowPowerLaw => {
            let num = a + (2.0 * j + 1.0) / (2.0 * mass * r0);
            let den = a + fit.c2_sq * k2 + k2 * r0 / (2.0 * mass * (2.0 * j - 1.0));
            -PI * (x / 2.0).powf(2.0 * j + 1.0) / fact * num / den
        }
        AsymptoticBranch::BelowJHalf => {
            let num = a + 1.0 / (mass * r0);
            let den = a + fit.c2_sq * k2 - k2 * r0 * x.ln() / (2.0 * mass);
            -PI * (x / 2.0).powi(2) * num / den
        }
    })
}

/// Tail exponents for coupling-scaled strength `b`: `(α², β²)`.
pub fn tail_exponent_squares(j: f64, mass: f64, b: f64) -> (f64, f64) {
    (
        j * j - j + 2.0 * mass * b + 0.25,
        j * j + j - 2.0 * mass * b + 0.25,
    )
}

/// `tan δ` for an `r⁻²` tail, matched to real-order Bessel functions, and the
/// offset that turns δ into η.
pub fn tail_tan_delta(j: f64, e: Energy, a: &MatchRatio, r0: f64, b: f64) -> Result<(f64, f64)> {
    let k = momentum(e)?;
    let mass = e.mass;
    let x = k * r0;
    let (a2, b2) = tail_exponent_squares(j, mass, b);
    let (s, c) = a.theta.sin_cos();
    if e.e > 0.0 {
        if a2 <= 0.0 {
            return Err(SolverError::UnsupportedRegime(format!(
                "alpha^2 = {a2} <= 0"
            )));
        }
        let alpha = a2.sqrt();
        let p = cylinder_pair(alpha, x)?;
        let jh = -p.jp + (j - 0.5) * p.j / x;
        let nh = -p.yp + (j - 0.5) * p.y / x;
        let num = s * k * jh - c * 2.0 * mass * p.j;
        let den = s * k * nh - c * 2.0 * mass * p.y;
        Ok((num / den, (j - alpha - 0.5) * FRAC_PI_2))
    } else {
        if b2 <= 0.0 {
            return Err(SolverError::UnsupportedRegime(format!(
                "beta^2 = {b2} <= 0"
            )));
        }
        let beta = b2.sqrt();
        let p = cylinder_pair(beta, x)?;
        let jt = p.jp + (j + 0.5) * p.j / x;
        let nt = p.yp + (j + 0.5) * p.y / x;
        let num = s * 2.0 * mass * p.j + c * k * jt;
        let den = s * 2.0 * mass * p.y + c * k * nt;
        Ok((num / den, (j - beta + 0.5) * FRAC_PI_2))
    }
}

/// η for an `r⁻²` tail: `δ + (j − α − 1/2)π/2` above the gap,
/// `δ + (j − β + 1/2)π/2` below, with δ reduced to `(−π/2, π/2]`.
pub fn tail_phase_shift(j: f64, e: Energy, a: &MatchRatio, r0: f64, b: f64) -> Result<f64> {
    let (t, offset) = tail_tan_delta(j, e, a, r0, b)?;
    Ok(t.atan() + offset)
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
    fn b_factor_examples() {
        assert!((b_factor(Energy::new(1.25, 1.0)).unwrap() - 3.0).abs() < 1e-14);
        assert!((b_factor(Energy::new(-1.25, 1.0)).unwrap() + 1.0 / 3.0).abs() < 1e-14);
        assert!((b_factor(Energy::new(1e8, 1.0)).unwrap() - 1.0).abs() < 1e-7);
        assert!(b_factor(Energy::new(0.5, 1.0)).is_err());
    }

    #[test]
    fn two_lines_agree() {
        for &j in &[0.5, 1.5, 3.5] {
            for &e in &[1.3, -1.7, 4.0] {
                for &a in &[-3.0, 0.2, 17.0] {
                    let en = Energy::new(e, 1.0);
                    let d = tan_phase_shift_direct(j, en, a, 1.2).unwrap();
                    let i = tan_phase_shift_inverse(j, en, 1.0 / a, 1.2).unwrap();
                    assert!((d - i).abs() <= 1e-10 * d.abs().max(1e-300), "{d} {i}");
                }
            }
        }
    }

    #[test]
    fn free_phase_is_zero() {
        let spec = well(0.0, 1.5);
        let opts = SolverOptions::default();
        for &e in &[1.01, 2.0, -1.5] {
            assert_eq!(phase_shift(&spec, Energy::new(e, 1.0), &opts).unwrap(), 0.0);
        }
        let theta = free_angle(&spec, Energy::new(2.0, 1.0), &opts).unwrap();
        let t = tan_phase_shift(
            1.5,
            Energy::new(2.0, 1.0),
            &MatchRatio::from_angle(theta),
            1.0,
        )
        .unwrap();
        assert!(t.abs() < 1e-9);
    }

    #[test]
    fn lift_matches_tan() {
        let opts = SolverOptions::default();
        let spec = well(-6.0, 0.5);
        for &e in &[1.2, 3.0, -1.4] {
            let en = Energy::new(e, 1.0);
            let eta = phase_shift(&spec, en, &opts).unwrap();
            let a = integrate_interior(&spec, en, &opts).unwrap();
            let t = tan_phase_shift(0.5, en, &a, 1.0).unwrap();
            assert!((eta.tan() - t).abs() < 1e-7 * (1.0 + t.abs()), "{eta} {t}");
        }
    }

    #[test]
    fn lift_is_monotone_in_theta() {
        let en = Energy::new(1.5, 1.0);
        let base = 1.9;
        let mut prev = 0.0;
        for i in 1..200 {
            let th = base + 0.05 * i as f64;
            let eta = lifted_phase(1.5, en, th, base, 1.0).unwrap();
            assert!(eta <= prev + 1e-12);
            prev = eta;
        }
        assert!((lifted_phase(1.5, en, base + PI, base, 1.0).unwrap() + PI).abs() < 1e-9);
        let below = Energy::new(-1.5, 1.0);
        assert!(
            (lifted_phase(1.5, below, base + 2.0 * PI, base, 1.0).unwrap() - 2.0 * PI).abs() < 1e-9
        );
    }

    #[test]
    fn fit_recovers_quadratic() {
        let samples: Vec<(f64, f64)> = (0..8)
            .map(|i| 1e-3 * 10f64.powf(i as f64 / 7.0))
            .map(|k| (k, 2.0 - 3.0 * k * k))
            .collect();
        let (a0, a1) = fit_threshold_side(&samples).unwrap();
        assert!((a0 - 2.0).abs() < 1e-12 && (a1 + 3.0).abs() < 1e-6);
        assert!(fit_threshold_side(&samples[..3]).is_err());
    }

    #[test]
    fn branch_selection() {
        assert_eq!(
            asymptotic_branch(2.5, Energy::new(1.1, 1.0)),
            AsymptoticBranch::AbovePowerLaw
        );
        assert_eq!(
            asymptotic_branch(1.5, Energy::new(1.1, 1.0)),
            AsymptoticBranch::AboveJThreeHalves
        );
        assert_eq!(
            asymptotic_branch(0.5, Energy::new(1.1, 1.0)),
            AsymptoticBranch::AboveJHalf
        );
        assert_eq!(
            asymptotic_branch(1.5, Energy::new(-1.1, 1.0)),
            AsymptoticBranch::BelowPowerLaw
        );
        assert_eq!(
            asymptotic_branch(0.5, Energy::new(-1.1, 1.0)),
            AsymptoticBranch::BelowJHalf
        );
    }

    #[test]
    fn tail_reduces_to_cutoff() {
        let opts = SolverOptions::default();
        let spec = well(-2.0, 1.5);
        for &sign in &[1.0, -1.0] {
            // The tail forms use 2M where the exact one has |E| + M; at
            // k = 1e-2 the two agree to O(k²).
            let en = Energy::from_k(1e-2, sign, 1.0);
            let a = integrate_interior(&spec, en, &opts).unwrap();
            let eta_tail = tail_phase_shift(1.5, en, &a, 1.0, 1e-14).unwrap();
            let t = tan_phase_shift(1.5, en, &a, 1.0).unwrap();
            assert!((eta_tail.tan() / t - 1.0).abs() < 1e-3, "{eta_tail} {t}");
        }
    }
}
