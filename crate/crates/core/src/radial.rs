//! Radial Dirac equations in projective (Prüfer) form.
//!
//! For `j > 0` the radial pair
//!
//! ```text
//!  g' + (j/r) g = (E − V − M) f
//! −f' + (j/r) f = (E − V + M) g
//! ```
//!
//! is written with `f = ρ sin θ`, `g = ρ cos θ` and integrated in `t = ln r`:
//!
//! ```text
//! dθ/dt    =  j sin 2θ − r (E − V) − r M cos 2θ
//! d ln ρ/dt = −j cos 2θ − r M sin 2θ
//! ```
//!
//! The match ratio is `A = f/g = tan θ`. The angle is kept absolute (never
//! reduced mod π), so it is continuous in `E` and `λ`; the pole `g = 0` of
//! `A` is an ordinary point of `θ`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::ode::{Dopri5, OdeError};
use crate::potential::{PotentialModel, ProblemSpec, Tail};
use crate::special::{mod_bessel_i_ratio, mod_bessel_k_ratio};

/// Energy together with the mass it is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub e: f64,
    pub mass: f64,
}

impl Energy {
    pub fn new(e: f64, mass: f64) -> Self {
        Energy { e, mass }
    }

    /// Scattering momentum `√(E² − M²)`, defined for `|E| > M`.
    pub fn k(&self) -> Option<f64> {
        let a = self.e.abs();
        (a > self.mass).then(|| ((a - self.mass) * (a + self.mass)).sqrt())
    }

    /// Decay constant `√(M² − E²)`, defined for `|E| ≤ M`.
    pub fn kappa(&self) -> Option<f64> {
        let a = self.e.abs();
        (a <= self.mass).then(|| ((self.mass - a) * (self.mass + a)).sqrt())
    }

    /// Energy with momentum `k` above (`sign = +1`) or below (`sign = −1`) the gap.
    pub fn from_k(k: f64, sign: f64, mass: f64) -> Self {
        Energy {
            e: sign * (k * k + mass * mass).sqrt(),
            mass,
        }
    }

    /// Energy with decay constant `κ` in the gap, on the side given by `sign`.
    pub fn from_kappa(kappa: f64, sign: f64, mass: f64) -> Self {
        let e = ((mass - kappa) * (mass + kappa)).max(0.0).sqrt();
        Energy { e: sign * e, mass }
    }
}

/// The two gap edges `E = ±M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    PlusM,
    MinusM,
}

impl Threshold {
    pub fn sign(self) -> f64 {
        match self {
            Threshold::PlusM => 1.0,
            Threshold::MinusM => -1.0,
        }
    }

    pub fn energy(self, mass: f64) -> Energy {
        Energy::new(self.sign() * mass, mass)
    }

    pub fn flip(self) -> Self {
        match self {
            Threshold::PlusM => Threshold::MinusM,
            Threshold::MinusM => Threshold::PlusM,
        }
    }
}

/// `A = f/g` at the match radius, carried by its absolute angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRatio {
    /// Absolute Prüfer angle; `A = tan θ`.
    pub theta: f64,
    /// `tan θ`, or `±∞` when the angle is an exact pole.
    pub value: f64,
}

impl MatchRatio {
    pub fn from_angle(theta: f64) -> Self {
        MatchRatio {
            theta,
            value: theta.tan(),
        }
    }

    /// Angle of `(f, g)`, in `(−π, π]`.
    pub fn from_components(f: f64, g: f64) -> Self {
        let theta = f.atan2(g);
        let value = if g == 0.0 {
            f64::INFINITY.copysign(f)
        } else {
            f / g
        };
        MatchRatio { theta, value }
    }

    /// Exact pole `g = 0` reached with `A → sign·∞`.
    pub fn pole(theta: f64, sign: f64) -> Self {
        MatchRatio {
            theta,
            value: f64::INFINITY.copysign(sign),
        }
    }

    pub fn theta_mod_pi(&self) -> f64 {
        self.theta.rem_euclid(PI)
    }

    pub fn is_pole(&self) -> bool {
        self.value.is_infinite()
    }

    /// `g/f`, finite at the pole of `A`.
    pub fn inverse(&self) -> f64 {
        if self.is_pole() {
            0.0
        } else {
            self.theta.cos() / self.theta.sin()
        }
    }
}

/// Point on an integrated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialState {
    pub r: f64,
    pub theta: f64,
    pub log_rho: f64,
}

impl RadialState {
    /// `(f, g)` reconstructed with amplitude `exp(log_rho − shift)`.
    pub fn components(&self, shift: f64) -> (f64, f64) {
        let rho = (self.log_rho - shift).exp();
        let (s, c) = self.theta.sin_cos();
        (rho * s, rho * c)
    }
}

/// Integrator settings shared by every radial solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    /// `r_start = start_factor · r0`.
    pub start_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rtol: 1e-12,
            atol: 1e-14,
            start_factor: 1e-6,
        }
    }
}

impl SolverOptions {
    fn stepper(&self) -> Dopri5 {
        Dopri5 {
            rtol: self.rtol,
            atol: self.atol,
            ..Dopri5::default()
        }
    }
}

/// Below this `|λ r V(r)|` at the start radius the potential is treated as
/// regular at the origin.
const COULOMB_ONSET: f64 = 1e-3;

fn require_positive_j(j: f64) -> Result<()> {
    if j > 0.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidSpec(format!(
            "radial solves need j > 0, got {j}"
        )))
    }
}

/// Regular solution at `r_start`.
///
/// For bounded `V` this is `f ∝ r^j`, `g/f = (E − λV − M) r/(2j+1)`. When
/// `r V(r)` does not vanish at the origin (`V ~ c/r`) the Frobenius exponent
/// `s = √(j² − q²)`, `q = λ c`, gives `g/f = −q/(s + j)` instead.
pub fn series_start(spec: &ProblemSpec, e: Energy, r_start: f64) -> Result<RadialState> {
    require_positive_j(spec.j)?;
    let r0 = spec.potential.r0();
    if !(r_start > 0.0 && r_start <= 1e-4 * r0) {
        return Err(SolverError::Domain(format!(
            "r_start = {r_start} must lie in (0, 1e-4 r0]"
        )));
    }
    let j = spec.j;
    let v = spec.potential.evaluate(r_start, spec.lambda)?;
    if !v.is_finite() {
        return Err(SolverError::UnsupportedOrigin(format!(
            "V(r_start) = {v} is not finite"
        )));
    }
    let q = v * r_start;
    let (g_over_f, exponent) = if q.abs() < COULOMB_ONSET {
        ((e.e - e.mass - v) * r_start / (2.0 * j + 1.0), j)
    } else {
        let s2 = j * j - q * q;
        if s2 <= 0.0 {
            return Err(SolverError::UnsupportedOrigin(format!(
                "r·V(r) → {q} at the origin leaves no regular solution for j = {j}"
            )));
        }
        let s = s2.sqrt();
        (-q / (s + j), s)
    };
    let theta = 1f64.atan2(g_over_f);
    let log_rho = exponent * r_start.ln() + 0.5 * (1.0 + g_over_f * g_over_f).ln();
    Ok(RadialState {
        r: r_start,
        theta,
        log_rho,
    })
}

fn stalled(e: OdeError) -> SolverError {
    let (t, reason) = match e {
        OdeError::StepSizeUnderflow { t } => (t, "step size underflow"),
        OdeError::TooManySteps { t } => (t, "step budget exhausted"),
        OdeError::NonFinite { t } => (t, "non-finite state"),
    };
    SolverError::IntegrationFailure {
        r: t.exp(),
        reason: reason.into(),
    }
}

/// Segment ends on `[r_start, r0]`, aligned with potential breakpoints.
fn segments(potential: &PotentialModel, r_start: f64, extra: &[f64]) -> Vec<f64> {
    let mut cuts = vec![r_start];
    cuts.extend(potential.breakpoints().into_iter().filter(|&r| r > r_start));
    cuts.extend(
        extra
            .iter()
            .copied()
            .filter(|&r| r > r_start && r < potential.r0()),
    );
    cuts.push(potential.r0());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts
}

/// Potential seen by the integrator on `[lo, hi]`: `r` is clamped into the
/// segment so one-sided values are used at discontinuities.
#[inline]
fn segment_potential(potential: &PotentialModel, lambda: f64, r: f64, lo: f64, hi: f64) -> f64 {
    let inner_hi = hi * (1.0 - 4.0 * f64::EPSILON);
    let inner_lo = lo * (1.0 + 4.0 * f64::EPSILON);
    lambda * potential.value(r.clamp(inner_lo.min(inner_hi), inner_hi.max(inner_lo)))
}

fn theta_rhs(j: f64, mass: f64, e: f64, r: f64, v: f64, theta: f64) -> f64 {
    let (s2, c2) = (2.0 * theta).sin_cos();
    j * s2 - r * (e - v) - r * mass * c2
}

fn log_rho_rhs(j: f64, mass: f64, r: f64, theta: f64) -> f64 {
    let (s2, c2) = (2.0 * theta).sin_cos();
    -j * c2 - r * mass * s2
}

/// Interior match ratio `A_j(E, λ)` at `r0−`.
pub fn integrate_interior(
    spec: &ProblemSpec,
    e: Energy,
    opts: &SolverOptions,
) -> Result<MatchRatio> {
    let r0 = spec.potential.r0();
    let start = series_start(spec, e, opts.start_factor * r0)?;
    let stepper = opts.stepper();
    let cuts = segments(&spec.potential, start.r, &[]);
    let (j, mass, lambda) = (spec.j, e.mass, spec.lambda);
    let mut theta = start.theta;
    let mut h = 0.05;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let rhs = |t: f64, y: &[f64; 1]| {
            let r = t.exp();
            let v = segment_potential(&spec.potential, lambda, r, lo, hi);
            [theta_rhs(j, mass, e.e, r, v, y[0])]
        };
        let (y, stats) = stepper
            .integrate(rhs, lo.ln(), [theta], hi.ln(), h)
            .map_err(stalled)?;
        theta = y[0];
        h = stats.last_h;
    }
    Ok(MatchRatio::from_angle(theta))
}

/// Interior trajectory sampled at `radii` (sorted, inside `(r_start, r0]`).
pub fn interior_trajectory(
    spec: &ProblemSpec,
    e: Energy,
    radii: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<RadialState>> {
    let r0 = spec.potential.r0();
    let start = series_start(spec, e, opts.start_factor * r0)?;
    if radii.windows(2).any(|w| w[1] < w[0]) || radii.iter().any(|&r| r <= start.r || r > r0) {
        return Err(SolverError::Domain(
            "trajectory radii must be sorted inside (r_start, r0]".into(),
        ));
    }
    let stepper = opts.stepper();
    let cuts = segments(&spec.potential, start.r, radii);
    let (j, mass, lambda) = (spec.j, e.mass, spec.lambda);
    let mut y = [start.theta, start.log_rho];
    let mut h = 0.05;
    let mut out = Vec::with_capacity(radii.len());
    let mut next = 0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let rhs = |t: f64, y: &[f64; 2]| {
            let r = t.exp();
            let v = segment_potential(&spec.potential, lambda, r, lo, hi);
            [
                theta_rhs(j, mass, e.e, r, v, y[0]),
                log_rho_rhs(j, mass, r, y[0]),
            ]
        };
        let (yn, stats) = stepper
            .integrate(rhs, lo.ln(), y, hi.ln(), h)
            .map_err(stalled)?;
        y = yn;
        h = stats.last_h;
        while next < radii.len() && radii[next] <= hi {
            out.push(RadialState {
                r: radii[next],
                theta: y[0],
                log_rho: y[1],
            });
            next += 1;
        }
    }
    Ok(out)
}

fn check_gap(e: Energy) -> Result<f64> {
    e.kappa()
        .ok_or_else(|| SolverError::Domain(format!("|E| = {} exceeds M = {}", e.e.abs(), e.mass)))
}

/// Closed-form interior ratio of the free problem for `|E| ≤ M`:
/// `A = −√((M+E)/(M−E)) · I_{j−1/2}(κr0) / I_{j+1/2}(κr0)`.
///
/// The angle lies in `[π/2, π)`; `E = M` is the pole `θ = π/2`, `A → −∞`.
pub fn free_interior_ratio(j: f64, e: Energy, r0: f64, mass: f64) -> Result<MatchRatio> {
    require_positive_j(j)?;
    let e = Energy::new(e.e, mass);
    let kappa = check_gap(e)?;
    if e.e == mass {
        return Ok(MatchRatio::pole(FRAC_PI_2, -1.0));
    }
    if e.e == -mass {
        let a = -(2.0 * j + 1.0) / (2.0 * mass * r0);
        return Ok(MatchRatio {
            theta: (2.0 * mass * r0).atan2(-(2.0 * j + 1.0)),
            value: a,
        });
    }
    let s = ((mass + e.e) / (mass - e.e)).sqrt();
    let ratio = mod_bessel_i_ratio(j - 0.5, kappa * r0)?;
    Ok(MatchRatio {
        theta: s.atan2(-ratio),
        value: -s / ratio,
    })
}

/// Closed-form exterior ratio for `|E| ≤ M` with no tail:
/// `A = √((M+E)/(M−E)) · K_{j−1/2}(κr0) / K_{j+1/2}(κr0)`.
///
/// The angle increases from `0` at `E = −M` to `atan(2Mr0/(2j−1))` at
/// `E = M` (`π/2` for `j = 1/2`).
pub fn exterior_bound_ratio(j: f64, e: Energy, r0: f64, mass: f64) -> Result<MatchRatio> {
    require_positive_j(j)?;
    let e = Energy::new(e.e, mass);
    let kappa = check_gap(e)?;
    if e.e == mass {
        if j == 0.5 {
            return Ok(MatchRatio::pole(FRAC_PI_2, 1.0));
        }
        let a = 2.0 * mass * r0 / (2.0 * j - 1.0);
        return Ok(MatchRatio {
            theta: (2.0 * mass * r0).atan2(2.0 * j - 1.0),
            value: a,
        });
    }
    if e.e == -mass {
        return Ok(MatchRatio {
            theta: 0.0,
            value: 0.0,
        });
    }
    let s = ((mass + e.e) / (mass - e.e)).sqrt();
    let a = s * mod_bessel_k_ratio(j - 0.5, kappa * r0)?;
    Ok(MatchRatio {
        theta: a.atan(),
        value: a,
    })
}

/// Threshold exterior ratio for an `r⁻²` tail of strength `b`:
/// `2Mr0/(j+α−1/2)` at `E = M` and `−(j−β+1/2)/(2Mr0)` at `E = −M`, with
/// `α² = j² − j + 2Mb + 1/4`, `β² = j² + j − 2Mb + 1/4`.
pub fn exterior_tail_ratio(
    j: f64,
    side: Threshold,
    r0: f64,
    mass: f64,
    b: f64,
) -> Result<MatchRatio> {
    require_positive_j(j)?;
    if b == 0.0 {
        return exterior_bound_ratio(j, side.energy(mass), r0, mass);
    }
    let x = 2.0 * mass * r0;
    match side {
        Threshold::PlusM => {
            let a2 = j * j - j + 2.0 * mass * b + 0.25;
            if a2 <= 0.0 {
                return Err(SolverError::UnsupportedRegime(format!(
                    "alpha^2 = {a2} <= 0"
                )));
            }
            let d = j + a2.sqrt() - 0.5;
            Ok(MatchRatio {
                theta: x.atan2(d),
                value: x / d,
            })
        }
        Threshold::MinusM => {
            let b2 = j * j + j - 2.0 * mass * b + 0.25;
            if b2 <= 0.0 {
                return Err(SolverError::UnsupportedRegime(format!(
                    "beta^2 = {b2} <= 0"
                )));
            }
            let n = -(j - b2.sqrt() + 0.5);
            Ok(MatchRatio {
                theta: n.atan2(x),
                value: n / x,
            })
        }
    }
}

/// Start angle of the decaying exterior solution at large `R` for a pure
/// `b_eff r⁻²` potential.
fn tail_start_angle(j: f64, e: Energy, big_r: f64, b_eff: f64) -> Result<f64> {
    let mass = e.mass;
    let kappa = check_gap(e)?;
    let x = kappa * big_r;
    let alpha2 = j * j - j + 2.0 * mass * b_eff + 0.25;
    let beta2 = j * j + j - 2.0 * mass * b_eff + 0.25;
    if x > 50.0 {
        return Ok((mass + e.e).sqrt().atan2((mass - e.e).sqrt()));
    }
    let use_alpha = e.e > 0.0;
    if use_alpha && alpha2 <= 0.0 {
        return Err(SolverError::UnsupportedRegime(format!(
            "alpha^2 = {alpha2} <= 0"
        )));
    }
    if !use_alpha && beta2 <= 0.0 {
        return Err(SolverError::UnsupportedRegime(format!(
            "beta^2 = {beta2} <= 0"
        )));
    }
    if kappa == 0.0 {
        return Ok(if use_alpha {
            (2.0 * mass * big_r).atan2(j + alpha2.sqrt() - 0.5)
        } else {
            (beta2.sqrt() - j - 0.5).atan2(2.0 * mass * big_r)
        });
    }
    if use_alpha {
        let alpha = alpha2.sqrt();
        let kr = mod_bessel_k_ratio(alpha, x)?;
        Ok((2.0 * mass * kr * big_r).atan2(x + (j - alpha - 0.5) * kr))
    } else {
        let beta = beta2.sqrt();
        let kr = mod_bessel_k_ratio(beta, x)?;
        Ok((x - (j + beta + 0.5) * kr).atan2(2.0 * mass * big_r * kr))
    }
}

/// Outer radius used for the numeric tail exterior.
fn tail_outer_radius(r0: f64, kappa: f64) -> f64 {
    let reach = if kappa > 0.0 {
        (50.0 / kappa).min(1e4 * r0)
    } else {
        1e4 * r0
    };
    r0 + reach
}

/// Exterior ratio at `r0+` for an `r⁻²` tail of strength `b_eff` (coupling
/// included), obtained by integrating the decaying solution inward.
pub fn tail_exterior_ratio(
    j: f64,
    e: Energy,
    r0: f64,
    b_eff: f64,
    opts: &SolverOptions,
) -> Result<MatchRatio> {
    require_positive_j(j)?;
    if b_eff == 0.0 {
        return exterior_bound_ratio(j, e, r0, e.mass);
    }
    let kappa = check_gap(e)?;
    let big_r = tail_outer_radius(r0, kappa);
    let theta0 = tail_start_angle(j, e, big_r, b_eff)?;
    let mass = e.mass;
    let rhs = |t: f64, y: &[f64; 1]| {
        let r = t.exp().max(r0);
        [theta_rhs(j, mass, e.e, r, b_eff / (r * r), y[0])]
    };
    let (y, _) = opts
        .stepper()
        .integrate(rhs, big_r.ln(), [theta0], r0.ln(), 0.05)
        .map_err(stalled)?;
    Ok(MatchRatio::from_angle(y[0]))
}

/// Exterior ratio at `r0+` for `|E| ≤ M` at coupling `λ`, dispatching on the tail.
pub fn exterior_ratio(spec: &ProblemSpec, e: Energy, opts: &SolverOptions) -> Result<MatchRatio> {
    let r0 = spec.potential.r0();
    match spec.potential.tail() {
        Tail::None => exterior_bound_ratio(spec.j, e, r0, e.mass),
        Tail::Power { b, n: 2.0 } => tail_exterior_ratio(spec.j, e, r0, spec.lambda * b, opts),
        Tail::Power { n, .. } => Err(SolverError::UnsupportedRegime(format!(
            "exterior for an r^-{n} tail requires folding the tail into the interior first"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_spec(j: f64, r0: f64, mass: f64) -> ProblemSpec {
        ProblemSpec::new(PotentialModel::free(r0).unwrap(), mass, j, 0.0).unwrap()
    }

    #[test]
    fn energy_momenta() {
        let e = Energy::new(1.25, 1.0);
        assert!((e.k().unwrap() - 0.75).abs() < 1e-15);
        assert!(e.kappa().is_none());
        let g = Energy::new(0.6, 1.0);
        assert!((g.kappa().unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(Energy::new(1.0, 1.0).kappa(), Some(0.0));
        let back = Energy::from_k(0.75, -1.0, 1.0);
        assert!((back.e + 1.25).abs() < 1e-15);
    }

    #[test]
    fn match_ratio_pole() {
        let p = MatchRatio::pole(FRAC_PI_2, -1.0);
        assert!(p.is_pole() && p.value == f64::NEG_INFINITY);
        assert!((p.theta_mod_pi() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.inverse(), 0.0);
        let q = MatchRatio::from_angle(3.0 * PI + 0.3);
        assert!((q.value - 0.3f64.tan()).abs() < 1e-12);
        assert!((q.theta_mod_pi() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn series_start_threshold_ratio_is_small() {
        let spec = free_spec(0.5, 1.0, 1.0);
        let s = series_start(&spec, Energy::new(1.0, 1.0), 1e-6).unwrap();
        assert!((s.theta - FRAC_PI_2).abs() < 1e-12);
        let s = series_start(&spec, Energy::new(0.0, 1.0), 1e-6).unwrap();
        assert!((s.theta.cos() / s.theta.sin() + 1e-6 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn coulomb_start_uses_frobenius_exponent() {
        let pot = PotentialModel::custom("coulomb", 1.0, |r| -0.3 / r).unwrap();
        let spec = ProblemSpec::new(pot, 1.0, 0.5, 1.0).unwrap();
        let s = series_start(&spec, Energy::new(0.0, 1.0), 1e-6).unwrap();
        let sexp = (0.25f64 - 0.09).sqrt();
        assert!((s.theta.cos() / s.theta.sin() - 0.3 / (sexp + 0.5)).abs() < 1e-12);
        let strong = PotentialModel::custom("strong", 1.0, |r| -0.8 / r).unwrap();
        let spec = ProblemSpec::new(strong, 1.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            series_start(&spec, Energy::new(0.0, 1.0), 1e-6),
            Err(SolverError::UnsupportedOrigin(_))
        ));
    }

    #[test]
    fn free_interior_agrees_with_integration() {
        let opts = SolverOptions::default();
        for &j in &[0.5, 1.5, 2.5] {
            for &e in &[-0.9, -0.3, 0.0, 0.5, 0.99] {
                let en = Energy::new(e, 1.0);
                let num = integrate_interior(&free_spec(j, 1.0, 1.0), en, &opts).unwrap();
                let exact = free_interior_ratio(j, en, 1.0, 1.0).unwrap();
                assert!(
                    (num.value / exact.value - 1.0).abs() < 1e-8,
                    "j={j} e={e} {} {}",
                    num.value,
                    exact.value
                );
                assert!((num.theta - exact.theta).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn free_interior_limits() {
        let r = free_interior_ratio(0.5, Energy::new(-1.0, 1.0), 1.0, 1.0).unwrap();
        assert_eq!(r.value, -1.0);
        let r = free_interior_ratio(1.5, Energy::new(1.0, 1.0), 2.0, 1.0).unwrap();
        assert!(r.is_pole() && r.value < 0.0);
        let near = free_interior_ratio(1.5, Energy::new(-1.0 + 1e-12, 1.0), 2.0, 1.0).unwrap();
        assert!((near.value + 4.0 / 4.0).abs() < 1e-5);
    }

    #[test]
    fn exterior_closed_form_limits() {
        let a = exterior_bound_ratio(1.5, Energy::new(1.0, 1.0), 1.0, 1.0).unwrap();
        assert_eq!(a.value, 1.0);
        let z = exterior_bound_ratio(2.5, Energy::new(-1.0, 1.0), 1.0, 1.0).unwrap();
        assert_eq!(z.theta, 0.0);
        let half = exterior_bound_ratio(0.5, Energy::new(1.0, 1.0), 1.0, 1.0).unwrap();
        assert!(half.is_pole() && half.value > 0.0);
    }

    #[test]
    fn tail_ratio_continuity_at_zero_coupling() {
        for &j in &[1.5, 2.5] {
            let c = exterior_bound_ratio(j, Energy::new(1.0, 1.0), 1.3, 1.0).unwrap();
            let t = exterior_tail_ratio(j, Threshold::PlusM, 1.3, 1.0, 1e-12).unwrap();
            assert!((c.value - t.value).abs() < 1e-9);
            let t = exterior_tail_ratio(j, Threshold::MinusM, 1.3, 1.0, 1e-12).unwrap();
            assert!(t.value.abs() < 1e-9);
        }
        let r = exterior_tail_ratio(0.5, Threshold::PlusM, 1.0, 1.0, 0.5).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        assert!(exterior_tail_ratio(1.5, Threshold::PlusM, 1.0, 1.0, -0.6).is_err());
    }

    #[test]
    fn integration_is_deterministic() {
        let spec = ProblemSpec::new(
            PotentialModel::square_well(-3.0, 1.0).unwrap(),
            1.0,
            0.5,
            1.0,
        )
        .unwrap();
        let opts = SolverOptions::default();
        let a = integrate_interior(&spec, Energy::new(0.2, 1.0), &opts).unwrap();
        let b = integrate_interior(&spec, Energy::new(0.2, 1.0), &opts).unwrap();
        assert_eq!(a.theta.to_bits(), b.theta.to_bits());
    }

    #[test]
    fn trajectory_matches_endpoint() {
        let spec = ProblemSpec::new(
            PotentialModel::square_well(-3.0, 1.0).unwrap(),
            1.0,
            1.5,
            1.0,
        )
        .unwrap();
        let opts = SolverOptions::default();
        let e = Energy::new(-0.4, 1.0);
        let end = integrate_interior(&spec, e, &opts).unwrap();
        let traj = interior_trajectory(&spec, e, &[0.25, 0.5, 1.0], &opts).unwrap();
        assert_eq!(traj.len(), 3);
        assert!((traj[2].theta - end.theta).abs() < 1e-8);
    }
}
