//! Radial potentials `V(r, λ) = λ V(r)` with a cutoff radius and an optional
//! power-law tail beyond it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SolverError};

/// Shape of the potential inside the cutoff radius.
#[derive(Clone)]
pub enum PotentialKind {
    /// Constant `depth` on `(0, r0)`.
    SquareWell { depth: f64 },
    /// Linear interpolation through `(r, V)` knots; constant outside the knot range.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// Monotone cubic (Fritsch-Carlson) interpolation through samples; the
    /// last sample value is continued up to `r0`.
    SampledTable {
        knots: Vec<(f64, f64)>,
        slopes: Vec<f64>,
    },
    /// Arbitrary closure, library use only.
    Custom {
        name: String,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::SquareWell { depth } => write!(f, "SquareWell({depth})"),
            PotentialKind::PiecewiseLinear { knots } => {
                write!(f, "PiecewiseLinear({} knots)", knots.len())
            }
            PotentialKind::SampledTable { knots, .. } => {
                write!(f, "SampledTable({} knots)", knots.len())
            }
            PotentialKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Behaviour for `r ≥ r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    None,
    /// `b · r^(−n)`.
    Power {
        b: f64,
        n: f64,
    },
}

/// Outcome of [`PotentialModel::check_integrability`].
#[derive(Debug, Clone, PartialEq)]
pub enum Integrability {
    Ok {
        integrals: [f64; 3],
    },
    Divergent {
        integrals: [f64; 3],
        diagnostic: String,
    },
}

impl Integrability {
    pub fn is_ok(&self) -> bool {
        matches!(self, Integrability::Ok { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FoldedTail {
    core_r0: f64,
    b: f64,
    n: f64,
}

/// Immutable radial potential. The coupling `λ` is always passed explicitly.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    kind: PotentialKind,
    r0: f64,
    tail: Tail,
    sign: f64,
    folded: Option<FoldedTail>,
}

fn check_knots(knots: &[(f64, f64)], r0: f64) -> Result<()> {
    if knots.is_empty() {
        return Err(SolverError::InvalidSpec(
            "potential table needs at least one knot".into(),
        ));
    }
    for w in knots.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(SolverError::InvalidSpec(
                "potential knots must be strictly increasing in r".into(),
            ));
        }
    }
    if knots
        .iter()
        .any(|&(r, v)| !r.is_finite() || !v.is_finite() || r < 0.0)
    {
        return Err(SolverError::InvalidSpec(
            "potential knots must be finite with r >= 0".into(),
        ));
    }
    if knots.last().map(|k| k.0 > r0).unwrap_or(false) {
        return Err(SolverError::InvalidSpec(
            "potential knots must lie inside r0".into(),
        ));
    }
    Ok(())
}

/// Fritsch-Carlson slopes for a monotone piecewise cubic Hermite interpolant.
fn pchip_slopes(knots: &[(f64, f64)]) -> Vec<f64> {
    let n = knots.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let h: Vec<f64> = knots.windows(2).map(|w| w[1].0 - w[0].0).collect();
    let d: Vec<f64> = knots
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .collect();
    let mut m = vec![0.0; n];
    if n == 2 {
        m[0] = d[0];
        m[1] = d[0];
        return m;
    }
    for i in 1..n - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    m[0] = end(h[0], h[1], d[0], d[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
    m
}

fn interval(knots: &[(f64, f64)], r: f64) -> usize {
    knots
        .partition_point(|k| k.0 <= r)
        .saturating_sub(1)
        .min(knots.len() - 2)
}

impl PotentialModel {
    pub fn new(kind: PotentialKind, r0: f64, tail: Tail) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(SolverError::InvalidSpec(format!(
                "r0 must be positive, got {r0}"
            )));
        }
        match &kind {
            PotentialKind::SquareWell { depth } if !depth.is_finite() => {
                return Err(SolverError::InvalidSpec(
                    "square well depth must be finite".into(),
                ))
            }
            PotentialKind::PiecewiseLinear { knots }
            | PotentialKind::SampledTable { knots, .. } => check_knots(knots, r0)?,
            _ => {}
        }
        if let Tail::Power { b, n } = tail {
            if !b.is_finite() || !(n > 0.0 && n.is_finite()) {
                return Err(SolverError::InvalidSpec(format!(
                    "tail needs finite b and n > 0, got b = {b}, n = {n}"
                )));
            }
        }
        let kind = match kind {
            PotentialKind::SampledTable { knots, .. } => {
                let slopes = pchip_slopes(&knots);
                PotentialKind::SampledTable { knots, slopes }
            }
            k => k,
        };
        Ok(PotentialModel {
            kind,
            r0,
            tail,
            sign: 1.0,
            folded: None,
        })
    }

    pub fn square_well(depth: f64, r0: f64) -> Result<Self> {
        Self::new(PotentialKind::SquareWell { depth }, r0, Tail::None)
    }

    pub fn free(r0: f64) -> Result<Self> {
        Self::square_well(0.0, r0)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>, r0: f64) -> Result<Self> {
        Self::new(PotentialKind::PiecewiseLinear { knots }, r0, Tail::None)
    }

    pub fn sampled_table(knots: Vec<(f64, f64)>, r0: f64) -> Result<Self> {
        Self::new(
            PotentialKind::SampledTable {
                knots,
                slopes: Vec::new(),
            },
            r0,
            Tail::None,
        )
    }

    pub fn custom<F>(name: &str, r0: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            PotentialKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
            r0,
            Tail::None,
        )
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        if let Tail::Power { b, n } = tail {
            if !b.is_finite() || !(n > 0.0 && n.is_finite()) {
                return Err(SolverError::InvalidSpec(format!(
                    "tail needs finite b and n > 0, got b = {b}, n = {n}"
                )));
            }
        }
        self.tail = tail;
        Ok(self)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Match radius.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Tail beyond the match radius, with the sign of the model applied.
    pub fn tail(&self) -> Tail {
        match self.tail {
            Tail::None => Tail::None,
            Tail::Power { b, n } => Tail::Power {
                b: self.sign * b,
                n,
            },
        }
    }

    /// True when `V ≡ 0` identically.
    pub fn is_free(&self) -> bool {
        let core_free = matches!(self.kind, PotentialKind::SquareWell { depth } if depth == 0.0);
        let tail_free = match self.tail {
            Tail::None => true,
            Tail::Power { b, .. } => b == 0.0,
        };
        core_free && tail_free
    }

    /// The model for `−V`.
    pub fn negated(&self) -> Self {
        let mut m = self.clone();
        m.sign = -m.sign;
        m
    }

    /// Move the match radius out to `r_eff`, treating the tail on
    /// `[r0, r_eff)` as part of the interior and dropping it beyond.
    pub fn fold_tail(&self, r_eff: f64) -> Result<Self> {
        let Tail::Power { b, n } = self.tail else {
            return Ok(self.clone());
        };
        if self.folded.is_some() {
            return Err(SolverError::InvalidSpec("tail already folded".into()));
        }
        if r_eff < self.r0 {
            return Err(SolverError::InvalidSpec(format!(
                "effective radius {r_eff} below r0 = {}",
                self.r0
            )));
        }
        let mut m = self.clone();
        m.folded = Some(FoldedTail {
            core_r0: self.r0,
            b,
            n,
        });
        m.r0 = r_eff;
        m.tail = Tail::None;
        Ok(m)
    }

    fn core(&self, r: f64) -> f64 {
        match &self.kind {
            PotentialKind::SquareWell { depth } => *depth,
            PotentialKind::PiecewiseLinear { knots } => {
                if knots.len() == 1 || r <= knots[0].0 {
                    return knots[0].1;
                }
                let last = knots[knots.len() - 1];
                if r >= last.0 {
                    return last.1;
                }
                let i = interval(knots, r);
                let (r1, v1) = knots[i];
                let (r2, v2) = knots[i + 1];
                v1 + (v2 - v1) * (r - r1) / (r2 - r1)
            }
            PotentialKind::SampledTable { knots, slopes } => {
                if knots.len() == 1 || r <= knots[0].0 {
                    return knots[0].1;
                }
                let last = knots[knots.len() - 1];
                if r >= last.0 {
                    return last.1;
                }
                let i = interval(knots, r);
                let (r1, v1) = knots[i];
                let (r2, v2) = knots[i + 1];
                let h = r2 - r1;
                let t = (r - r1) / h;
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * v1
                    + (t3 - 2.0 * t2 + t) * h * slopes[i]
                    + (-2.0 * t3 + 3.0 * t2) * v2
                    + (t3 - t2) * h * slopes[i + 1]
            }
            PotentialKind::Custom { f, .. } => f(r),
        }
    }

    /// `V(r)` at unit coupling, without domain checks.
    #[inline]
    pub(crate) fn value(&self, r: f64) -> f64 {
        let v = if let Some(fold) = self.folded {
            if r < fold.core_r0 {
                self.core(r)
            } else if r < self.r0 {
                fold.b * r.powf(-fold.n)
            } else {
                0.0
            }
        } else if r < self.r0 {
            self.core(r)
        } else {
            match self.tail {
                Tail::None => 0.0,
                Tail::Power { b, n } => b * r.powf(-n),
            }
        };
        self.sign * v
    }

    /// `λ V(r)`.
    pub fn evaluate(&self, r: f64, lambda: f64) -> Result<f64> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(r > 0.0) {
            return Err(SolverError::Domain(format!(
                "potential evaluated at r = {r}"
            )));
        }
        Ok(lambda * self.value(r))
    }

    /// Radii inside `(0, r0)` where the potential or its slope may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = match &self.kind {
            PotentialKind::PiecewiseLinear { knots }
            | PotentialKind::SampledTable { knots, .. } => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        };
        if let Some(fold) = self.folded {
            pts.push(fold.core_r0);
        }
        pts.retain(|&r| r > 0.0 && r < self.r0);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Checks `∫ r|V| dr` on `[ε, 1]` for `ε ∈ {1e-4, 1e-6, 1e-8}`. The
    /// potential is flagged divergent when the integral grows by more than
    /// 10% per decade of `ε`.
    pub fn check_integrability(&self) -> Integrability {
        let eps = [1e-4, 1e-6, 1e-8];
        let mut integrals = [0.0; 3];
        let mut upper = 1e-4;
        let mut acc = self.log_integral(upper, 1.0);
        for (i, &e) in eps.iter().enumerate() {
            acc += self.log_integral(e, upper);
            upper = e;
            integrals[i] = acc;
        }
        for w in 0..2 {
            let (a, b) = (integrals[w], integrals[w + 1]);
            let growth = if a > 0.0 {
                (b / a).sqrt() - 1.0
            } else if b > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if !b.is_finite() || growth > 0.1 {
                return Integrability::Divergent {
                    integrals,
                    diagnostic: format!(
                        "integral of r|V| grows from {a:.6e} to {b:.6e} between eps = {:.0e} and {:.0e}",
                        eps[w],
                        eps[w + 1]
                    ),
                };
            }
        }
        Integrability::Ok { integrals }
    }

    /// `∫_a^b r|V(r)| dr` evaluated in `t = ln r`, split at breakpoints.
    fn log_integral(&self, a: f64, b: f64) -> f64 {
        let mut cuts = vec![a];
        cuts.extend(self.breakpoints().into_iter().filter(|&r| r > a && r < b));
        if self.r0 > a && self.r0 < b {
            cuts.push(self.r0);
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        let g = |t: f64| {
            let r = t.exp();
            r * r * self.value(r).abs()
        };
        cuts.windows(2)
            .map(|w| adaptive_simpson(&g, w[0].ln(), w[1].ln(), 1e-10, 40))
            .sum()
    }
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol || !delta.is_finite() {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

/// A fully specified radial problem at one coupling.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub potential: PotentialModel,
    pub mass: f64,
    pub j: f64,
    pub lambda: f64,
}

/// True when `2j` is an odd integer.
pub fn is_half_integer(j: f64) -> bool {
    let two_j = 2.0 * j;
    j.is_finite() && two_j == two_j.round() && (two_j.round() as i64).rem_euclid(2) == 1
}

impl ProblemSpec {
    pub fn new(potential: PotentialModel, mass: f64, j: f64, lambda: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(SolverError::InvalidSpec(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if !is_half_integer(j) {
            return Err(SolverError::InvalidSpec(format!(
                "j must be a half-integer, got {j}"
            )));
        }
        if !lambda.is_finite() {
            return Err(SolverError::InvalidSpec(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        Ok(ProblemSpec {
            potential,
            mass,
            j,
            lambda,
        })
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ProblemSpec {
            lambda,
            ..self.clone()
        }
    }

    /// `(j, λ) → (−j, −λ)`. Combined with `f ↔ g`, `E → −E` this maps a
    /// negative-j problem onto a positive-j one.
    pub fn negate_and_reflect(&self) -> Self {
        ProblemSpec {
            j: -self.j,
            lambda: -self.lambda,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        let w = PotentialModel::square_well(-2.0, 1.0).unwrap();
        assert_eq!(w.evaluate(0.5, 1.0).unwrap(), -2.0);
        assert_eq!(w.evaluate(0.5, 0.0).unwrap(), 0.0);
        assert_eq!(w.evaluate(1.0, 1.0).unwrap(), 0.0);
        assert!(w.evaluate(0.0, 1.0).is_err());
        let t = w.with_tail(Tail::Power { b: 1.0, n: 2.0 }).unwrap();
        assert_eq!(t.evaluate(2.0, 1.0).unwrap(), 0.25);
    }

    #[test]
    fn integrability_examples() {
        assert!(PotentialModel::square_well(-40.0, 1.0)
            .unwrap()
            .check_integrability()
            .is_ok());
        let coulomb = PotentialModel::custom("coulomb", 1.0, |r| -5.0 / r).unwrap();
        assert!(coulomb.check_integrability().is_ok());
        let strong = PotentialModel::custom("inverse-square", 1.0, |r| 1.0 / (r * r)).unwrap();
        assert!(!strong.check_integrability().is_ok());
    }

    #[test]
    fn integrability_integral_value() {
        let w = PotentialModel::square_well(-3.0, 0.5).unwrap();
        let Integrability::Ok { integrals } = w.check_integrability() else {
            panic!()
        };
        for (v, eps) in integrals.into_iter().zip([1e-4, 1e-6, 1e-8]) {
            let exact = 1.5 * (0.25 - eps * eps);
            assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
        }
    }

    #[test]
    fn pchip_is_monotone_and_interpolates() {
        let knots = vec![
            (0.0, -1.0),
            (0.2, -1.0),
            (0.5, -0.2),
            (0.7, 0.0),
            (0.9, 0.0),
        ];
        let v = PotentialModel::sampled_table(knots.clone(), 1.0).unwrap();
        for &(r, y) in &knots[1..] {
            assert!((v.evaluate(r, 1.0).unwrap() - y).abs() < 1e-14);
        }
        let mut prev = f64::NEG_INFINITY;
        for i in 1..1000 {
            let y = v.evaluate(0.9 * i as f64 / 1000.0, 1.0).unwrap();
            assert!(y >= prev - 1e-15 && (-1.0..=0.0).contains(&y));
            prev = y;
        }
        assert_eq!(v.evaluate(0.95, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn piecewise_linear_midpoint() {
        let v = PotentialModel::piecewise_linear(vec![(0.0, -4.0), (0.5, 0.0)], 1.0).unwrap();
        assert_eq!(v.evaluate(0.25, 1.0).unwrap(), -2.0);
        assert_eq!(v.evaluate(0.75, 1.0).unwrap(), 0.0);
        assert_eq!(v.breakpoints(), vec![0.5]);
    }

    #[test]
    fn folded_tail() {
        let v = PotentialModel::square_well(-1.0, 1.0)
            .unwrap()
            .with_tail(Tail::Power { b: 2.0, n: 3.0 })
            .unwrap();
        let f = v.fold_tail(4.0).unwrap();
        assert_eq!(f.r0(), 4.0);
        assert_eq!(f.evaluate(2.0, 1.0).unwrap(), 0.25);
        assert_eq!(f.evaluate(5.0, 1.0).unwrap(), 0.0);
        assert_eq!(f.breakpoints(), vec![1.0]);
        assert_eq!(f.tail(), Tail::None);
    }

    #[test]
    fn negate_and_reflect_examples() {
        let p = ProblemSpec::new(PotentialModel::free(1.0).unwrap(), 1.0, -0.5, 1.0).unwrap();
        let q = p.negate_and_reflect();
        assert_eq!((q.j, q.lambda), (0.5, -1.0));
        let z = p.with_lambda(0.0).negate_and_reflect();
        assert_eq!(z.lambda, 0.0);
        let back = q.negate_and_reflect();
        assert_eq!((back.j, back.lambda), (p.j, p.lambda));
    }

    #[test]
    fn half_integer_validation() {
        assert!(is_half_integer(0.5) && is_half_integer(-1.5) && is_half_integer(20.5));
        assert!(!is_half_integer(1.0) && !is_half_integer(0.25) && !is_half_integer(f64::NAN));
        assert!(ProblemSpec::new(PotentialModel::free(1.0).unwrap(), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn negation_flips_tail() {
        let v = PotentialModel::free(1.0)
            .unwrap()
            .with_tail(Tail::Power { b: 0.3, n: 2.0 })
            .unwrap();
        assert_eq!(v.negated().tail(), Tail::Power { b: -0.3, n: 2.0 });
        assert_eq!(v.negated().evaluate(2.0, 1.0).unwrap(), -0.075);
    }
}
