//! Test-side oracles that share no code with the solver.
#![allow(dead_code)]

use levinson2d::special::mod_bessel_k_ratio;

/// Regular solution `(f, g)` at `r0`, up to a positive factor.
///
/// Fixed-step RK4 on `df/dt = j f − r(E − V + M) g`, `dg/dt = −j g + r(E − V − M) f`
/// with `t = ln r`. Works for either sign of `j`.
pub fn interior_fg(
    v: &dyn Fn(f64) -> f64,
    mass: f64,
    j: f64,
    e: f64,
    r0: f64,
    steps: usize,
) -> (f64, f64) {
    let r_start = 1e-6 * r0;
    let (t0, t1) = (r_start.ln(), r0.ln());
    let h = (t1 - t0) / steps as f64;
    let rhs = |t: f64, y: [f64; 2]| {
        let r = t.exp();
        let w = v(r);
        [
            j * y[0] - r * (e - w + mass) * y[1],
            -j * y[1] + r * (e - w - mass) * y[0],
        ]
    };
    let w0 = v(r_start);
    let mut y = if j > 0.0 {
        [1.0, r_start * (e - w0 - mass) / (2.0 * j + 1.0)]
    } else {
        [-r_start * (e - w0 + mass) / (1.0 - 2.0 * j), 1.0]
    };
    let mut t = t0;
    for _ in 0..steps {
        let k1 = rhs(t, y);
        let k2 = rhs(
            t + h / 2.0,
            [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]],
        );
        let k3 = rhs(
            t + h / 2.0,
            [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]],
        );
        let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let n = y[0].hypot(y[1]);
        y = [y[0] / n, y[1] / n];
        t += h;
    }
    (y[0], y[1])
}

/// Decaying free solution at `r0`: `(√(M+E) K_{j−1/2}, √(M−E) K_{j+1/2})`, up to a positive factor.
pub fn exterior_fg(mass: f64, j: f64, e: f64, r0: f64) -> (f64, f64) {
    let kappa = ((mass - e) * (mass + e)).sqrt();
    let x = kappa * r0;
    // K_{j−1/2} / K_{j+1/2}, using K_{−ν} = K_ν.
    let ratio = if j > 0.0 {
        mod_bessel_k_ratio(j - 0.5, x).unwrap()
    } else {
        1.0 / mod_bessel_k_ratio(-j - 0.5, x).unwrap()
    };
    ((mass + e).sqrt() * ratio, (mass - e).sqrt())
}

/// Matching Wronskian; its zeros in `(−M, M)` are the bound states.
pub fn wronskian(v: &dyn Fn(f64) -> f64, mass: f64, j: f64, e: f64, r0: f64, steps: usize) -> f64 {
    let (fi, gi) = interior_fg(v, mass, j, e, r0, steps);
    let (fo, go) = exterior_fg(mass, j, e, r0);
    fi * go - gi * fo
}

/// Bound energies located as sign changes of the Wronskian on a grid that
/// clusters at both gap edges, refined by bisection.
pub fn bound_energies(
    v: &dyn Fn(f64) -> f64,
    mass: f64,
    j: f64,
    r0: f64,
    points: usize,
    steps: usize,
) -> Vec<f64> {
    let grid: Vec<f64> = (0..points)
        .map(|i| -mass * (std::f64::consts::PI * (i as f64 + 0.5) / points as f64).cos())
        .collect();
    let w: Vec<f64> = grid
        .iter()
        .map(|&e| wronskian(v, mass, j, e, r0, steps))
        .collect();
    let mut roots = Vec::new();
    for i in 1..points {
        if w[i - 1].signum() != w[i].signum() {
            let (mut a, mut b, wa) = (grid[i - 1], grid[i], w[i - 1]);
            for _ in 0..50 {
                let m = 0.5 * (a + b);
                if wronskian(v, mass, j, m, r0, steps).signum() == wa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

pub fn square_well(depth: f64, r0: f64) -> impl Fn(f64) -> f64 {
    move |r| if r < r0 { depth } else { 0.0 }
}

/// `I_ν(x)/I_{ν+1}(x)` from the ascending series, `ν ≥ 0`.
pub fn i_ratio_series(nu: f64, x: f64) -> f64 {
    // I_ν(x) = (x/2)^ν / Γ(ν+1) · Σ t^k / (k! (ν+1)_k),  t = x²/4.
    let t = x * x / 4.0;
    let sum = |nu: f64| {
        let (mut term, mut s) = (1.0, 1.0);
        for k in 1..200 {
            term *= t / (k as f64 * (nu + k as f64));
            s += term;
            if term < 1e-18 * s {
                break;
            }
        }
        s
    };
    2.0 * (nu + 1.0) / x * sum(nu) / sum(nu + 1.0)
}
