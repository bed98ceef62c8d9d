use std::f64::consts::PI;

use levinson2d::report::{format_float, RunConfig};
use levinson2d::scattering::threshold_fit;
use levinson2d::special::{cylinder_pair, modified_pair_scaled};
use levinson2d::spectrum::mismatch;
use levinson2d::{
    symmetry_map, verify, Energy, ExecMode, MatchRatio, PotentialModel, ProblemSpec, SolverOptions,
    Tolerances,
};
use proptest::prelude::*;

fn well_spec(depth: f64, r0: f64, j: f64) -> ProblemSpec {
    ProblemSpec::new(PotentialModel::square_well(depth, r0).unwrap(), 1.0, j, 1.0).unwrap()
}

fn half_integer() -> impl Strategy<Value = f64> {
    (0..4i32).prop_map(|n| n as f64 + 0.5)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn bessel_wronskians(nu in 0.0..20.0f64, lx in -3.0..50f64.log10()) {
        let x = 10f64.powf(lx);
        let c = cylinder_pair(nu, x).unwrap();
        let w = 2.0 / (PI * x);
        prop_assert!(((c.j * c.yp - c.jp * c.y) - w).abs() <= 1e-9 * w);
        let m = modified_pair_scaled(nu, x).unwrap();
        prop_assert!(((m.i * m.kp - m.ip * m.k) + 1.0 / x).abs() <= 1e-9 / x);
    }

    #[test]
    fn floats_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn energy_momentum_round_trip(k in 1e-6..1e3f64, sign in prop::sample::select(vec![1.0, -1.0])) {
        let e = Energy::from_k(k, sign, 1.0);
        prop_assert!((e.k().unwrap() - k).abs() <= 1e-9 * (1.0 + k * k));
    }

    #[test]
    fn match_ratio_inverse(theta in -20.0..20.0f64) {
        let a = MatchRatio::from_angle(theta);
        prop_assume!(a.value.abs() > 1e-6 && a.value.abs() < 1e6);
        prop_assert!((a.inverse() * a.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_half_integer_j_names_the_field(j in -5.0..5.0f64, idx in 0..3usize) {
        prop_assume!((2.0 * j).fract() != 0.0 || (2.0 * j) as i64 % 2 == 0);
        let mut js = vec![0.5; 3];
        js[idx] = j;
        let text = format!("[potential]\nkind = \"free\"\n[physics]\nj = {js:?}\n");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        prop_assert_eq!(err.field, format!("physics.j[{idx}]"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(16) })]

    #[test]
    fn mismatch_decreases_across_the_gap(depth in -4.0..4.0f64, r0 in 0.5..3.0f64, j in half_integer(), e in -0.95..0.9f64) {
        let spec = well_spec(depth, r0, j);
        let opts = SolverOptions::default();
        let lo = mismatch(&spec, e, &opts).unwrap();
        let hi = mismatch(&spec, e + 0.05, &opts).unwrap();
        prop_assert!(hi < lo, "Δ({e}) = {lo}, Δ({}) = {hi}", e + 0.05);
    }

    #[test]
    fn threshold_curvatures_are_non_negative(depth in -4.0..4.0f64, r0 in 0.5..3.0f64, j in half_integer()) {
        let fit = threshold_fit(&well_spec(depth, r0, j), &SolverOptions::default()).unwrap();
        prop_assert!(fit.c1_sq >= 0.0, "c1² = {}", fit.c1_sq);
        prop_assert!(fit.c2_sq >= 0.0, "c2² = {}", fit.c2_sq);
    }

    #[test]
    fn report_identities(depth in -3.0..3.0f64, r0 in 0.5..3.0f64, j in half_integer(), negative in any::<bool>()) {
        let j = if negative { -j } else { j };
        let w = PotentialModel::square_well(depth, r0).unwrap();
        let r = verify(&w, 1.0, j, &Tolerances::default(), ExecMode::Sequential).unwrap();
        prop_assert_eq!(r.n_j as usize, r.bound_energies.len() + r.metadata.threshold_bound.len());
        prop_assert!(r.bound_energies.windows(2).all(|p| p[0] < p[1]));
        prop_assert!(r.bound_energies.iter().all(|e| e.abs() < 1.0));
        let expected = r.lhs - (r.n_j + r.correction) as f64 * PI - r.tail_offset;
        prop_assert!((r.residual - expected).abs() < 1e-12);
        prop_assert_eq!(&symmetry_map(&symmetry_map(&r)), &r);
    }
}
