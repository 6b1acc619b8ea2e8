use glvortex::field::{energy, link_phases, Potential};
use glvortex::minimize::{
    dirichlet_counts, estimate_g, fit_line, minimize_m0, minimize_m0_3d, minimize_quotient, quotient_of, Problem,
    SolverConfig, StepRule,
};
use glvortex::{ComplexField, Error, C64};

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

#[test]
fn normal_state_above_one() {
    for r in [4.0, 8.0] {
        let m = minimize_m0(1.2, r, dirichlet_counts(r, 0.5), &cfg()).unwrap();
        assert!(m.converged);
        assert!(m.value <= 0.0 && m.value > -1e-12, "{}", m.value);
        assert!(m.field.norm_inf() < 1e-4);
    }
    let m = minimize_m0_3d(1.2, 4.0, 7, &cfg()).unwrap();
    assert!(m.value <= 0.0 && m.value > -1e-12);
}

#[test]
fn zero_field_strength_shortcut() {
    let r = 16.0;
    let n = dirichlet_counts(r, 0.25);
    let m = minimize_m0(0.0, r, n, &cfg()).unwrap();
    let h = r / (n + 1) as f64;
    assert_eq!(m.value, -0.5 * (n * n) as f64 * h * h);
    assert!((m.value / (r * r) + 0.5).abs() <= 0.05);
    assert!(m.converged && m.iterations == 0);
}

#[test]
fn moderate_field_within_bounds() {
    let r = 12.0;
    let m = minimize_m0(0.9, r, dirichlet_counts(r, 0.25), &cfg()).unwrap();
    assert!(m.converged);
    assert!(m.residual <= cfg().grad_tolerance);
    let d = m.value / (r * r);
    assert!((-0.005..=0.0).contains(&d), "{d}");
    assert_eq!(m.value, m.breakdown.total);
    assert_eq!(m.provenance.problem, Problem::SquareEnergy);
}

#[test]
fn value_matches_energy_of_returned_field() {
    let m = minimize_m0(0.8, 6.0, 23, &cfg()).unwrap();
    let links = link_phases(m.field.grid(), Potential::A0).unwrap();
    let e = energy(&m.field, &links, 0.8).unwrap();
    assert_eq!(e.total.to_bits(), m.value.to_bits());
}

#[test]
fn monotone_in_field_strength() {
    let r = 8.0;
    let n = dirichlet_counts(r, 0.5);
    let tol = cfg().grad_tolerance;
    let values: Vec<f64> = [0.3, 0.5, 0.7, 0.9, 1.1]
        .iter()
        .map(|&b| minimize_m0(b, r, n, &cfg()).unwrap().value)
        .collect();
    for w in values.windows(2) {
        assert!(w[0] <= w[1] + 2.0 * tol, "{values:?}");
    }
}

#[test]
fn bitwise_deterministic() {
    let c = cfg().with_seed(7);
    let a = minimize_m0(0.9, 8.0, 31, &c).unwrap();
    let b = minimize_m0(0.9, 8.0, 31, &c).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.field, b.field);
    let c2 = cfg().with_seed(7).with_restarts(3);
    let x = minimize_m0(0.9, 8.0, 15, &c2).unwrap();
    let y = minimize_m0(0.9, 8.0, 15, &c2).unwrap();
    assert_eq!(x, y);
}

#[test]
fn step_rules_agree_on_the_minimum() {
    let r = 6.0;
    let n = dirichlet_counts(r, 0.5);
    let qn = minimize_m0(0.7, r, n, &cfg()).unwrap();
    let bb = minimize_m0(
        0.7,
        r,
        n,
        &SolverConfig {
            step_rule: StepRule::AdaptiveTwoPoint,
            ..cfg()
        },
    )
    .unwrap();
    assert!(qn.converged && bb.converged);
    assert!((qn.value - bb.value).abs() <= 1e-8 * qn.value.abs().max(1.0));
}

#[test]
fn truncated_run_reports_not_converged() {
    let m = minimize_m0(0.5, 8.0, 15, &cfg().with_max_iterations(5)).unwrap();
    assert!(!m.converged);
    assert!(m.residual > cfg().grad_tolerance);
    assert!(m.value <= 0.0);
}

#[test]
fn virial_identity_at_cube_minimizer() {
    let m = minimize_m0_3d(0.6, 6.0, 11, &cfg()).unwrap();
    assert!(m.converged);
    let defect = (m.value + 0.5 * m.l4_pow4()).abs();
    assert!(defect <= 1e-6 * (1.0 + m.value.abs()), "{defect}");
}

#[test]
fn slab_sandwich_lower_bound() {
    let (b, r) = (0.7, 6.0);
    let n = dirichlet_counts(r, 0.5);
    let m2 = minimize_m0(b, r, n, &cfg()).unwrap();
    let m3 = minimize_m0_3d(b, r, n, &cfg()).unwrap();
    assert!(r * m2.value <= m3.value + 10.0 * 2.0 * cfg().grad_tolerance);
}

#[test]
fn quotient_normalization_and_scaling() {
    let (b, r) = (0.7, 6.0);
    let q = minimize_quotient(b, r, 11, &cfg()).unwrap();
    assert!(q.converged);
    assert!((q.l4_pow4() - 1.0).abs() <= 1e-12);
    assert!((q.breakdown.linear_part() - q.value).abs() <= 1e-12 * q.value.abs());
    let direct = quotient_of(&q.field, b).unwrap();
    assert!((direct - q.value).abs() <= 1e-12 * q.value.abs());
    for alpha in [C64::new(0.3, 0.0), C64::new(-2.0, 1.5)] {
        let scaled = quotient_of(&q.field.scaled(alpha), b).unwrap();
        assert!((scaled - q.value).abs() <= 1e-12 * q.value.abs());
    }
    // no competitor does better
    let m3 = minimize_m0_3d(b, r, 11, &cfg()).unwrap();
    assert!(q.value <= quotient_of(&m3.field, b).unwrap() + 1e-9);
    let random = ComplexField::random(q.field.grid(), 5);
    assert!(q.value <= quotient_of(&random, b).unwrap());
}

#[test]
fn quotient_rejects_out_of_range_field_strength() {
    for b in [0.0, 1.0, 1.5] {
        assert!(matches!(minimize_quotient(b, 6.0, 11, &cfg()), Err(Error::InvalidParameter(_))));
    }
}

#[test]
fn invalid_inputs() {
    assert!(matches!(minimize_m0(-0.1, 8.0, 15, &cfg()), Err(Error::InvalidParameter(_))));
    assert!(minimize_m0(0.5, 8.0, 15, &cfg().with_tolerance(0.0)).is_err());
    assert!(minimize_m0(0.5, 8.0, 15, &cfg().with_restarts(0)).is_err());
    assert!(matches!(estimate_g(0.5, &[8.0, 12.0], 0.5, &cfg()), Err(Error::InvalidParameter(_))));
    assert!(estimate_g(0.5, &[8.0, 16.0, 12.0], 0.5, &cfg()).is_err());
}

#[test]
fn g_limits() {
    let normal = estimate_g(1.1, &[8.0, 12.0, 16.0], 0.5, &cfg()).unwrap();
    assert!(normal.extrapolated_g >= -1e-9 && normal.extrapolated_g <= 0.0);
    assert!(normal.monotone);
    let zero = estimate_g(0.0, &[8.0, 12.0, 16.0], 0.25, &cfg()).unwrap();
    assert!((zero.extrapolated_g + 0.5).abs() <= 0.02, "{}", zero.extrapolated_g);
    assert!(zero.monotone);
    assert!(zero.values.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn g_clamped_into_range() {
    let est = estimate_g(0.6, &[4.0, 6.0, 8.0], 0.5, &cfg()).unwrap();
    assert!((-0.5..=0.0).contains(&est.extrapolated_g));
    assert!(est.all_converged);
}

#[test]
fn line_fit_recovers_exact_model() {
    let xs = [1.0 / 8.0, 1.0 / 12.0, 1.0 / 16.0];
    let ys: Vec<f64> = xs.iter().map(|x| -0.2 + 0.7 * x).collect();
    let (a, c, res) = fit_line(&xs, &ys);
    assert!((a + 0.2).abs() < 1e-14 && (c - 0.7).abs() < 1e-13 && res < 1e-14);
}
