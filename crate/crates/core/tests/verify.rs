use glvortex::abrikosov::minimize_cr;
use glvortex::field::side_for_quanta;
use glvortex::minimize::{
    dirichlet_counts, estimate_g, g_from_results, minimize_m0, minimize_m0_3d, minimize_quotient, GEstimate,
    SolverConfig,
};
use glvortex::verify::{
    check_g_bounds, check_ka, check_l4_bounds, check_lem1, check_lem2, check_nf, check_virial, lemma_sweep, slack,
    virial_report, FittedConstant, STABILITY_FACTOR,
};
use glvortex::Error;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn synthetic_g(b: f64, g: f64, err: f64) -> GEstimate {
    GEstimate {
        b,
        values: vec![(8.0, g + 0.1), (12.0, g + 0.07), (16.0, g + 0.05)],
        extrapolated_g: g,
        raw_intercept: g,
        fitted_c: 0.8,
        fit_residual: err,
        monotone: true,
        all_converged: true,
        results: vec![],
    }
}

#[test]
fn slack_policy() {
    assert_eq!(slack(&[1e-8, 1e-8], 0.0), 2e-7);
    assert_eq!(slack(&[], 0.25), 0.25);
}

#[test]
fn fitted_constant_ratios() {
    let c = FittedConstant::new("c", vec![1.0, 1.5, 1.9], true);
    assert!(c.stable && (c.ratio - 1.9).abs() < 1e-15);
    assert_eq!(c.sweep_value(), 1.9);
    let wide = FittedConstant::new("c", vec![1.0, 2.5], true);
    assert!(!wide.stable);
    assert!(wide.ratio > STABILITY_FACTOR);
    // non-positive requirements are met by any positive constant
    let slack_only = FittedConstant::new("c", vec![-1.0, 0.0, 3.0], true);
    assert!(slack_only.stable);
    assert_eq!(slack_only.sweep_value(), 3.0);
}

#[test]
fn sandwich_and_cube_density_on_small_sweep() {
    let b = 0.7;
    let mut pairs = Vec::new();
    let mut cubes = Vec::new();
    let mut squares = Vec::new();
    for r in [4.0, 6.0, 8.0] {
        let n = dirichlet_counts(r, 0.5);
        let m2 = minimize_m0(b, r, n, &cfg()).unwrap();
        let m3 = minimize_m0_3d(b, r, n, &cfg()).unwrap();
        squares.push(m2.clone());
        cubes.push(m3.clone());
        pairs.push((m2, m3));
    }
    let lem1 = check_lem1(&pairs).unwrap();
    for r in lem1.reports.iter().filter(|r| r.asserted) {
        assert!(r.holds, "{r:?}");
    }
    assert_eq!(lem1.fitted[0].values.len(), 3);
    let g = g_from_results(b, squares);
    let lem2 = check_lem2(&g, &cubes).unwrap();
    assert!(lem2.reports.iter().filter(|r| r.asserted).all(|r| r.holds), "{:?}", lem2.failures());
    let l4 = check_l4_bounds(&g, &cubes).unwrap();
    assert!(l4.passed, "{:?}", l4.failures());
    for m in &cubes {
        assert!(check_virial(m).unwrap().passed);
    }
    // wrong problem kinds are rejected
    let swapped: Vec<_> = pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect();
    assert!(matches!(check_lem1(&swapped), Err(Error::NotApplicable(_))));
}

#[test]
fn virial_negative_control() {
    let m = minimize_m0_3d(0.3, 8.0, 15, &cfg().with_max_iterations(10)).unwrap();
    assert!(!m.converged);
    assert!(matches!(check_virial(&m), Err(Error::NotApplicable(_))));
    let report = virial_report(&m);
    assert!(!report.holds, "{report:?}");
    let q = minimize_quotient(0.6, 6.0, 11, &cfg()).unwrap();
    assert!(matches!(check_virial(&q), Err(Error::NotApplicable(_))));
}

#[test]
fn quotient_lower_bound() {
    let b = 0.7;
    let rs = [4.0, 6.0, 8.0];
    let g = estimate_g(b, &rs, 0.5, &cfg()).unwrap();
    let qs: Vec<_> = rs
        .iter()
        .map(|&r| minimize_quotient(b, r, dirichlet_counts(r, 0.5), &cfg()).unwrap())
        .collect();
    let nf = check_nf(&g, &qs).unwrap();
    let lower: Vec<_> = nf.reports.iter().filter(|r| r.name.starts_with("-R^1.5")).collect();
    assert_eq!(lower.len(), 3);
    assert!(lower.iter().all(|r| r.holds), "{lower:?}");
    // the fitted upper-bound constant makes the bound hold
    assert!(nf.reports.iter().filter(|r| r.name.starts_with("Mq/R^1.5")).all(|r| r.holds));
    assert!(matches!(check_nf(&synthetic_g(1.1, 0.0, 0.0), &qs), Err(Error::NotApplicable(_))));
}

#[test]
fn g_bound_checks() {
    let ok = vec![
        synthetic_g(0.5, -0.1, 1e-3),
        synthetic_g(0.7, -0.04, 1e-3),
        synthetic_g(0.9, -0.004, 1e-4),
    ];
    let report = check_g_bounds(&ok).unwrap();
    let bounds: Vec<_> = report.reports.iter().filter(|r| r.name.starts_with("-(1-b)^2/2")).collect();
    assert_eq!(bounds.len(), 3);
    assert!(bounds.iter().all(|r| r.holds));
    // violates |g| <= (1-b)^2/2
    let bad = check_g_bounds(&[synthetic_g(0.5, -0.2, 1e-3)]).unwrap();
    assert!(!bad.passed);
    let increasing = check_g_bounds(&[synthetic_g(0.5, -0.05, 1e-4), synthetic_g(0.7, -0.04, 1e-4)]).unwrap();
    assert!(increasing.reports.iter().filter(|r| r.name.starts_with("g(")).all(|r| r.holds));
    // decreasing in b beyond the error bars
    let wrong_order = check_g_bounds(&[synthetic_g(0.5, -0.01, 1e-4), synthetic_g(0.7, -0.04, 1e-4)]).unwrap();
    assert!(!wrong_order.passed);
    let normal = check_g_bounds(&[synthetic_g(1.1, -1e-6, 0.0)]).unwrap();
    assert!(!normal.passed);
}

#[test]
fn ka_inequality_structure() {
    let mut points = Vec::new();
    for n in [1u64, 2] {
        let ab = minimize_cr(n, 32, &cfg().with_restarts(4)).unwrap();
        let r = side_for_quanta(n);
        for b in [0.9, 1.0] {
            let m0 = minimize_m0(b, r, dirichlet_counts(r, 0.25), &cfg()).unwrap();
            points.push((m0, ab.clone()));
        }
    }
    let ka = check_ka(&points).unwrap();
    assert_eq!(ka.reports.len(), 4);
    assert!(ka.reports.iter().all(|r| r.holds));
    assert_eq!(ka.fitted[0].values.len(), 2);
    let wrong_side = minimize_m0(0.9, 4.0, 15, &cfg()).unwrap();
    let ab = points[0].1.clone();
    assert!(check_ka(&[(wrong_side, ab)]).is_err());
}

#[test]
fn lemma_sweep_runs_every_check() {
    let sweep = lemma_sweep(0.7, &[4.0, 6.0, 8.0], 0.5, &cfg()).unwrap();
    let checks = sweep.checks().unwrap();
    let names: Vec<&str> = checks.iter().map(|c| c.name.as_str()).collect();
    for want in ["lemma_sandwich", "lemma_cube_density", "l4_bounds", "virial", "quotient_bounds"] {
        assert!(names.contains(&want), "{names:?}");
    }
}
