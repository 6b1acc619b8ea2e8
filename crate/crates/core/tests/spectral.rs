use std::f64::consts::PI;

use glvortex::field::{side_for_quanta, Boundary, Grid};
use glvortex::spectral::{
    eigenpairs2d, gap_defect, lll_basis, project_lll, quadratic_form, spectrum2d, spectrum3d, LLL_THRESHOLD,
};
use glvortex::{ComplexField, Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol
}

#[test]
fn cluster_size_equals_flux_quanta() {
    for n in [1u64, 2, 4, 6] {
        let r = side_for_quanta(n);
        let counts = if n == 6 { 40 } else { 32 };
        let s = spectrum2d(r, counts, n as usize + 2).unwrap();
        assert_eq!(s.lowest_cluster().len(), n as usize, "n = {n}");
        assert_eq!(s.clusters[0], 0..n as usize);
        assert_eq!(s.flux_quanta, n);
    }
}

#[test]
fn one_quantum_eigenvalues_at_48() {
    let s = spectrum2d(side_for_quanta(1), 48, 3).unwrap();
    assert!((s.eigenvalues[0] - 1.0).abs() <= 0.03, "{:?}", s.eigenvalues);
    assert!((s.eigenvalues[1] - 3.0).abs() <= 0.07 * 3.0, "{:?}", s.eigenvalues);
}

#[test]
fn eigenvalues_converge_under_refinement() {
    let r = side_for_quanta(1);
    let coarse = spectrum2d(r, 24, 2).unwrap();
    let fine = spectrum2d(r, 48, 2).unwrap();
    for j in 0..2 {
        let target = [1.0, 3.0][j];
        assert!((fine.eigenvalues[j] - target).abs() < (coarse.eigenvalues[j] - target).abs());
    }
    // second-order convergence of the lowest value
    let order = ((coarse.eigenvalues[0] - 1.0) / (fine.eigenvalues[0] - 1.0)).log2();
    assert!((order - 2.0).abs() < 0.2, "order {order}");
}

#[test]
fn spectrum_is_deterministic() {
    let r = side_for_quanta(2);
    let a = spectrum2d(r, 32, 4).unwrap();
    let b = spectrum2d(r, 32, 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn basis_is_orthonormal_with_rayleigh_quotients_near_one() {
    let basis = lll_basis(side_for_quanta(4), 32, 0.1).unwrap();
    assert_eq!(basis.dimension(), 4);
    assert!(basis.gram_defect() <= 1e-10);
    for f in basis.vectors() {
        let q = quadratic_form(f).unwrap() / f.integral_pow(2);
        assert!((q - 1.0).abs() <= basis.cluster_tol(), "{q}");
    }
}

#[test]
fn under_resolved_grid_breaks_degeneracy() {
    // 16 plaquettes cannot carry 6 flux quanta resolvably
    let r = side_for_quanta(6);
    match lll_basis(r, 4, 0.1) {
        Err(Error::WrongDegeneracy { found, expected }) => {
            assert_eq!(expected, 6);
            assert_ne!(found, 6);
        }
        other => panic!("expected WrongDegeneracy, got {other:?}"),
    }
}

#[test]
fn projection_algebra() {
    let basis = lll_basis(side_for_quanta(2), 32, 0.1).unwrap();
    let grid = basis.grid().clone();
    let u = ComplexField::random(&grid, 3);
    let v = ComplexField::random(&grid, 4);
    let pu = project_lll(&u, &basis).unwrap();
    let ppu = project_lll(&pu, &basis).unwrap();
    let idem = pu.axpy(C64::new(-1.0, 0.0), &ppu).norm_l2() / pu.norm_l2();
    assert!(idem <= 1e-10, "{idem}");
    let pv = project_lll(&v, &basis).unwrap();
    let scale = u.norm_l2() * v.norm_l2();
    assert!(close(pu.inner(&v), u.inner(&pv), 1e-10 * scale));
    for f in basis.vectors() {
        let pf = project_lll(f, &basis).unwrap();
        assert!(pf.axpy(C64::new(-1.0, 0.0), f).norm_l2() <= 1e-10);
    }
    let rest = u.axpy(C64::new(-1.0, 0.0), &pu);
    let prest = project_lll(&rest, &basis).unwrap();
    assert!(prest.norm_l2() <= 1e-10 * u.norm_l2());
}

#[test]
fn slice_projection_matches_modewise_projection() {
    let r = side_for_quanta(1);
    let counts = 16;
    let layers = 6;
    let basis = lll_basis(r, counts, 0.1).unwrap();
    let grid = Grid::periodic_box(r, 3.0, counts, layers).unwrap();
    let u = ComplexField::random(&grid, 11);
    let direct = project_lll(&u, &basis).unwrap();

    // discrete Fourier transform in x3, project every mode, transform back
    let plane = counts * counts;
    let vals = u.values();
    let mut out = vec![C64::new(0.0, 0.0); vals.len()];
    for m in 0..layers {
        let mut mode = vec![C64::new(0.0, 0.0); plane];
        for k in 0..layers {
            let w = C64::from_polar(1.0, -2.0 * PI * (m * k) as f64 / layers as f64);
            for s in 0..plane {
                mode[s] += vals[s + k * plane] * w;
            }
        }
        let pm = project_lll(&ComplexField::from_values(basis.grid(), mode).unwrap(), &basis).unwrap();
        for k in 0..layers {
            let w = C64::from_polar(1.0 / layers as f64, 2.0 * PI * (m * k) as f64 / layers as f64);
            for s in 0..plane {
                out[s + k * plane] += pm.values()[s] * w;
            }
        }
    }
    let diff = direct
        .values()
        .iter()
        .zip(&out)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-10 * u.norm_inf(), "{diff}");
}

#[test]
fn spectrum3d_is_the_enumerated_direct_sum() {
    let r = side_for_quanta(1);
    let l = 2.0 * PI;
    let s = spectrum3d(r, l, 32, 8).unwrap();
    assert_eq!(s.eigenvalues[0], s.base[0]);
    for (v, (j, m)) in s.eigenvalues.iter().zip(&s.labels) {
        let expect = s.base[*j] + (2.0 * PI * *m as f64 / l).powi(2);
        assert_eq!(v.to_bits(), expect.to_bits());
    }
    // with L = 2 pi the second distinct value is mu1 + 1
    let second = s.eigenvalues.iter().find(|v| **v > s.eigenvalues[0] + 1e-9).unwrap();
    assert_eq!(second.to_bits(), (s.base[0] + 1.0).to_bits());
}

#[test]
fn spectrum3d_gap_for_tall_boxes() {
    let r = side_for_quanta(1);
    let l = 40.0;
    let s = spectrum3d(r, l, 24, 6).unwrap();
    let gap = s.eigenvalues[1] - s.eigenvalues[0];
    let expect = (4.0 * PI * PI / (l * l)).min(s.base[1] - s.base[0]);
    assert!((gap - expect).abs() <= 1e-12, "{gap} vs {expect}");
}

#[test]
fn gap_inequality_on_complement() {
    let r = side_for_quanta(2);
    let counts = 32;
    let (spec, vecs) = eigenpairs2d(r, counts, 10).unwrap();
    let basis = lll_basis(r, counts, 0.1).unwrap();
    let grid = basis.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..20 {
        let f = if trial % 2 == 0 {
            ComplexField::random(&grid, trial)
        } else {
            // smooth fields built from the lowest eigenvectors
            let mut acc = ComplexField::zeros(&grid);
            for v in &vecs {
                let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                acc = acc.axpy(c, v);
            }
            acc
        };
        let rest = f.axpy(C64::new(-1.0, 0.0), &project_lll(&f, &basis).unwrap());
        let q = quadratic_form(&rest).unwrap();
        assert!(q >= (3.0 - 0.21) * rest.integral_pow(2), "trial {trial}");
    }
    assert!(spec.eigenvalues[2] > LLL_THRESHOLD);
}

#[test]
fn gap_defect_vanishes_on_the_lowest_level() {
    let basis = lll_basis(side_for_quanta(2), 32, 0.1).unwrap();
    let u = basis.vectors()[0].axpy(C64::new(0.3, -0.2), &basis.vectors()[1]);
    for gamma in [0.01, 0.1] {
        assert!(gap_defect(&u, &basis, gamma, 2).unwrap() <= 1e-10);
    }
}

#[test]
fn gap_defect_two_mode_oracle() {
    let r = side_for_quanta(1);
    let counts = 48;
    let (_, vecs) = eigenpairs2d(r, counts, 2).unwrap();
    let basis = lll_basis(r, counts, 0.1).unwrap();
    for gamma in [0.01f64, 0.05, 0.1] {
        // amplitude sqrt(gamma/2) keeps Q(u) <= (1+gamma)|u|^2
        let u = vecs[0].axpy(C64::new((gamma / 2.0).sqrt(), 0.0), &vecs[1]);
        let d = gap_defect(&u, &basis, gamma, 2).unwrap();
        let expect = 1.0 / (2.0 * (1.0 + gamma / 2.0)).sqrt();
        assert!((d - expect).abs() <= 1e-8, "{d} vs {expect}");
        assert!((d - 0.5f64.sqrt()).abs() <= 0.05);
    }
}

#[test]
fn gap_defect_rejects_violated_hypothesis() {
    let r = side_for_quanta(1);
    let (_, vecs) = eigenpairs2d(r, 32, 2).unwrap();
    let basis = lll_basis(r, 32, 0.1).unwrap();
    let u = vecs[0].axpy(C64::new(1.0, 0.0), &vecs[1]);
    assert!(matches!(gap_defect(&u, &basis, 0.01, 2), Err(Error::HypothesisViolated { .. })));
    assert!(matches!(gap_defect(&u, &basis, 0.01, 3), Err(Error::InvalidParameter(_))));
}

#[test]
fn non_quantized_side_rejected() {
    assert!(matches!(spectrum2d(3.0, 16, 2), Err(Error::NonQuantizedFlux { .. })));
    let g = Grid::square(side_for_quanta(1), 16, Boundary::MagneticPeriodic).unwrap();
    assert_eq!(g.flux_quanta(), Some(1));
}
