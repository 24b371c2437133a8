mod common;

use approx::assert_relative_eq;
use common::*;
use consensus_hmd::dynamics::{bearing, ct_matrices, CtParams};
use consensus_hmd::filtering::{FilterState, SigmaPointFilter, SigmaScheme};
use consensus_hmd::fusion::{amd_fuse, hmd_fuse, optimize_weights, weight_cost, FusionMethod, OptimizerOptions};
use consensus_hmd::network::{bearing_fim, crlb_trace, select_sensors, Deployment, SurveillanceRegion};
use consensus_hmd::sim::{triangulate, triangulation_jacobian};
use consensus_hmd::validation::{kl_monte_carlo, kl_quadrature_1d};
use consensus_hmd::{
    kl_divergence, mixture_moment_match, symmetric_kl, GaussianDensity, MotionModel, SensorPos, WeightVector,
};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn kl_1d_against_quadrature() {
    let p = GaussianDensity::from_slices(&[0.0], &[1.0]).unwrap();
    let q = GaussianDensity::from_slices(&[0.0], &[2.0]).unwrap();
    let quad = kl_quadrature_1d(0.0, 1.0, 0.0, 2.0).unwrap();
    assert!((kl_divergence(&p, &q).unwrap() - quad).abs() <= 1e-6);
}

#[test]
fn kl_2d_against_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let p = random_gaussian(2, &mut rng);
        let q = random_gaussian(2, &mut rng);
        let closed = kl_divergence(&p, &q).unwrap();
        let mc = kl_monte_carlo(&p, &q, 1_000_000, &mut rng).unwrap();
        assert!((closed - mc).abs() / closed <= 0.01, "closed {closed} sampled {mc}");
    }
}

#[test]
fn kl_matches_explicit_inverse_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [1, 2, 4, 5] {
        let p = random_gaussian(n, &mut rng);
        let q = random_gaussian(n, &mut rng);
        assert_relative_eq!(kl_divergence(&p, &q).unwrap(), kl_explicit(&p, &q), max_relative = 1e-9);
    }
}

#[test]
fn moment_match_against_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let comps: Vec<_> = (0..3).map(|_| random_gaussian(2, &mut rng)).collect();
    let w = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
    let mm = mixture_moment_match(&w, &comps).unwrap();
    let (m, c) = mixture_sample_moments(&w, &comps, 1_000_000, &mut rng);
    assert!(mahalanobis(&m, mm.mean(), mm.cov()) <= 0.01);
    assert!(rel_frobenius(&c, mm.cov()) <= 0.01);
}

#[test]
fn amd_two_components_against_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let comps: Vec<_> = (0..2).map(|_| random_gaussian(2, &mut rng)).collect();
    let w = WeightVector::new(vec![0.35, 0.65]).unwrap();
    let fused = amd_fuse(&comps, &w).unwrap();
    let (m, c) = mixture_sample_moments(&w, &comps, 1_000_000, &mut rng);
    assert!(mahalanobis(&m, fused.mean(), fused.cov()) <= 0.01);
    assert!(rel_frobenius(&c, fused.cov()) <= 0.01);
}

#[test]
fn hmd_against_grid_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let inputs = near_agreement_triple(0.1, 0.3, &mut rng);
    let fused = hmd_fuse(&inputs, &WeightVector::uniform(3)).unwrap();
    let (m, c) = hmd_grid_moments(&inputs, &[1.0 / 3.0; 3], 400, 8.0);
    let m = DVector::from_column_slice(m.as_slice());
    let c = DMatrix::from_column_slice(2, 2, c.as_slice());
    assert!(mahalanobis(fused.mean(), &m, &c) <= 0.02);
    assert!(rel_frobenius(fused.cov(), &c) <= 0.02);
}

#[test]
fn weight_cost_against_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let inputs: Vec<_> = (0..3).map(|_| random_gaussian(2, &mut rng)).collect();
    let w = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
    for method in FusionMethod::ALL {
        let fused = consensus_hmd::fuse(method, &inputs, &w).unwrap();
        let d: Vec<f64> = inputs
            .iter()
            .map(|p| 0.5 * (kl_explicit(&fused, p) + kl_explicit(p, &fused)))
            .collect();
        let mean = d.iter().sum::<f64>() / 3.0;
        let expected: f64 = d.iter().map(|x| (x - mean).powi(2)).sum();
        assert_relative_eq!(weight_cost(&w, &inputs, method).unwrap(), expected, max_relative = 1e-8);
    }
}

#[test]
fn symmetric_kl_is_average_of_directions() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let p = random_gaussian(3, &mut rng);
    let q = random_gaussian(3, &mut rng);
    assert_relative_eq!(
        symmetric_kl(&p, &q).unwrap(),
        0.5 * (kl_explicit(&p, &q) + kl_explicit(&q, &p)),
        max_relative = 1e-9
    );
}

#[test]
fn optimizer_against_fine_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let inputs: Vec<_> = (0..3).map(|_| random_gaussian(2, &mut rng)).collect();
    let report = optimize_weights(&inputs, FusionMethod::Hmd, &OptimizerOptions::default()).unwrap();
    let mut best = f64::INFINITY;
    for i in 0..=100 {
        for j in 0..=(100 - i) {
            let w = WeightVector::new(vec![i as f64 / 100.0, j as f64 / 100.0, (100 - i - j) as f64 / 100.0]).unwrap();
            if let Ok(c) = weight_cost(&w, &inputs, FusionMethod::Hmd) {
                best = best.min(c);
            }
        }
    }
    assert!(report.cost <= best + 1e-4, "optimizer {} grid {best}", report.cost);
}

#[test]
fn ct_noise_against_high_precision_values() {
    // 50-digit evaluation of q1·2s/Ω³, q1·c/Ω², q1·s/Ω² and the transition
    // ratios at Ω = -1.84°/min, T = 0.25 min, q1 = 1.944.
    let p = CtParams::new(0.25, 1.944, 0.01).unwrap();
    let (f, q) = ct_matrices((-1.84f64).to_radians(), &p);
    assert_relative_eq!(q[(0, 0)], 0.010124967368670527957, max_relative = 1e-12);
    assert_relative_eq!(q[(0, 2)], 0.060749673686905595621, max_relative = 1e-12);
    assert_relative_eq!(q[(0, 3)], 0.00016257689586106430415, max_relative = 1e-9);
    assert_relative_eq!(q[(1, 2)], -0.00016257689586106430415, max_relative = 1e-9);
    assert_relative_eq!(q[(4, 4)], 0.0025, max_relative = 1e-15);
    assert_relative_eq!(f[(0, 2)], 0.2499973142984045147, max_relative = 1e-14);
    assert_relative_eq!(f[(0, 3)], 0.0010035589293423583268, max_relative = 1e-11);
}

#[test]
fn ct_predict_against_dense_matrices() {
    // With a negligible turn-rate spread every sigma point shares one F.
    let omega = (-1.84f64).to_radians();
    let mut cov = DMatrix::from_diagonal(&DVector::from_vec(vec![400.0, 900.0, 100.0, 50.0, 1e-16]));
    cov[(0, 2)] = 30.0;
    cov[(2, 0)] = 30.0;
    let d = GaussianDensity::new(DVector::from_vec(vec![8500.0, 8000.0, -80.0, -300.0, omega]), cov).unwrap();
    let p = CtParams::new(0.25, 1.944, 0.01).unwrap();
    let (f, q) = ct_matrices(omega, &p);
    let expected_mean = &f * d.mean();
    let expected_cov = &f * d.cov() * f.transpose() + q;
    for scheme in [SigmaScheme::Cubature3, SigmaScheme::Unscented { kappa: 1.0 }] {
        let out = SigmaPointFilter::new(scheme)
            .predict(&FilterState::new(d.clone(), 0), &MotionModel::Ct(p))
            .unwrap();
        assert_relative_eq!(out.density.mean().clone(), expected_mean.clone(), max_relative = 1e-9);
        assert_relative_eq!(
            out.density.cov().clone(),
            expected_cov.clone(),
            max_relative = 1e-6,
            epsilon = 1e-9
        );
    }
}

#[test]
fn linear_measurement_matches_kalman_update() {
    let prior = GaussianDensity::from_slices(
        &[1.0, 2.0, 0.5, -0.5],
        &[
            4.0, 1.0, 0.2, 0.0, 1.0, 3.0, 0.0, 0.1, 0.2, 0.0, 1.0, 0.05, 0.0, 0.1, 0.05, 2.0,
        ],
    )
    .unwrap();
    let h = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let r = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.8]);
    let z = DVector::from_vec(vec![1.7, 1.1]);

    let s = &h * prior.cov() * h.transpose() + &r;
    let k = prior.cov() * h.transpose() * s.clone().try_inverse().unwrap();
    let mean = prior.mean() + &k * (&z - &h * prior.mean());
    let cov = prior.cov() - &k * &h * prior.cov();

    for scheme in [SigmaScheme::Cubature3, SigmaScheme::Unscented { kappa: 1.0 }] {
        let hm = h.clone();
        let out = SigmaPointFilter::new(scheme)
            .update_with(&FilterState::new(prior.clone(), 0), &z, |x| Ok(&hm * x), &r, false)
            .unwrap();
        assert_relative_eq!(out.density.mean().clone(), mean.clone(), epsilon = 1e-8);
        assert_relative_eq!(out.density.cov().clone(), cov.clone(), epsilon = 1e-8);
    }
}

#[test]
fn fim_against_finite_differences() {
    let sensors = [
        SensorPos::new(0.0, 0.0),
        SensorPos::new(3000.0, 500.0),
        SensorPos::new(1000.0, 4000.0),
    ];
    let prior = (1800.0, 2200.0);
    let r = 2f64.to_radians().powi(2);
    let fim = bearing_fim(prior, &sensors, r).unwrap();
    let h = 1e-3;
    let mut expected = Matrix2::zeros();
    for s in &sensors {
        let gx =
            (bearing((prior.0 + h, prior.1), s).unwrap() - bearing((prior.0 - h, prior.1), s).unwrap()) / (2.0 * h);
        let gy =
            (bearing((prior.0, prior.1 + h), s).unwrap() - bearing((prior.0, prior.1 - h), s).unwrap()) / (2.0 * h);
        let g = Vector2::new(gx, gy);
        expected += g * g.transpose() / r;
    }
    assert_relative_eq!(fim, expected, max_relative = 1e-6);
}

#[test]
fn selection_prefers_crossing_bearings() {
    // Sensors 0 and 1 see the prior from orthogonal directions; sensor 2 is
    // nearly collinear with sensor 0.
    let region = SurveillanceRegion::new(10_000.0, 10_000.0, 1, 1).unwrap();
    let positions = [
        SensorPos::new(3000.0, 5000.0),
        SensorPos::new(5000.0, 3000.0),
        SensorPos::new(1000.0, 5050.0),
    ];
    let dep = Deployment::from_positions(region, 0, &positions).unwrap();
    let r = 1e-3;
    let prior = (5000.0, 5000.0);
    let sel = select_sensors(&dep.trackers[0], &dep, prior, 2, r).unwrap();
    let mut brute: Vec<(f64, Vec<usize>)> = [[0, 1], [0, 2], [1, 2]]
        .iter()
        .map(|ids| {
            let ps: Vec<_> = ids.iter().map(|&i| positions[i]).collect();
            (crlb_trace(&bearing_fim(prior, &ps, r).unwrap()), ids.to_vec())
        })
        .collect();
    brute.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    assert_eq!(sel.ids, brute[0].1);
    assert_eq!(sel.ids, vec![0, 1]);
}

/// Intersection of two lines `s_i + t_i (sin z_i, cos z_i)` by least squares.
fn least_squares_intersection(z1: f64, z2: f64, s1: &SensorPos, s2: &SensorPos) -> (f64, f64) {
    // Each line contributes the normal equation n_iᵀ x = n_iᵀ s_i.
    let n1 = Vector2::new(z1.cos(), -z1.sin());
    let n2 = Vector2::new(z2.cos(), -z2.sin());
    let a = n1 * n1.transpose() + n2 * n2.transpose();
    let b = n1 * n1.dot(&Vector2::new(s1.x, s1.y)) + n2 * n2.dot(&Vector2::new(s2.x, s2.y));
    let x = a.try_inverse().unwrap() * b;
    (x[0], x[1])
}

#[test]
fn triangulation_against_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut checked = 0;
    while checked < 100 {
        let s1 = SensorPos::new(rng.random_range(0.0..10_000.0), rng.random_range(0.0..10_000.0));
        let s2 = SensorPos::new(rng.random_range(0.0..10_000.0), rng.random_range(0.0..10_000.0));
        let t = (rng.random_range(0.0..10_000.0), rng.random_range(0.0..10_000.0));
        let (z1, z2) = (bearing(t, &s1).unwrap(), bearing(t, &s2).unwrap());
        if (z2 - z1).sin().abs() < 0.05 {
            continue;
        }
        let (x, y) = triangulate(z1, z2, &s1, &s2).unwrap();
        let (lx, ly) = least_squares_intersection(z1, z2, &s1, &s2);
        assert!(
            (x - lx).abs() <= 1e-6 && (y - ly).abs() <= 1e-6,
            "({x}, {y}) vs ({lx}, {ly})"
        );
        checked += 1;
    }
}

#[test]
fn triangulation_jacobian_against_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..50 {
        let s1 = SensorPos::new(rng.random_range(0.0..5000.0), rng.random_range(0.0..5000.0));
        let s2 = SensorPos::new(rng.random_range(0.0..5000.0), rng.random_range(0.0..5000.0));
        let t = (rng.random_range(0.0..10_000.0), rng.random_range(0.0..10_000.0));
        let (z1, z2) = (bearing(t, &s1).unwrap(), bearing(t, &s2).unwrap());
        if (z2 - z1).sin().abs() < 0.1 {
            continue;
        }
        let j = triangulation_jacobian(z1, z2, &s1, &s2).unwrap();
        let h = 1e-6;
        let plus1 = triangulate(z1 + h, z2, &s1, &s2).unwrap();
        let minus1 = triangulate(z1 - h, z2, &s1, &s2).unwrap();
        let plus2 = triangulate(z1, z2 + h, &s1, &s2).unwrap();
        let minus2 = triangulate(z1, z2 - h, &s1, &s2).unwrap();
        let fd = Matrix2::new(
            (plus1.0 - minus1.0) / (2.0 * h),
            (plus2.0 - minus2.0) / (2.0 * h),
            (plus1.1 - minus1.1) / (2.0 * h),
            (plus2.1 - minus2.1) / (2.0 * h),
        );
        assert_relative_eq!(j, fd, max_relative = 1e-6, epsilon = 1e-3);
    }
}

#[test]
fn anees_bounds_against_chi_square_quantiles() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    for (n_x, m_c) in [(4usize, 100usize), (5, 100), (4, 200)] {
        let (l, u) = consensus_hmd::sim::anees_bounds(n_x, m_c).unwrap();
        let chi = ChiSquared::new((n_x * m_c) as f64).unwrap();
        let lq = chi.inverse_cdf(0.025) / m_c as f64;
        let uq = chi.inverse_cdf(0.975) / m_c as f64;
        assert!((l - lq).abs() / lq <= 0.01, "{l} vs {lq}");
        assert!((u - uq).abs() / uq <= 0.01, "{u} vs {uq}");
    }
}

#[test]
fn measurement_noise_statistics() {
    use consensus_hmd::sim::generate_measurements;
    let truth = vec![DVector::from_vec(vec![5000.0, 5000.0, 0.0, 0.0]); 100_000];
    let s = [SensorPos::new(1000.0, 2000.0)];
    let sd = 2f64.to_radians();
    let z = generate_measurements(&truth, &s, sd * sd, 21).unwrap();
    let exact = bearing((5000.0, 5000.0), &s[0]).unwrap();
    let var = z.iter().map(|row| (row[0] - exact).powi(2)).sum::<f64>() / z.len() as f64;
    assert!((var.sqrt() - sd).abs() / sd <= 0.02);
    assert!(z
        .iter()
        .all(|row| row[0] > -std::f64::consts::PI && row[0] <= std::f64::consts::PI));
}

#[test]
fn exact_errors_give_anees_near_dimension() {
    // Errors drawn from N(0, P) have NEES with mean n_x.
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let p = random_spd(4, &mut rng);
    let d = GaussianDensity::new(DVector::zeros(4), p.clone()).unwrap();
    let l = p.cholesky().unwrap().l();
    let nees: Vec<Vec<f64>> = (0..100)
        .map(|_| {
            (0..50)
                .map(|_| {
                    let e = &l * DVector::from_fn(4, |_, _| normal(&mut rng));
                    d.mahalanobis_sq(&e)
                })
                .collect()
        })
        .collect();
    let anees = consensus_hmd::sim::anees(&nees).unwrap();
    let (lb, ub) = consensus_hmd::sim::anees_bounds(4, 100).unwrap();
    let inside = anees.iter().filter(|a| **a >= lb && **a <= ub).count();
    assert!(inside >= 45, "{inside}/50 inside");
    let avg = anees.iter().sum::<f64>() / 50.0;
    assert!((avg - 4.0).abs() < 0.1);
}
