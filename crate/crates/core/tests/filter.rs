use consensus_hmd::dynamics::{bearing, CvParams};
use consensus_hmd::filtering::{FilterState, SigmaPointFilter, SigmaScheme};
use consensus_hmd::sim::{initialize_track, InitParams, InitialBearings, VelocityInit};
use consensus_hmd::{GaussianDensity, MotionModel, SensorPos};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

const SCHEMES: [SigmaScheme; 2] = [SigmaScheme::Cubature3, SigmaScheme::Unscented { kappa: 1.0 }];

fn prior() -> FilterState {
    let d = GaussianDensity::from_slices(
        &[4000.0, 6000.0, -200.0, -150.0],
        &[
            2500.0, 300.0, 0.0, 0.0, //
            300.0, 1600.0, 0.0, 0.0, //
            0.0, 0.0, 900.0, 0.0, //
            0.0, 0.0, 0.0, 900.0,
        ],
    )
    .unwrap();
    FilterState::new(d, 3)
}

fn sensors() -> [SensorPos; 2] {
    [SensorPos::new(1000.0, 2000.0), SensorPos::new(7000.0, 3000.0)]
}

#[test]
fn zero_innovation_leaves_mean() {
    // A linear reading equal to its prediction moves nothing.
    let h = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    let fs = prior();
    let z = &h * fs.density.mean();
    for scheme in SCHEMES {
        let out = SigmaPointFilter::new(scheme)
            .update_with(&fs, &z, |x| Ok(&h * x), &(DMatrix::identity(2, 2) * 1e-6), false)
            .unwrap();
        assert!((out.density.mean() - fs.density.mean()).amax() < 1e-9);
        assert!(out.density.cov().trace() < fs.density.cov().trace());
    }
}

#[test]
fn bearing_at_predicted_value_barely_moves_mean() {
    let fs = prior();
    let s = sensors();
    let pos = (fs.density.mean()[0], fs.density.mean()[1]);
    let z: Vec<f64> = s.iter().map(|p| bearing(pos, p).unwrap()).collect();
    let r = 1e-10;
    for scheme in SCHEMES {
        let out = SigmaPointFilter::new(scheme).update(&fs, &z, &s, r).unwrap();
        // Sigma-point averaging of the nonlinear bearing shifts the predicted
        // measurement slightly; the move is small relative to the prior spread.
        let d = out.density.mean() - fs.density.mean();
        assert!(d[0].abs() < 5.0 && d[1].abs() < 5.0, "moved {d}");
        assert!(out.density.cov().trace() <= fs.density.cov().trace());
    }
}

#[test]
fn shifted_bearing_gives_same_posterior() {
    let fs = prior();
    let s = sensors();
    let z = vec![0.6, -0.9];
    let shifted = vec![0.6 + 2.0 * PI, -0.9 - 2.0 * PI];
    for scheme in SCHEMES {
        let f = SigmaPointFilter::new(scheme);
        let a = f.update(&fs, &z, &s, 1e-3).unwrap();
        let b = f.update(&fs, &shifted, &s, 1e-3).unwrap();
        assert!((a.density.mean() - b.density.mean()).amax() <= 1e-9 * a.density.mean().amax());
        assert!((a.density.cov() - b.density.cov()).amax() <= 1e-9 * a.density.cov().amax());
    }
}

#[test]
fn innovation_wrapping_near_branch_cut() {
    // Target due south of the sensor: bearings straddle ±π.
    let d = GaussianDensity::from_slices(
        &[0.0, -1000.0, 0.0, 0.0],
        &[
            400.0, 0.0, 0.0, 0.0, 0.0, 400.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
        ],
    )
    .unwrap();
    let fs = FilterState::new(d, 0);
    let s = [SensorPos::new(0.0, 0.0)];
    for scheme in SCHEMES {
        let f = SigmaPointFilter::new(scheme);
        let a = f.update(&fs, &[PI - 0.005], &s, 1e-4).unwrap();
        let b = f.update(&fs, &[-PI + 0.005], &s, 1e-4).unwrap();
        // Just clockwise of south is east of the sensor, just past it west.
        assert!(a.density.mean()[0] > 0.0 && b.density.mean()[0] < 0.0);
        assert!((a.density.mean()[0] + b.density.mean()[0]).abs() < 1e-6);
        assert!((a.density.mean()[0]).abs() < 10.0);
    }
}

#[test]
fn noise_free_tracking_stays_bounded() {
    // Straight-line target across a 10 km square with exact bearings from
    // two fixed, well-separated sensors.
    let t = 0.25;
    let v = 10.0 * 30.8667;
    let course = (-130f64).to_radians();
    let model = MotionModel::Cv(CvParams::new(t, 1.944).unwrap());
    let s = [SensorPos::new(1500.0, 7500.0), SensorPos::new(7500.0, 1500.0)];
    let truth: Vec<(f64, f64)> = (0..=144)
        .map(|k| {
            (
                9000.0 + v * course.sin() * k as f64 * t,
                9000.0 + v * course.cos() * k as f64 * t,
            )
        })
        .collect();
    let z = |k: usize| -> Vec<f64> { s.iter().map(|p| bearing(truth[k], p).unwrap()).collect() };
    let r = 1e-8;
    let params = InitParams {
        r,
        v_max: 15.0 * 30.8667,
        t,
        turn_rate_std: None,
        velocity: VelocityInit::Combined,
    };
    let (z0, z1) = (z(0), z(1));
    let init = initialize_track(
        &InitialBearings {
            first: (z0[0], z0[1]),
            second: (z1[0], z1[1]),
        },
        &s[0],
        &s[1],
        &params,
    )
    .unwrap();
    for scheme in SCHEMES {
        let f = SigmaPointFilter::new(scheme);
        let mut fs = FilterState::new(init.clone(), 0);
        let mut worst = 0.0f64;
        for k in 1..=144 {
            fs = f.predict(&fs, &model).unwrap();
            fs = f.update(&fs, &z(k), &s, r).unwrap();
            let (x, y) = fs.position();
            worst = worst.max(((x - truth[k].0).powi(2) + (y - truth[k].1).powi(2)).sqrt());
            let c = fs.density.cov();
            assert!((c - c.transpose()).amax() == 0.0);
            assert!(c.clone().cholesky().is_some());
        }
        assert!(worst < 10.0, "{scheme:?}: worst position error {worst}");
    }
}

#[test]
fn mismatched_inputs_are_errors() {
    let f = SigmaPointFilter::new(SigmaScheme::Cubature3);
    let fs = prior();
    assert!(f.update(&fs, &[], &[], 1e-3).is_err());
    assert!(f.update(&fs, &[0.1], &sensors(), 1e-3).is_err());
    assert!(f.update(&fs, &[0.1, 0.2], &sensors(), 0.0).is_err());
    let ct = MotionModel::Ct(consensus_hmd::CtParams::new(0.25, 1.0, 0.01).unwrap());
    assert!(f.predict(&fs, &ct).is_err());
    let bad = DVector::from_vec(vec![1.0]);
    assert!(f
        .update_with(
            &fs,
            &bad,
            |x| Ok(x.rows(0, 1).into_owned()),
            &DMatrix::identity(2, 2),
            false
        )
        .is_err());
}
