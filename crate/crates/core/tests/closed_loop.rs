//! The estimator wired to the surrogate plant.

use proptest::prelude::*;
use spre_core::closed_loop::{ClosedLoop, ConeModel, RevolutionStatus, SpreEstimator, StationRecord, StationSampler};
use spre_core::cone::{build_table, ConeSurface, GridSpec};
use spre_core::config::{validate_config, SimConfig, TWO_PI};
use spre_core::turbine::{equilibrium_state, BewsReference, Measurement, TurbineParams, TurbineSim};
use spre_core::windfield::{CompositeField, ShearedField, StepSchedule};
use spre_core::Error;

fn cone_model(params: &TurbineParams) -> ConeModel {
    ConeModel {
        table: build_table(&ConeSurface::default(), &params.geometry, &params.air, &GridSpec::default()).unwrap(),
        geometry: params.geometry,
        air: params.air,
        resolution: params.sensor_resolution,
    }
}

fn make_loop(field: CompositeField, cfg: SimConfig, noise: f64) -> ClosedLoop<CompositeField> {
    let params = TurbineParams {
        noise_std: noise,
        ..TurbineParams::default()
    };
    let est = SpreEstimator::new(cfg, cone_model(&params)).unwrap();
    let state = equilibrium_state(&field, &params, 0.0).unwrap();
    let sim = TurbineSim::new(params, ConeSurface::default(), state, 7);
    ClosedLoop::new(field, sim, est)
}

fn sheared(speed: f64) -> CompositeField {
    CompositeField::shear_only(ShearedField::new(StepSchedule::constant(speed).unwrap(), 0.2, 90.0).unwrap())
}

fn collect(cl: &mut ClosedLoop<CompositeField>, duration: f64) -> Vec<StationRecord> {
    let mut rows = Vec::new();
    cl.run(duration, |r, _| rows.push(*r)).unwrap();
    rows
}

fn meas(psi: f64, t: f64) -> Measurement {
    Measurement {
        moop: [0.0; 3],
        azimuth: spre_core::config::blade_azimuths(psi),
        rotor_speed: 1.0,
        pitch: [0.0; 3],
        time: t,
    }
}

const NO_REF: BewsReference = BewsReference {
    blade: [0.0; 3],
    rews: 0.0,
};

#[test]
fn sampler_visits_every_station_once_and_picks_the_nearest_sample() {
    let p = 60;
    let mut sampler = StationSampler::new(p);
    let dpsi = 0.0173;
    let mut expected = 1usize;
    let mut count = 0;
    for k in 0..5000 {
        let psi = 0.01 + dpsi * k as f64;
        for (station, m, _) in sampler.feed(meas(psi, k as f64), NO_REF) {
            assert_eq!(station, expected % p);
            let target = (expected as f64) * TWO_PI / p as f64;
            let picked = 0.01 + dpsi * m.time;
            assert!((picked - target).abs() <= dpsi / 2.0 + 1e-12);
            expected += 1;
            count += 1;
        }
    }
    assert_eq!(count, ((0.01 + dpsi * 4999.0) / (TWO_PI / p as f64)) as usize);
}

#[test]
fn identical_configuration_gives_identical_records() {
    let cfg = SimConfig {
        warmup_revolutions: 2,
        ..SimConfig::default()
    };
    let a = collect(&mut make_loop(sheared(10.0), cfg.clone(), 2e4), 40.0);
    let b = collect(&mut make_loop(sheared(10.0), cfg, 2e4), 40.0);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn periodic_load_leaves_the_identification_untouched() {
    let cfg = SimConfig {
        warmup_revolutions: usize::MAX,
        prior_initial: Some(10.0),
        prior_time_constant: f64::INFINITY,
        ..SimConfig::default()
    };
    let load: Vec<[f64; 3]> = (0..60)
        .map(|s| {
            let a = TWO_PI * s as f64 / 60.0;
            [3e5 * a.sin() + 1e4, -2e5 * (2.0 * a).cos(), 7.3e4 * a.cos()]
        })
        .collect();
    let mut plain = make_loop(sheared(10.0), cfg.clone(), 2e4);
    let mut loaded = make_loop(sheared(10.0), cfg, 2e4).with_disturbance(load).unwrap();
    collect(&mut plain, 60.0);
    collect(&mut loaded, 60.0);
    let (ra, rb) = (plain.estimator().rls(), loaded.estimator().rls());
    assert!(ra.samples() > 300);
    assert_eq!(ra.samples(), rb.samples());
    assert_eq!(ra.factor(), rb.factor());
    assert_eq!(ra.markov(), rb.markov());
}

#[test]
fn ideal_inflow_converges_from_a_biased_prior() {
    let field = CompositeField::shear_only(ShearedField::uniform(8.0, 90.0).unwrap());
    let cfg = SimConfig {
        prior_initial: Some(7.0),
        prior_time_constant: f64::INFINITY,
        ..SimConfig::default()
    };
    let mut cl = make_loop(field, cfg, 0.0);
    let mut revs = Vec::new();
    cl.run(300.0, |_, rev| revs.extend(rev.copied())).unwrap();
    assert!(revs.len() >= 30);
    let active: Vec<_> = revs.iter().filter(|r| r.status != RevolutionStatus::Warmup).collect();
    assert_eq!(active.first().unwrap().index, 10);
    assert!(active.iter().all(|r| r.status == RevolutionStatus::Solved));
    let first = active[0].ybar_norm;
    let at_30 = revs[29].ybar_norm;
    assert!(at_30 <= 0.2 * first, "‖Ȳ‖ {first:.3e} -> {at_30:.3e}");
    assert!((revs[29].rews - 8.0).abs() < 0.08, "REWS {}", revs[29].rews);
}

#[test]
fn estimator_rejects_skipped_stations() {
    let params = TurbineParams::default();
    let mut est = SpreEstimator::new(SimConfig::default(), cone_model(&params)).unwrap();
    let mut s = spre_core::closed_loop::StationSample {
        station: 3,
        time: 0.0,
        moop: [5e6; 3],
        azimuth: [0.0, TWO_PI / 3.0, 2.0 * TWO_PI / 3.0],
        rotor_speed: 1.0,
        pitch: [0.0; 3],
    };
    assert_eq!(est.observe(&s).unwrap(), None);
    s.station = 0;
    assert!(est.observe(&s).unwrap().is_some());
    s.station = 2;
    assert!(matches!(est.observe(&s), Err(Error::Domain(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn warmup_input_stays_within_the_dither_band(amp in 0.0f64..0.5, cutoff in 0.5f64..20.0, seed in any::<u64>()) {
        let cfg = SimConfig {
            prbs_amplitude: amp,
            prbs_cutoff: cutoff,
            rng_seed: seed,
            prior_initial: Some(9.0),
            prior_time_constant: f64::INFINITY,
            ..SimConfig::default()
        };
        let params = TurbineParams::default();
        let mut est = SpreEstimator::new(cfg, cone_model(&params)).unwrap();
        for k in 0..240 {
            let psi = TWO_PI * k as f64 / 60.0;
            let s = spre_core::closed_loop::StationSample {
                station: k % 60,
                time: k as f64 * 0.1,
                moop: [4e6; 3],
                azimuth: spre_core::config::blade_azimuths(psi),
                rotor_speed: 1.0,
                pitch: [0.0; 3],
            };
            let out = est.observe(&s).unwrap().unwrap();
            for u in out.applied {
                prop_assert!((u - 9.0).abs() <= amp + 1e-12);
            }
            prop_assert!(out.estimate.iter().all(|u| *u == 9.0));
        }
    }

    #[test]
    fn config_validation_matches_the_invariants(
        forgetting in -0.5f64..1.5,
        p in 1usize..80,
        big_p in 1usize..80,
        n_b in 1usize..12,
        degree in 0usize..5,
        n_p in 1usize..6,
        n_u in 0usize..6,
        r in -1.0f64..1.0,
    ) {
        let cfg = SimConfig {
            forgetting,
            past_window: p,
            samples_per_rev: big_p,
            n_splines: n_b,
            spline_degree: degree,
            horizon_pred: n_p,
            horizon_est: n_u,
            weight_input: r,
            ..SimConfig::default()
        };
        let ok = forgetting > 0.0 && forgetting <= 1.0
            && big_p >= p
            && n_u >= 1 && n_u <= n_p
            && n_b <= big_p && n_b > degree
            && !(n_b == big_p && degree >= 2 && degree % 2 == 0 && n_b % 2 == 0)
            && r > 0.0;
        match validate_config(cfg.clone()) {
            Ok(c) => { prop_assert!(ok); prop_assert_eq!(c, cfg); }
            Err(Error::InvalidConfig(v)) => prop_assert!(!ok && !v.is_empty()),
            Err(e) => prop_assert!(false, "unexpected {e:?}"),
        }
    }
}
