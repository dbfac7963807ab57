//! Forecaster and receding-horizon controller behaviour.

use mg_dispatch_core::baselines::*;
use mg_dispatch_core::drl::{run_episode, Observability};
use mg_dispatch_core::grid::{ExoBounds, MicrogridConfig};
use mg_dispatch_core::profile::{synth_profile, synth_series, DayProfile, Exo, ProfileShape};

#[test]
fn forecaster_learns_a_constant_series() {
    let series = vec![Exo { load: 420.0, pv: 90.0 }; 96];
    let cfg = ForecastConfig { window: 6, lstm: 4, dense: vec![8], lr: 1e-2, epochs: 60, batch: 8 };
    let bounds = ExoBounds::default();
    let (mut f, report) = forecaster_train(&series, 24, bounds, &cfg, 3).unwrap();
    assert!(report.mse_load < 1e-4 && report.mse_pv < 1e-4, "{report:?}");
    let day = f.predict_day(&series[..10]).unwrap();
    assert_eq!(day.len(), 24);
    for e in day {
        assert!((e.load - 420.0).abs() < 10.0 && (e.pv - 90.0).abs() < 5.0, "{e:?}");
    }
}

#[test]
fn forecaster_training_is_seeded() {
    let series = synth_series(4, 4, 1.0, &ProfileShape::default());
    let cfg = ForecastConfig { epochs: 3, ..ForecastConfig::default() };
    let b = ExoBounds::from_pairs(&series);
    let (mut a, ra) = forecaster_train(&series, 24, b, &cfg, 9).unwrap();
    let (mut c, rc) = forecaster_train(&series, 24, b, &cfg, 9).unwrap();
    assert_eq!(ra, rc);
    assert_eq!(a.predict_day(&series[..30]).unwrap(), c.predict_day(&series[..30]).unwrap());
}

#[test]
fn forecaster_rejects_short_series_and_long_requests() {
    let series = vec![Exo { load: 1.0, pv: 1.0 }; 30];
    assert!(forecaster_train(&series, 24, ExoBounds::default(), &ForecastConfig::default(), 0).is_err());
    let series = vec![Exo { load: 1.0, pv: 1.0 }; 60];
    let cfg = ForecastConfig { window: 4, epochs: 1, ..ForecastConfig::default() };
    let (mut f, _) = forecaster_train(&series, 24, ExoBounds::default(), &cfg, 0).unwrap();
    assert!(f.predict(&series[..5], 25).is_err());
    assert_eq!(f.predict(&series[..5], 7).unwrap().len(), 7);
}

#[test]
fn oracle_mpc_tracks_open_loop_plan() {
    let cfg = MicrogridConfig::default();
    let sm = SmoothingConfig::default();
    let day = synth_profile(1, &cfg.horizon, &ProfileShape::default());
    let past = day.pairs()[..day.warmup()].to_vec();
    let oracle = OracleForecast { series: day.pairs().to_vec() };
    for soc in [100.0, 900.0] {
        let open = ilqg_plan(soc, day.day(), &cfg, &sm).unwrap();
        let mut mpc = MpcController::new(oracle.clone(), past.clone(), cfg, sm.clone(), Observability::Full);
        let trace = run_episode(&mut mpc, &day, soc, &cfg).unwrap();
        let closed = -trace.ret;
        assert!((closed - open.cost).abs() <= 0.01 * open.cost, "soc {soc}: {closed} vs {}", open.cost);
    }
}

#[test]
fn partial_mpc_only_sees_lagged_pairs() {
    // Two days identical up to step 10 then different must give identical
    // actions through step 10 under partial observability.
    let cfg = MicrogridConfig::default();
    let sm = SmoothingConfig { stages: 2, max_iters: 10, ..SmoothingConfig::default() };
    let a = synth_profile(2, &cfg.horizon, &ProfileShape::default());
    let mut pairs = a.pairs().to_vec();
    let cut = a.warmup() + 10;
    for p in &mut pairs[cut..] {
        p.load += 150.0;
    }
    let b = DayProfile::new(a.warmup(), pairs, false).unwrap();
    let run = |day: &DayProfile| {
        let oracle = OracleForecast { series: vec![Exo { load: 350.0, pv: 50.0 }; 200] };
        let mut mpc = MpcController::new(oracle, day.pairs()[..day.warmup()].to_vec(), cfg, sm.clone(), Observability::Partial);
        run_episode(&mut mpc, day, 600.0, &cfg).unwrap().actions()
    };
    let (ua, ub) = (run(&a), run(&b));
    assert_eq!(ua[..=10], ub[..=10]);
    assert_ne!(ua[11..], ub[11..]);
}

#[test]
fn biased_forecast_scales_load_only() {
    let mut f = BiasedForecast { inner: OracleForecast { series: vec![Exo { load: 100.0, pv: 20.0 }; 5] }, load_factor: 1.5 };
    let p = f.predict(&[], 3).unwrap();
    assert!(p.iter().all(|e| e.load == 150.0 && e.pv == 20.0));
}
