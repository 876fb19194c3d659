use cardioresp_core::*;

fn scn(dur: f64, fr: f64, fh: f64, a_r: f64, a_h: f64, events: Vec<EventMark>) -> PhysioScenario {
    PhysioScenario {
        duration: dur, sample_rate: 100.0,
        resp_rate: fr, resp_amplitude: a_r,
        heart_rate: fh, heart_impulse_amplitude: a_h, heart_impulse_width: 0.3,
        c1: 1.0, c2: 0.05,
        orientation: [0.0, 0.0, 1.0], gravity_included: true, noise_std: 0.0,
        events, skin_temp: 33.5, skin_temp_drift: 0.0, ambient_pressure: 101_325.0,
    }
}

fn report0(s: &PhysioScenario, cfg: &PipelineConfig, noise_frac: f64, seed: u64)
    -> Result<(u32, u32, HrrStatus, Vec<f64>), String> {
    let mut s = s.clone();
    let heart_peak = s.c2 * s.heart_impulse_amplitude * 2.0 * std::f64::consts::PI.powi(2)
        / (s.heart_impulse_width * s.heart_impulse_width);
    s.noise_std = noise_frac * heart_peak;
    let (trace, _) = synthesize_trace(&s, seed).unwrap();
    let (ev, reps) = run_pipeline(&trace, cfg).map_err(|e| e.to_string())?;
    let r = reps.first().ok_or("no reports")?;
    Ok((r.hr_count, r.rr_count, r.status, ev.coughs.clone()))
}

#[test]
fn grand_grid2() {
    let mut results: Vec<(String, usize, Vec<String>)> = Vec::new();
    for wg in [3.0f64, 4.0, 5.0, 6.0, 7.0] {
        for wd in [3.0f64, 4.0, 5.0] {
            for band_lo in [1.0f64, 1.2, 1.5] {
                for a_r in [0.067f64, 0.1, 0.15] {
                    for a_h in [1.2e-3f64, 2.43e-3, 4.0e-3] {
                        let mut cfg = PipelineConfig::default();
                        cfg.gravity_window = wg;
                        cfg.integration_detrend_window = wd;
                        cfg.edge_margin = Some(0.5);
                        cfg.heart_band = (band_lo, 10.0);
                        let mut rcfg = cfg.clone();
                        rcfg.window = 10.8;

                        let rest = scn(7.2, 1.0/7.2, 4.0/7.2, a_r, a_h, vec![]);
                        let hold = scn(12.0, 1.0/12.0, 6.0/7.2, a_r, a_h,
                            vec![EventMark { kind: EventKind::BreathHold, start: 0.5, duration: 4.5 }]);
                        let running = scn(10.8, 3.0/10.8, 9.0/10.8, a_r, a_h, vec![]);
                        let cough = scn(7.2, 1.0/7.2, 4.0/7.2, a_r, a_h, vec![EventMark::point(EventKind::Cough, 5.85)]);

                        let mut fails: Vec<String> = Vec::new();
                        match report0(&rest, &cfg, 0.0, 0) {
                            Ok((4, 1, HrrStatus::HealthyRange, c)) if c.is_empty() => {}
                            other => fails.push(format!("rest:{other:?}")),
                        }
                        match report0(&rest, &cfg, 0.1, 7) {
                            Ok((4, 1, HrrStatus::HealthyRange, _)) => {}
                            other => fails.push(format!("rest+n:{other:?}")),
                        }
                        match report0(&hold, &cfg, 0.0, 0) {
                            Ok((6, 0, HrrStatus::Indeterminate, _)) => {}
                            other => fails.push(format!("hold:{other:?}")),
                        }
                        match report0(&running, &rcfg, 0.0, 0) {
                            Ok((9, 3, HrrStatus::HealthyRange, c)) if c.is_empty() => {}
                            other => fails.push(format!("run:{other:?}")),
                        }
                        match report0(&cough, &cfg, 0.0, 0) {
                            Ok((_, _, _, c)) if c.len() == 1 && (c[0] - 5.85).abs() <= 0.25 => {}
                            other => fails.push(format!("cough:{other:?}")),
                        }
                        results.push((format!("wg{wg} wd{wd} lo{band_lo} Ar{a_r} Ah{a_h}"), 5 - fails.len(), fails));
                    }
                }
            }
        }
    }
    results.sort_by(|a, b| b.1.cmp(&a.1));
    let full = results.iter().filter(|r| r.1 == 5).count();
    println!("combos passing all 5: {full}/{}", results.len());
    for (desc, score, fails) in results.iter().take(12) {
        println!("{score}/5 {desc} {:?}", fails.iter().take(2).collect::<Vec<_>>());
    }
}

#[test]
fn winner_robustness() {
    for (wg, wd, lo, a_r, a_h) in [
        (6.0, 3.0, 1.5, 0.067, 0.00243),
        (6.0, 3.0, 1.5, 0.067, 0.004),
        (7.0, 3.0, 1.5, 0.067, 0.00243),
        (6.0, 3.0, 1.5, 0.1, 0.00243),
    ] {
        let mut cfg = PipelineConfig::default();
        cfg.gravity_window = wg;
        cfg.integration_detrend_window = wd;
        cfg.edge_margin = Some(0.5);
        cfg.heart_band = (lo, 10.0);
        let mut rcfg = cfg.clone();
        rcfg.window = 10.8;

        let rest = scn(7.2, 1.0/7.2, 4.0/7.2, a_r, a_h, vec![]);
        let hold = scn(12.0, 1.0/12.0, 6.0/7.2, a_r, a_h,
            vec![EventMark { kind: EventKind::BreathHold, start: 0.5, duration: 4.5 }]);
        let running = scn(10.8, 3.0/10.8, 9.0/10.8, a_r, a_h, vec![]);
        let cough = scn(7.2, 1.0/7.2, 4.0/7.2, a_r, a_h, vec![EventMark::point(EventKind::Cough, 5.85)]);

        let mut bad = 0;
        for seed in 0..30u64 {
            if !matches!(report0(&rest, &cfg, 0.1, seed), Ok((4, 1, HrrStatus::HealthyRange, _))) { bad += 1; }
        }
        let hold_ok = matches!(report0(&hold, &cfg, 0.0, 0), Ok((6, 0, HrrStatus::Indeterminate, _)));
        let run_ok = matches!(report0(&running, &rcfg, 0.0, 0), Ok((9, 3, HrrStatus::HealthyRange, _)));
        let cough_ok = matches!(report0(&cough, &cfg, 0.0, 0), Ok((_, _, _, ref c)) if c.len() == 1 && (c[0] - 5.85).abs() <= 0.25);
        // amplitude perturbations +-10%
        let mut pert_bad = 0;
        for (dr, dh) in [(0.9, 0.9), (0.9, 1.1), (1.1, 0.9), (1.1, 1.1)] {
            let r = scn(7.2, 1.0/7.2, 4.0/7.2, a_r*dr, a_h*dh, vec![]);
            if !matches!(report0(&r, &cfg, 0.0, 0), Ok((4, 1, HrrStatus::HealthyRange, ref c)) if c.is_empty()) { pert_bad += 1; }
        }
        println!("wg{wg} wd{wd} lo{lo} Ar{a_r} Ah{a_h}: rest+noise fails {bad}/30, hold {hold_ok} run {run_ok} cough {cough_ok}, pert fails {pert_bad}/4");
    }
}

#[test]
fn run_detail2() {
    let (a_r, a_h) = (0.067, 0.0055);
    let mut cfg = PipelineConfig::default();
    cfg.gravity_window = 7.0;
    cfg.integration_detrend_window = 3.0;
    cfg.edge_margin = Some(0.5);
    cfg.heart_band = (1.0, 10.0);
    cfg.window = 10.8;
    let running = scn(10.8, 3.0/10.8, 9.0/10.8, a_r, a_h, vec![]);
    let (trace, _) = synthesize_trace(&running, 0).unwrap();
    let (ev, reps) = run_pipeline(&trace, &cfg).unwrap();
    println!("beats {:?}", ev.beats.iter().map(|t| (t*100.0).round()/100.0).collect::<Vec<_>>());
    println!("breaths {:?} coughs {:?}", ev.breaths, ev.coughs);
    println!("reps {:?}", reps.iter().map(|r| (r.hr_count, r.rr_count, r.status)).collect::<Vec<_>>());
    // try variations
    for (wg, wd, lo) in [(7.0, 3.0, 1.0), (7.0, 3.5, 1.0), (7.5, 3.0, 1.0), (7.0, 3.0, 0.9), (8.0, 3.0, 1.0), (7.0, 2.5, 1.0)] {
        let mut c = cfg.clone();
        c.gravity_window = wg; c.integration_detrend_window = wd; c.heart_band = (lo, 10.0);
        match run_pipeline(&trace, &c) {
            Ok((ev, _)) => println!("  wg{wg} wd{wd} lo{lo}: HR {} RR {} C {}", ev.beats.len(), ev.breaths.len(), ev.coughs.len()),
            Err(e) => println!("  wg{wg} wd{wd} lo{lo}: ERR {e}"),
        }
    }
}

fn random_scenario(rng: &mut rand_chacha::ChaCha8Rng, noisy: bool) -> PhysioScenario {
    use rand::Rng;
    let heart_amp = rng.random_range(7.0e-4..1.4e-3);
    let width: f64 = 0.15;
    let heart_peak_accel = 0.05 * heart_amp * 2.0 * std::f64::consts::PI.powi(2) / (width * width);
    let tilt = rng.random_range(0.0..0.6);
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    PhysioScenario {
        duration: 20.0, sample_rate: 200.0,
        resp_rate: rng.random_range(0.15..0.40),
        resp_amplitude: rng.random_range(0.01..0.02),
        heart_rate: rng.random_range(1.3..2.5),
        heart_impulse_amplitude: heart_amp,
        heart_impulse_width: width,
        c1: 1.0, c2: 0.05,
        orientation: [tilt * phi.cos(), tilt * phi.sin(), (1.0 - tilt * tilt).sqrt()],
        gravity_included: true,
        noise_std: if noisy { rng.random_range(0.0..0.05) * heart_peak_accel } else { 0.0 },
        events: vec![],
        skin_temp: 33.5, skin_temp_drift: 0.0, ambient_pressure: 101_325.0,
    }
}

fn eval_window(truth: &[EventMark], lo: f64, hi: f64) -> (f64, f64) {
    let mut times: Vec<f64> = truth.iter().map(|m| m.start).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    let boundary = |target: f64| -> f64 {
        let clear = |b: f64| times.iter().map(|t| (t - b).abs()).fold(f64::MAX, f64::min);
        let mut best = (target, clear(target));
        for pair in times.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            if mid < lo || mid > hi { continue; }
            let c = clear(mid);
            let closer = (mid - target).abs() < (best.0 - target).abs();
            if (c >= 0.2 && (best.1 < 0.2 || closer)) || (best.1 < 0.2 && c > best.1) {
                best = (mid, c);
            }
        }
        best.0
    };
    (boundary(lo + 1.0), boundary(hi - 1.0))
}

#[test]
fn sweep_oracle2() {
    use rand::SeedableRng;
    let mut cfg = PipelineConfig::default();
    cfg.gravity_window = 6.0;
    cfg.integration_detrend_window = 4.0;
    cfg.heart_band = (1.2, 10.0);
    cfg.window = 12.0;
    cfg.edge_margin = Some(1.0);

    for noisy in [false, true] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20_240_817);
        let mut exact = 0;
        let mut within1 = 0;
        for trial in 0..200 {
            let s = random_scenario(&mut rng, noisy);
            let (trace, truth) = synthesize_trace(&s, trial as u64).unwrap();
            let (events, _) = run_pipeline(&trace, &cfg).unwrap();
            let (ws, we) = eval_window(&truth, 3.0, 17.0);
            let count = |ts: &[f64]| ts.iter().filter(|&&t| t >= ws && t < we).count() as i64;
            let tb = count(&truth.iter().filter(|m| m.kind == EventKind::HeartBeat).map(|m| m.start).collect::<Vec<_>>());
            let tr = count(&truth.iter().filter(|m| m.kind == EventKind::Breath).map(|m| m.start).collect::<Vec<_>>());
            let (db, dr) = (count(&events.beats), count(&events.breaths));
            if db == tb && dr == tr { exact += 1; }
            if (db - tb).abs() <= 1 && (dr - tr).abs() <= 1 { within1 += 1; }
        }
        println!("noisy={noisy}: exact {exact}/200 within1 {within1}/200");
    }
}
