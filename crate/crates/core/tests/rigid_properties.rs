use approx::assert_relative_eq;
use proptest::prelude::*;
use selfrec_core::detect::{
    detect_boundedness, detect_recovery, wheel_error_recovery, Boundedness, DEFAULT_HOLD_WINDOW,
    DEFAULT_RATE_TOLERANCE, DEFAULT_SETTLE_BAND,
};
use selfrec_core::energy::{lost_energy, EnergyLedger};
use selfrec_core::rigid::{simulate_rigid, RigidRunConfig};
use selfrec_core::{
    damping_induced_momentum, DampingLaw, InertiaParams, PDGains, RampProfile, SimulationTrace,
};

fn inertias() -> InertiaParams {
    InertiaParams::new(0.0625, 0.625).unwrap()
}

fn run(law: DampingLaw, gains: (f64, f64), rate: f64, stop: f64, end: f64) -> SimulationTrace {
    let cfg = RigidRunConfig::new(
        inertias(),
        law,
        PDGains::new(gains.0, gains.1).unwrap(),
        RampProfile::new(rate, stop).unwrap(),
        end,
    )
    .unwrap();
    simulate_rigid(&cfg).unwrap()
}

fn max_momentum(trace: &SimulationTrace) -> f64 {
    let law = trace.meta.law.clone().unwrap();
    trace
        .records
        .iter()
        .map(|r| damping_induced_momentum(&r.state, &trace.meta.inertias, &law).abs())
        .fold(0.0, f64::max)
}

#[test]
fn unit_damping_bounds_then_recovers() {
    let trace = run(DampingLaw::raw_constant(1.0).unwrap(), (100.0, 100.0), 2.0, 15.0, 40.0);
    let angle = detect_boundedness(&trace, DEFAULT_RATE_TOLERANCE, DEFAULT_HOLD_WINDOW)
        .angle()
        .expect("bounded");
    assert!((angle + 0.125).abs() < 1e-3, "{angle}");
    let rep = detect_recovery(&trace, DEFAULT_SETTLE_BAND);
    assert!(rep.final_angle_residual < 1e-3);
}

#[test]
fn undamped_stool_drifts_and_never_recovers() {
    let trace = run(DampingLaw::none(), (100.0, 100.0), 2.0, 5.0, 15.0);
    assert_eq!(
        detect_boundedness(&trace, DEFAULT_RATE_TOLERANCE, DEFAULT_HOLD_WINDOW),
        Boundedness::Unsettled
    );
    let rep = detect_recovery(&trace, DEFAULT_SETTLE_BAND);
    assert_relative_eq!(rep.final_angle_residual, 0.0625 / 0.6875 * 10.0, max_relative = 1e-3);
    assert_eq!(rep.zero_crossing_count, 0);
}

#[test]
fn boundedness_scales_with_rate_and_inverse_damping() {
    let angle = |k: f64, rate: f64| {
        let trace = run(DampingLaw::raw_constant(k).unwrap(), (100.0, 100.0), rate, 30.0, 31.0);
        detect_boundedness(&trace, DEFAULT_RATE_TOLERANCE, DEFAULT_HOLD_WINDOW)
            .angle()
            .unwrap()
    };
    let base = angle(1.0, 2.0);
    assert_relative_eq!(angle(1.0, 4.0), 2.0 * base, max_relative = 0.01);
    assert_relative_eq!(angle(2.0, 2.0), 0.5 * base, max_relative = 0.01);
    for (k, rate) in [(0.5, 2.0), (1.0, 3.0), (2.0, 1.0)] {
        assert_relative_eq!(angle(k, rate), -0.0625 * rate / k, max_relative = 0.01);
    }
}

#[test]
fn tracking_error_crossings_follow_damping_ratio() {
    let law = DampingLaw::raw_constant(1.0).unwrap();
    for (c0, c1) in [(1.0, 3.0), (1.0, 2.0), (4.0, 5.0)] {
        let trace = run(law.clone(), (c0, c1), 2.0, 2.0, 30.0);
        let rep = wheel_error_recovery(&trace, DEFAULT_SETTLE_BAND);
        assert!(rep.zero_crossing_count <= 1, "c0={c0} c1={c1}: {rep:?}");
    }
    for (c0, c1) in [(1.0, 1.0), (4.0, 1.0), (1.0, 0.5)] {
        let trace = run(law.clone(), (c0, c1), 2.0, 2.0, 30.0);
        let rep = wheel_error_recovery(&trace, DEFAULT_SETTLE_BAND);
        assert!(rep.zero_crossing_count >= 2, "c0={c0} c1={c1}: {rep:?}");
    }
}

#[test]
fn tracking_error_obeys_the_closed_loop_ode() {
    // After the stop the error solves e'' + c1 e' + c0 e = 0 from its value at the stop.
    let (c0, c1) = (1.0, 1.0);
    let trace = run(DampingLaw::raw_constant(1.0).unwrap(), (c0, c1), 2.0, 2.0, 12.0);
    let after: Vec<_> = trace.records.iter().filter(|r| r.state.time >= 2.0).collect();
    let start = after[1];
    let e0 = start.desired_angle - start.state.wheel_angle;
    let de0 = -start.state.wheel_rate;
    let omega = (c0 - c1 * c1 / 4.0f64).sqrt();
    let sigma = -c1 / 2.0;
    for r in after.iter().skip(1) {
        let t = r.state.time - 2.0;
        let exact = (sigma * t).exp()
            * (e0 * (omega * t).cos() + (de0 - sigma * e0) / omega * (omega * t).sin());
        let got = r.desired_angle - r.state.wheel_angle;
        assert!((got - exact).abs() < 1e-7, "t={t}: {got} vs {exact}");
    }
}

#[test]
fn tighter_tolerance_moves_the_result_less_than_the_error_estimate() {
    let make = |rtol: f64| {
        let cfg = RigidRunConfig::new(
            inertias(),
            DampingLaw::RaisedCosine { scale: 2.0 },
            PDGains::new(1.0, 1.0).unwrap(),
            RampProfile::new(2.0, 2.0).unwrap(),
            10.0,
        )
        .unwrap()
        .with_tolerance(rtol)
        .unwrap();
        simulate_rigid(&cfg).unwrap()
    };
    for rtol in [1e-6, 1e-8] {
        let coarse = make(rtol);
        let fine = make(rtol / 2.0);
        let change = (coarse.last().unwrap().state.stool_angle - fine.last().unwrap().state.stool_angle).abs();
        assert!(change < coarse.meta.stool_angle_error, "{change} vs {}", coarse.meta.stool_angle_error);
    }
}

#[test]
fn momentum_error_shrinks_with_tolerance() {
    let make = |rtol: f64| {
        let cfg = RigidRunConfig::new(
            inertias(),
            DampingLaw::CosineSquared { scale: 1.0 },
            PDGains::new(1.0, 3.0).unwrap(),
            RampProfile::new(2.0, 2.0).unwrap(),
            12.0,
        )
        .unwrap()
        .with_tolerance(rtol)
        .unwrap();
        max_momentum(&simulate_rigid(&cfg).unwrap())
    };
    let errors: Vec<f64> = [1e-5, 1e-7, 1e-9].into_iter().map(make).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[2] < 1e-6 * 0.6875 * 2.0);
}

#[test]
fn energy_ledger_balances_and_refines() {
    let make = |rtol: f64, rate: f64| {
        let mut cfg = RigidRunConfig::new(
            inertias(),
            DampingLaw::raw_constant(1.0).unwrap(),
            PDGains::new(1.0, 3.0).unwrap(),
            RampProfile::new(2.0, 2.0).unwrap(),
            12.0,
        )
        .unwrap()
        .with_tolerance(rtol)
        .unwrap();
        cfg.sample_rate = rate;
        EnergyLedger::from_trace(&simulate_rigid(&cfg).unwrap())
    };
    let coarse = make(1e-7, 100.0);
    let fine = make(1e-9, 400.0);
    let (rc, _) = coarse.worst_residual();
    let (rf, _) = fine.worst_residual();
    assert!(rf < rc, "{rf} vs {rc}");
    assert!(rf <= 1e-5 * fine.peak_input().max(1.0));
    assert!(fine.lost_energy_cum.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn integrated_and_recomputed_ledgers_agree() {
    let trace = run(DampingLaw::RaisedCosine { scale: 1.0 }, (1.0, 3.0), 2.0, 2.0, 10.0);
    let law = trace.meta.law.clone().unwrap();
    let recomputed = lost_energy(&trace, &law);
    for (k, r) in trace.records.iter().enumerate() {
        assert!((r.lost_energy - recomputed[k]).abs() < 1e-5 * (1.0 + r.lost_energy));
        // Integrated balance, free of quadrature error.
        assert!((r.input_energy - r.kinetic_energy - r.lost_energy).abs() < 1e-8);
    }
}

#[test]
fn trapezoid_input_energy_converges_at_second_order() {
    let gap = |rate: f64| {
        let mut cfg = RigidRunConfig::new(
            inertias(),
            DampingLaw::RaisedCosine { scale: 1.0 },
            PDGains::new(1.0, 3.0).unwrap(),
            RampProfile::new(2.0, 2.0).unwrap(),
            10.0,
        )
        .unwrap();
        cfg.sample_rate = rate;
        let trace = simulate_rigid(&cfg).unwrap();
        let ledger = EnergyLedger::from_trace(&trace);
        trace
            .records
            .iter()
            .zip(&ledger.input_energy_cum)
            .map(|(r, q)| (r.input_energy - q).abs())
            .fold(0.0, f64::max)
    };
    let (g1, g2, g4) = (gap(200.0), gap(400.0), gap(800.0));
    assert!(g1 < 1e-4, "{g1}");
    for ratio in [g1 / g2, g2 / g4] {
        assert!((3.5..4.5).contains(&ratio), "{g1} {g2} {g4}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn damping_induced_momentum_is_conserved(
        scale in 0.1f64..3.0,
        variant in 0usize..3,
        c0 in 0.5f64..5.0,
        c1 in 0.5f64..5.0,
        rate in 0.5f64..4.0,
        stop in 0.5f64..3.0,
    ) {
        let law = match variant {
            0 => DampingLaw::Constant { scale },
            1 => DampingLaw::RaisedCosine { scale },
            _ => DampingLaw::CosineSquared { scale },
        };
        let trace = run(law, (c0, c1), rate, stop, stop + 4.0);
        prop_assert!(max_momentum(&trace) <= 1e-6 * 0.6875 * rate);
    }

    #[test]
    fn undamped_angular_momentum_is_zero(c0 in 0.5f64..5.0, c1 in 0.5f64..5.0, rate in 0.5f64..4.0) {
        let trace = run(DampingLaw::none(), (c0, c1), rate, 1.0, 3.0);
        for r in &trace.records {
            let p = 0.6875 * r.state.stool_rate + 0.0625 * r.state.wheel_rate;
            prop_assert!(p.abs() < 1e-9);
        }
    }
}
