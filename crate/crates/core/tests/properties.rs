use proptest::prelude::*;

use stokes_core::continuation::{continue_to_target, ContinuationSchedule};
use stokes_core::domain::{
    flat_water_state, make_grid, AmplitudeTarget, SolverState, WaveParameters,
};
use stokes_core::fields::FieldKit;
use stokes_core::harmonic::HarmonicSeries;
use stokes_core::oracles::{airy_state, fd_laplacian, periodic_quadrature};
use stokes_core::solver::newton_solve;
use stokes_core::verify::{
    check_f_properties, check_pressure_x, check_pressure_y, minimum_epsilon, run_all_on,
    ExcisionPolicy,
};

fn params(target: AmplitudeTarget) -> WaveParameters {
    WaveParameters::new(1.0, target).unwrap()
}

fn random_state() -> impl Strategy<Value = SolverState> {
    (
        8usize..20,
        prop::collection::vec(-1.0f64..1.0, 20),
        0.8f64..1.2,
        0.5f64..1.5,
        1.0f64..4.0,
    )
        .prop_map(|(n, raw, c, m, q)| {
            let mut b = vec![1.0 / c];
            for k in 1..=n {
                // decaying coefficients that keep the map far from stagnation
                b.push(0.02 * raw[k - 1] / (k * k) as f64 / (k as f64 * m / c).sinh());
            }
            SolverState { b, c, m, q_head: q }
        })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn state_json_round_trips_exactly(st in random_state()) {
        let back = SolverState::from_json(&st.to_json()).unwrap();
        prop_assert_eq!(back, st);
    }

    #[test]
    fn series_is_harmonic(st in random_state(), tq in 0.1f64..3.0, tp in 0.2f64..0.8) {
        let series = HarmonicSeries::new(&st).unwrap();
        let (q0, p0) = (st.c * tq, -st.m * tp);
        let delta = 1e-2;
        let xs: Vec<f64> = (0..3).map(|i| q0 + delta * (i as f64 - 1.0)).collect();
        let ys: Vec<f64> = (0..3).map(|i| p0 + delta * (i as f64 - 1.0)).collect();
        let vals: Vec<f64> = ys
            .iter()
            .flat_map(|&p| xs.iter().map(move |&q| (q, p)))
            .map(|(q, p)| series.eval(q / st.c, p).h)
            .collect();
        let lap = fd_laplacian(&vals, &xs, &ys).unwrap()[0];
        // 5-point truncation: Δ²/12 (h_qqqq + h_pppp), bounded termwise
        let bound: f64 = series
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let k = (i + 1) as f64 / st.c;
                2.0 * a.abs() * k.powi(4) * ((k * (p0 + delta + st.m)).cosh() / (k * st.m).sinh())
            })
            .sum::<f64>()
            * delta
            * delta
            / 12.0;
        prop_assert!(lap.abs() <= bound + 1e-10, "lap {} bound {}", lap, bound);
    }

    #[test]
    fn fd_order_on_harmonic_polynomials(k in 4i32..7, re in -1.0f64..1.0, im in -1.0f64..1.0) {
        // Re(α z^k) at z0 = 0.6 + 0.3i
        let f = |x: f64, y: f64| {
            let (mut zr, mut zi) = (1.0, 0.0);
            for _ in 0..k {
                (zr, zi) = (zr * x - zi * y, zr * y + zi * x);
            }
            re * zr - im * zi
        };
        let err = |h: f64| {
            let xs: Vec<f64> = (0..3).map(|i| 0.6 + h * (i as f64 - 1.0)).collect();
            let ys: Vec<f64> = (0..3).map(|i| 0.3 + h * (i as f64 - 1.0)).collect();
            let vals: Vec<f64> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| f(x, y))).collect();
            fd_laplacian(&vals, &xs, &ys).unwrap()[0].abs()
        };
        let (e1, e2) = (err(0.04), err(0.02));
        prop_assume!(e1 > 1e-9);
        prop_assert!((e1 / e2).log2() >= 1.9, "order {}", (e1 / e2).log2());
    }

    #[test]
    fn fields_have_mirror_symmetry(st in random_state(), theta in 0.05f64..3.1, frac in 0.0f64..1.0) {
        let p = params(AmplitudeTarget::Height(0.0));
        let kit = FieldKit::new(&st, &p).unwrap();
        let pp = -st.m * frac;
        let a = kit.sample(theta, pp).unwrap();
        let b = kit.sample(-theta, pp).unwrap();
        prop_assert!((a.u - b.u).abs() < 1e-13);
        prop_assert!((a.v + b.v).abs() < 1e-13);
        prop_assert!((a.pressure - b.pressure).abs() < 1e-12);
        prop_assert!(((a.f + p.g * a.x) + (b.f + p.g * b.x)).abs() < 1e-12);
    }
}

fn solved(target: AmplitudeTarget, modes: usize) -> (SolverState, WaveParameters) {
    let p = params(target);
    let flat = flat_water_state(&p, modes);
    let grid = make_grid(modes, modes / 4, &flat).unwrap();
    (
        newton_solve(&flat, &grid, &p, target, 1e-13, 20)
            .unwrap()
            .state,
        p,
    )
}

#[test]
fn airy_dispersion_matches_small_amplitude_solution() {
    let (st, p) = solved(AmplitudeTarget::Height(0.02), 32);
    let airy = airy_state(0.01, &p, 32);
    assert!((airy.c - st.c).abs() / st.c < 1e-3);
}

#[test]
fn bed_mean_current_vanishes() {
    let (st, p) = solved(AmplitudeTarget::Height(0.2), 64);
    let kit = FieldKit::new(&st, &p).unwrap();
    let half = 128;
    let mut u = vec![0.0; 2 * half];
    for j in 0..=half {
        let x = std::f64::consts::PI * j as f64 / half as f64;
        let (theta, pp) = kit.locate(x, -p.d).unwrap();
        assert!((pp + st.m).abs() < 1e-12);
        u[j] = kit.sample(theta, pp).unwrap().u;
        if j > 0 && j < half {
            u[2 * half - j] = u[j];
        }
    }
    assert!(periodic_quadrature(&u).unwrap().abs() < 1e-8);
}

#[test]
fn verification_is_read_only_and_deterministic() {
    let (st, p) = solved(AmplitudeTarget::Height(0.15), 32);
    let grid = make_grid(32, 8, &st).unwrap();
    let fields = FieldKit::new(&st, &p).unwrap().sample_grid(&grid).unwrap();
    let snapshot = fields.clone();
    let policy = ExcisionPolicy::for_grid(&grid, p.g);
    let first = (
        check_pressure_x(&fields, &policy),
        check_pressure_y(&fields, &policy),
        check_f_properties(&fields, &policy),
    );
    let second = (
        check_pressure_x(&fields, &policy),
        check_pressure_y(&fields, &policy),
        check_f_properties(&fields, &policy),
    );
    assert_eq!(first, second);
    for (a, b) in fields.nodes.iter().zip(&snapshot.nodes) {
        assert_eq!(a.p_x.to_bits(), b.p_x.to_bits());
        assert_eq!(a.f.to_bits(), b.f.to_bits());
    }
    let st_copy = st.clone();
    let r1 = run_all_on(&st, &p, None, &grid);
    let r2 = run_all_on(&st, &p, None, &grid);
    assert_eq!(r1, r2);
    assert_eq!(st, st_copy);
}

#[test]
fn regular_waves_pass_at_every_excision_radius() {
    let p = params(AmplitudeTarget::CrestSpeedRatio(0.3));
    let mut sched = ContinuationSchedule::new(vec![AmplitudeTarget::CrestSpeedRatio(0.3)]);
    sched.refinement.max_modes = 128;
    sched.refinement.unresolved_tail = f64::INFINITY;
    let st = continue_to_target(&p, &sched).unwrap().pop().unwrap().state;
    let grid = make_grid(st.modes(), st.modes() / 4, &st).unwrap();
    let base = minimum_epsilon(&grid);
    for scale in [8.0, 4.0, 2.0, 1.5, 1.0] {
        let policy = ExcisionPolicy {
            epsilon: base * scale,
            ..ExcisionPolicy::for_grid(&grid, p.g)
        };
        let r = run_all_on(&st, &p, Some(policy), &grid);
        for name in ["pressure_x", "pressure_y", "f_properties"] {
            assert!(
                r.entry(name).unwrap().pass,
                "{name} at {scale}x: {:?}",
                r.entry(name)
            );
        }
        assert!(r.min_passing_epsilon.unwrap() <= base * (1.0 + 1e-9));
    }
}
