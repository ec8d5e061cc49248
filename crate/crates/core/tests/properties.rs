use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use freecool::drl::LagrangeState;
use freecool::env::{ControlAction, SystemState, Thresholds, N_ACTIONS};
use freecool::nn::{Checkpoint, Mlp};
use freecool::power::{CoilModel, FanModel};
use freecool::psychro::{
    buffer, closed_form_props, cool, heat, mix, steady_state_iterative, MoistAirState, PsychroConstants,
    SteadyStateInput, Tolerance,
};

fn air() -> PsychroConstants<f64> {
    PsychroConstants::default()
}

prop_compose! {
    fn solver_input()(
        t_o in 15.0..45.0f64,
        rh_o in 0.0..100.0f64,
        vdot in 2000.0..10000.0f64,
        dt in 0.0..15.0f64,
        alpha in 0.0..0.9f64,
        p_it in 0.0..60.0f64,
    ) -> SteadyStateInput<f64> {
        let outside = MoistAirState { t: t_o, rh: rh_o };
        SteadyStateInput { supply_init: outside, outside, vdot_s: vdot, delta_t: dt, alpha, p_it, eta: 1.0 }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn state_round_trips_through_props(t in -10.0..60.0f64, rh in 1.0..100.0f64) {
        let c = air();
        let w = c.humidity_ratio(&MoistAirState { t, rh }).unwrap();
        let h = c.enthalpy(t, w);
        let back = c.state_from_props(h, w).unwrap();
        prop_assert!((back.state.t - t).abs() < 1e-9);
        prop_assert!((back.state.rh - rh).abs() < 1e-8);
    }

    #[test]
    fn converged_supply_keeps_outside_moisture(input in solver_input()) {
        let c = air();
        let s = steady_state_iterative(&c, &input, &Tolerance::default()).unwrap();
        let w_o = c.humidity_ratio(&input.outside).unwrap();
        prop_assert!((s.props.w - w_o).abs() < 1e-9);
    }

    #[test]
    fn more_recirculation_never_raises_supply_rh(input in solver_input(), d in 0.0..0.3f64) {
        let c = air();
        let lo = closed_form_props(&c, &input).unwrap();
        let hi = closed_form_props(&c, &SteadyStateInput { alpha: (input.alpha + d).min(0.95), ..input }).unwrap();
        let rh = |p: freecool::psychro::AirProps<f64>| c.state_from_props(p.h, p.w).unwrap().state.rh;
        prop_assert!(rh(hi) <= rh(lo) + 1e-9);
    }

    #[test]
    fn loop_error_shrinks_by_alpha_each_pass(input in solver_input()) {
        prop_assume!(input.alpha > 0.05);
        let c = air();
        let fixed = closed_form_props(&c, &input).unwrap();
        let mdot = c.mass_flow(input.vdot_s);
        let processed = cool(&c, &input.outside, input.delta_t, (1.0 - input.alpha) * mdot).unwrap();
        // Start well away from the fixed point.
        let mut supply = c.props(&MoistAirState { t: input.outside.t + 10.0, rh: 20.0 }, mdot).unwrap();
        for _ in 0..20 {
            let err = (supply.h - fixed.h).abs();
            let next = mix(&processed, &buffer(&heat(&supply, input.p_it, input.eta).unwrap(), input.alpha), input.alpha);
            let next_err = (next.h - fixed.h).abs();
            prop_assert!(next_err <= input.alpha * err + 1e-9, "{next_err} > {} * {err}", input.alpha);
            supply = next;
        }
    }

    #[test]
    fn coil_power_is_linear(v in 0.0..10000.0f64, dt in 0.0..15.0f64, k in 0.0..4.0f64) {
        let c = air();
        let coil = CoilModel::default();
        let base = coil.power(&c, v, dt);
        prop_assert!((coil.power(&c, k * v, dt) - k * base).abs() <= 1e-9 * (1.0 + base * k));
        prop_assert!((coil.power(&c, v, k * dt) - k * base).abs() <= 1e-9 * (1.0 + base * k));
    }

    #[test]
    fn fan_power_is_monotone(a in 0.0..10000.0f64, b in 0.0..10000.0f64) {
        let fan = FanModel::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(fan.power(lo).unwrap() <= fan.power(hi).unwrap());
        prop_assert!(fan.power(hi).unwrap() <= fan.p_max);
    }

    #[test]
    fn action_index_is_a_bijection(i in 0..N_ACTIONS) {
        let a = ControlAction::from_index(i).unwrap();
        prop_assert_eq!(a.index(), Some(i));
        let (vi, di, ai) = a.grid().unwrap();
        prop_assert_eq!(ControlAction::from_grid(vi, di, ai), a);
    }

    #[test]
    fn multipliers_stay_in_box(obs in prop::collection::vec((0.0..80.0f64, 0.0..100.0f64), 1..400)) {
        let th = Thresholds { t_th: 32.0, phi_th: 65.0 };
        let mut l = LagrangeState::new([100.0, 100.0], 5.0, 10);
        for (t, phi) in obs {
            let [a, b] = l.update(t, phi, &th);
            prop_assert!((0.0..=100.0).contains(&a) && (0.0..=100.0).contains(&b));
        }
    }

    #[test]
    fn in_range_states_normalize_into_unit_box(
        t_s in 15.0..45.0f64, phi_s in 0.0..100.0f64, p in 0.0..90.0f64, t_o in 15.0..45.0f64, phi_o in 0.0..100.0f64,
    ) {
        let x = SystemState { t_s, phi_s, p_it: p, t_o, phi_o }.normalized();
        prop_assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn checkpoint_text_round_trips(seed in any::<u64>(), h1 in 1usize..12, h2 in 1usize..12) {
        let net = Mlp::<f64>::new(&[5, h1, h2, 7], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let text = Checkpoint::new(net.clone()).with_meta("seed", seed.to_string()).to_text();
        let back = Checkpoint::<f64>::parse(&text).unwrap();
        prop_assert_eq!(back.net, net);
        prop_assert_eq!(back.meta.get("seed").cloned(), Some(seed.to_string()));
    }
}
