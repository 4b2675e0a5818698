use proptest::prelude::*;

use trailer_ems::trailer::{
    battery_step, recuperation_power, towing_force_max, BatteryParams, BatteryState, TrailerParams,
};

proptest! {
    #[test]
    fn recuperation_bounded_by_braking_demand_and_cap(
        f_req in -200_000.0f64..-1.0,
        v in 0.1f64..35.0,
        soc in 0.0f64..1.0,
        dt in 0.1f64..60.0,
    ) {
        let p = TrailerParams::default();
        let r = recuperation_power(f_req, v, BatteryState { soc }, &p, dt).unwrap();
        prop_assert!(r.p_mech_w >= 0.0);
        prop_assert!(r.p_mech_w <= -f_req * v + 1e-9);
        prop_assert!(r.p_elec_w <= r.p_mech_w);
        let b = &p.battery;
        let next = battery_step(BatteryState { soc }, r.p_elec_w, 0.0, dt, b);
        prop_assert!(next.state.soc <= b.soc_cap.max(soc) + 1e-12);
    }

    #[test]
    fn battery_step_monotone_in_charge_power(
        soc in 0.0f64..1.0,
        p_lo in 0.0f64..40_000.0,
        extra in 0.0f64..40_000.0,
        load in 0.0f64..10_000.0,
        dt in 0.1f64..60.0,
    ) {
        let b = BatteryParams::default();
        let lo = battery_step(BatteryState { soc }, p_lo, load, dt, &b);
        let hi = battery_step(BatteryState { soc }, p_lo + extra, load, dt, &b);
        prop_assert!(hi.state.soc >= lo.state.soc);
    }

    #[test]
    fn battery_step_closes_energy_balance(
        soc in 0.3f64..0.7,
        p_chg in 0.0f64..10_000.0,
        load in 0.0f64..10_000.0,
        dt in 0.1f64..10.0,
    ) {
        let b = BatteryParams::default();
        let next = battery_step(BatteryState { soc }, p_chg, load, dt, &b);
        let expected = (p_chg * b.eta_charge - load / b.eta_discharge) * dt / b.capacity_j();
        prop_assert!((next.state.soc - soc - expected).abs() <= 1e-12);
    }
}

#[test]
fn towing_force_continuous_at_base_speed() {
    let p = TrailerParams::default();
    for eps in [1e-3, 1e-6, 1e-9] {
        let jump = (towing_force_max(p.v_base_mps - eps, &p)
            - towing_force_max(p.v_base_mps + eps, &p))
        .abs();
        assert!(
            jump < 3600.0 * eps / p.v_base_mps * 2.0 + 1e-9,
            "eps {eps}: {jump}"
        );
    }
    assert_eq!(towing_force_max(0.0, &p), 0.0);
}
