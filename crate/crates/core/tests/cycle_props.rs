use proptest::prelude::*;

use trailer_ems::cycle::{compose_mission, load_cycle, resample, synthesize_cycle, Profile};

fn profile() -> impl Strategy<Value = Profile> {
    prop_oneof![
        Just(Profile::Urban),
        Just(Profile::Regional),
        Just(Profile::Longhaul)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn composed_duration_is_exact(
        p in profile(),
        seed in 0u64..1000,
        repeats in 1usize..4,
        break_min in 0u32..60,
    ) {
        let base = synthesize_cycle(p, 900.0, seed).unwrap();
        let break_s = f64::from(break_min) * 60.0;
        let m = compose_mission(&base, repeats, break_s).unwrap();
        let expected = repeats as f64 * base.duration_s() + (repeats - 1) as f64 * break_s;
        prop_assert_eq!(m.duration_s(), expected);
        prop_assert_eq!(m.breaks.len(), if break_s > 0.0 { repeats - 1 } else { 0 });
        for (pt, in_break) in m.points.iter().zip(m.break_mask()) {
            if in_break {
                prop_assert_eq!(pt.speed_mps, 0.0);
            }
        }
        prop_assert!(m.points.windows(2).all(|w| w[1].time_s > w[0].time_s));
    }

    #[test]
    fn synthesis_is_pure(p in profile(), seed in any::<u64>()) {
        let a = synthesize_cycle(p, 700.0, seed).unwrap();
        let b = synthesize_cycle(p, 700.0, seed).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
        prop_assert!(a.points.iter().all(|pt| pt.speed_mps >= 0.0 && pt.grade_pct.abs() <= 4.0));
    }

    #[test]
    fn resample_idempotent_and_distance_preserving(
        p in profile(),
        seed in 0u64..1000,
        dt in prop_oneof![Just(0.5), Just(2.0), Just(5.0)],
    ) {
        let base = synthesize_cycle(p, 900.0, seed).unwrap();
        let once = resample(&base, dt).unwrap();
        let twice = resample(&once, dt).unwrap();
        prop_assert_eq!(&once.points, &twice.points);
        let dist = |c: &trailer_ems::cycle::DriveCycle| {
            c.points.windows(2).map(|w| 0.5 * (w[0].speed_mps + w[1].speed_mps) * (w[1].time_s - w[0].time_s)).sum::<f64>()
        };
        let (d0, d1) = (dist(&base), dist(&once));
        prop_assert!((d0 - d1).abs() <= 1e-3 * d0.max(1.0), "{d0} vs {d1}");
    }
}

#[test]
fn csv_round_trip() {
    let c = synthesize_cycle(Profile::Regional, 1200.0, 3).unwrap();
    let back = load_cycle(&c.to_csv(), &c.name).unwrap();
    assert_eq!(back.points, c.points);
    assert_eq!(back.dt_s, c.dt_s);
}

#[test]
fn malformed_cycles_are_rejected_with_line_numbers() {
    let err = load_cycle("time_s,speed_mps,grade_pct\n0,0,0\n1,-2,0\n", "bad").unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
    assert!(load_cycle("t,v,g\n0,0,0\n1,1,0\n", "bad").is_err());
    assert!(load_cycle("time_s,speed_mps,grade_pct\n0,0,0\n0,1,0\n", "bad").is_err());
    assert!(load_cycle("time_s,speed_mps,grade_pct\n0,0,0\n1,1,30\n", "bad").is_err());
    assert!(load_cycle("time_s,speed_mps,grade_pct\n0,0,0\n", "bad").is_err());
}
