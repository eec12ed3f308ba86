use std::f64::consts::PI;

use proptest::prelude::*;
use qaoa_transfer::annealing::{schedule_from_params, ScheduleMode, ScheduleTable, MAX_POINTS};
use qaoa_transfer::mitigation::mitigate;
use qaoa_transfer::*;

fn model_strategy(max_n: usize) -> impl Strategy<Value = IsingModel> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (
            prop::collection::vec(prop::option::weighted(0.6, -1.0f64..1.0), pairs),
            prop::collection::vec(-1.0f64..1.0, n),
            -3.0f64..3.0,
        )
            .prop_map(move |(cs, fields, offset)| {
                let mut couplings = Vec::new();
                let mut k = 0;
                for i in 0..n {
                    for j in i + 1..n {
                        if let Some(v) = cs[k] {
                            couplings.push((i, j, v));
                        }
                        k += 1;
                    }
                }
                IsingModel::from_parts(n, couplings, fields, offset).unwrap()
            })
    })
}

fn params_strategy(max_p: usize) -> impl Strategy<Value = QaoaParams> {
    (1..=max_p).prop_flat_map(|p| {
        (prop::collection::vec(-PI..PI, p), prop::collection::vec(-PI..PI, p))
            .prop_map(|(g, b)| QaoaParams::new(g, b).unwrap())
    })
}

fn qubo_strategy() -> impl Strategy<Value = Qubo> {
    (1usize..=7).prop_flat_map(|n| {
        (prop::collection::vec(-50.0f64..50.0, n * n), -10.0f64..10.0).prop_map(move |(vals, offset)| {
            let mut q = Qubo::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    q.q[i][j] = vals[i * n + j];
                }
            }
            q.offset = offset;
            q
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn qubo_and_ising_energies_agree(q in qubo_strategy()) {
        let ising = qubo_to_ising(&q);
        for k in 0..1usize << q.n_vars {
            let a = Assignment::from_index(k, q.n_vars);
            let d = q.energy(&a).unwrap() - ising_energy(&ising, &a).unwrap();
            prop_assert!(d.abs() <= 1e-9, "state {k}: {d}");
        }
    }

    #[test]
    fn normalization_preserves_argmin(m in model_strategy(8)) {
        let n = normalize(&m);
        prop_assert!(n.is_normalized() || n.is_zero());
        let a = brute_force(&m).unwrap();
        let b = brute_force(&n).unwrap();
        prop_assert_eq!(a.ground_states, b.ground_states);
        prop_assert!((b.ground_energy * n.norm_factor - a.ground_energy).abs() <= 1e-9);
    }

    #[test]
    fn offset_only_shifts_expectation(m in model_strategy(6), params in params_strategy(3), shift in -5.0f64..5.0) {
        let m = normalize(&m);
        let shifted = m.shifted(shift);
        let s0 = evolve(&m, &params).unwrap();
        let s1 = evolve(&shifted, &params).unwrap();
        for (a, b) in s0.amplitudes.iter().zip(&s1.amplitudes) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-12);
        }
        let e0 = expectation(&s0, &m).unwrap();
        let e1 = expectation(&s1, &shifted).unwrap();
        prop_assert!((e1 - e0 - shift).abs() <= 1e-9);
        let g0 = brute_force(&m).unwrap();
        let g1 = brute_force(&shifted).unwrap();
        prop_assert_eq!(&g0.ground_states, &g1.ground_states);
        prop_assert!((g1.ground_energy - g0.ground_energy - shift).abs() <= 1e-9);
    }

    #[test]
    fn beta_has_period_pi(m in model_strategy(6), params in params_strategy(3)) {
        let m = normalize(&m);
        let moved = QaoaParams::new(params.gammas.clone(), params.betas.iter().map(|b| b + PI).collect()).unwrap();
        let p0 = evolve(&m, &params).unwrap().probabilities();
        let p1 = evolve(&m, &moved).unwrap().probabilities();
        for (a, b) in p0.iter().zip(&p1) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn evolve_preserves_norm(m in model_strategy(10), params in params_strategy(5)) {
        let s = evolve(&normalize(&m), &params).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn mitigation_never_hurts(m in model_strategy(7), params in params_strategy(2), seed in 0u64..1000) {
        let m = normalize(&m);
        let ground = brute_force(&m).unwrap();
        let samples = sample(&evolve(&m, &params).unwrap(), 200, seed).unwrap();
        let (fixed, rep) = mitigate(&samples, &m, &ground).unwrap();
        prop_assert_eq!(fixed.n_shots(), samples.n_shots());
        prop_assert!(rep.mitigated_optimal_fraction >= rep.raw_optimal_fraction);
        prop_assert!(rep.mitigated_mean_energy <= rep.raw_mean_energy + 1e-12);
    }

    #[test]
    fn schedules_respect_device_limits(
        params in params_strategy(30),
        t_f in 0.1f64..5000.0,
        cost in any::<bool>(),
        rows in 2usize..60,
    ) {
        let mode = if cost { ScheduleMode::Cost } else { ScheduleMode::Mixer };
        let s = schedule_from_params(&params, &ScheduleTable::synthetic_linear(rows), mode, t_f).unwrap();
        prop_assert!(s.points.len() <= MAX_POINTS);
        prop_assert_eq!((s.points[0].t_us, s.points[0].s), (0.0, 0.0));
        let last = s.points[s.points.len() - 1];
        prop_assert_eq!((last.t_us, last.s), (t_f, 1.0));
        prop_assert!(s.points.windows(2).all(|w| w[1].s >= w[0].s && w[1].t_us > w[0].t_us));
    }

    #[test]
    fn bitstring_index_round_trip(n in 1usize..24, raw in any::<u64>()) {
        let k = (raw as usize) & ((1usize << n) - 1);
        let a = Assignment::from_index(k, n);
        prop_assert_eq!(a.to_index(), k);
        let text = a.to_string();
        prop_assert_eq!(text.parse::<Assignment>().unwrap(), a);
    }
}
