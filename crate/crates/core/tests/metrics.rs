//! Metrics, costs and status grids recounted from scratch on random plans.

use ltac::experiments::{compute_metrics, emit_status_grid, write_status_grid_csv};
use ltac::linalg::{c, CMatrix};
use ltac::model::{smoothed_cost, true_cost, HorizonPlan, ProblemConfig};
use proptest::prelude::*;

fn plan_strategy() -> impl Strategy<Value = (ProblemConfig, HorizonPlan)> {
    (1usize..5, 1usize..4, 1usize..6, any::<bool>(), proptest::collection::vec(any::<bool>(), 4)).prop_flat_map(
        |(m, n, t, count_initial, s0)| {
            let cells = proptest::collection::vec(
                (prop_oneof![Just(0.0), 1e-6..2.0f64], -1.0..1.0f64, -1.0..1.0f64),
                m * t * n,
            );
            let weights = (0.0..50.0f64, 0.0..50.0f64);
            (cells, weights).prop_map(move |(cells, (l1, l2))| {
                let cfg = ProblemConfig {
                    num_users: m,
                    num_antennas: n,
                    num_slices: t,
                    reject_weight: l1,
                    switch_weight: l2,
                    count_initial_switch: count_initial,
                    ..ProblemConfig::desk()
                };
                let slack = (0..t).map(|ti| (0..m).map(|mi| cells[(ti * m + mi) * n].0).collect()).collect();
                let beams = (0..t)
                    .map(|ti| {
                        CMatrix::from_fn(n, m, |k, mi| {
                            let (_, re, im) = cells[(ti * m + mi) * n + k];
                            c(re, im)
                        })
                    })
                    .collect();
                let mut plan = HorizonPlan::new(slack, beams);
                plan.initial_status = Some(s0[..m].to_vec());
                (cfg, plan)
            })
        },
    )
}

proptest! {
    #[test]
    fn metrics_recount((cfg, plan) in plan_strategy()) {
        let (m, t) = (cfg.num_users, cfg.num_slices);
        let status = |ti: usize, mi: usize| plan.admission.slack[ti][mi] == 0.0;
        let admitted = (0..t).flat_map(|ti| (0..m).map(move |mi| (ti, mi))).filter(|&(ti, mi)| status(ti, mi)).count();
        let mut switches = 0;
        for ti in 1..t {
            for mi in 0..m {
                if status(ti, mi) != status(ti - 1, mi) {
                    switches += 1;
                }
            }
        }
        let initial = if cfg.count_initial_switch {
            let s0 = plan.initial_status.as_ref().unwrap();
            (0..m).filter(|&mi| s0[mi] != status(0, mi)).count()
        } else {
            0
        };
        let mut power = 0.0;
        for w in &plan.beams {
            for z in w.iter() {
                power += z.re * z.re + z.im * z.im;
            }
        }

        let metrics = compute_metrics(&plan, &cfg).unwrap();
        prop_assert_eq!(metrics.admission_ratio, admitted as f64 / (m * t) as f64);
        let freq = if t > 1 { switches as f64 / (t - 1) as f64 } else { 0.0 };
        prop_assert!((metrics.switching_frequency - freq).abs() <= 1e-12);
        prop_assert!((metrics.switches(t) - switches as f64).abs() <= 1e-9);

        let cost = true_cost(&plan, &cfg).unwrap();
        let expected = power + cfg.reject_weight * (m * t - admitted) as f64 + cfg.switch_weight * (switches + initial) as f64;
        prop_assert!((cost.total - expected).abs() <= 1e-9 * expected.max(1.0));
        prop_assert!((cost.transmit_power + cost.reject_cost + cost.switch_cost - cost.total).abs() <= 1e-9 * expected.max(1.0));

        // the smoothed cost never charges a zero slack and charges less than one per rejection
        let smooth = smoothed_cost(&plan, &cfg).unwrap();
        prop_assert!(smooth >= power - 1e-9);
        prop_assert!(smooth <= power + cfg.reject_weight * (m * t - admitted) as f64
            + cfg.switch_weight * (m * t) as f64 + 1e-9);

        let grid = emit_status_grid(&plan);
        prop_assert_eq!(grid.len(), t);
        let ones: usize = grid.iter().flatten().map(|&b| b as usize).sum();
        prop_assert_eq!(ones, admitted);
        let mut buf = Vec::new();
        write_status_grid_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rows: Vec<&str> = text.lines().skip(2).collect();
        prop_assert_eq!(rows.len(), t);
        for (ti, row) in rows.iter().enumerate() {
            let cells: Vec<&str> = row.split(',').collect();
            prop_assert_eq!(cells[0], ti.to_string());
            for mi in 0..m {
                prop_assert_eq!(cells[mi + 1] == "1", status(ti, mi));
            }
        }
    }
}

#[test]
fn cost_rejects_mismatched_plans() {
    let cfg = ProblemConfig { num_users: 2, num_antennas: 2, num_slices: 2, ..ProblemConfig::desk() };
    let short = HorizonPlan::new(vec![vec![0.0, 0.0]], vec![CMatrix::zeros(2, 2)]);
    assert!(true_cost(&short, &cfg).is_err());
    let negative = HorizonPlan::new(vec![vec![0.0, -1.0]; 2], vec![CMatrix::zeros(2, 2); 2]);
    assert!(compute_metrics(&negative, &cfg).is_err());
}
