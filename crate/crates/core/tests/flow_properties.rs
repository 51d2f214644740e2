use coevo::dynamics::{flow_three_player, flow_two_action, free_flow, integrate, FlowParams, IntegrationControls};
use coevo::{CoevolState, ReducedGame};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = FlowParams> {
    (-6.0..6.0f64, -4.0..4.0f64, -4.0..4.0f64, -3.0..3.0f64, 0.0..1.0f64)
        .prop_map(|(a, b, d, a22, t)| FlowParams::new(ReducedGame::new(a, b, d), a22, t).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn link_rows_keep_unit_sum(seed in any::<u64>(), n in 2usize..7, fp in params()) {
        let s = CoevolState::random_interior(n, seed, 1e-3).unwrap();
        let f = flow_two_action(&s, &fp).unwrap();
        for x in 0..n {
            prop_assert!(f.row_sum(x).abs() < 1e-10, "row {} sums to {}", x, f.row_sum(x));
            prop_assert_eq!(f.dc[x][x], 0.0);
        }
    }

    #[test]
    fn relabeling_agents_relabels_the_field(seed in any::<u64>(), n in 3usize..6, shift in 1usize..5, fp in params()) {
        let s = CoevolState::random_interior(n, seed, 1e-3).unwrap();
        let perm: Vec<usize> = (0..n).map(|x| (x + shift) % n).collect();
        let f = flow_two_action(&s, &fp).unwrap();
        let g = flow_two_action(&s.permuted(&perm), &fp).unwrap();
        for x in 0..n {
            prop_assert!((g.dp[x] - f.dp[perm[x]]).abs() < 1e-12);
            for y in 0..n {
                prop_assert!((g.dc[x][y] - f.dc[perm[x]][perm[y]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_three_player_system_agrees(seed in any::<u64>(), fp in params()) {
        let s = CoevolState::random_interior(3, seed, 1e-3).unwrap();
        let f = flow_two_action(&s, &fp).unwrap();
        let e = flow_three_player(&s, &fp).unwrap();
        let expected = [f.dp[0], f.dp[1], f.dp[2], f.dc[0][1], f.dc[1][2], f.dc[2][0]];
        for (a, b) in e.iter().zip(expected) {
            prop_assert!((a - b).abs() < 1e-10, "{:?} vs {:?}", e, expected);
        }
    }

    #[test]
    fn free_coordinate_field_matches(seed in any::<u64>(), n in 2usize..6, fp in params()) {
        let s = CoevolState::random_interior(n, seed, 1e-3).unwrap();
        let direct = flow_two_action(&s, &fp).unwrap().free_components();
        let free = free_flow(n, &s.free_coordinates(), &fp).unwrap();
        prop_assert_eq!(direct.len(), free.len());
        for (a, b) in direct.iter().zip(&free) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn integration_stays_on_the_simplex(seed in any::<u64>(), fp in params()) {
        let s = CoevolState::random_interior(4, seed, 1e-2).unwrap();
        let traj = integrate(&s, &fp, 20.0, &IntegrationControls::default()).unwrap();
        prop_assert!(traj.final_state().validate_with(1e-9).is_empty());
    }
}

#[test]
fn uniform_network_is_invariant() {
    // every agent sees the same neighbourhood, so links stay uniform
    let fp = FlowParams::new(ReducedGame::new(5.0, -2.0, 1.0), 0.0, 0.2).unwrap();
    let s = CoevolState::symmetric(4, 0.3).unwrap();
    let traj = integrate(&s, &fp, 50.0, &IntegrationControls::default()).unwrap();
    let end = traj.final_state();
    for x in 0..4 {
        for y in (0..4).filter(|&y| y != x) {
            assert!((end.link(x, y) - 1.0 / 3.0).abs() < 1e-9);
        }
        assert!((end.p()[x] - end.p()[0]).abs() < 1e-9);
    }
}
