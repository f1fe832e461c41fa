mod common;

use common::{build_lp, line, random_lp, scenario, single_path, star, vertex_enumeration};
use overlay_routing::harness::Scenario;
use overlay_routing::lp::*;
use overlay_routing::{NodeId, TunnelId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn backlog(s: &Scenario, entries: &[(u32, usize, f64)]) -> Vec<f64> {
    let net = &s.network;
    let k = net.num_commodities();
    let mut q = vec![0.0; net.overlay_nodes().len() * k];
    for &(node, c, v) in entries {
        q[net.overlay_index(NodeId(node)).unwrap() * k + c] = v;
    }
    q
}

#[test]
fn feasibility_only_problem() {
    let mut lp = LinearProgram::maximize(vec![0.0]);
    lp.add_le(vec![1.0], 1.0);
    let s = solve(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert_eq!(s.objective, 0.0);
}

#[test]
fn textbook_example() {
    let mut lp = LinearProgram::maximize(vec![3.0, 2.0]);
    lp.add_le(vec![1.0, 1.0], 4.0).add_le(vec![1.0, 0.0], 2.0);
    let s = solve(&lp).unwrap();
    assert!((s.objective - 10.0).abs() < 1e-9);
    assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 2.0).abs() < 1e-9);
    assert_eq!(
        vertex_enumeration(&[3.0, 2.0], &[vec![1.0, 1.0], vec![1.0, 0.0]], &[4.0, 2.0]),
        Some(10.0)
    );
}

#[test]
fn negative_bound_is_infeasible() {
    let mut lp = LinearProgram::maximize(vec![1.0]);
    lp.add_le(vec![1.0], -1.0);
    assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn solver_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (c, rows, rhs) = random_lp(&mut rng);
        let lp = build_lp(&c, &rows, &rhs);
        assert_eq!(solve(&lp).unwrap(), solve(&lp).unwrap());
    }
}

#[test]
fn random_lps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (c, rows, rhs) = random_lp(&mut rng);
        let got = solve(&build_lp(&c, &rows, &rhs)).unwrap();
        match vertex_enumeration(&c, &rows, &rhs) {
            None => assert_eq!(got.status, LpStatus::Infeasible, "{c:?} {rows:?} {rhs:?}"),
            Some(v) => {
                assert_eq!(got.status, LpStatus::Optimal);
                assert!((got.objective - v).abs() < 1e-7, "{} vs {v}", got.objective);
            }
        }
    }
}

#[test]
fn frame_lp_gives_bottleneck_to_heavier_commodity() {
    let s = scenario(
        r#"
        name = "shared"
        lambda_max = [1.0, 1.0]
        nodes = [{ id = 1, kind = "overlay" }, { id = 2, kind = "underlay" }, { id = 3, kind = "overlay" }]
        links = [{ from = 1, to = 2, capacity = 5 }, { from = 2, to = 3, capacity = 3 }]
        commodities = [{ source = 1, destination = 3 }, { source = 1, destination = 3 }]
        "#,
    );
    let net = &s.network;
    let f = centralized_frame_lp(
        net,
        &backlog(&s, &[(1, 0, 5.0), (1, 1, 2.0)]),
        &link_capacities(net),
    )
    .unwrap();
    assert!((f.get(net, TunnelId(0), 0) - 3.0).abs() < 1e-9);
    assert!(f.get(net, TunnelId(0), 1).abs() < 1e-9);
}

#[test]
fn frame_lp_zero_when_backlogs_equal() {
    // Destinations always hold zero, so equal backlogs means all zero.
    let s = star();
    let net = &s.network;
    let f = centralized_frame_lp(net, &backlog(&s, &[]), &link_capacities(net)).unwrap();
    assert!(f.values.iter().all(|&v| v == 0.0));
}

#[test]
fn frame_lp_saturates_both_tunnels_of_one_commodity() {
    let s = star();
    let net = &s.network;
    let f =
        centralized_frame_lp(net, &backlog(&s, &[(1, 0, 10.0)]), &link_capacities(net)).unwrap();
    let direct = net.find_tunnel(&[NodeId(1), NodeId(4)]).unwrap();
    let relay = net.find_tunnel(&[NodeId(1), NodeId(3), NodeId(4)]).unwrap();
    assert!((f.get(net, direct, 0) - 1.0).abs() < 1e-9);
    assert!((f.get(net, relay, 0) - 1.0).abs() < 1e-9);
}

#[test]
fn rationalize_examples() {
    assert_eq!(rationalize(1.5, 1000), (3, 2));
    assert_eq!(rationalize(0.0, 1000), (0, 1));
    assert_eq!(rationalize(2.0 / 3.0, 1000), (2, 3));
    let s = EmissionSchedule::new(1.5, DEFAULT_MAX_DENOMINATOR);
    assert_eq!(
        (0..4).map(|t| s.count_at(t)).collect::<Vec<_>>(),
        vec![2, 1, 2, 1]
    );
}

#[test]
fn fluid_topo_a_boundary() {
    let s = Scenario::builtin("topoA").unwrap();
    let cap = s.capacities();
    let ok = fluid_feasibility_lp(&s.network, &s.node_rates(&[1.0 - 1e-6; 3]), &cap).unwrap();
    assert!(ok.is_feasible());
    let bad = fluid_feasibility_lp(&s.network, &s.node_rates(&[1.2, 0.0, 0.0]), &cap).unwrap();
    assert!(!bad.is_feasible());
    match fluid_feasibility_lp(&s.network, &s.node_rates(&[0.0; 3]), &cap).unwrap() {
        FluidOutcome::Feasible(f) => assert!(f.values.iter().all(|&v| v.abs() < 1e-12)),
        FluidOutcome::Infeasible => panic!("zero rates must be feasible"),
    }
}

#[test]
fn fluid_witness_respects_capacities() {
    let s = Scenario::builtin("topoB-sub").unwrap();
    let cap = s.capacities();
    let FluidOutcome::Feasible(f) =
        fluid_feasibility_lp(&s.network, &s.node_rates(&[1.9, 1.9]), &cap).unwrap()
    else {
        panic!("1.9 is below the max flow");
    };
    for (load, c) in f.link_loads(&s.network).iter().zip(&cap) {
        assert!(*load <= c + 1e-9);
    }
    assert!(f.values.iter().all(|&v| v >= -1e-12));
}

#[test]
fn max_scaling_matches_published_values() {
    for (name, theta) in [
        ("topoA", 1.0),
        ("topoB-sub", 1.0),
        ("topoB-sub-bg", 1.0),
        ("topoC", 1.0),
    ] {
        let s = Scenario::builtin(name).unwrap();
        assert!((s.max_load().unwrap() - theta).abs() < 1e-9, "{name}");
    }
}

#[test]
fn dual_at_zero_is_zero() {
    let s = Scenario::builtin("topoA").unwrap();
    let p = DualProblem::new(&s.network, s.node_rates(&[0.9; 3]), s.capacities());
    let (d, f) = dual_objective(&p, &vec![0.0; p.layout.len()]);
    assert_eq!(d, 0.0);
    assert!(f.values.iter().all(|&v| v == 0.0));
}

#[test]
fn line_dual_flow_and_subgradient() {
    let s = line();
    let net = &s.network;
    let p = DualProblem::new(net, vec![0.0; 2], s.capacities());
    let mut q = vec![0.0; p.layout.len()];
    q[p.layout
        .node(net.overlay_index(NodeId(1)).unwrap(), 0)
        .unwrap()] = 5.0;
    let (d, f) = dual_objective(&p, &q);
    assert_eq!(f.get(net, TunnelId(0), 0), 3.0);
    let g = subgradient(&p, &f);
    let ul = net.underlay_link_index(NodeId(2), NodeId(3)).unwrap();
    assert_eq!(g[p.layout.link(ul)], -2.0);
    // Finite difference along the (2,3) dual.
    let mut q2 = q.clone();
    q2[p.layout.link(ul)] += 1e-3;
    let (d2, _) = dual_objective(&p, &q2);
    assert!(((d2 - d) / 1e-3 - -2.0).abs() < 1e-9);
}

#[test]
fn zero_flow_subgradient_is_capacity() {
    let s = line();
    let p = DualProblem::new(&s.network, vec![0.0; 2], s.capacities());
    let g = subgradient(&p, &FlowVector::zeros(&s.network));
    for ul in 0..s.network.underlay_links().len() {
        assert_eq!(g[p.layout.link(ul)], 1.0);
    }
    assert!(g
        .iter()
        .enumerate()
        .all(|(i, &v)| (0..2).any(|ul| p.layout.link(ul) == i) || v == 0.0));
}

#[test]
fn saturated_link_has_zero_subgradient() {
    let s = single_path(1);
    let net = &s.network;
    let p = DualProblem::new(net, vec![0.0; 2], s.capacities());
    let mut f = FlowVector::zeros(net);
    f.values[0] = 1.0;
    let g = subgradient(&p, &f);
    let ul = net.underlay_link_index(NodeId(2), NodeId(3)).unwrap();
    assert_eq!(g[p.layout.link(ul)], 0.0);
}

#[test]
fn uphill_tunnel_gets_no_flow() {
    let s = scenario(
        r#"
        name = "chain"
        lambda_max = [1.0]
        nodes = [
            { id = 1, kind = "overlay" }, { id = 2, kind = "underlay" }, { id = 3, kind = "overlay" },
            { id = 4, kind = "underlay" }, { id = 5, kind = "overlay" },
        ]
        links = [
            { from = 1, to = 2, capacity = 1 }, { from = 2, to = 3, capacity = 1 },
            { from = 3, to = 4, capacity = 1 }, { from = 4, to = 5, capacity = 1 },
        ]
        commodities = [{ source = 1, destination = 5 }]
        "#,
    );
    let net = &s.network;
    let p = DualProblem::new(net, vec![0.0; 3], s.capacities());
    let mut q = vec![0.0; p.layout.len()];
    q[p.layout
        .node(net.overlay_index(NodeId(1)).unwrap(), 0)
        .unwrap()] = 2.0;
    q[p.layout
        .node(net.overlay_index(NodeId(3)).unwrap(), 0)
        .unwrap()] = 4.0;
    let (_, f) = dual_objective(&p, &q);
    let first = net.find_tunnel(&[NodeId(1), NodeId(2), NodeId(3)]).unwrap();
    assert_eq!(f.get(net, first, 0), 0.0);
}

#[test]
fn dual_step_projection() {
    assert_eq!(dual_step(&[5.0], &[2.0], 1.0), vec![3.0]);
    assert_eq!(dual_step(&[1.0], &[2.0], 1.0), vec![0.0]);
    assert_eq!(dual_step(&[0.0], &[-3.0], 0.5), vec![1.5]);
    assert_eq!(StepSize::default().at(7), 1.0);
    assert_eq!(StepSize::Harmonic(1.0).at(4), 0.25);
}

#[test]
fn weak_duality_on_topo_a() {
    use rand::Rng;
    let s = Scenario::builtin("topoA").unwrap();
    let p = DualProblem::new(&s.network, s.node_rates(&[0.9; 3]), s.capacities());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let q: Vec<f64> = (0..p.layout.len())
            .map(|_| rng.random_range(0.0..10.0))
            .collect();
        assert!(dual_objective(&p, &q).0 >= -1e-9);
    }
}

#[test]
fn utility_single_path_binds_at_capacity() {
    let s = single_path(1);
    let o = utility_optimum_oracle(&s.network, &s.utilities, &s.capacities()).unwrap();
    assert!((o.rates[0] - 1.0).abs() < 1e-4);
}

#[test]
fn utility_symmetric_split() {
    let s = single_path(2);
    let o = utility_optimum_oracle(&s.network, &s.utilities, &s.capacities()).unwrap();
    assert!((o.rates[0] - 0.5).abs() < 1e-4 && (o.rates[1] - 0.5).abs() < 1e-4);
    assert!(o.bound - o.utility < 1e-4);
}

#[test]
fn residual_capacity_subtracts_background() {
    let s = Scenario::builtin("topoB-sub-bg").unwrap();
    let topo = s.network.topology();
    let cap = s.capacities();
    assert_eq!(cap[topo.link_id(NodeId(7), NodeId(5)).unwrap()], 0.5);
    assert_eq!(cap[topo.link_id(NodeId(5), NodeId(6)).unwrap()], 0.5);
    assert!((cap[topo.link_id(NodeId(12), NodeId(14)).unwrap()] - 0.8).abs() < 1e-12);
    assert_eq!(cap[topo.link_id(NodeId(5), NodeId(7)).unwrap()], 1.0);
}
