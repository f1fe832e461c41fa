mod common;

use common::{build_lp, random_lp, vertex_enumeration};
use overlay_routing::harness::Scenario;
use overlay_routing::lp::{dual_objective, solve, subgradient, DualProblem, LpStatus};
use overlay_routing::policy::*;
use overlay_routing::sim::{NetworkState, SlotDecision};
use overlay_routing::{Commodity, NodeId, NodeKind, OverlayNetwork, Topology};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
struct Graph {
    overlay: u32,
    underlay: u32,
    links: Vec<(u32, u32, u32)>,
    commodities: Vec<(u32, u32)>,
}

fn graph() -> impl Strategy<Value = Graph> {
    (2u32..=4, 1u32..=5).prop_flat_map(|(o, u)| {
        let n = o + u;
        let link = (1..=n, 1..=n, 1u32..=3);
        let commodity = (1..=o, 1..=o);
        (
            Just(o),
            Just(u),
            prop::collection::vec(link, 4..=20),
            prop::collection::vec(commodity, 1..=3),
        )
            .prop_map(|(overlay, underlay, links, commodities)| Graph {
                overlay,
                underlay,
                links,
                commodities,
            })
    })
}

fn build(g: &Graph) -> Option<OverlayNetwork> {
    let mut t = Topology::new();
    for i in 1..=g.overlay {
        t.add_node(NodeId(i), NodeKind::Overlay).ok()?;
    }
    for i in g.overlay + 1..=g.overlay + g.underlay {
        t.add_node(NodeId(i), NodeKind::Underlay).ok()?;
    }
    for &(a, b, c) in &g.links {
        for (x, y) in [(a, b), (b, a)] {
            if x != y && t.link_id(NodeId(x), NodeId(y)).is_none() {
                t.add_link(NodeId(x), NodeId(y), c).ok()?;
            }
        }
    }
    t.derive_routes();
    let ks = g
        .commodities
        .iter()
        .filter(|(s, d)| s != d)
        .map(|&(s, d)| Commodity::new(NodeId(s), NodeId(d)))
        .collect::<Vec<_>>();
    if ks.is_empty() {
        return None;
    }
    OverlayNetwork::new(t, ks).ok()
}

fn decision(
    p: &mut dyn Policy,
    net: &OverlayNetwork,
    st: &NetworkState,
) -> Vec<(usize, usize, u32)> {
    let mut out = SlotDecision::default();
    p.decide(net, st, &mut out).unwrap();
    let mut v: Vec<_> = out
        .transmissions
        .iter()
        .map(|t| (t.tunnel.0, t.commodity, t.packets))
        .collect();
    v.sort();
    v
}

fn preloaded(net: &OverlayNetwork, backlog: &[u64], scale: u64) -> NetworkState {
    let mut st = NetworkState::new(net);
    let k = net.num_commodities();
    for (i, &node) in net.overlay_nodes().iter().enumerate() {
        for (c, com) in net.commodities().iter().enumerate() {
            if com.destination != node {
                st.preload(net, node, c, backlog[(i * k + c) % backlog.len()] * scale);
            }
        }
    }
    st
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..400 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    (a + b) / 2.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tunnels_follow_underlay_routes(g in graph()) {
        let Some(net) = build(&g) else { return Ok(()) };
        let topo = net.topology();
        for (i, t) in net.tunnels().iter().enumerate() {
            prop_assert_eq!(t.id.0, i);
            prop_assert!(t.path.len() >= 2);
            prop_assert!(topo.is_overlay(t.head()) && topo.is_overlay(t.tail()));
            for w in t.path.windows(2) {
                prop_assert!(topo.link_id(w[0], w[1]).is_some());
            }
            for (j, &x) in t.path.iter().enumerate().take(t.path.len() - 1).skip(1) {
                prop_assert!(topo.is_underlay(x));
                prop_assert_eq!(topo.next_hop(x, t.tail()), Some(t.path[j + 1]));
            }
            let mut seen = t.path.clone();
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), t.path.len());
            prop_assert_eq!(net.find_tunnel(&t.path), Some(t.id));
            prop_assert!(!net.usable(t.id).is_empty());
            prop_assert_eq!(net.tunnel_underlay_links(t.id).len(), t.path.len() - 2);
            let g = &net.first_link_groups()[net.group_of(t.id)];
            prop_assert_eq!(g.link, t.first_link());
        }
    }

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c, rows, rhs) = random_lp(&mut rng);
        let sol = solve(&build_lp(&c, &rows, &rhs)).unwrap();
        match vertex_enumeration(&c, &rows, &rhs) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(v) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                prop_assert!((sol.objective - v).abs() <= 1e-6 * v.abs().max(1.0), "{} vs {}", sol.objective, v);
            }
        }
    }

    #[test]
    fn decisions_are_scale_invariant(
        backlog in prop::collection::vec(0u64..50, 1..12),
        scale in 2u64..7,
        name in prop::sample::select(vec!["topoA", "topoB-sub", "topoC"]),
    ) {
        let s = Scenario::builtin(name).unwrap();
        let net = &s.network;
        let a = preloaded(net, &backlog, 1);
        let b = preloaded(net, &backlog, scale);
        for kind in [PolicyKind::Bp, PolicyKind::Obp, PolicyKind::Oorp] {
            let mut p = PolicySpec::new(kind).build().unwrap();
            let mut q = PolicySpec::new(kind).build().unwrap();
            prop_assert_eq!(decision(&mut p, net, &a), decision(&mut q, net, &b));
        }
    }

    #[test]
    fn obp_is_bp_without_underlay(
        n in 3u32..6,
        caps in prop::collection::vec(1u32..4, 30),
        backlog in prop::collection::vec(0u64..40, 1..20),
    ) {
        let mut t = Topology::new();
        for i in 1..=n {
            t.add_node(NodeId(i), NodeKind::Overlay).unwrap();
        }
        let mut c = caps.iter().cycle();
        for a in 1..=n {
            for b in 1..=n {
                if a != b && (a + b) % 3 != 0 {
                    t.add_link(NodeId(a), NodeId(b), *c.next().unwrap()).unwrap();
                }
            }
        }
        t.derive_routes();
        let Ok(net) = OverlayNetwork::new(t, vec![Commodity::new(NodeId(1), NodeId(n)), Commodity::new(NodeId(2), NodeId(1))]) else {
            return Ok(());
        };
        let st = preloaded(&net, &backlog, 1);
        prop_assert_eq!(
            decision(&mut Backpressure, &net, &st),
            decision(&mut OverlayBackpressure, &net, &st)
        );
        let mut oorp = PolicySpec::new(PolicyKind::Oorp).build().unwrap();
        prop_assert_eq!(decision(&mut Backpressure, &net, &st), decision(&mut oorp, &net, &st));
    }

    #[test]
    fn rate_choice_maximizes_log_objective(w in 0.1f64..50.0, q in 0.0f64..100.0, cap in 0.1f64..50.0) {
        let cfg = RateControllerConfig { weight: w, cap };
        let f = |x: f64| w * x.ln() - q * x;
        let got = rate_control_choose(&cfg, q);
        let best = golden_max(f, 1e-12, cap);
        prop_assert!(got > 0.0 && got <= cap);
        prop_assert!((f(got) - f(best)).abs() <= 1e-9 * f(best).abs().max(1.0));
        prop_assert!(f(got) >= f(best) - 1e-9 * f(best).abs().max(1.0));
    }

    #[test]
    fn dual_subgradient_inequality(
        seed in any::<u64>(),
        name in prop::sample::select(vec!["topoA", "topoB-sub", "topoC"]),
    ) {
        use rand::Rng;
        let s = Scenario::builtin(name).unwrap();
        let p = DualProblem::new(&s.network, s.node_rates(&s.rates(0.9)), s.capacities());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> { (0..p.layout.len()).map(|_| rng.random_range(0.0..30.0)).collect() };
        let q = draw();
        let q2 = draw();
        let (d, flow) = dual_objective(&p, &q);
        let g = subgradient(&p, &flow);
        let (d2, _) = dual_objective(&p, &q2);
        let lin: f64 = g.iter().zip(q2.iter().zip(&q)).map(|(gi, (a, b))| gi * (a - b)).sum();
        prop_assert!(d2 >= d + lin - 1e-9 * (1.0 + d2.abs()), "{d2} < {d} + {lin}");
    }
}
