use crate::network::OverlayNetwork;

use super::simplex::{solve, LinearProgram, LpError, LpStatus};
use super::{tunnels_by_link, FlowVector};

/// Frame problem of the centralized policy: maximize
/// `Σ F_l^k (Q_head^k - Q_tail^k)` subject to `Σ_{l ∋ (a,b)} Σ_k F_l^k <= c_ab`
/// on every link.
///
/// `backlog` is the overlay queue snapshot `[overlay index * K + k]` with
/// destinations at zero. Pairs with non-positive weight are fixed at zero,
/// which never lowers the optimum. `capacity` is indexed like
/// `Topology::links`.
pub fn centralized_frame_lp(
    net: &OverlayNetwork,
    backlog: &[f64],
    capacity: &[f64],
) -> Result<FlowVector, LpError> {
    let k_count = net.num_commodities();
    let q = |node, k| backlog[net.overlay_index(node).expect("overlay") * k_count + k];

    let mut vars = Vec::new();
    let mut objective = Vec::new();
    let mut var_of_pair = vec![None; net.num_pairs()];
    for (i, (l, k)) in net.pairs().enumerate() {
        let t = net.tunnel(l);
        let w = q(t.head(), k) - q(t.tail(), k);
        if w > 0.0 {
            var_of_pair[i] = Some(vars.len());
            vars.push(i);
            objective.push(w);
        }
    }
    let mut flow = FlowVector::zeros(net);
    if vars.is_empty() {
        return Ok(flow);
    }

    let mut lp = LinearProgram::maximize(objective);
    for (link, tunnels) in tunnels_by_link(net).iter().enumerate() {
        let terms: Vec<(usize, f64)> = tunnels
            .iter()
            .flat_map(|&l| net.pair_range(l))
            .filter_map(|p| var_of_pair[p].map(|v| (v, 1.0)))
            .collect();
        if !terms.is_empty() {
            lp.add_le_sparse(&terms, capacity[link]);
        }
    }
    let sol = solve(&lp)?;
    debug_assert_eq!(sol.status, LpStatus::Optimal);
    for (v, &pair) in vars.iter().enumerate() {
        flow.values[pair] = sol.x[v];
    }
    Ok(flow)
}
