use crate::network::OverlayNetwork;

use super::simplex::{solve, LinearProgram, LpError, LpStatus};
use super::{tunnels_by_link, FlowVector};

#[derive(Clone, Debug, PartialEq)]
pub enum FluidOutcome {
    Feasible(FlowVector),
    Infeasible,
}

impl FluidOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FluidOutcome::Feasible(_))
    }
}

/// Adds one capacity row per link crossed by some tunnel.
fn capacity_rows(net: &OverlayNetwork, lp: &mut LinearProgram, capacity: &[f64]) {
    for (link, tunnels) in tunnels_by_link(net).iter().enumerate() {
        let terms: Vec<(usize, f64)> = tunnels
            .iter()
            .flat_map(|&l| net.pair_range(l))
            .map(|p| (p, 1.0))
            .collect();
        if !terms.is_empty() {
            lp.add_le_sparse(&terms, capacity[link]);
        }
    }
}

/// Net outflow terms `out - in` of commodity `k` at overlay node index `i`.
fn conservation_terms(net: &OverlayNetwork) -> Vec<Vec<(usize, f64)>> {
    let k_count = net.num_commodities();
    let mut terms = vec![Vec::new(); net.overlay_nodes().len() * k_count];
    for (p, (l, k)) in net.pairs().enumerate() {
        let t = net.tunnel(l);
        let head = net.overlay_index(t.head()).expect("overlay");
        let tail = net.overlay_index(t.tail()).expect("overlay");
        terms[head * k_count + k].push((p, 1.0));
        terms[tail * k_count + k].push((p, -1.0));
    }
    terms
}

fn destination_index(net: &OverlayNetwork) -> Vec<usize> {
    net.commodities()
        .iter()
        .map(|c| net.overlay_index(c.destination).expect("overlay"))
        .collect()
}

/// Is the arrival vector `lambda` (`[overlay index * K + k]`) supportable?
///
/// Checks link capacities on every link a tunnel crosses and
/// `out - in >= λ_i^k` at every overlay node other than the commodity's
/// destination. Among feasible flows, returns one of least total flow.
/// `capacity` is indexed like `Topology::links`.
pub fn fluid_feasibility_lp(
    net: &OverlayNetwork,
    lambda: &[f64],
    capacity: &[f64],
) -> Result<FluidOutcome, LpError> {
    let n = net.num_pairs();
    let k_count = net.num_commodities();
    let mut lp = LinearProgram::maximize(vec![-1.0; n]);
    capacity_rows(net, &mut lp, capacity);
    let dest = destination_index(net);
    for (idx, terms) in conservation_terms(net).into_iter().enumerate() {
        let (i, k) = (idx / k_count, idx % k_count);
        if i == dest[k] || (terms.is_empty() && lambda[idx] <= 0.0) {
            continue;
        }
        let neg: Vec<(usize, f64)> = terms.iter().map(|&(p, a)| (p, -a)).collect();
        lp.add_le_sparse(&neg, -lambda[idx]);
    }
    let sol = solve(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => FluidOutcome::Feasible(FlowVector { values: sol.x }),
        _ => FluidOutcome::Infeasible,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scaling {
    /// Largest `θ` with `θ · direction` supportable; infinite when nothing
    /// binds.
    pub theta: f64,
    pub flow: FlowVector,
}

/// Max-flow style oracle: the largest multiple of `direction`
/// (`[overlay index * K + k]`) the network supports.
pub fn max_scaling(
    net: &OverlayNetwork,
    direction: &[f64],
    capacity: &[f64],
) -> Result<Scaling, LpError> {
    let n = net.num_pairs();
    let k_count = net.num_commodities();
    let mut objective = vec![0.0; n + 1];
    objective[n] = 1.0;
    let mut lp = LinearProgram::maximize(objective);
    let mut cap = LinearProgram::maximize(vec![0.0; n]);
    capacity_rows(net, &mut cap, capacity);
    for (row, rhs) in cap.rows() {
        let mut r = row.to_vec();
        r.push(0.0);
        lp.add_le(r, rhs);
    }
    let dest = destination_index(net);
    for (idx, terms) in conservation_terms(net).into_iter().enumerate() {
        let (i, k) = (idx / k_count, idx % k_count);
        if i == dest[k] || (terms.is_empty() && direction[idx] <= 0.0) {
            continue;
        }
        let mut t: Vec<(usize, f64)> = terms.iter().map(|&(p, a)| (p, -a)).collect();
        t.push((n, direction[idx]));
        lp.add_le_sparse(&t, 0.0);
    }
    let sol = solve(&lp)?;
    Ok(match sol.status {
        LpStatus::Optimal => Scaling {
            theta: sol.x[n],
            flow: FlowVector {
                values: sol.x[..n].to_vec(),
            },
        },
        _ => Scaling {
            theta: f64::INFINITY,
            flow: FlowVector::zeros(net),
        },
    })
}
