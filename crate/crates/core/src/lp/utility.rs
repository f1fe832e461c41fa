//! Utility-maximizing admission rates: `max Σ w_k log λ_k` over rates the
//! fluid model supports, by Kelley's cutting-plane method.

use serde::{Deserialize, Serialize};

use crate::network::OverlayNetwork;

use super::simplex::{solve, LinearProgram, LpError, LpStatus};
use super::{tunnels_by_link, FlowVector};

/// `U(λ) = weight · ln λ` on `0 < λ <= cap`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogUtility {
    pub weight: f64,
    pub cap: f64,
}

impl LogUtility {
    pub fn value(&self, rate: f64) -> f64 {
        self.weight * rate.ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtilityOptimum {
    pub rates: Vec<f64>,
    pub utility: f64,
    /// Upper bound from the final cutting-plane model.
    pub bound: f64,
    pub flow: FlowVector,
}

const MIN_RATE: f64 = 1e-4;
const GAP: f64 = 1e-10;
const MAX_ROUNDS: usize = 400;

/// Maximizes total utility of the rates admitted at each commodity's source.
/// `capacity` is indexed like `Topology::links`.
pub fn utility_optimum_oracle(
    net: &OverlayNetwork,
    utilities: &[LogUtility],
    capacity: &[f64],
) -> Result<UtilityOptimum, LpError> {
    let n = net.num_pairs();
    let k_count = net.num_commodities();
    assert_eq!(utilities.len(), k_count, "one utility per commodity");
    let lam = |k: usize| n + k;
    let s = |k: usize| n + k_count + k;
    let width = n + 2 * k_count;
    let offset: Vec<f64> = utilities
        .iter()
        .map(|u| u.weight * (1.0 / MIN_RATE).ln() + 1.0)
        .collect();

    let mut objective = vec![0.0; width];
    for k in 0..k_count {
        objective[s(k)] = 1.0;
    }
    let mut lp = LinearProgram::maximize(objective);
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
    let mut conservation = vec![Vec::new(); net.overlay_nodes().len() * k_count];
    for (p, (l, k)) in net.pairs().enumerate() {
        let t = net.tunnel(l);
        let head = net.overlay_index(t.head()).expect("overlay");
        let tail = net.overlay_index(t.tail()).expect("overlay");
        conservation[head * k_count + k].push((p, -1.0));
        conservation[tail * k_count + k].push((p, 1.0));
    }
    for (k, c) in net.commodities().iter().enumerate() {
        let src = net.overlay_index(c.source).expect("overlay");
        conservation[src * k_count + k].push((lam(k), 1.0));
    }
    for (idx, terms) in conservation.iter().enumerate() {
        let (i, k) = (idx / k_count, idx % k_count);
        let dest = net
            .overlay_index(net.commodities()[k].destination)
            .expect("overlay");
        if i != dest && !terms.is_empty() {
            lp.add_le_sparse(terms, 0.0);
        }
    }
    for (k, u) in utilities.iter().enumerate() {
        lp.add_le_sparse(&[(lam(k), 1.0)], u.cap);
        lp.add_le_sparse(&[(lam(k), -1.0)], -MIN_RATE);
    }
    let add_cut = |lp: &mut LinearProgram, k: usize, at: f64| {
        let u = utilities[k];
        // s - C <= w ln a + (w / a)(λ - a)
        lp.add_le_sparse(
            &[(s(k), 1.0), (lam(k), -u.weight / at)],
            offset[k] + u.weight * at.ln() - u.weight,
        );
    };
    for (k, u) in utilities.iter().enumerate() {
        let mut at = u.cap;
        while at > 1e-3 {
            add_cut(&mut lp, k, at);
            at /= 2.0;
        }
    }

    for _ in 0..MAX_ROUNDS {
        let sol = solve(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(LpError::NonFinite("infeasible utility problem"));
        }
        let rates: Vec<f64> = (0..k_count).map(|k| sol.x[lam(k)]).collect();
        let utility: f64 = utilities.iter().zip(&rates).map(|(u, &r)| u.value(r)).sum();
        let bound: f64 = (0..k_count).map(|k| sol.x[s(k)] - offset[k]).sum();
        if bound - utility <= GAP * (1.0 + utility.abs()) {
            return Ok(UtilityOptimum {
                rates,
                utility,
                bound,
                flow: FlowVector {
                    values: sol.x[..n].to_vec(),
                },
            });
        }
        for k in 0..k_count {
            let model = sol.x[s(k)] - offset[k];
            if model - utilities[k].value(rates[k]) > GAP {
                add_cut(&mut lp, k, rates[k]);
            }
        }
    }
    let sol = solve(&lp)?;
    let rates: Vec<f64> = (0..k_count).map(|k| sol.x[lam(k)]).collect();
    let utility = utilities.iter().zip(&rates).map(|(u, &r)| u.value(r)).sum();
    let bound = (0..k_count).map(|k| sol.x[s(k)] - offset[k]).sum();
    Ok(UtilityOptimum {
        rates,
        utility,
        bound,
        flow: FlowVector {
            values: sol.x[..n].to_vec(),
        },
    })
}
