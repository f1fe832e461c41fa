#![allow(dead_code)]

use overlay_routing::harness::Scenario;
use overlay_routing::lp::LinearProgram;

pub fn scenario(text: &str) -> Scenario {
    Scenario::from_toml(text).expect("test scenario parses")
}

/// Overlay 1 -> underlay 2 -> underlay 3 -> overlay 4 with capacities 3, 1, 1.
pub fn line() -> Scenario {
    scenario(
        r#"
        name = "line"
        lambda_max = [1.0]
        nodes = [
            { id = 1, kind = "overlay" },
            { id = 2, kind = "underlay" },
            { id = 3, kind = "underlay" },
            { id = 4, kind = "overlay" },
        ]
        links = [
            { from = 1, to = 2, capacity = 3 },
            { from = 2, to = 3, capacity = 1 },
            { from = 3, to = 4, capacity = 1 },
        ]
        commodities = [{ source = 1, destination = 4 }]
        "#,
    )
}

/// Overlay 1, 2, 4, 5 around underlay 3 plus a direct link 1 -> 4.
pub fn star() -> Scenario {
    scenario(
        r#"
        name = "star"
        lambda_max = [1.0, 1.0, 1.0]
        nodes = [
            { id = 1, kind = "overlay" },
            { id = 2, kind = "overlay" },
            { id = 3, kind = "underlay" },
            { id = 4, kind = "overlay" },
            { id = 5, kind = "overlay" },
        ]
        links = [
            { from = 1, to = 4, capacity = 1 },
            { from = 1, to = 3, capacity = 1 },
            { from = 2, to = 3, capacity = 1 },
            { from = 3, to = 4, capacity = 1 },
            { from = 3, to = 5, capacity = 1 },
        ]
        commodities = [
            { source = 1, destination = 4 },
            { source = 2, destination = 4 },
            { source = 2, destination = 5 },
        ]
        "#,
    )
}

/// Overlay 1 -> underlay 2 -> overlay 3 with a unit bottleneck.
pub fn single_path(commodities: usize) -> Scenario {
    let ks: Vec<String> = (0..commodities)
        .map(|_| "{ source = 1, destination = 3 }".to_string())
        .collect();
    let lam = vec!["1.0"; commodities].join(", ");
    scenario(&format!(
        r#"
        name = "single"
        lambda_max = [{lam}]
        nodes = [
            {{ id = 1, kind = "overlay" }},
            {{ id = 2, kind = "underlay" }},
            {{ id = 3, kind = "overlay" }},
        ]
        links = [
            {{ from = 1, to = 2, capacity = 2 }},
            {{ from = 2, to = 3, capacity = 1 }},
        ]
        commodities = [{}]
        "#,
        ks.join(", ")
    ))
}

/// Brute-force optimum of `max c·x s.t. rows·x <= rhs, x >= 0` over all
/// basic solutions. `None` means no feasible vertex, i.e. infeasible. Only
/// meaningful for bounded problems.
pub fn vertex_enumeration(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut all: Vec<(Vec<f64>, f64)> = rows.iter().cloned().zip(rhs.iter().copied()).collect();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = -1.0;
        all.push((e, 0.0));
    }
    let m = all.len();
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    choose(m, n, 0, &mut pick, &mut |set| {
        let a: Vec<Vec<f64>> = set.iter().map(|&i| all[i].0.clone()).collect();
        let b: Vec<f64> = set.iter().map(|&i| all[i].1).collect();
        if let Some(x) = gauss(a, b) {
            let ok = all
                .iter()
                .all(|(row, r)| row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= r + 1e-9);
            if ok {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    });
    best
}

fn choose(m: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..m {
        if m - i < k - pick.len() {
            break;
        }
        pick.push(i);
        choose(m, k, i + 1, pick, f);
        pick.pop();
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot = a[col].clone();
                    for (x, p) in a[r].iter_mut().zip(&pivot).skip(col) {
                        *x -= f * p;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// A bounded random LP: small integer data plus a row `Σ x <= bound`.
pub fn random_lp(rng: &mut impl rand::Rng) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=8);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=9) as f64).collect();
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    rows.push(vec![1.0; n]);
    rhs.push(rng.random_range(1..=20) as f64);
    for _ in 1..m {
        rows.push((0..n).map(|_| rng.random_range(-4..=6) as f64).collect());
        rhs.push(rng.random_range(-3..=15) as f64);
    }
    (c, rows, rhs)
}

pub fn build_lp(c: &[f64], rows: &[Vec<f64>], rhs: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::maximize(c.to_vec());
    for (r, &b) in rows.iter().zip(rhs) {
        lp.add_le(r.clone(), b);
    }
    lp
}
