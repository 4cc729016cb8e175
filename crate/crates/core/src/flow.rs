//! Min-cost flow by successive shortest paths, and an O(n³) assignment
//! solver for the equal-mass case.
//!
//! Both return node potentials that certify optimality: every residual arc
//! has nonnegative reduced cost, and flow-carrying arcs are tight.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    /// May be `f64::INFINITY`.
    pub capacity: f64,
    pub cost: f64,
}

impl Arc {
    pub fn uncapacitated(from: usize, to: usize, cost: f64) -> Self {
        Arc {
            from,
            to,
            capacity: f64::INFINITY,
            cost,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSolution {
    /// Flow on each input arc, in input order.
    pub arc_flows: Vec<f64>,
    /// Σ flow·cost in arc order.
    pub cost: f64,
    /// Kantorovich potential: u(from) − u(to) ≤ cost on every unsaturated
    /// arc, with equality where flow is positive; min u = 0.
    pub potential: Vec<f64>,
    pub augmentations: usize,
}

struct Residual {
    to: usize,
    cap: f64,
    cost: f64,
    rev: usize,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties toward the lower node index
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Routes `supply` (positive = source, negative = sink) through the arcs at
/// minimal cost. Costs must be nonnegative.
pub fn min_cost_flow(node_count: usize, arcs: &[Arc], supply: &[f64]) -> Result<FlowSolution> {
    if supply.len() != node_count {
        return Err(Error::Invalid(
            "supply length differs from node count".into(),
        ));
    }
    for a in arcs {
        if a.from >= node_count || a.to >= node_count {
            return Err(Error::Invalid("arc endpoint out of range".into()));
        }
        if !(a.cost >= 0.0) || !a.cost.is_finite() || !(a.capacity >= 0.0) {
            return Err(Error::Invalid(
                "arc costs must be finite and nonnegative".into(),
            ));
        }
    }
    if supply.iter().any(|s| !s.is_finite()) {
        return Err(Error::Invalid("non-finite supply".into()));
    }
    let gross: f64 = supply.iter().map(|s| s.abs()).sum();
    let total: f64 = supply.iter().sum();
    let tolerance = crate::measures::BALANCE_TOLERANCE * gross;
    if total.abs() > tolerance {
        return Err(Error::Unbalanced { total, tolerance });
    }

    let source = node_count;
    let sink = node_count + 1;
    let mut graph: Vec<Vec<Residual>> = (0..node_count + 2).map(|_| Vec::new()).collect();
    let mut handles = Vec::with_capacity(arcs.len());
    let add = |graph: &mut Vec<Vec<Residual>>, u: usize, v: usize, cap: f64, cost: f64| {
        let ru = graph[v].len();
        let rv = graph[u].len();
        graph[u].push(Residual {
            to: v,
            cap,
            cost,
            rev: ru,
        });
        graph[v].push(Residual {
            to: u,
            cap: 0.0,
            cost: -cost,
            rev: rv,
        });
        (u, rv)
    };
    for a in arcs {
        handles.push(add(&mut graph, a.from, a.to, a.capacity, a.cost));
    }
    let mut positive = 0.0;
    let mut negative = 0.0;
    for (v, &s) in supply.iter().enumerate() {
        if s > 0.0 {
            add(&mut graph, source, v, s, 0.0);
            positive += s;
        } else if s < 0.0 {
            add(&mut graph, v, sink, -s, 0.0);
            negative -= s;
        }
    }
    let target = positive.min(negative);
    let stop = 1e-12 * gross;
    let zero_cap = 1e-15 * gross.max(f64::MIN_POSITIVE);

    let total_nodes = node_count + 2;
    let mut pi = vec![0.0; total_nodes];
    let mut pushed = 0.0;
    let mut augmentations = 0;
    while target - pushed > stop {
        let mut dist = vec![f64::INFINITY; total_nodes];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; total_nodes];
        let mut done = vec![false; total_nodes];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(HeapItem(0.0, source));
        while let Some(HeapItem(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for (k, e) in graph[u].iter().enumerate() {
                if e.cap <= zero_cap {
                    continue;
                }
                let rc = (e.cost + pi[u] - pi[e.to]).max(0.0);
                let nd = d + rc;
                if nd < dist[e.to] {
                    dist[e.to] = nd;
                    prev[e.to] = Some((u, k));
                    heap.push(HeapItem(nd, e.to));
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::Infeasible(format!(
                "{:e} units of supply cannot reach any demand",
                target - pushed
            )));
        }
        let reach_max = dist
            .iter()
            .filter(|d| d.is_finite())
            .fold(0.0f64, |m, &d| m.max(d));
        for v in 0..total_nodes {
            pi[v] += if dist[v].is_finite() {
                dist[v]
            } else {
                reach_max
            };
        }

        let mut bottleneck = target - pushed;
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            bottleneck = bottleneck.min(graph[u][k].cap);
            v = u;
        }
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            let rev = graph[u][k].rev;
            graph[u][k].cap -= bottleneck;
            graph[v][rev].cap += bottleneck;
            v = u;
        }
        pushed += bottleneck;
        augmentations += 1;
    }

    let arc_flows: Vec<f64> = handles
        .iter()
        .map(|&(u, k)| {
            let e = &graph[u][k];
            graph[e.to][e.rev].cap
        })
        .collect();
    let cost = arc_flows.iter().zip(arcs).map(|(f, a)| f * a.cost).sum();
    let mut potential: Vec<f64> = pi[..node_count].iter().map(|p| -p).collect();
    normalize_min_zero(&mut potential);
    Ok(FlowSolution {
        arc_flows,
        cost,
        potential,
        augmentations,
    })
}

pub(crate) fn normalize_min_zero(u: &mut [f64]) {
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    if lo.is_finite() {
        for x in u.iter_mut() {
            *x -= lo;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Column assigned to each row.
    pub column_of: Vec<usize>,
    /// Row and column duals: row[i] + col[j] ≤ cost[i][j], tight on the
    /// assignment.
    pub row_dual: Vec<f64>,
    pub col_dual: Vec<f64>,
}

/// Minimum-cost perfect assignment of a square cost matrix.
pub fn hungarian(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    // 1-based potentials and matching, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut column_of = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            column_of[p[j] - 1] = j - 1;
        }
    }
    Assignment {
        column_of,
        row_dual: u[1..].to_vec(),
        col_dual: v[1..].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;

    #[test]
    fn path_flow() {
        let arcs = [
            Arc::uncapacitated(0, 1, 0.5),
            Arc::uncapacitated(1, 0, 0.5),
            Arc::uncapacitated(1, 2, 0.5),
            Arc::uncapacitated(2, 1, 0.5),
        ];
        let s = min_cost_flow(3, &arcs, &[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.arc_flows, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s.cost, 1.0);
        assert_eq!(s.potential, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn capacities_respected() {
        // two routes, the cheap one capped at 0.5
        let arcs = [
            Arc {
                from: 0,
                to: 1,
                capacity: 0.5,
                cost: 1.0,
            },
            Arc::uncapacitated(0, 1, 3.0),
        ];
        let s = min_cost_flow(2, &arcs, &[1.0, -1.0]).unwrap();
        assert_eq!(s.arc_flows, vec![0.5, 0.5]);
        assert_eq!(s.cost, 2.0);
    }

    #[test]
    fn disconnected_is_infeasible() {
        let arcs = [Arc::uncapacitated(0, 1, 1.0)];
        assert!(matches!(
            min_cost_flow(3, &arcs, &[1.0, 0.0, -1.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn unbalanced_rejected() {
        assert!(matches!(
            min_cost_flow(2, &[Arc::uncapacitated(0, 1, 1.0)], &[1.0, -0.5]),
            Err(Error::Unbalanced { .. })
        ));
    }

    #[test]
    fn zero_supply_gives_zero_flow() {
        let s = min_cost_flow(2, &[Arc::uncapacitated(0, 1, 1.0)], &[0.0, 0.0]).unwrap();
        assert_eq!(s.arc_flows, vec![0.0]);
        assert_eq!(s.cost, 0.0);
    }

    fn brute_assignment(cost: &[Vec<f64>]) -> f64 {
        (0..cost.len())
            .permutations(cost.len())
            .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #[test]
        fn hungarian_matches_enumeration(n in 1usize..6, seed in proptest::collection::vec(0.0f64..10.0, 36)) {
            let cost: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| seed[i * 6 + j]).collect()).collect();
            let a = hungarian(&cost);
            let value: f64 = a.column_of.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            prop_assert!((value - brute_assignment(&cost)).abs() <= 1e-12);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!(a.row_dual[i] + a.col_dual[j] <= cost[i][j] + 1e-12);
                }
                let j = a.column_of[i];
                prop_assert!((a.row_dual[i] + a.col_dual[j] - cost[i][j]).abs() <= 1e-12);
            }
        }

        #[test]
        fn flow_potential_certifies(n in 2usize..7, seed in proptest::collection::vec(0.0f64..10.0, 64), masses in proptest::collection::vec(0.1f64..2.0, 7)) {
            // complete directed graph with random costs, supplies summing to zero
            let mut supply: Vec<f64> = masses[..n].to_vec();
            let total: f64 = supply.iter().sum();
            supply[n - 1] -= total;
            let mut arcs = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        arcs.push(Arc::uncapacitated(i, j, seed[i * 8 + j]));
                    }
                }
            }
            let s = min_cost_flow(n, &arcs, &supply).unwrap();
            let dual: f64 = supply.iter().zip(&s.potential).map(|(m, u)| m * u).sum();
            prop_assert!((s.cost - dual).abs() <= 1e-9 * (1.0 + s.cost));
            for (a, f) in arcs.iter().zip(&s.arc_flows) {
                let diff = s.potential[a.from] - s.potential[a.to];
                prop_assert!(diff <= a.cost + 1e-9);
                if *f > 1e-12 {
                    prop_assert!((diff - a.cost).abs() <= 1e-7);
                }
            }
            for v in 0..n {
                let inflow: f64 = arcs.iter().zip(&s.arc_flows).filter(|(a, _)| a.to == v).map(|(_, f)| f).sum();
                let outflow: f64 = arcs.iter().zip(&s.arc_flows).filter(|(a, _)| a.from == v).map(|(_, f)| f).sum();
                prop_assert!((inflow - outflow + supply[v]).abs() <= 1e-9 * 20.0);
            }
        }
    }
}
