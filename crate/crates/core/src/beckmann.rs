//! Minimal flows: min Σ |flow|·length subject to −div flow = f on a graph.
//!
//! On the complete Euclidean graph over the support of f the optimum equals
//! W¹(f). On grid graphs the optimum is W¹ for the polyhedral stencil metric,
//! which distorts Euclidean length by at most [`anisotropy_bound`].

use serde::Serialize;

use crate::flow::{self, Arc};
use crate::geometry::{Domain, Point};
use crate::grid::Grid;
use crate::measures::{Segment, SignedAtomMeasure, StructuredVectorMeasure};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NetEdge {
    pub i: usize,
    pub j: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowNetwork {
    pub nodes: Vec<Point>,
    pub edges: Vec<NetEdge>,
    pub supply: Vec<f64>,
    /// Worst ratio of graph distance to Euclidean distance between nodes
    /// (1 for complete graphs).
    pub metric_distortion: f64,
    /// Present for grid networks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
}

impl FlowNetwork {
    pub fn new(nodes: Vec<Point>, edges: Vec<NetEdge>, supply: Vec<f64>) -> Result<Self> {
        let net = FlowNetwork {
            nodes,
            edges,
            supply,
            metric_distortion: f64::NAN,
            grid: None,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.supply.len() != n {
            return Err(Error::Invalid(
                "one supply value per node is required".into(),
            ));
        }
        for e in &self.edges {
            if e.i >= n || e.j >= n || e.i == e.j {
                return Err(Error::Invalid(format!(
                    "edge ({}, {}) is not a proper edge",
                    e.i, e.j
                )));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::Invalid(format!(
                    "edge ({}, {}) has nonpositive length",
                    e.i, e.j
                )));
            }
        }
        let gross: f64 = self.supply.iter().map(|s| s.abs()).sum();
        let total: f64 = self.supply.iter().sum();
        let tolerance = crate::measures::BALANCE_TOLERANCE * gross;
        if total.abs() > tolerance {
            return Err(Error::Unbalanced { total, tolerance });
        }
        Ok(())
    }

    /// All pairs of support points, with Euclidean lengths.
    pub fn complete(f: &SignedAtomMeasure) -> Result<Self> {
        f.check_balanced()?;
        let nodes: Vec<Point> = f.points().cloned().collect();
        let mut edges = Vec::new();
        for i in 0..nodes.len() {
            for j in i + 1..nodes.len() {
                edges.push(NetEdge {
                    i,
                    j,
                    length: nodes[i].dist(&nodes[j]),
                });
            }
        }
        let supply = f.atoms().iter().map(|a| a.mass).collect();
        let mut net = FlowNetwork::new(nodes, edges, supply)?;
        net.metric_distortion = 1.0;
        Ok(net)
    }
}

/// Grid graph with nodes at cell centers and each atom's mass on its cell.
///
/// Axis-neighbor edges always; with `diagonals`, every neighbor offset in
/// {−1, 0, 1}^N. A grid with a single cell is rejected.
pub fn grid_network(
    domain: &Domain,
    resolution: &[usize],
    f: &SignedAtomMeasure,
    diagonals: bool,
) -> Result<FlowNetwork> {
    let grid = Grid::new(domain.clone(), resolution.to_vec())?;
    if grid.cell_count() < 2 {
        return Err(Error::Invalid(
            "a grid network needs at least two cells".into(),
        ));
    }
    if f.dim().is_some_and(|d| d != grid.dim()) {
        return Err(Error::Invalid(
            "measure and grid differ in dimension".into(),
        ));
    }
    f.check_balanced()?;
    let dim = grid.dim();
    let nodes: Vec<Point> = (0..grid.cell_count()).map(|c| grid.center(c)).collect();
    let mut supply = vec![0.0; nodes.len()];
    for a in f.atoms() {
        supply[grid.cell_of(&a.point)?] += a.mass;
    }

    // offsets whose first nonzero entry is +1, so each edge appears once
    let mut offsets: Vec<Vec<i64>> = Vec::new();
    for code in 0..3usize.pow(dim as u32) {
        let mut c = code;
        let off: Vec<i64> = (0..dim)
            .map(|_| {
                let v = (c % 3) as i64 - 1;
                c /= 3;
                v
            })
            .collect();
        let nonzero = off.iter().filter(|&&v| v != 0).count();
        let leading_positive = off.iter().find(|&&v| v != 0) == Some(&1);
        if leading_positive && (nonzero == 1 || diagonals) {
            offsets.push(off);
        }
    }
    let mut edges = Vec::new();
    for lin in 0..grid.cell_count() {
        let idx = grid.multi(lin);
        for off in &offsets {
            let nb: Option<Vec<usize>> = (0..dim)
                .map(|k| {
                    let v = idx[k] as i64 + off[k];
                    (v >= 0 && v < grid.cells[k] as i64).then_some(v as usize)
                })
                .collect();
            if let Some(nb) = nb {
                let j = grid.linear(&nb);
                edges.push(NetEdge {
                    i: lin,
                    j,
                    length: nodes[lin].dist(&nodes[j]),
                });
            }
        }
    }
    let cell: Vec<f64> = (0..dim).map(|k| grid.cell_size(k)).collect();
    let mut net = FlowNetwork::new(nodes, edges, supply)?;
    net.metric_distortion = anisotropy_bound(&cell, diagonals);
    net.grid = Some(grid);
    Ok(net)
}

/// Upper bound on graph distance / Euclidean distance for a grid stencil
/// with the given cell sizes.
///
/// Axis-only stencils measure the ℓ¹ norm (bound √N). With diagonals, 2-D
/// cells give max 1/cos(θ/2) over adjacent stencil directions at angle θ;
/// cubic 3-D cells give |(1, √2 − 1, √3 − √2)|; other 3-D cells fall back
/// to the ℓ¹ bound.
pub fn anisotropy_bound(cell: &[f64], diagonals: bool) -> f64 {
    let n = cell.len() as f64;
    if !diagonals {
        return n.sqrt();
    }
    match cell.len() {
        2 => {
            let t = (cell[1] / cell[0]).atan();
            let half = |theta: f64| 1.0 / (0.5 * theta).cos();
            half(t).max(half(std::f64::consts::FRAC_PI_2 - t))
        }
        3 if cell[0] == cell[1] && cell[1] == cell[2] => (1..=3)
            .map(|k| ((k as f64).sqrt() - (k as f64 - 1.0).sqrt()).powi(2))
            .sum::<f64>()
            .sqrt(),
        _ => n.sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flow {
    /// Net flow per edge, positive in the i → j direction.
    pub edge_flows: Vec<f64>,
    /// Σ |flow|·length in edge order.
    pub cost: f64,
    /// Node potential with |u(i) − u(j)| ≤ length on every edge and
    /// u(i) − u(j) = length along flow-carrying edges; min u = 0.
    pub potentials: Vec<f64>,
}

impl Flow {
    /// max over nodes of |inflow − outflow + supply|.
    pub fn balance_residual(&self, net: &FlowNetwork) -> f64 {
        let mut r = net.supply.clone();
        for (e, &m) in net.edges.iter().zip(&self.edge_flows) {
            r[e.i] -= m;
            r[e.j] += m;
        }
        r.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

pub fn solve_beckmann(net: &FlowNetwork) -> Result<Flow> {
    net.validate()?;
    let mut arcs = Vec::with_capacity(2 * net.edges.len());
    for e in &net.edges {
        arcs.push(Arc::uncapacitated(e.i, e.j, e.length));
        arcs.push(Arc::uncapacitated(e.j, e.i, e.length));
    }
    let sol = flow::min_cost_flow(net.nodes.len(), &arcs, &net.supply)?;
    let edge_flows: Vec<f64> = sol
        .arc_flows
        .chunks(2)
        .map(|pair| pair[0] - pair[1])
        .collect();
    let cost = edge_flows
        .iter()
        .zip(&net.edges)
        .map(|(m, e)| m.abs() * e.length)
        .sum();
    Ok(Flow {
        edge_flows,
        cost,
        potentials: sol.potential,
    })
}

/// Each edge with net flow m ≠ 0 becomes the segment nodeᵢ → nodeⱼ with
/// density m·(nodeᵢ − nodeⱼ)/length, so that −div of the result is the
/// supply. Fails when flow-carrying edges overlap along a positive length.
pub fn flow_to_vector_measure(net: &FlowNetwork, flow: &Flow) -> Result<StructuredVectorMeasure> {
    if flow.edge_flows.len() != net.edges.len() {
        return Err(Error::Invalid("flow does not match the network".into()));
    }
    let mut segments = Vec::new();
    for (e, &m) in net.edges.iter().zip(&flow.edge_flows) {
        if m != 0.0 {
            let a = net.nodes[e.i].clone();
            let b = net.nodes[e.j].clone();
            let density = (&a - &b).scale(m / e.length);
            segments.push(Segment { a, b, density });
        }
    }
    StructuredVectorMeasure::from_segments(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchnorm::minimal_connection;
    use crate::measures::divergence_as_measure;
    use proptest::prelude::*;

    fn path_network() -> FlowNetwork {
        let nodes = vec![
            Point::from([0.0, 0.0]),
            Point::from([0.5, 0.0]),
            Point::from([1.0, 0.0]),
        ];
        let edges = vec![
            NetEdge {
                i: 0,
                j: 1,
                length: 0.5,
            },
            NetEdge {
                i: 1,
                j: 2,
                length: 0.5,
            },
        ];
        FlowNetwork::new(nodes, edges, vec![1.0, 0.0, -1.0]).unwrap()
    }

    #[test]
    fn path_graph() {
        let net = path_network();
        let flow = solve_beckmann(&net).unwrap();
        assert_eq!(flow.edge_flows, vec![1.0, 1.0]);
        assert_eq!(flow.cost, 1.0);
        let nu = flow_to_vector_measure(&net, &flow).unwrap();
        assert_eq!(nu.segments().len(), 2);
        assert_eq!(nu.total_variation(), 1.0);
        let m = divergence_as_measure(&nu).unwrap();
        assert_eq!(
            m,
            SignedAtomMeasure::from_pairs([([0.0, 0.0], 1.0), ([1.0, 0.0], -1.0)]).unwrap()
        );
    }

    #[test]
    fn zero_supply() {
        let mut net = path_network();
        net.supply = vec![0.0; 3];
        let flow = solve_beckmann(&net).unwrap();
        assert_eq!(flow.cost, 0.0);
        assert!(flow_to_vector_measure(&net, &flow).unwrap().is_empty());
    }

    #[test]
    fn disconnected_supply_infeasible() {
        let nodes = vec![
            Point::from([0.0, 0.0]),
            Point::from([1.0, 0.0]),
            Point::from([2.0, 0.0]),
        ];
        let net = FlowNetwork::new(
            nodes,
            vec![NetEdge {
                i: 0,
                j: 1,
                length: 1.0,
            }],
            vec![1.0, 0.0, -1.0],
        )
        .unwrap();
        assert!(matches!(solve_beckmann(&net), Err(Error::Infeasible(_))));
    }

    #[test]
    fn reconnection_on_complete_graph() {
        let f = SignedAtomMeasure::from_pairs([
            ([0.0, 0.0], 1.0),
            ([10.0, 0.0], -1.0),
            ([10.0, 1.0], 1.0),
            ([0.0, 1.0], -1.0),
        ])
        .unwrap();
        let net = FlowNetwork::complete(&f).unwrap();
        let flow = solve_beckmann(&net).unwrap();
        assert_eq!(flow.cost, 2.0);
        let nu = flow_to_vector_measure(&net, &flow).unwrap();
        assert_eq!(nu.segments().len(), 2);
        assert_eq!(nu.total_variation(), 2.0);
    }

    #[test]
    fn grid_binning() {
        let h = 0.2;
        let domain = Domain::new(Point::from([0.0, 0.0]), Point::from([1.0, h])).unwrap();
        let f = SignedAtomMeasure::from_pairs([([0.1, 0.1], 1.0), ([0.9, 0.1], -1.0)]).unwrap();
        let net = grid_network(&domain, &[3, 1], &f, false).unwrap();
        assert_eq!(net.supply, vec![1.0, 0.0, -1.0]);
        assert!(grid_network(&domain, &[1, 1], &f, false).is_err());
        let outside =
            SignedAtomMeasure::from_pairs([([1.5, 0.1], 1.0), ([0.9, 0.1], -1.0)]).unwrap();
        assert!(matches!(
            grid_network(&domain, &[3, 1], &outside, false),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn diagonal_dipole_anisotropy() {
        let domain = Domain::unit_box(2);
        let f = SignedAtomMeasure::from_pairs([([0.1, 0.1], 1.0), ([0.9, 0.9], -1.0)]).unwrap();
        let net = grid_network(&domain, &[2, 2], &f, false).unwrap();
        let flow = solve_beckmann(&net).unwrap();
        assert_eq!(flow.cost, 1.0);
        let binned = (0.5f64 * 0.5 * 2.0).sqrt();
        assert!((flow.cost - binned - 0.2928932188134524).abs() < 1e-12);
        let diag = solve_beckmann(&grid_network(&domain, &[2, 2], &f, true).unwrap()).unwrap();
        assert!((diag.cost - binned).abs() < 1e-15);
    }

    #[test]
    fn anisotropy_constants() {
        assert_eq!(anisotropy_bound(&[1.0, 1.0], false), 2f64.sqrt());
        assert!((anisotropy_bound(&[1.0, 1.0], true) - 1.0823922002923938).abs() < 1e-15);
        assert!((anisotropy_bound(&[1.0, 1.0, 1.0], true) - 1.1280928).abs() < 1e-7);
        assert_eq!(anisotropy_bound(&[1.0, 1.0, 1.0], false), 3f64.sqrt());
    }

    #[test]
    fn grid_edges_3d_with_diagonals() {
        let f = SignedAtomMeasure::from_pairs([([0.1, 0.1, 0.1], 1.0), ([0.9, 0.9, 0.9], -1.0)])
            .unwrap();
        let net = grid_network(&Domain::unit_box(3), &[2, 2, 2], &f, true).unwrap();
        // complete graph on the 8 cube corners
        assert_eq!(net.edges.len(), 28);
        let flow = solve_beckmann(&net).unwrap();
        assert!((flow.cost - 0.75f64.sqrt()).abs() < 1e-15);
    }

    fn arb_measure() -> impl Strategy<Value = SignedAtomMeasure> {
        proptest::collection::vec(((0.0f64..1.0, 0.0f64..1.0), -2.0f64..2.0), 1..10)
            .prop_filter_map("balanced", |raw| {
                let mut atoms: Vec<([f64; 2], f64)> =
                    raw.iter().map(|&((x, y), m)| ([x, y], m)).collect();
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                atoms.push(([0.5, 0.5], -total));
                SignedAtomMeasure::from_pairs(atoms).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn complete_graph_matches_connection(f in arb_measure()) {
            let net = FlowNetwork::complete(&f).unwrap();
            let flow = solve_beckmann(&net).unwrap();
            let w = minimal_connection(&f).unwrap().cost;
            prop_assert!((flow.cost - w).abs() <= 1e-7 * w.max(1e-300));
            prop_assert!(flow.balance_residual(&net) <= 1e-9 * f.total_variation());
            for (e, &m) in net.edges.iter().zip(&flow.edge_flows) {
                let drop = flow.potentials[e.i] - flow.potentials[e.j];
                prop_assert!(drop.abs() <= e.length + 1e-9);
                if m > 0.0 {
                    prop_assert!((drop - e.length).abs() <= 1e-7);
                } else if m < 0.0 {
                    prop_assert!((drop + e.length).abs() <= 1e-7);
                }
            }
        }

        #[test]
        fn grid_cost_within_anisotropy(f in arb_measure(), n in 2usize..12, diagonals in any::<bool>()) {
            let net = grid_network(&Domain::unit_box(2), &[n, n], &f, diagonals).unwrap();
            let flow = solve_beckmann(&net).unwrap();
            prop_assert!(flow.balance_residual(&net) <= 1e-9 * f.total_variation());
            let binned = SignedAtomMeasure::new(
                net.nodes.iter().zip(&net.supply).filter(|(_, s)| **s != 0.0)
                    .map(|(p, s)| crate::measures::Atom::new(p.clone(), *s)).collect()).unwrap();
            let w = minimal_connection(&binned).unwrap().cost;
            prop_assert!(flow.cost >= w * (1.0 - 1e-9) - 1e-12);
            prop_assert!(flow.cost <= net.metric_distortion * w * (1.0 + 1e-9) + 1e-12);
        }
    }
}
