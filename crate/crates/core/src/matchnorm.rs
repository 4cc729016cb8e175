//! W¹ of balanced atomic measures: minimal connection (primal), Lipschitz
//! potential (dual) and the flat norm.
//!
//! The primal is solved as a transport problem between f⁺ and f⁻
//! (assignment when all masses are equal, successive shortest paths
//! otherwise). The dual is an independent dense simplex over all support
//! pairs, so agreement of the two values is a genuine check.

use itertools::Itertools;
use serde::Serialize;

use crate::flow::{self, Arc};
use crate::geometry::Point;
use crate::lp::LinearProgram;
use crate::measures::SignedAtomMeasure;
use crate::{Error, Result};

/// Largest dipole count accepted by [`brute_force_connection`].
pub const BRUTE_FORCE_LIMIT: usize = 7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchEdge {
    /// Atom indices into the measure.
    pub source_index: usize,
    pub target_index: usize,
    pub source: Point,
    pub target: Point,
    pub mass: f64,
}

impl MatchEdge {
    pub fn length(&self) -> f64 {
        self.source.dist(&self.target)
    }
}

/// Transport plan from f⁺ to f⁻ with a potential certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Matching {
    /// Sorted by (source index, target index).
    pub edges: Vec<MatchEdge>,
    /// Σ mass·length in edge order.
    pub cost: f64,
    /// 1-Lipschitz on the support, dropping by exactly the edge length
    /// along every edge.
    pub potential: Potential,
}

impl Matching {
    pub fn empty() -> Self {
        Matching {
            edges: Vec::new(),
            cost: 0.0,
            potential: Potential::default(),
        }
    }
}

/// Values of a potential on the atom support.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct Potential {
    pub points: Vec<Point>,
    pub values: Vec<f64>,
    /// max |u(x) − u(y)| / |x − y| over support pairs.
    pub lip_bound: f64,
}

impl Potential {
    pub fn new(points: Vec<Point>, values: Vec<f64>) -> Self {
        let lip_bound = lipschitz_on(&points, &values);
        Potential {
            points,
            values,
            lip_bound,
        }
    }

    /// Smallest |x − y| − |u(x) − u(y)| over support pairs (+∞ when fewer
    /// than two points).
    pub fn min_slack(&self) -> f64 {
        let mut s = f64::INFINITY;
        for (i, j) in (0..self.points.len()).tuple_combinations() {
            let d = self.points[i].dist(&self.points[j]);
            s = s.min(d - (self.values[i] - self.values[j]).abs());
        }
        s
    }

    pub fn pair(&self, f: &SignedAtomMeasure) -> f64 {
        f.atoms()
            .iter()
            .zip(&self.values)
            .map(|(a, u)| a.mass * u)
            .sum()
    }
}

fn lipschitz_on(points: &[Point], values: &[f64]) -> f64 {
    let mut l = 0.0f64;
    for (i, j) in (0..points.len()).tuple_combinations() {
        let d = points[i].dist(&points[j]);
        if d > 0.0 {
            l = l.max((values[i] - values[j]).abs() / d);
        }
    }
    l
}

fn split_signs(f: &SignedAtomMeasure) -> (Vec<usize>, Vec<usize>) {
    let atoms = f.atoms();
    let pos = (0..atoms.len()).filter(|&i| atoms[i].mass > 0.0).collect();
    let neg = (0..atoms.len()).filter(|&i| atoms[i].mass < 0.0).collect();
    (pos, neg)
}

/// Minimal-cost transport from f⁺ to f⁻ under Euclidean cost.
pub fn minimal_connection(f: &SignedAtomMeasure) -> Result<Matching> {
    f.check_balanced()?;
    if f.is_empty() {
        return Ok(Matching::empty());
    }
    let atoms = f.atoms();
    let (pos, neg) = split_signs(f);
    let unit = atoms[0].mass.abs();
    let equal_masses = pos.len() == neg.len() && atoms.iter().all(|a| a.mass.abs() == unit);

    // b is the f⁻ half of a transport dual (a, b) with a_x − b_y ≤ |x − y|
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let b: Vec<f64> = if equal_masses {
        let cost: Vec<Vec<f64>> = pos
            .iter()
            .map(|&i| {
                neg.iter()
                    .map(|&j| atoms[i].point.dist(&atoms[j].point))
                    .collect()
            })
            .collect();
        let asg = flow::hungarian(&cost);
        for (r, &c) in asg.column_of.iter().enumerate() {
            edges.push((pos[r], neg[c], unit));
        }
        asg.col_dual.iter().map(|v| -v).collect()
    } else {
        let np = pos.len();
        let mut arcs = Vec::with_capacity(np * neg.len());
        for (r, &i) in pos.iter().enumerate() {
            for (c, &j) in neg.iter().enumerate() {
                arcs.push(Arc::uncapacitated(
                    r,
                    np + c,
                    atoms[i].point.dist(&atoms[j].point),
                ));
            }
        }
        let supply: Vec<f64> = pos.iter().chain(&neg).map(|&i| atoms[i].mass).collect();
        let sol = flow::min_cost_flow(np + neg.len(), &arcs, &supply)?;
        for (arc, &m) in arcs.iter().zip(&sol.arc_flows) {
            if m > 0.0 {
                edges.push((pos[arc.from], neg[arc.to - np], m));
            }
        }
        sol.potential[np..].to_vec()
    };
    edges.sort_by_key(|&(s, t, _)| (s, t));

    let edges: Vec<MatchEdge> = edges
        .into_iter()
        .map(|(s, t, m)| MatchEdge {
            source_index: s,
            target_index: t,
            source: atoms[s].point.clone(),
            target: atoms[t].point.clone(),
            mass: m,
        })
        .collect();
    let cost = edges.iter().map(|e| e.mass * e.length()).sum();

    // c-transform: u(z) = min_y b_y + |z − y| is 1-Lipschitz everywhere and
    // keeps every optimal edge tight.
    let mut values: Vec<f64> = atoms
        .iter()
        .map(|z| {
            neg.iter()
                .zip(&b)
                .map(|(&j, bj)| bj + z.point.dist(&atoms[j].point))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    flow::normalize_min_zero(&mut values);
    let potential = Potential::new(atoms.iter().map(|a| a.point.clone()).collect(), values);
    Ok(Matching {
        edges,
        cost,
        potential,
    })
}

/// max Σ mᵢ u(xᵢ) over potentials with |u(xᵢ) − u(xⱼ)| ≤ |xᵢ − xⱼ| on all
/// support pairs, solved as a dense LP; the potential has min value 0.
pub fn dual_potential(f: &SignedAtomMeasure) -> Result<(Potential, f64)> {
    f.check_balanced()?;
    let atoms = f.atoms();
    let n = atoms.len();
    if n == 0 {
        return Ok((Potential::default(), 0.0));
    }
    let mut lp = LinearProgram::new(atoms.iter().map(|a| a.mass).collect());
    let mut diam = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = atoms[i].point.dist(&atoms[j].point);
                diam = diam.max(d);
                lp.add_sparse(&[(i, 1.0), (j, -1.0)], d);
            }
        }
    }
    // u ∈ [0, diam] loses nothing after shifting and keeps the LP bounded
    // when f is balanced only up to tolerance.
    for i in 0..n {
        lp.add_sparse(&[(i, 1.0)], diam);
    }
    let sol = lp.solve()?;
    let mut values = sol.x;
    flow::normalize_min_zero(&mut values);
    let potential = Potential::new(atoms.iter().map(|a| a.point.clone()).collect(), values);
    let value = potential.pair(f);
    Ok((potential, value))
}

/// How ‖u‖∞ and Lip(u) are combined in the flat-norm constraint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// max(‖u‖∞, Lip u) ≤ 1
    #[default]
    Max,
    /// ‖u‖∞ + Lip u ≤ 1
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatNormSolution {
    pub value: f64,
    pub convention: Convention,
    pub potential: Potential,
    /// Lipschitz budget L (sum form only; ‖u‖∞ ≤ 1 − L).
    pub lipschitz_budget: Option<f64>,
}

/// sup ⟨f, u⟩ over u with ‖u‖∞ and Lip(u) constrained per `convention`;
/// f need not be balanced.
pub fn flat_norm(f: &SignedAtomMeasure, convention: Convention) -> Result<FlatNormSolution> {
    let atoms = f.atoms();
    let n = atoms.len();
    let points: Vec<Point> = atoms.iter().map(|a| a.point.clone()).collect();
    if n == 0 {
        return Ok(FlatNormSolution {
            value: 0.0,
            convention,
            potential: Potential::default(),
            lipschitz_budget: (convention == Convention::Sum).then_some(0.0),
        });
    }
    // w = u + 1 ∈ [0, 2]
    let mut objective: Vec<f64> = atoms.iter().map(|a| a.mass).collect();
    let budget = n;
    if convention == Convention::Sum {
        objective.push(0.0);
    }
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        match convention {
            Convention::Max => lp.add_sparse(&[(i, 1.0)], 2.0),
            Convention::Sum => {
                lp.add_sparse(&[(i, 1.0), (budget, 1.0)], 2.0);
                lp.add_sparse(&[(i, -1.0), (budget, 1.0)], 0.0);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = points[i].dist(&points[j]);
                match convention {
                    Convention::Max => lp.add_sparse(&[(i, 1.0), (j, -1.0)], d),
                    Convention::Sum => lp.add_sparse(&[(i, 1.0), (j, -1.0), (budget, -d)], 0.0),
                }
            }
        }
    }
    let sol = lp.solve()?;
    let values: Vec<f64> = sol.x[..n].iter().map(|w| w - 1.0).collect();
    let lipschitz_budget = (convention == Convention::Sum).then(|| sol.x[budget]);
    let potential = Potential::new(points, values);
    let value = potential.pair(f);
    Ok(FlatNormSolution {
        value,
        convention,
        potential,
        lipschitz_budget,
    })
}

/// Exhaustive minimum of Σ |pᵢ − n_{π(i)}| over permutations π, for unit
/// masses and at most [`BRUTE_FORCE_LIMIT`] dipoles.
pub fn brute_force_connection(f: &SignedAtomMeasure) -> Result<f64> {
    f.check_balanced()?;
    if f.atoms().iter().any(|a| a.mass.abs() != 1.0) {
        return Err(Error::Invalid("brute force needs unit masses".into()));
    }
    let (pos, neg) = split_signs(f);
    if pos.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit(format!(
            "{} dipoles exceed the brute-force limit of {BRUTE_FORCE_LIMIT}",
            pos.len()
        )));
    }
    let atoms = f.atoms();
    let best = (0..neg.len())
        .permutations(neg.len())
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(r, &c)| 1.0 * atoms[pos[r]].point.dist(&atoms[neg[c]].point))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    Ok(if pos.is_empty() { 0.0 } else { best })
}
