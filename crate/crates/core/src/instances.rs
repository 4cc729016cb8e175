//! Seeded instance generators shared by the test suites and `selftest`.
//!
//! All generators draw from ChaCha8 so a seed fixes the instance on every
//! platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beckmann::{flow_to_vector_measure, solve_beckmann, FlowNetwork};
use crate::geometry::Point;
use crate::matchnorm::BRUTE_FORCE_LIMIT;
use crate::measures::{
    Atom, DipoleChain, Segment, SignedAtomMeasure, StructuredVectorMeasure, TailBound, VectorAtom,
};
use crate::sharpspace::{augment, tangential_cycle, RidgeFunction};
use crate::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn point_in(rng: &mut ChaCha8Rng, lower: &[f64], upper: &[f64]) -> Point {
    Point::new(
        lower
            .iter()
            .zip(upper)
            .map(|(l, u)| rng.gen_range(*l..*u))
            .collect::<Vec<_>>(),
    )
}

/// Balanced measure with 2..=max_atoms atoms in the unit box of `dim`.
/// Masses are drawn in (0.1, 2) and the last atom of each sign absorbs the
/// difference so the totals cancel.
pub fn random_balanced(rng: &mut ChaCha8Rng, max_atoms: usize, dim: usize) -> SignedAtomMeasure {
    let n = rng.gen_range(2..=max_atoms.max(2));
    let n_pos = rng.gen_range(1..n);
    let lo = vec![0.0; dim];
    let hi = vec![1.0; dim];
    let pos: Vec<f64> = (0..n_pos).map(|_| rng.gen_range(0.1..2.0)).collect();
    let total: f64 = pos.iter().sum();
    // split `total` among the negatives by random positive weights
    let w: Vec<f64> = (0..n - n_pos).map(|_| rng.gen_range(0.1..2.0)).collect();
    let wsum: f64 = w.iter().sum();
    let mut neg: Vec<f64> = w.iter().map(|x| -total * x / wsum).collect();
    let drift: f64 = pos.iter().sum::<f64>() + neg.iter().sum::<f64>();
    *neg.last_mut().expect("at least one negative atom") -= drift;
    let atoms = pos
        .into_iter()
        .chain(neg)
        .map(|m| Atom::new(point_in(rng, &lo, &hi), m))
        .collect();
    SignedAtomMeasure::new(atoms).expect("finite atoms in the unit box")
}

/// k unit dipoles (1 ≤ k ≤ max) in the unit square.
pub fn unit_dipoles(rng: &mut ChaCha8Rng, max: usize) -> SignedAtomMeasure {
    let k = rng.gen_range(1..=max.min(BRUTE_FORCE_LIMIT));
    let atoms = (0..2 * k)
        .map(|i| {
            let m = if i < k { 1.0 } else { -1.0 };
            Atom::new(point_in(rng, &[0.0, 0.0], &[1.0, 1.0]), m)
        })
        .collect();
    SignedAtomMeasure::new(atoms).expect("finite atoms")
}

/// Dipole in the plane with |p − n| = d, random orientation and base.
pub fn dipole_at_distance(rng: &mut ChaCha8Rng, d: f64) -> (Point, Point) {
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let p = point_in(rng, &[0.0, 0.0], &[1.0, 1.0]);
    let n = Point::new([p[0] + d * a.cos(), p[1] + d * a.sin()]);
    (p, n)
}

/// Tangential optimal transport in [0,1]² plus well separated normal atoms
/// in [2,4]×[0,1].
#[derive(Clone, Debug)]
pub struct CertifiedInstance {
    pub f_t: SignedAtomMeasure,
    pub nu: StructuredVectorMeasure,
    pub normal_atoms: Vec<VectorAtom>,
    /// Bump radius; normal atoms are at least ten radii apart.
    pub radius: f64,
}

pub const CERTIFIED_RADIUS: f64 = 0.05;

pub fn certified_instance(rng: &mut ChaCha8Rng) -> CertifiedInstance {
    loop {
        if let Ok(inst) = try_certified(rng) {
            return inst;
        }
    }
}

fn try_certified(rng: &mut ChaCha8Rng) -> Result<CertifiedInstance> {
    let f_t = random_balanced(rng, 8, 2);
    let net = FlowNetwork::complete(&f_t)?;
    let flow = solve_beckmann(&net)?;
    let tangential = flow_to_vector_measure(&net, &flow)?;

    let count = rng.gen_range(1..=3);
    let mut points: Vec<Point> = Vec::new();
    while points.len() < count {
        let p = point_in(rng, &[2.0, 0.0], &[4.0, 1.0]);
        if points.iter().all(|q| q.dist(&p) >= 10.0 * CERTIFIED_RADIUS) {
            points.push(p);
        }
    }
    let normal_atoms: Vec<VectorAtom> = points
        .into_iter()
        .map(|point| {
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let r: f64 = rng.gen_range(0.2..2.0);
            VectorAtom {
                point,
                vector: Point::new([r * a.cos(), r * a.sin()]),
            }
        })
        .collect();
    let normal = StructuredVectorMeasure::from_atoms(normal_atoms.clone())?;
    let nu = tangential.union(&normal)?;
    Ok(CertifiedInstance {
        f_t,
        nu,
        normal_atoms,
        radius: CERTIFIED_RADIUS,
    })
}

/// Closed polygon with 3..=6 vertices around a random center in
/// [0,4]×[0,1], carrying a random constant circulation.
pub fn random_cycle(rng: &mut ChaCha8Rng) -> Vec<Segment> {
    let n = rng.gen_range(3..=6);
    let c = point_in(rng, &[0.0, 0.0], &[4.0, 1.0]);
    let mut angles: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    let verts: Vec<Point> = angles
        .iter()
        .map(|a| {
            let r = rng.gen_range(0.05..0.5);
            Point::new([c[0] + r * a.cos(), c[1] + r * a.sin()])
        })
        .collect();
    let circ = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    tangential_cycle(&verts, circ).expect("distinct random vertices")
}

/// ν plus a random tangential cycle; redraws when the cycle collides with
/// an existing segment.
pub fn augment_with_cycle(
    rng: &mut ChaCha8Rng,
    nu: &StructuredVectorMeasure,
) -> StructuredVectorMeasure {
    loop {
        if let Ok(aug) = augment(nu, random_cycle(rng)) {
            return aug;
        }
    }
}

/// Pairs δ_{pᵢ} − δ_{nᵢ} with |pᵢ − nᵢ| = 2^{−i}, i = 1..=listed, on
/// separate rows, and the tail bound Σ_{i>listed} 2^{−i}.
pub fn geometric_chain(listed: usize) -> DipoleChain {
    let pairs = (1..=listed)
        .map(|i| {
            let y = i as f64;
            (Point::new([0.0, y]), Point::new([0.5f64.powi(i as i32), y]))
        })
        .collect();
    let tail = TailBound {
        ratio: 0.5,
        first_term: 1.0,
    };
    DipoleChain::new(pairs, Some(tail)).expect("valid geometric chain")
}

/// Random ridge u(x) = g(w·x) whose knots cover the projections of every
/// point in `points`.
pub fn random_ridge<'a>(
    rng: &mut ChaCha8Rng,
    points: impl IntoIterator<Item = &'a Point>,
) -> RidgeFunction {
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let w = Point::new([a.cos(), a.sin()]);
    let (lo, hi) = points
        .into_iter()
        .map(|p| w.dot(p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), s| {
            (l.min(s), h.max(s))
        });
    let (lo, hi) = if lo.is_finite() {
        (lo - 0.1, hi + 0.1)
    } else {
        (-1.0, 1.0)
    };
    let n = rng.gen_range(2..=16);
    let mut s: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    s.push(lo);
    s.push(hi);
    s.sort_by(f64::total_cmp);
    s.dedup();
    let scale = *[0.01, 1.0, 100.0].choose(rng).expect("nonempty");
    let knots = s
        .into_iter()
        .map(|x| (x, scale * rng.gen_range(-1.0..1.0)))
        .collect();
    RidgeFunction::new(w, knots).expect("sorted knots, unit direction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_reproducible() {
        let a = random_balanced(&mut rng(7), 30, 2);
        let b = random_balanced(&mut rng(7), 30, 2);
        assert_eq!(a, b);
        assert!(a.is_balanced());
        assert!(a.len() <= 30);
    }

    #[test]
    fn certified_instances_are_separated() {
        let mut r = rng(1);
        for _ in 0..5 {
            let inst = certified_instance(&mut r);
            for (i, p) in inst.normal_atoms.iter().enumerate() {
                for q in &inst.normal_atoms[..i] {
                    assert!(p.point.dist(&q.point) >= 10.0 * inst.radius);
                }
            }
        }
    }

    #[test]
    fn geometric_chain_tails() {
        let tails = geometric_chain(12).certified_tails();
        for (k, t) in tails.iter().enumerate() {
            assert_eq!(*t, 0.5f64.powi(k as i32));
        }
    }
}
