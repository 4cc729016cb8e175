//! Tangential/normal splitting of structured vector measures and the
//! distance of −div ν to the closure of balanced measures.
//!
//! Tangent spaces on the structured class: {0} at atoms, the segment
//! direction on segments, all of ℝ^N on cells. The normal mass ∫|ν_N| is the
//! distance; it does not depend on which ν represents f.

use itertools::Itertools;
use serde::Serialize;

use crate::genplan::{from_flow, from_plan, split};
use crate::geometry::{point_segment_distance, segment_segment_distance, Point, Vector};
use crate::matchnorm::{dual_potential, minimal_connection, Matching};
use crate::measures::{
    divergence_as_measure, pair, Anchor, DipoleChain, Distribution, Plateau, Segment,
    SignedAtomMeasure, StructuredVectorMeasure, TestFunction, VectorAtom,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentialSplit {
    pub tangential: StructuredVectorMeasure,
    pub normal: StructuredVectorMeasure,
    /// ‖ν_N‖
    pub normal_mass: f64,
}

/// Atoms go to ν_N, cells to ν_T, segment densities are projected onto the
/// segment direction. Zero parts are omitted.
pub fn tangential_split(nu: &StructuredVectorMeasure) -> TangentialSplit {
    let mut t_segments = Vec::new();
    let mut n_segments = Vec::new();
    let mut normal_mass = 0.0;
    for a in nu.atoms() {
        normal_mass += a.vector.norm();
    }
    for s in nu.segments() {
        let sp = s.split();
        if !sp.tangential.is_zero() {
            t_segments.push(Segment {
                a: s.a.clone(),
                b: s.b.clone(),
                density: sp.tangential,
            });
        }
        normal_mass += sp.normal.norm() * s.length();
        if !sp.normal.is_zero() {
            n_segments.push(Segment {
                a: s.a.clone(),
                b: s.b.clone(),
                density: sp.normal,
            });
        }
    }
    TangentialSplit {
        tangential: StructuredVectorMeasure::from_valid_parts(
            Vec::new(),
            t_segments,
            nu.cells().cloned(),
        ),
        normal: StructuredVectorMeasure::from_valid_parts(nu.atoms().to_vec(), n_segments, None),
        normal_mass,
    }
}

/// W¹(−div ν, closure of balanced measures) = ‖ν_N‖.
pub fn distance_to_sharp(nu: &StructuredVectorMeasure) -> f64 {
    tangential_split(nu).normal_mass
}

/// Normal support piece: a point (a = b) or a segment carrying ν_N.
#[derive(Clone, Debug, PartialEq)]
struct NormalPiece {
    a: Point,
    b: Point,
    /// unit normal direction of the density
    direction: Vector,
}

fn normal_pieces(normal: &StructuredVectorMeasure) -> Vec<NormalPiece> {
    let atoms = normal.atoms().iter().map(|a| NormalPiece {
        a: a.point.clone(),
        b: a.point.clone(),
        direction: a.vector.scale(1.0 / a.vector.norm()),
    });
    let segs = normal.segments().iter().map(|s| NormalPiece {
        a: s.a.clone(),
        b: s.b.clone(),
        direction: s.density.scale(1.0 / s.density.norm()),
    });
    atoms.chain(segs).collect()
}

fn piece_distance(p: &NormalPiece, q: &NormalPiece) -> f64 {
    segment_segment_distance(&p.a, &p.b, &q.a, &q.b)
}

fn bump(p: &NormalPiece, radius: f64) -> TestFunction {
    TestFunction::NormalBump {
        a: p.a.clone(),
        b: p.b.clone(),
        normal: p.direction.clone(),
        radius,
    }
}

/// Smallest distance between distinct normal pieces (+∞ for fewer than two).
fn normal_separation(pieces: &[NormalPiece]) -> f64 {
    pieces
        .iter()
        .tuple_combinations()
        .map(|(p, q)| piece_distance(p, q))
        .fold(f64::INFINITY, f64::min)
}

/// Σ of normal bumps of radius R on the normal support: 1-Lipschitz with
/// ⟨−div ν_N, φ⟩ = ‖ν_N‖ when the pieces are at least 10 R apart.
pub fn normal_witness(normal: &StructuredVectorMeasure, radius: f64) -> Result<TestFunction> {
    if !(radius > 0.0) {
        return Err(Error::Invalid("bump radius must be positive".into()));
    }
    if normal.cells().is_some() {
        return Err(Error::Invalid(
            "cell parts carry no normal component".into(),
        ));
    }
    let pieces = normal_pieces(normal);
    let sep = normal_separation(&pieces);
    if sep < 10.0 * radius {
        return Err(Error::Infeasible(format!(
            "normal supports are {sep:e} apart, below ten bump radii ({:e})",
            10.0 * radius
        )));
    }
    Ok(TestFunction::Combination {
        terms: pieces.iter().map(|p| (1.0, bump(p, radius))).collect(),
    })
}

/// Dual certificate for ν = ν_T + ν_N.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    /// 1-Lipschitz by construction.
    pub function: TestFunction,
    pub radius: f64,
    /// ⟨f, φ⟩ evaluated as Σ m φ over f_T's atoms plus ∫∇φ·dν_N.
    pub value: f64,
    /// W¹(f_T) from the minimal connection.
    pub tangential_norm: f64,
}

/// Builds φ = (cone extension of the optimal potential of f_T, held at a
/// constant level on a capsule of radius R around every normal piece) +
/// Σ normal bumps. Fails when ν_T has cells or when no consistent plateau
/// levels exist for this radius.
pub fn build_witness(nu: &StructuredVectorMeasure, radius: Option<f64>) -> Result<Witness> {
    let sp = tangential_split(nu);
    if sp.tangential.cells().is_some() {
        return Err(Error::Unsupported(
            "witnesses for cell-based measures".into(),
        ));
    }
    let f_t = divergence_as_measure(&sp.tangential)
        .map_err(|e| Error::Unsupported(format!("tangential part: {e}")))?;
    let (u, _) = dual_potential(&f_t)?;
    let tangential_norm = minimal_connection(&f_t)?.cost;
    let pieces = normal_pieces(&sp.normal);

    let anchor_dist = |p: &NormalPiece, s: &Point| point_segment_distance(s, &p.a, &p.b).0;
    let radius = match radius {
        Some(r) if r > 0.0 => r,
        Some(r) => return Err(Error::Invalid(format!("bump radius {r} must be positive"))),
        None => {
            let to_anchors = pieces
                .iter()
                .flat_map(|p| f_t.points().map(move |s| anchor_dist(p, s)))
                .fold(f64::INFINITY, f64::min);
            let m = normal_separation(&pieces).min(to_anchors);
            if m.is_finite() {
                0.05 * m
            } else {
                1.0
            }
        }
    };
    if normal_separation(&pieces) < 10.0 * radius {
        return Err(Error::Infeasible(
            "normal supports closer than ten bump radii".into(),
        ));
    }

    // levels c_j with |u_s − c_j| ≤ d(s, P_j) − R and |c_j − c_k| ≤ d(P_j, P_k) − 2R
    let mut levels: Vec<f64> = Vec::with_capacity(pieces.len());
    for (j, p) in pieces.iter().enumerate() {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (s, us) in f_t.points().zip(&u.values) {
            let room = anchor_dist(p, s) - radius;
            lo = lo.max(us - room);
            hi = hi.min(us + room);
        }
        for (k, q) in pieces[..j].iter().enumerate() {
            let room = piece_distance(p, q) - 2.0 * radius;
            lo = lo.max(levels[k] - room);
            hi = hi.min(levels[k] + room);
        }
        if lo > hi {
            return Err(Error::Infeasible(format!(
                "no plateau level for normal piece {j} at radius {radius:e}"
            )));
        }
        levels.push(match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (true, false) => lo,
            (false, true) => hi,
            (false, false) => 0.0,
        });
    }

    let cone = TestFunction::ConeExtension {
        anchors: f_t
            .points()
            .zip(&u.values)
            .map(|(p, v)| Anchor {
                point: p.clone(),
                value: *v,
            })
            .collect(),
        plateaus: pieces
            .iter()
            .zip(&levels)
            .map(|(p, c)| Plateau {
                a: p.a.clone(),
                b: p.b.clone(),
                radius,
                level: *c,
            })
            .collect(),
    };
    let mut terms = vec![(1.0, cone)];
    terms.extend(pieces.iter().map(|p| (1.0, bump(p, radius))));
    let function = TestFunction::Combination { terms };
    let representation = Distribution {
        measure_part: f_t,
        divergence_part: sp.normal.clone(),
    };
    let value = pair(&representation, &function);
    Ok(Witness {
        function,
        radius,
        value,
        tangential_norm,
    })
}

/// Relative gap below which a witness certifies optimality of ν.
pub const CERTIFY_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub split: TangentialSplit,
    /// −div ν_T
    pub f_t: Distribution,
    /// −div ν_N
    pub f_n: Distribution,
    /// f_T as an atomic measure when ν_T has no cells.
    pub f_t_atoms: Option<SignedAtomMeasure>,
    pub witness: Option<Witness>,
    /// The witness pins W¹(f) = ‖ν‖, hence W¹(f) = W¹(f_T) + ‖ν_N‖.
    pub certified: bool,
    /// Why no certificate was produced.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uncertified_reason: Option<String>,
}

/// f = f_T + f_N with f_T = −div ν_T and f_N = −div ν_N. The split is
/// always returned; `certified` reports whether a dual witness proves that
/// ν is optimal, which is what the additivity of the norm needs.
pub fn decompose(nu: &StructuredVectorMeasure, radius: Option<f64>) -> Decomposition {
    let sp = tangential_split(nu);
    let f_t = Distribution::divergence_of(sp.tangential.clone());
    let f_n = Distribution::divergence_of(sp.normal.clone());
    let f_t_atoms = divergence_as_measure(&sp.tangential).ok();
    let total = nu.total_variation();
    let (witness, certified, reason) = match build_witness(nu, radius) {
        Ok(w) => {
            let ok = (total - w.value).abs() <= CERTIFY_TOLERANCE * total.max(f64::MIN_POSITIVE)
                || total == 0.0;
            let reason = (!ok).then(|| {
                format!(
                    "witness value {:e} does not reach the total variation {:e}",
                    w.value, total
                )
            });
            (Some(w), ok, reason)
        }
        Err(e) => (None, false, Some(e.to_string())),
    };
    Decomposition {
        split: sp,
        f_t,
        f_n,
        f_t_atoms,
        witness,
        certified,
        uncertified_reason: reason,
    }
}

/// ‖σ₀‖ for σ = plan of γ₊ + flux atoms of the normal part.
pub fn sigma_zero_distance(
    gamma_plus: &Matching,
    normal_part: &StructuredVectorMeasure,
) -> Result<f64> {
    let sigma = from_plan(gamma_plus).plus(&from_flow(normal_part)?)?;
    let (zero, _) = split(&sigma);
    Ok(zero.total_variation())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModulusSample {
    pub epsilon: f64,
    pub k: usize,
    pub c_epsilon: f64,
    /// Certified Σ_{i>k} |pᵢ − nᵢ| including the unlisted tail.
    pub tail: f64,
}

/// Certified bounds |⟨T, u⟩| ≤ C_ε ‖u‖∞ + ε Lip(u).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusCurve {
    pub samples: Vec<ModulusSample>,
    /// Smallest certifiable ε with the listed pairs.
    pub floor: f64,
}

/// For each ε, the smallest k whose certified tail is at most ε, and
/// C_ε = 2k.
pub fn modulus(chain: &DipoleChain, eps_list: &[f64]) -> Result<ModulusCurve> {
    chain.validate()?;
    let tails = chain.certified_tails();
    let floor = *tails.last().expect("tails has len + 1 entries");
    let mut samples = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::Invalid(format!(
                "epsilon {eps} must be finite and nonnegative"
            )));
        }
        if eps < floor {
            return Err(Error::EpsilonBelowFloor {
                requested: eps,
                floor,
            });
        }
        let k = tails
            .iter()
            .position(|&t| t <= eps)
            .expect("floor bounds the last tail");
        samples.push(ModulusSample {
            epsilon: eps,
            k,
            c_epsilon: 2.0 * k as f64,
            tail: tails[k],
        });
    }
    Ok(ModulusCurve { samples, floor })
}

/// u(x) = g(w·x) with g piecewise affine through the knots and constant
/// beyond them, |w| = 1. Sup and Lipschitz constant are exact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RidgeFunction {
    pub direction: Vector,
    /// (s, g(s)) with strictly increasing s.
    pub knots: Vec<(f64, f64)>,
}

impl RidgeFunction {
    pub fn new(direction: Vector, knots: Vec<(f64, f64)>) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(
                "ridge direction must be a unit vector".into(),
            ));
        }
        if knots.is_empty() || knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Invalid(
                "ridge knots must be strictly increasing".into(),
            ));
        }
        Ok(RidgeFunction { direction, knots })
    }

    pub fn value(&self, x: &Point) -> f64 {
        let s = self.direction.dot(x);
        let k = &self.knots;
        if s <= k[0].0 {
            return k[0].1;
        }
        if s >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|kn| kn.0 <= s) - 1;
        let (s0, g0) = k[i];
        let (s1, g1) = k[i + 1];
        g0 + (g1 - g0) * (s - s0) / (s1 - s0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.knots.iter().fold(0.0f64, |m, k| m.max(k.1.abs()))
    }

    pub fn lipschitz(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0f64, f64::max)
    }
}

/// Worst-case check of a modulus sample against u: returns the margin
/// C‖u‖∞ + εLip(u) − (|⟨T_listed, u⟩| + Lip(u)·unlisted bound), which is ≥ 0
/// when the bound holds for the whole chain.
pub fn modulus_margin(chain: &DipoleChain, sample: &ModulusSample, u: &RidgeFunction) -> f64 {
    let listed: f64 = chain
        .pairs
        .iter()
        .map(|(p, n)| u.value(p) - u.value(n))
        .sum();
    let lip = u.lipschitz();
    sample.c_epsilon * u.sup_norm() + sample.epsilon * lip
        - (listed.abs() + lip * chain.unlisted_bound())
}

/// Random closed polygon with vertices `vertices` carrying the constant
/// tangential circulation: divergence-free and purely tangential.
pub fn tangential_cycle(vertices: &[Point], circulation: f64) -> Result<Vec<Segment>> {
    if vertices.len() < 3 {
        return Err(Error::Invalid(
            "a cycle needs at least three vertices".into(),
        ));
    }
    let mut segs = Vec::with_capacity(vertices.len());
    for i in 0..vertices.len() {
        let a = vertices[i].clone();
        let b = vertices[(i + 1) % vertices.len()].clone();
        let len = a.dist(&b);
        if len == 0.0 {
            return Err(Error::Invalid("repeated cycle vertex".into()));
        }
        let density = (&b - &a).scale(circulation / len);
        segs.push(Segment { a, b, density });
    }
    Ok(segs)
}

/// ν plus extra segments.
pub fn augment(
    nu: &StructuredVectorMeasure,
    extra: Vec<Segment>,
) -> Result<StructuredVectorMeasure> {
    nu.union(&StructuredVectorMeasure::new(
        Vec::<VectorAtom>::new(),
        extra,
        None,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{CellField, TailBound};
    use crate::{Domain, Grid};
    use proptest::prelude::*;

    fn p2(x: f64, y: f64) -> Point {
        Point::from([x, y])
    }

    fn seg(a: Point, b: Point, d: Point) -> Segment {
        Segment { a, b, density: d }
    }

    fn combined() -> StructuredVectorMeasure {
        StructuredVectorMeasure::new(
            vec![VectorAtom {
                point: p2(5.0, 0.0),
                vector: p2(0.0, 2.0),
            }],
            vec![seg(p2(0.0, 0.0), p2(1.0, 0.0), p2(1.0, 0.0))],
            None,
        )
        .unwrap()
    }

    #[test]
    fn split_examples() {
        let oblique = StructuredVectorMeasure::from_segments(vec![seg(
            p2(0.0, 0.0),
            p2(1.0, 0.0),
            p2(1.0, 1.0),
        )])
        .unwrap();
        let s = tangential_split(&oblique);
        assert_eq!(s.tangential.segments()[0].density, p2(1.0, 0.0));
        assert_eq!(s.normal.segments()[0].density, p2(0.0, 1.0));
        assert_eq!(s.normal_mass, 1.0);

        let atom = StructuredVectorMeasure::from_atoms(vec![VectorAtom {
            point: p2(0.0, 0.0),
            vector: p2(0.0, 2.0),
        }])
        .unwrap();
        assert_eq!(tangential_split(&atom).normal_mass, 2.0);
        assert_eq!(distance_to_sharp(&atom), 2.0);

        let grid = Grid::new(Domain::unit_box(2), vec![2, 2]).unwrap();
        let cells = StructuredVectorMeasure::new(
            vec![],
            vec![],
            Some(CellField {
                vectors: vec![p2(1.0, 2.0); 4],
                grid,
            }),
        )
        .unwrap();
        let s = tangential_split(&cells);
        assert_eq!(s.normal_mass, 0.0);
        assert!(s.normal.is_empty());
        assert!(s.tangential.cells().is_some());
    }

    #[test]
    fn split_is_idempotent() {
        let nu = StructuredVectorMeasure::from_segments(vec![
            seg(p2(0.0, 0.0), p2(1.0, 0.3), p2(1.0, 1.0)),
            seg(p2(2.0, 0.0), p2(2.5, 1.0), p2(-0.3, 0.4)),
        ])
        .unwrap();
        let s = tangential_split(&nu);
        assert_eq!(distance_to_sharp(&s.tangential), 0.0);
        for ((orig, t), n) in nu
            .segments()
            .iter()
            .zip(s.tangential.segments())
            .zip(s.normal.segments())
        {
            let sum = &t.density + &n.density;
            for k in 0..2 {
                assert!((sum[k] - orig.density[k]).abs() <= 1e-12 * orig.density.norm());
            }
            assert!(n.density.dot(&orig.direction()).abs() <= 1e-12);
        }
    }

    #[test]
    fn unit_square_loop_leaves_distance_unchanged() {
        let nu = combined();
        let square = [p2(2.0, 2.0), p2(3.0, 2.0), p2(3.0, 3.0), p2(2.0, 3.0)];
        let looped = augment(&nu, tangential_cycle(&square, 0.7).unwrap()).unwrap();
        assert_eq!(distance_to_sharp(&looped), distance_to_sharp(&nu));
    }

    #[test]
    fn decomposition_of_combined_example() {
        let nu = combined();
        let d = decompose(&nu, None);
        assert!(d.certified, "{:?}", d.uncertified_reason);
        let w = d.witness.as_ref().unwrap();
        assert!((w.value - 3.0).abs() < 1e-12);
        assert_eq!(w.tangential_norm, 1.0);
        assert_eq!(d.split.normal_mass, 2.0);
        assert_eq!(
            d.f_t_atoms.unwrap(),
            SignedAtomMeasure::from_pairs([([1.0, 0.0], 1.0), ([0.0, 0.0], -1.0)]).unwrap()
        );
        let f = Distribution::divergence_of(nu);
        for phi in TestFunction::polynomial_family(2, 3) {
            let lhs = pair(&d.f_t, &phi) + pair(&d.f_n, &phi);
            assert!((lhs - pair(&f, &phi)).abs() <= 1e-12);
        }
    }

    #[test]
    fn pure_parts() {
        let t = StructuredVectorMeasure::from_segments(vec![seg(
            p2(0.0, 0.0),
            p2(1.0, 0.0),
            p2(1.0, 0.0),
        )])
        .unwrap();
        let d = decompose(&t, None);
        assert!(d.f_n.is_zero());
        assert!(d.certified);
        let n = StructuredVectorMeasure::from_atoms(vec![VectorAtom {
            point: p2(0.0, 0.0),
            vector: p2(0.0, 2.0),
        }])
        .unwrap();
        let d = decompose(&n, None);
        assert!(d.f_t.is_zero());
        assert!(d.certified);
        assert!((d.witness.unwrap().value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn suboptimal_representation_is_uncertified() {
        // a detour: two tangential segments whose endpoints are closer than their length
        let nu = StructuredVectorMeasure::from_segments(vec![
            seg(
                p2(0.0, 0.0),
                p2(0.5, 1.0),
                p2(0.5, 1.0).scale(1.0 / p2(0.5, 1.0).norm()),
            ),
            seg(
                p2(0.5, 1.0),
                p2(1.0, 0.0),
                p2(0.5, -1.0).scale(1.0 / p2(0.5, 1.0).norm()),
            ),
        ])
        .unwrap();
        let d = decompose(&nu, None);
        assert!(!d.certified);
        assert!(d.uncertified_reason.is_some());
    }

    #[test]
    fn sigma_zero_examples() {
        let atom = StructuredVectorMeasure::from_atoms(vec![VectorAtom {
            point: p2(0.0, 0.0),
            vector: p2(0.0, 2.0),
        }])
        .unwrap();
        assert_eq!(sigma_zero_distance(&Matching::empty(), &atom).unwrap(), 2.0);
        let f = SignedAtomMeasure::dipole([1.0, 0.0], [0.0, 0.0]).unwrap();
        let gamma = minimal_connection(&f).unwrap();
        assert_eq!(
            sigma_zero_distance(&gamma, &StructuredVectorMeasure::empty()).unwrap(),
            0.0
        );

        let normal = StructuredVectorMeasure::from_atoms(vec![VectorAtom {
            point: p2(5.0, 0.0),
            vector: p2(0.0, 2.0),
        }])
        .unwrap();
        let tangential = crate::genplan::to_vector_measure(&from_plan(&gamma)).unwrap();
        let nu = tangential.union(&normal).unwrap();
        assert_eq!(
            sigma_zero_distance(&gamma, &normal).unwrap(),
            distance_to_sharp(&nu)
        );
        assert_eq!(distance_to_sharp(&nu), 2.0);
    }

    #[test]
    fn normal_witness_reaches_normal_mass() {
        let nu = StructuredVectorMeasure::new(
            vec![
                VectorAtom {
                    point: p2(0.0, 0.0),
                    vector: p2(0.3, -0.4),
                },
                VectorAtom {
                    point: p2(2.0, 0.0),
                    vector: p2(0.0, 1.0),
                },
            ],
            vec![seg(p2(0.0, 2.0), p2(1.0, 2.0), p2(0.0, -1.5))],
            None,
        )
        .unwrap();
        let normal = tangential_split(&nu).normal;
        let phi = normal_witness(&normal, 0.1).unwrap();
        let v = pair(&Distribution::divergence_of(normal.clone()), &phi);
        assert!(v >= (1.0 - 1e-6) * 3.0);
        assert!(normal_witness(&normal, 0.5).is_err());
    }

    fn geometric(listed: usize) -> DipoleChain {
        let pairs = (1..=listed)
            .map(|i| (p2(0.0, i as f64), p2(0.5f64.powi(i as i32), i as f64)))
            .collect();
        DipoleChain::new(
            pairs,
            Some(TailBound {
                ratio: 0.5,
                first_term: 1.0,
            }),
        )
        .unwrap()
    }

    #[test]
    fn modulus_examples() {
        let c = modulus(&geometric(12), &[0.25]).unwrap();
        assert_eq!((c.samples[0].k, c.samples[0].c_epsilon), (2, 4.0));

        let finite = DipoleChain::new(
            vec![
                (p2(0.0, 0.0), p2(1.0, 0.0)),
                (p2(0.0, 1.0), p2(0.5, 1.0)),
                (p2(0.0, 2.0), p2(0.25, 2.0)),
            ],
            None,
        )
        .unwrap();
        let c = modulus(&finite, &[1.75, 10.0, 0.0]).unwrap();
        assert_eq!(c.samples[0].k, 0);
        assert_eq!(c.samples[1].c_epsilon, 0.0);
        assert_eq!((c.samples[2].k, c.samples[2].c_epsilon), (3, 6.0));
        assert_eq!(c.floor, 0.0);

        let err = modulus(&geometric(4), &[2f64.powi(-6)]).unwrap_err();
        assert_eq!(
            err,
            Error::EpsilonBelowFloor {
                requested: 2f64.powi(-6),
                floor: 2f64.powi(-4)
            }
        );
        assert!(modulus(&finite, &[-1.0]).is_err());
    }

    #[test]
    fn ridge_function_exact_quantities() {
        let u =
            RidgeFunction::new(p2(1.0, 0.0), vec![(0.0, 0.0), (1.0, 2.0), (2.0, -1.0)]).unwrap();
        assert_eq!(u.sup_norm(), 2.0);
        assert_eq!(u.lipschitz(), 3.0);
        assert_eq!(u.value(&p2(0.5, 7.0)), 1.0);
        assert_eq!(u.value(&p2(5.0, 0.0)), -1.0);
        assert!(RidgeFunction::new(p2(1.0, 1.0), vec![(0.0, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn modulus_bound_holds(
            eps_exp in 1i32..10, angle in 0.0f64..6.3,
            values in proptest::collection::vec(-2.0f64..2.0, 2..12),
            gaps in proptest::collection::vec(0.01f64..2.0, 12),
        ) {
            let chain = geometric(12);
            let curve = modulus(&chain, &[2f64.powi(-eps_exp)]).unwrap();
            let mut s = -1.0;
            let knots: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, v)| { s += gaps[i]; (s, *v) }).collect();
            let u = RidgeFunction::new(p2(angle.cos(), angle.sin()), knots).unwrap();
            prop_assert!(modulus_margin(&chain, &curve.samples[0], &u) >= -1e-12);
        }

        #[test]
        fn cycles_preserve_pairing_and_distance(
            cx in 5.0f64..8.0, cy in 5.0f64..8.0,
            offsets in proptest::collection::vec((0.1f64..1.0, 0.0f64..1.0), 3..7),
            circ in -2.0f64..2.0,
        ) {
            prop_assume!(circ.abs() > 1e-3);
            let nu = combined();
            let n = offsets.len();
            let verts: Vec<Point> = offsets.iter().enumerate().map(|(i, (r, jitter))| {
                let a = (i as f64 + 0.8 * jitter) * std::f64::consts::TAU / n as f64;
                p2(cx + r * a.cos(), cy + r * a.sin())
            }).collect();
            let aug = augment(&nu, tangential_cycle(&verts, circ).unwrap()).unwrap();
            prop_assert_eq!(distance_to_sharp(&aug), distance_to_sharp(&nu));
            let f = Distribution::divergence_of(nu);
            let g = Distribution::divergence_of(aug);
            for phi in TestFunction::polynomial_family(2, 3) {
                prop_assert!((pair(&f, &phi) - pair(&g, &phi)).abs() <= 1e-10);
            }
        }
    }
}
