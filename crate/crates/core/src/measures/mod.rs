//! Signed atomic measures, dipole chains, structured vector measures and the
//! pairing ⟨f, φ⟩ of first-order distributions with test functions.

mod test_function;
mod vector_measure;

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

pub use test_function::{Anchor, Monomial, Plateau, TestFunction};
pub use vector_measure::{
    CellField, Segment, SegmentSplit, StructuredVectorMeasure, VectorAtom, SPLIT_SNAP,
};

use crate::geometry::Point;
use crate::quadrature;
use crate::{Error, Result};

/// Points closer than this fraction of the instance diameter are identified.
pub const MERGE_TOLERANCE: f64 = 1e-9;
/// Relative balance tolerance: |Σ m| ≤ BALANCE_TOLERANCE · Σ |m|.
pub const BALANCE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

impl Atom {
    pub fn new(point: impl Into<Point>, mass: f64) -> Self {
        Atom {
            point: point.into(),
            mass,
        }
    }
}

/// f = Σ mᵢ δ_{xᵢ} with distinct points and nonzero masses.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct SignedAtomMeasure {
    atoms: Vec<Atom>,
}

impl SignedAtomMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Merges coincident points (keeping the first occurrence's position) and
    /// drops atoms whose merged mass vanishes.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if let Some(first) = atoms.first() {
            let d = first.point.dim();
            if !(2..=3).contains(&d) {
                return Err(Error::Invalid(format!(
                    "atoms must live in 2 or 3 dimensions, got {d}"
                )));
            }
            if atoms.iter().any(|a| a.point.dim() != d) {
                return Err(Error::Invalid("atoms of mixed dimension".into()));
            }
        }
        if atoms
            .iter()
            .any(|a| !a.point.is_finite() || !a.mass.is_finite())
        {
            return Err(Error::Invalid("non-finite atom".into()));
        }
        let tol = MERGE_TOLERANCE * diameter_hint(atoms.iter().map(|a| &a.point));
        let gross: f64 = atoms.iter().map(|a| a.mass.abs()).sum();
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            if let Some(m) = merged.iter_mut().find(|m| m.point.dist(&a.point) <= tol) {
                m.mass += a.mass;
            } else {
                merged.push(a);
            }
        }
        let drop_below = 1e-15 * gross;
        merged.retain(|a| a.mass.abs() > drop_below);
        Ok(SignedAtomMeasure { atoms: merged })
    }

    pub fn from_pairs<P: Into<Point>>(pairs: impl IntoIterator<Item = (P, f64)>) -> Result<Self> {
        Self::new(pairs.into_iter().map(|(p, m)| Atom::new(p, m)).collect())
    }

    /// δ_p − δ_n
    pub fn dipole(p: impl Into<Point>, n: impl Into<Point>) -> Result<Self> {
        Self::new(vec![Atom::new(p, 1.0), Atom::new(n, -1.0)])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.point.dim())
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.atoms.iter().map(|a| &a.point)
    }

    pub fn total(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass.abs()).sum()
    }

    pub fn balance_tolerance(&self) -> f64 {
        BALANCE_TOLERANCE * self.total_variation()
    }

    pub fn is_balanced(&self) -> bool {
        self.total().abs() <= self.balance_tolerance()
    }

    pub fn check_balanced(&self) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::Unbalanced {
                total: self.total(),
                tolerance: self.balance_tolerance(),
            })
        }
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.atoms
                .iter()
                .map(|a| Atom::new(a.point.clone(), alpha * a.mass))
                .collect(),
        )
    }

    pub fn plus(&self, other: &SignedAtomMeasure) -> Result<Self> {
        Self::new(self.atoms.iter().chain(&other.atoms).cloned().collect())
    }
}

fn diameter_hint<'a>(points: impl Iterator<Item = &'a Point>) -> f64 {
    let mut lo: Vec<f64> = Vec::new();
    let mut hi: Vec<f64> = Vec::new();
    for p in points {
        if lo.is_empty() {
            lo = p.0.clone();
            hi = p.0.clone();
        }
        for k in 0..p.dim().min(lo.len()) {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let d = Point(lo).dist(&Point(hi));
    if d > 0.0 {
        d
    } else {
        1.0
    }
}

/// Guaranteed bound Σ_{i>k} |pᵢ − nᵢ| ≤ first_term · ratio^k on the pairs
/// beyond the listed ones (k = number of listed pairs).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailBound {
    pub ratio: f64,
    pub first_term: f64,
}

/// T = Σᵢ (δ_{pᵢ} − δ_{nᵢ}), possibly with an unlisted summable tail.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipoleChain {
    pub pairs: Vec<(Point, Point)>,
    #[serde(default)]
    pub tail: Option<TailBound>,
}

impl DipoleChain {
    pub fn new(pairs: Vec<(Point, Point)>, tail: Option<TailBound>) -> Result<Self> {
        let chain = DipoleChain { pairs, tail };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.tail {
            if !(t.ratio > 0.0 && t.ratio < 1.0) {
                return Err(Error::Invalid(format!(
                    "tail ratio {} not in (0, 1)",
                    t.ratio
                )));
            }
            if !(t.first_term > 0.0 && t.first_term.is_finite()) {
                return Err(Error::Invalid(format!(
                    "tail first term {} must be positive",
                    t.first_term
                )));
            }
        }
        if let Some((p, _)) = self.pairs.first() {
            let d = p.dim();
            if self
                .pairs
                .iter()
                .any(|(p, n)| p.dim() != d || n.dim() != d || !p.is_finite() || !n.is_finite())
            {
                return Err(Error::Invalid(
                    "dipole points must be finite and share a dimension".into(),
                ));
            }
        }
        Ok(())
    }

    /// Bound on the unlisted remainder (zero without a tail).
    pub fn unlisted_bound(&self) -> f64 {
        self.tail.map_or(0.0, |t| {
            t.first_term * t.ratio.powi(self.pairs.len() as i32)
        })
    }

    /// Certified Σ_{i>k} |pᵢ − nᵢ| for k = 0..=len (1-based pair indices):
    /// the listed suffix plus the unlisted bound, summed from the far end.
    pub fn certified_tails(&self) -> Vec<f64> {
        let l = self.pairs.len();
        let mut tails = vec![0.0; l + 1];
        tails[l] = self.unlisted_bound();
        for k in (0..l).rev() {
            let (p, n) = &self.pairs[k];
            tails[k] = tails[k + 1] + p.dist(n);
        }
        tails
    }

    pub fn atom_measure(&self) -> Result<SignedAtomMeasure> {
        SignedAtomMeasure::new(
            self.pairs
                .iter()
                .flat_map(|(p, n)| [Atom::new(p.clone(), 1.0), Atom::new(n.clone(), -1.0)])
                .collect(),
        )
    }
}

/// f = measure_part − div(divergence_part).
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct Distribution {
    pub measure_part: SignedAtomMeasure,
    pub divergence_part: StructuredVectorMeasure,
}

impl Distribution {
    pub fn from_measure(m: SignedAtomMeasure) -> Self {
        Distribution {
            measure_part: m,
            divergence_part: StructuredVectorMeasure::empty(),
        }
    }

    /// −div ν
    pub fn divergence_of(nu: StructuredVectorMeasure) -> Self {
        Distribution {
            measure_part: SignedAtomMeasure::zero(),
            divergence_part: nu,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.measure_part.is_empty() && self.divergence_part.is_empty()
    }
}

/// Result of a pairing together with its quadrature diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pairing {
    pub value: f64,
    /// The test function is a polynomial whose degree exceeds what the
    /// segment/cell quadrature integrates exactly.
    pub quadrature_exceeded: bool,
}

/// ⟨f, φ⟩ = Σ mᵢ φ(xᵢ) + ∫ ∇φ · dν.
pub fn pair(f: &Distribution, phi: &TestFunction) -> f64 {
    pair_checked(f, phi).value
}

pub fn pair_checked(f: &Distribution, phi: &TestFunction) -> Pairing {
    let mut value = 0.0;
    for a in f.measure_part.atoms() {
        value += a.mass * phi.value(&a.point);
    }
    value += pair_gradient(&f.divergence_part, phi);
    let nu = &f.divergence_part;
    let has_integrals = !nu.segments().is_empty() || nu.cells().is_some();
    let quadrature_exceeded = has_integrals
        && phi
            .polynomial_degree()
            .is_some_and(|d| d.saturating_sub(1) > quadrature::EXACT_DEGREE);
    Pairing {
        value,
        quadrature_exceeded,
    }
}

/// ∫ ∇φ · dν with 8-point Gauss–Legendre per segment and a tensor rule per
/// cell.
pub fn pair_gradient(nu: &StructuredVectorMeasure, phi: &TestFunction) -> f64 {
    let rule = quadrature::unit_rule();
    let mut value = 0.0;
    for a in nu.atoms() {
        value += a.vector.dot(&phi.gradient(&a.point));
    }
    for s in nu.segments() {
        let mut acc = 0.0;
        for &(x, w) in &rule {
            acc += w * s.density.dot(&phi.gradient(&s.point_at(x)));
        }
        value += acc * s.length();
    }
    if let Some(c) = nu.cells() {
        let g = &c.grid;
        let vol = g.cell_volume();
        let dim = g.dim();
        for (lin, v) in c.vectors.iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let (lo, hi) = g.cell_bounds(lin);
            let mut acc = 0.0;
            let mut idx = vec![0usize; dim];
            loop {
                let mut w = 1.0;
                let mut x = Vec::with_capacity(dim);
                for k in 0..dim {
                    let (t, wk) = rule[idx[k]];
                    x.push(lo[k] + t * (hi[k] - lo[k]));
                    w *= wk;
                }
                acc += w * v.dot(&phi.gradient(&Point(x)));
                // odometer over the tensor nodes
                let mut k = 0;
                while k < dim {
                    idx[k] += 1;
                    if idx[k] < rule.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == dim {
                    break;
                }
            }
            value += acc * vol;
        }
    }
    value
}

/// Why −div ν is not (representable as) a signed atomic measure.
#[derive(Clone, Debug, PartialEq, ThisError)]
pub enum NotAMeasure {
    #[error("vector atoms have no tangential directions; their divergence is a genuine first-order distribution")]
    HasAtoms,
    #[error("segment {segment} carries a normal density component")]
    NormalComponent { segment: usize },
    #[error("cell divergence is only available through pairing")]
    HasCells,
}

/// −div ν as an atomic measure when ν is a purely tangential segment
/// measure: a segment a → b with tangential density θ·(b − a)/|b − a|
/// contributes θ(δ_b − δ_a).
pub fn divergence_as_measure(
    nu: &StructuredVectorMeasure,
) -> std::result::Result<SignedAtomMeasure, NotAMeasure> {
    if nu.cells().is_some() {
        return Err(NotAMeasure::HasCells);
    }
    if !nu.atoms().is_empty() {
        return Err(NotAMeasure::HasAtoms);
    }
    let mut atoms = Vec::with_capacity(2 * nu.segments().len());
    for (i, s) in nu.segments().iter().enumerate() {
        let sp = s.split();
        if !sp.normal.is_zero() {
            return Err(NotAMeasure::NormalComponent { segment: i });
        }
        atoms.push(Atom::new(s.b.clone(), sp.theta));
        atoms.push(Atom::new(s.a.clone(), -sp.theta));
    }
    // Inputs were validated already; merging cannot fail on them.
    Ok(SignedAtomMeasure::new(atoms).expect("segment endpoints are finite"))
}

/// Atomic measure of the listed dipoles and the certified truncation error
/// |W¹(chain) − W¹(f)| ≤ bound.
pub fn from_dipoles(chain: &DipoleChain, truncation_eps: f64) -> Result<(Distribution, f64)> {
    chain.validate()?;
    if !(truncation_eps >= 0.0) {
        return Err(Error::Invalid(format!(
            "truncation epsilon {truncation_eps} must be nonnegative"
        )));
    }
    let bound = chain.unlisted_bound();
    if chain.tail.is_some() {
        if truncation_eps <= 0.0 {
            return Err(Error::Invalid(
                "a chain with an unlisted tail needs a positive truncation epsilon".into(),
            ));
        }
        if bound > truncation_eps {
            return Err(Error::TailTooLarge {
                bound,
                requested: truncation_eps,
            });
        }
    }
    Ok((Distribution::from_measure(chain.atom_measure()?), bound))
}
