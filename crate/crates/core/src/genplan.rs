//! Generalized transport plans: positive atomic measures σ on
//! Ω × S^{N−1} × [0, ∞) acting on test functions through difference
//! quotients,
//!
//! ```text
//! D_φ(x, v, t) = (φ(x + t v) − φ(x)) / t   (t > 0)
//! D_φ(x, v, 0) = ∇φ(x) · v
//! ```
//!
//! A plan represents f when ∫ D_φ dσ = ⟨f, φ⟩ for every φ. Atoms with
//! t > 0 carry transport, atoms with t = 0 carry infinitesimal flux.

use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, Point, Vector};
use crate::matchnorm::Matching;
use crate::measures::{
    pair, Distribution, Segment, StructuredVectorMeasure, TestFunction, VectorAtom,
};
use crate::quadrature;
use crate::{Error, Result};

/// Allowed deviation of |dir| from 1.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanAtom {
    pub base: Point,
    pub dir: Vector,
    pub t: f64,
    pub mass: f64,
}

impl PlanAtom {
    pub fn tip(&self) -> Point {
        self.base.offset(&self.dir, self.t)
    }

    fn validate(&self) -> Result<()> {
        let d = self.base.dim();
        if !(2..=3).contains(&d) || self.dir.dim() != d {
            return Err(Error::Invalid(
                "plan atom dimensions are inconsistent".into(),
            ));
        }
        if !self.base.is_finite()
            || !self.dir.is_finite()
            || !self.t.is_finite()
            || !self.mass.is_finite()
        {
            return Err(Error::Invalid("non-finite plan atom".into()));
        }
        if (self.dir.norm() - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Invalid(format!(
                "direction {:?} is not a unit vector",
                self.dir.coords()
            )));
        }
        if self.t < 0.0 {
            return Err(Error::Invalid(format!("negative length t = {}", self.t)));
        }
        if self.mass <= 0.0 {
            return Err(Error::Invalid(format!(
                "plan mass {} is not positive",
                self.mass
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct GeneralizedPlan {
    atoms: Vec<PlanAtom>,
}

impl GeneralizedPlan {
    pub fn new(atoms: Vec<PlanAtom>) -> Result<Self> {
        for a in &atoms {
            a.validate()?;
        }
        if let Some(first) = atoms.first() {
            if atoms.iter().any(|a| a.base.dim() != first.base.dim()) {
                return Err(Error::Invalid("plan atoms of mixed dimension".into()));
            }
        }
        Ok(GeneralizedPlan { atoms })
    }

    pub fn atoms(&self) -> &[PlanAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// Checks that every base and tip lies in `domain`.
    pub fn check_inside(&self, domain: &Domain) -> Result<()> {
        for a in &self.atoms {
            domain.check_contains(&a.base)?;
            domain.check_contains(&a.tip())?;
        }
        Ok(())
    }

    /// σ + τ
    pub fn plus(&self, other: &GeneralizedPlan) -> Result<Self> {
        GeneralizedPlan::new(self.atoms.iter().chain(&other.atoms).cloned().collect())
    }
}

pub fn d_phi(phi: &TestFunction, atom: &PlanAtom) -> f64 {
    if atom.t == 0.0 {
        phi.gradient(&atom.base).dot(&atom.dir)
    } else {
        (phi.value(&atom.tip()) - phi.value(&atom.base)) / atom.t
    }
}

/// ∫ D_φ dσ
pub fn pair_plan(sigma: &GeneralizedPlan, phi: &TestFunction) -> f64 {
    sigma.atoms.iter().map(|a| a.mass * d_phi(phi, a)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionReport {
    /// |∫ D_φ dσ − ⟨f, φ⟩| per family member.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: &'static str,
}

pub const NECESSARY_ONLY: &str =
    "necessary-only: agreement on a finite test family does not prove the identity for all test functions";

/// Compares ∫ D_φ dσ with ⟨f, φ⟩ over a finite family.
pub fn verify_projection(
    sigma: &GeneralizedPlan,
    f: &Distribution,
    family: &[TestFunction],
    tol: f64,
) -> Result<ProjectionReport> {
    if family.is_empty() {
        return Err(Error::Invalid("the test family is empty".into()));
    }
    let residuals: Vec<f64> = family
        .iter()
        .map(|phi| (pair_plan(sigma, phi) - pair(f, phi)).abs())
        .collect();
    let max_residual = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    Ok(ProjectionReport {
        residuals,
        max_residual,
        tolerance: tol,
        passed: max_residual <= tol,
        note: NECESSARY_ONLY,
    })
}

/// Edge (x → y, m) ↦ atom (base y, direction toward x, t = |x − y|, mass
/// m|x − y|), so that ∫ D_φ dσ = Σ m (φ(x) − φ(y)). Zero-length edges are
/// dropped.
pub fn from_plan(gamma: &Matching) -> GeneralizedPlan {
    let atoms = gamma
        .edges
        .iter()
        .filter_map(|e| {
            let len = e.length();
            (len > 0.0).then(|| PlanAtom {
                base: e.target.clone(),
                dir: (&e.source - &e.target).scale(1.0 / len),
                t: len,
                mass: e.mass * len,
            })
        })
        .collect();
    GeneralizedPlan { atoms }
}

/// Vector atoms and segment quadrature nodes as t = 0 atoms; exact on test
/// functions whose gradients the segment rule integrates exactly.
pub fn from_flow(nu: &StructuredVectorMeasure) -> Result<GeneralizedPlan> {
    if nu.cells().is_some() {
        return Err(Error::Unsupported(
            "plans from cell-based vector measures".into(),
        ));
    }
    let mut atoms = Vec::new();
    for a in nu.atoms() {
        let m = a.vector.norm();
        if m == 0.0 {
            return Err(Error::Invalid("zero vector atom".into()));
        }
        atoms.push(PlanAtom {
            base: a.point.clone(),
            dir: a.vector.scale(1.0 / m),
            t: 0.0,
            mass: m,
        });
    }
    let rule = quadrature::unit_rule();
    for s in nu.segments() {
        let m = s.density.norm();
        if m == 0.0 {
            continue;
        }
        let dir = s.density.scale(1.0 / m);
        let len = s.length();
        for &(x, w) in &rule {
            atoms.push(PlanAtom {
                base: s.point_at(x),
                dir: dir.clone(),
                t: 0.0,
                mass: m * w * len,
            });
        }
    }
    GeneralizedPlan::new(atoms)
}

/// σ₀ atom (x, V, 0, m) ↦ vector atom m V at x; σ₊ atom (x, v, t, m) ↦
/// segment x → x + t v with tangential density (m/t) v. Fails when two
/// segments overlap along a positive length.
pub fn to_vector_measure(sigma: &GeneralizedPlan) -> Result<StructuredVectorMeasure> {
    let mut atoms = Vec::new();
    let mut segments = Vec::new();
    for a in &sigma.atoms {
        if a.t == 0.0 {
            atoms.push(VectorAtom {
                point: a.base.clone(),
                vector: a.dir.scale(a.mass),
            });
        } else {
            segments.push(Segment {
                a: a.base.clone(),
                b: a.tip(),
                density: a.dir.scale(a.mass / a.t),
            });
        }
    }
    StructuredVectorMeasure::new(atoms, segments, None)
}

/// (σ₀, σ₊): atoms with t = 0 and with t > 0.
pub fn split(sigma: &GeneralizedPlan) -> (GeneralizedPlan, GeneralizedPlan) {
    let (zero, plus): (Vec<PlanAtom>, Vec<PlanAtom>) =
        sigma.atoms.iter().cloned().partition(|a| a.t == 0.0);
    (
        GeneralizedPlan { atoms: zero },
        GeneralizedPlan { atoms: plus },
    )
}
