use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Vector};
use crate::grid::Grid;
use crate::{Error, Result};

/// Relative size below which a tangential or normal component of a segment
/// density is treated as exactly zero.
pub const SPLIT_SNAP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorAtom {
    pub point: Point,
    pub vector: Vector,
}

/// Constant vector density per unit length on the segment `a → b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    pub density: Vector,
}

/// Tangential/normal parts of a segment density.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentSplit {
    /// Signed density along the unit direction `a → b`.
    pub theta: f64,
    pub tangential: Vector,
    pub normal: Vector,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.a.dist(&self.b)
    }

    pub fn direction(&self) -> Vector {
        (&self.b - &self.a).scale(1.0 / self.length())
    }

    pub fn total_variation(&self) -> f64 {
        self.density.norm() * self.length()
    }

    pub fn point_at(&self, s: f64) -> Point {
        self.a.offset(&(&self.b - &self.a), s)
    }

    /// Orthogonal projection of the density onto the segment direction.
    ///
    /// A component whose norm is at most [`SPLIT_SNAP`] times the density
    /// norm is set to exactly zero and the other component takes the full
    /// density, so that purely tangential (or normal) inputs split exactly.
    pub fn split(&self) -> SegmentSplit {
        let n = self.density.dim();
        let t = self.direction();
        let theta = self.density.dot(&t);
        let tangential = t.scale(theta);
        let normal = &self.density - &tangential;
        let mag = self.density.norm();
        if normal.norm() <= SPLIT_SNAP * mag {
            SegmentSplit {
                theta,
                tangential: self.density.clone(),
                normal: Point::zeros(n),
            }
        } else if theta.abs() <= SPLIT_SNAP * mag {
            SegmentSplit {
                theta: 0.0,
                tangential: Point::zeros(n),
                normal: self.density.clone(),
            }
        } else {
            SegmentSplit {
                theta,
                tangential,
                normal,
            }
        }
    }
}

/// Piecewise-constant vector density with respect to volume on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellField {
    pub grid: Grid,
    pub vectors: Vec<Vector>,
}

/// ℝ^N-valued measure built from atoms, segments and grid cells.
#[derive(Clone, Debug, PartialEq, Default, Serialize)]
pub struct StructuredVectorMeasure {
    atoms: Vec<VectorAtom>,
    segments: Vec<Segment>,
    cells: Option<CellField>,
}

impl StructuredVectorMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates the parts. Atoms at the same point (up to 1e-9 of the
    /// instance diameter) are summed, exact cancellations dropped; zero-vector
    /// atoms, degenerate segments and segments overlapping on a set of
    /// positive length are rejected.
    pub fn new(
        atoms: Vec<VectorAtom>,
        segments: Vec<Segment>,
        cells: Option<CellField>,
    ) -> Result<Self> {
        let dims: Vec<usize> = atoms
            .iter()
            .flat_map(|a| [a.point.dim(), a.vector.dim()])
            .chain(
                segments
                    .iter()
                    .flat_map(|s| [s.a.dim(), s.b.dim(), s.density.dim()]),
            )
            .chain(cells.iter().flat_map(|c| {
                std::iter::once(c.grid.dim()).chain(c.vectors.iter().map(|v| v.dim()))
            }))
            .collect();
        if let Some(&d) = dims.first() {
            if !(2..=3).contains(&d) || dims.iter().any(|&e| e != d) {
                return Err(Error::Invalid(
                    "vector measure parts must share dimension 2 or 3".into(),
                ));
            }
        }
        let finite = atoms
            .iter()
            .all(|a| a.point.is_finite() && a.vector.is_finite())
            && segments
                .iter()
                .all(|s| s.a.is_finite() && s.b.is_finite() && s.density.is_finite());
        if !finite {
            return Err(Error::Invalid(
                "non-finite coordinate in vector measure".into(),
            ));
        }
        if let Some(c) = &cells {
            if c.vectors.len() != c.grid.cell_count() {
                return Err(Error::Invalid(format!(
                    "cell field has {} vectors for {} cells",
                    c.vectors.len(),
                    c.grid.cell_count()
                )));
            }
            if c.vectors.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid("non-finite cell vector".into()));
            }
        }
        if atoms.iter().any(|a| a.vector.is_zero()) {
            return Err(Error::Invalid("vector atom with zero vector".into()));
        }

        let scale = geometry_scale(&atoms, &segments).max(f64::MIN_POSITIVE);
        let tol = 1e-9 * scale;

        let mut merged: Vec<VectorAtom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            if let Some(m) = merged.iter_mut().find(|m| m.point.dist(&a.point) <= tol) {
                m.vector = &m.vector + &a.vector;
            } else {
                merged.push(a);
            }
        }
        merged.retain(|a| !a.vector.is_zero());

        for (i, s) in segments.iter().enumerate() {
            if s.length() <= tol {
                return Err(Error::Invalid(format!(
                    "segment {i} has no positive length"
                )));
            }
        }
        for i in 0..segments.len() {
            for j in i + 1..segments.len() {
                if overlap_length(&segments[i], &segments[j], tol) > tol {
                    return Err(Error::Invalid(format!(
                        "segments {i} and {j} overlap on a set of positive length"
                    )));
                }
            }
        }
        Ok(StructuredVectorMeasure {
            atoms: merged,
            segments,
            cells,
        })
    }

    /// Parts taken from an already validated measure.
    pub(crate) fn from_valid_parts(
        atoms: Vec<VectorAtom>,
        segments: Vec<Segment>,
        cells: Option<CellField>,
    ) -> Self {
        StructuredVectorMeasure {
            atoms,
            segments,
            cells,
        }
    }

    pub fn from_atoms(atoms: Vec<VectorAtom>) -> Result<Self> {
        Self::new(atoms, Vec::new(), None)
    }

    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        Self::new(Vec::new(), segments, None)
    }

    pub fn atoms(&self) -> &[VectorAtom] {
        &self.atoms
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn cells(&self) -> Option<&CellField> {
        self.cells.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty() && self.segments.is_empty() && self.cells.is_none()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms
            .first()
            .map(|a| a.point.dim())
            .or_else(|| self.segments.first().map(|s| s.a.dim()))
            .or_else(|| self.cells.as_ref().map(|c| c.grid.dim()))
    }

    /// ‖ν‖ = Σ|vector| + Σ|density|·length + Σ|cell vector|·cell volume.
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        for a in &self.atoms {
            tv += a.vector.norm();
        }
        for s in &self.segments {
            tv += s.total_variation();
        }
        if let Some(c) = &self.cells {
            let vol = c.grid.cell_volume();
            for v in &c.vectors {
                tv += v.norm() * vol;
            }
        }
        tv
    }

    /// Concatenation of two measures, revalidated.
    pub fn union(&self, other: &StructuredVectorMeasure) -> Result<Self> {
        let cells = match (&self.cells, &other.cells) {
            (Some(_), Some(_)) => {
                return Err(Error::Unsupported("union of two cell fields".into()));
            }
            (a, b) => a.clone().or_else(|| b.clone()),
        };
        Self::new(
            self.atoms.iter().chain(&other.atoms).cloned().collect(),
            self.segments
                .iter()
                .chain(&other.segments)
                .cloned()
                .collect(),
            cells,
        )
    }

    /// Every point mentioned by the measure (atom points and segment ends).
    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.atoms
            .iter()
            .map(|a| &a.point)
            .chain(self.segments.iter().flat_map(|s| [&s.a, &s.b]))
    }
}

fn geometry_scale(atoms: &[VectorAtom], segments: &[Segment]) -> f64 {
    let pts: Vec<&Point> = atoms
        .iter()
        .map(|a| &a.point)
        .chain(segments.iter().flat_map(|s| [&s.a, &s.b]))
        .collect();
    let Some(first) = pts.first() else {
        return 0.0;
    };
    let n = first.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in &pts {
        for k in 0..n {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let diag = Point(lo).dist(&Point(hi));
    if diag > 0.0 {
        diag
    } else {
        1.0
    }
}

/// Length of the common part of two segments when they are collinear
/// within `tol`, zero otherwise.
fn overlap_length(s: &Segment, r: &Segment, tol: f64) -> f64 {
    let len = s.length();
    let dir = s.direction();
    let off = |p: &Point| {
        let w = p - &s.a;
        let along = w.dot(&dir);
        let perp = w.offset(&dir, -along).norm();
        (along, perp)
    };
    let (tc, pc) = off(&r.a);
    let (td, pd) = off(&r.b);
    if pc > tol || pd > tol {
        return 0.0;
    }
    let (lo, hi) = if tc <= td { (tc, td) } else { (td, tc) };
    (hi.min(len) - lo.max(0.0)).max(0.0)
}
