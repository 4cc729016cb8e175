//! Input document: one JSON object holding every kind of input a command
//! may read. Unknown keys are rejected.

use serde::Deserialize;
use sha2::{Digest, Sha256};

use krnorm::genplan::{GeneralizedPlan, PlanAtom};
use krnorm::measures::{Atom, CellField, Segment, VectorAtom};
use krnorm::{
    DipoleChain, Domain, Point, SignedAtomMeasure, StructuredVectorMeasure, TestFunction,
};

use crate::error::CliError;

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Truncation levels for `modulus`.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Bump radius for `decompose`; chosen from the geometry when absent.
    pub radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub version: u32,
    pub domain: Option<Domain>,
    #[serde(default)]
    pub atoms: Vec<Atom>,
    pub dipoles: Option<DipoleChain>,
    #[serde(default)]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub vector_atoms: Vec<VectorAtom>,
    pub cells: Option<CellField>,
    #[serde(default)]
    pub plan: Vec<PlanAtom>,
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    #[serde(default)]
    pub options: Options,
}

pub struct Loaded {
    pub doc: Document,
    /// Hex sha256 of the raw document bytes.
    pub digest: String,
}

pub fn load(path: &str) -> Result<Loaded, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))?;
    let doc: Document = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("malformed document {path}: {e}")))?;
    if doc.version != DOCUMENT_VERSION {
        return Err(CliError::Validation(format!(
            "document version {} is not supported (expected {DOCUMENT_VERSION})",
            doc.version
        )));
    }
    Ok(Loaded {
        doc,
        digest: hex::encode(Sha256::digest(&bytes)),
    })
}

impl Document {
    /// Atoms plus, for a chain without tail, its listed dipoles.
    pub fn measure(&self) -> Result<SignedAtomMeasure, CliError> {
        let mut f = SignedAtomMeasure::new(self.atoms.clone())?;
        if let Some(chain) = &self.dipoles {
            if chain.tail.is_none() && !chain.pairs.is_empty() {
                f = f.plus(&chain.atom_measure()?)?;
            }
        }
        Ok(f)
    }

    pub fn balanced_measure(&self) -> Result<SignedAtomMeasure, CliError> {
        let f = self.measure()?;
        if f.is_empty() {
            return Err(CliError::Validation("the document holds no atoms".into()));
        }
        f.check_balanced()?;
        Ok(f)
    }

    pub fn vector_measure(&self) -> Result<StructuredVectorMeasure, CliError> {
        Ok(StructuredVectorMeasure::new(
            self.vector_atoms.clone(),
            self.segments.clone(),
            self.cells.clone(),
        )?)
    }

    pub fn has_vector_measure(&self) -> bool {
        !self.vector_atoms.is_empty() || !self.segments.is_empty() || self.cells.is_some()
    }

    pub fn plan(&self) -> Result<GeneralizedPlan, CliError> {
        Ok(GeneralizedPlan::new(self.plan.clone())?)
    }

    /// The declared domain, or the bounding box of every point padded by 5%.
    pub fn domain(&self) -> Result<Domain, CliError> {
        if let Some(d) = &self.domain {
            d.validate()?;
            return Ok(d.clone());
        }
        let mut pts: Vec<Point> = self.atoms.iter().map(|a| a.point.clone()).collect();
        pts.extend(self.vector_atoms.iter().map(|a| a.point.clone()));
        pts.extend(
            self.segments
                .iter()
                .flat_map(|s| [s.a.clone(), s.b.clone()]),
        );
        pts.extend(self.plan.iter().flat_map(|a| [a.base.clone(), a.tip()]));
        if let Some(chain) = &self.dipoles {
            pts.extend(chain.pairs.iter().flat_map(|(p, n)| [p.clone(), n.clone()]));
        }
        if let Some(c) = &self.cells {
            return Ok(c.grid.domain.clone());
        }
        Ok(Domain::bounding(&pts)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_keys() {
        let r: Result<Document, _> = serde_json::from_str(r#"{"version": 1, "atom": []}"#);
        assert!(r.is_err());
    }

    #[test]
    fn default_domain_pads_the_bounding_box() {
        let doc: Document = serde_json::from_str(
            r#"{"version": 1, "atoms": [{"point": [0, 0], "mass": 1}, {"point": [1, 2], "mass": -1}]}"#,
        )
        .unwrap();
        let d = doc.domain().unwrap();
        assert_eq!(d.lower, Point::new([-0.05, -0.1]));
        assert_eq!(d.upper, Point::new([1.05, 2.1]));
    }

    #[test]
    fn finite_chains_join_the_measure() {
        let doc: Document =
            serde_json::from_str(r#"{"version": 1, "dipoles": {"pairs": [[[0, 0], [1, 0]]]}}"#)
                .unwrap();
        assert_eq!(doc.balanced_measure().unwrap().total_variation(), 2.0);
    }
}
