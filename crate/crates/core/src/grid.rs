//! Regular grids tiling a domain.

use serde::{Deserialize, Serialize};

use crate::geometry::{Domain, Point};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub cells: Vec<usize>,
}

impl Grid {
    pub fn new(domain: Domain, cells: Vec<usize>) -> Result<Self> {
        domain.validate()?;
        if cells.len() != domain.dim() {
            return Err(Error::Invalid(format!(
                "grid has {} axes but domain is {}-dimensional",
                cells.len(),
                domain.dim()
            )));
        }
        if cells.contains(&0) {
            return Err(Error::Invalid(
                "grid needs at least one cell per axis".into(),
            ));
        }
        Ok(Grid { domain, cells })
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn cell_size(&self, axis: usize) -> f64 {
        self.domain.extent(axis) / self.cells[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.cell_size(k)).product()
    }

    /// Half the diagonal of a cell: the largest displacement caused by
    /// snapping a point to its cell center.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * (0..self.dim())
            .map(|k| self.cell_size(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Linear index, axis 0 varying fastest.
    pub fn linear(&self, idx: &[usize]) -> usize {
        let mut lin = 0;
        for k in (0..self.dim()).rev() {
            lin = lin * self.cells[k] + idx[k];
        }
        lin
    }

    pub fn multi(&self, mut lin: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            out.push(lin % self.cells[k]);
            lin /= self.cells[k];
        }
        out
    }

    /// Cell index along `axis` for coordinate `x`; a coordinate on a shared
    /// face belongs to the lower cell.
    pub fn axis_index(&self, axis: usize, x: f64) -> usize {
        let q = (x - self.domain.lower[axis]) / self.cell_size(axis);
        let i = q.ceil() - 1.0;
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.cells[axis] - 1)
        }
    }

    /// Containing cell of `p` (lower index on ties).
    pub fn cell_of(&self, p: &Point) -> Result<usize> {
        self.domain.check_contains(p)?;
        let idx: Vec<usize> = (0..self.dim()).map(|k| self.axis_index(k, p[k])).collect();
        Ok(self.linear(&idx))
    }

    pub fn center(&self, lin: usize) -> Point {
        let idx = self.multi(lin);
        Point(
            (0..self.dim())
                .map(|k| self.domain.lower[k] + (idx[k] as f64 + 0.5) * self.cell_size(k))
                .collect(),
        )
    }

    /// Lower and upper corner of a cell.
    pub fn cell_bounds(&self, lin: usize) -> (Point, Point) {
        let idx = self.multi(lin);
        let lo: Vec<f64> = (0..self.dim())
            .map(|k| self.domain.lower[k] + idx[k] as f64 * self.cell_size(k))
            .collect();
        let hi: Vec<f64> = (0..self.dim())
            .map(|k| self.domain.lower[k] + (idx[k] as f64 + 1.0) * self.cell_size(k))
            .collect();
        (Point(lo), Point(hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(nx: usize, ny: usize) -> Grid {
        Grid::new(Domain::unit_box(2), vec![nx, ny]).unwrap()
    }

    #[test]
    fn linear_multi_roundtrip() {
        let g = Grid::new(Domain::unit_box(3), vec![3, 4, 5]).unwrap();
        for lin in 0..g.cell_count() {
            assert_eq!(g.linear(&g.multi(lin)), lin);
        }
    }

    #[test]
    fn face_ties_go_to_lower_cell() {
        let g = unit_grid(2, 2);
        assert_eq!(g.axis_index(0, 0.5), 0);
        assert_eq!(g.axis_index(0, 0.5000001), 1);
        assert_eq!(g.axis_index(0, 0.0), 0);
        assert_eq!(g.axis_index(0, 1.0), 1);
    }

    #[test]
    fn outside_point_rejected() {
        let g = unit_grid(2, 2);
        assert!(matches!(
            g.cell_of(&Point::from([1.5, 0.5])),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(Grid::new(Domain::unit_box(2), vec![0, 2]).is_err());
    }
}
