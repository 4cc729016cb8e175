//! Transport densities on regular grids.
//!
//! A matching's density puts mass m·|S ∩ cell| on each cell crossed by an
//! edge S of mass m; a vector measure's density is its total variation.
//! Segments are clipped exactly against the cell planes; a piece lying on a
//! shared face belongs to the lower-index cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::grid::Grid;
use crate::matchnorm::Matching;
use crate::measures::StructuredVectorMeasure;
use crate::{Error, Result};

/// Edges per work unit; partial grids are merged in chunk order.
const CHUNK: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridDensity {
    pub grid: Grid,
    /// Nonnegative mass per cell, linear order with axis 0 fastest.
    pub mass: Vec<f64>,
}

impl GridDensity {
    pub fn zero(grid: Grid) -> Self {
        let n = grid.cell_count();
        GridDensity {
            grid,
            mass: vec![0.0; n],
        }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.mass.iter().fold(0.0f64, |m, &v| m.max(v))
    }
}

/// Exact pieces of the segment a → b per cell, as (cell, length).
pub fn clip_segment(grid: &Grid, a: &Point, b: &Point) -> Result<Vec<(usize, f64)>> {
    check_dim(grid, a)?;
    check_dim(grid, b)?;
    grid.domain.check_contains(a)?;
    grid.domain.check_contains(b)?;
    let len = a.dist(b);
    if len == 0.0 {
        return Ok(Vec::new());
    }
    let mut ts = vec![0.0, 1.0];
    for k in 0..grid.dim() {
        let (ak, bk) = (a[k], b[k]);
        if ak == bk {
            continue;
        }
        let lo = grid.domain.lower[k];
        let h = grid.cell_size(k);
        let (min, max) = (ak.min(bk), ak.max(bk));
        let first = (((min - lo) / h).floor() as i64).max(1);
        let last = (((max - lo) / h).ceil() as i64).min(grid.cells[k] as i64 - 1);
        for i in first..=last {
            let c = lo + i as f64 * h;
            let t = (c - ak) / (bk - ak);
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut pieces = Vec::with_capacity(ts.len());
    let d = b - a;
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = a.offset(&d, 0.5 * (t0 + t1));
        let idx: Vec<usize> = (0..grid.dim())
            .map(|k| grid.axis_index(k, mid[k]))
            .collect();
        pieces.push((grid.linear(&idx), (t1 - t0) * len));
    }
    Ok(pieces)
}

fn check_dim(grid: &Grid, p: &Point) -> Result<()> {
    if p.dim() != grid.dim() {
        return Err(Error::Invalid(format!(
            "{}-dimensional geometry on a {}-dimensional grid",
            p.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// Deposits weight·length of each segment; the result does not depend on
/// `parallel` or on the number of worker threads.
fn rasterize_segments(
    grid: &Grid,
    segments: &[(Point, Point, f64)],
    parallel: bool,
) -> Result<Vec<f64>> {
    let cells = grid.cell_count();
    let work = |chunk: &[(Point, Point, f64)]| -> Result<Vec<f64>> {
        let mut part = vec![0.0; cells];
        for (a, b, w) in chunk {
            for (c, l) in clip_segment(grid, a, b)? {
                part[c] += w * l;
            }
        }
        Ok(part)
    };
    let partials: Vec<Result<Vec<f64>>> = if parallel {
        segments.par_chunks(CHUNK).map(work).collect()
    } else {
        segments.chunks(CHUNK).map(work).collect()
    };
    let mut mass = vec![0.0; cells];
    for part in partials {
        for (m, p) in mass.iter_mut().zip(part?) {
            *m += p;
        }
    }
    Ok(mass)
}

pub fn rasterize_plan(gamma: &Matching, grid: &Grid, parallel: bool) -> Result<GridDensity> {
    let segments: Vec<(Point, Point, f64)> = gamma
        .edges
        .iter()
        .map(|e| (e.source.clone(), e.target.clone(), e.mass))
        .collect();
    let mass = rasterize_segments(grid, &segments, parallel)?;
    Ok(GridDensity {
        grid: grid.clone(),
        mass,
    })
}

/// Total variation |ν| on the grid: segments clipped with weight
/// |density|, atoms into their containing cell, source cells by overlap
/// volume.
pub fn rasterize_vector_measure(
    nu: &StructuredVectorMeasure,
    grid: &Grid,
    parallel: bool,
) -> Result<GridDensity> {
    let segments: Vec<(Point, Point, f64)> = nu
        .segments()
        .iter()
        .map(|s| (s.a.clone(), s.b.clone(), s.density.norm()))
        .collect();
    let mut mass = rasterize_segments(grid, &segments, parallel)?;
    for a in nu.atoms() {
        check_dim(grid, &a.point)?;
        mass[grid.cell_of(&a.point)?] += a.vector.norm();
    }
    if let Some(field) = nu.cells() {
        let src = &field.grid;
        if src.dim() != grid.dim() {
            return Err(Error::Invalid(
                "cell field and grid differ in dimension".into(),
            ));
        }
        let d = grid.dim();
        for k in 0..d {
            if src.domain.lower[k] < grid.domain.lower[k] - 1e-12 * grid.domain.diameter()
                || src.domain.upper[k] > grid.domain.upper[k] + 1e-12 * grid.domain.diameter()
            {
                return Err(Error::OutsideDomain {
                    point: src.domain.upper.coords().to_vec(),
                });
            }
        }
        for (lin, v) in field.vectors.iter().enumerate() {
            let density = v.norm();
            if density == 0.0 {
                continue;
            }
            let (lo, hi) = src.cell_bounds(lin);
            // overlapping target cell range and overlap length per axis
            let ranges: Vec<Vec<(usize, f64)>> = (0..d)
                .map(|k| {
                    let first = grid.axis_index(k, lo[k]);
                    let last = grid.axis_index(k, hi[k]);
                    (first..=last)
                        .filter_map(|i| {
                            let cl = grid.domain.lower[k] + i as f64 * grid.cell_size(k);
                            let ch = cl + grid.cell_size(k);
                            let o = hi[k].min(ch) - lo[k].max(cl);
                            (o > 0.0).then_some((i, o))
                        })
                        .collect()
                })
                .collect();
            if ranges.iter().any(|r| r.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; d];
            'outer: loop {
                let mut vol = density;
                let mut cell = Vec::with_capacity(d);
                for k in 0..d {
                    let (i, o) = ranges[k][idx[k]];
                    cell.push(i);
                    vol *= o;
                }
                mass[grid.linear(&cell)] += vol;
                for k in 0..d {
                    idx[k] += 1;
                    if idx[k] < ranges[k].len() {
                        continue 'outer;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
    }
    Ok(GridDensity {
        grid: grid.clone(),
        mass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Svg,
    Ascii,
}

/// Ten levels from empty to full.
pub const ASCII_RAMP: &[u8; 10] = b" .:-=+*#%@";
/// Pixel size of one svg cell.
const SVG_CELL: usize = 10;

pub fn export(density: &GridDensity, format: ExportFormat) -> Result<Vec<u8>> {
    let g = &density.grid;
    if format != ExportFormat::Csv && g.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "{format:?} export needs a 2-D grid"
        )));
    }
    let max = density.max();
    let level = |m: f64| if max > 0.0 { m / max } else { 0.0 };
    let mut out = String::new();
    match format {
        ExportFormat::Csv => {
            for (lin, m) in density.mass.iter().enumerate() {
                let idx = g.multi(lin);
                let cols: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                out.push_str(&format!("{},{:?}\n", cols.join(","), m));
            }
        }
        ExportFormat::Svg => {
            let (nx, ny) = (g.cells[0], g.cells[1]);
            out.push_str(&format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
                nx * SVG_CELL,
                ny * SVG_CELL,
                nx * SVG_CELL,
                ny * SVG_CELL
            ));
            for j in 0..ny {
                for i in 0..nx {
                    let shade = (255.0 * level(density.mass[g.linear(&[i, j])])).round() as u8;
                    let c = 255 - shade;
                    out.push_str(&format!(
                        "<rect x=\"{}\" y=\"{}\" width=\"{SVG_CELL}\" height=\"{SVG_CELL}\" fill=\"rgb({c},{c},{c})\"/>\n",
                        i * SVG_CELL,
                        (ny - 1 - j) * SVG_CELL
                    ));
                }
            }
            out.push_str("</svg>\n");
        }
        ExportFormat::Ascii => {
            let (nx, ny) = (g.cells[0], g.cells[1]);
            for j in (0..ny).rev() {
                for i in 0..nx {
                    let l =
                        ((10.0 * level(density.mass[g.linear(&[i, j])])).floor() as usize).min(9);
                    out.push(ASCII_RAMP[l] as char);
                }
                out.push('\n');
            }
        }
    }
    Ok(out.into_bytes())
}
