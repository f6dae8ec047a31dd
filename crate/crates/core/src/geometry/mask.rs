use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_positive, GeometryError};

/// Planar domain made of closed `h x h` cells on a `width x height` grid.
///
/// Cells are stored row-major with row 0 at the top. Cell `(col, row)` has
/// midpoint `((col + 1/2) h, (height - row - 1/2) h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mask2D {
    width: usize,
    height: usize,
    spacing: f64,
    cells: Vec<bool>,
}

#[derive(Debug, thiserror::Error)]
pub enum MaskError {
    #[error("cannot read mask file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-binary cell {value:?} at line {line}, column {column}")]
    NonBinaryCell {
        line: usize,
        column: usize,
        value: String,
    },
    #[error("line {line}: expected {expected} cells, found {found}")]
    RowWidth {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("empty mask: no occupied cell")]
    Empty,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl Mask2D {
    pub fn new(
        width: usize,
        height: usize,
        spacing: f64,
        cells: Vec<bool>,
    ) -> Result<Self, GeometryError> {
        check_positive("grid spacing", spacing)?;
        if cells.len() != width * height {
            return Err(GeometryError::MaskShape {
                expected: width * height,
                got: cells.len(),
            });
        }
        if !cells.iter().any(|&c| c) {
            return Err(GeometryError::EmptyMask);
        }
        Ok(Self {
            width,
            height,
            spacing,
            cells,
        })
    }

    /// Fully occupied `width x height` rectangle.
    pub fn filled(width: usize, height: usize, spacing: f64) -> Result<Self, GeometryError> {
        Self::new(width, height, spacing, vec![true; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Occupancy lookup; anything off the grid is exterior.
    pub fn is_occupied(&self, col: isize, row: isize) -> bool {
        if col < 0 || row < 0 || col as usize >= self.width || row as usize >= self.height {
            return false;
        }
        self.cells[row as usize * self.width + col as usize]
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn midpoint(&self, col: usize, row: usize) -> [f64; 2] {
        let h = self.spacing;
        [
            (col as f64 + 0.5) * h,
            (self.height as f64 - row as f64 - 0.5) * h,
        ]
    }

    /// Occupied cells as `(col, row)` in storage order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn centroid(&self) -> [f64; 2] {
        let (mut sx, mut sy) = (0.0, 0.0);
        for (c, r) in self.occupied() {
            let [x, y] = self.midpoint(c, r);
            sx += x;
            sy += y;
        }
        let n = self.occupied_count() as f64;
        [sx / n, sy / n]
    }

    /// Midpoint-rule `∫ |x - p|^2`, each cell weighted by `h^2`.
    pub fn second_moment_about(&self, p: [f64; 2]) -> f64 {
        let area = self.spacing * self.spacing;
        self.occupied()
            .map(|(c, r)| {
                let [x, y] = self.midpoint(c, r);
                ((x - p[0]).powi(2) + (y - p[1]).powi(2)) * area
            })
            .sum()
    }

    pub fn with_spacing(&self, spacing: f64) -> Result<Self, GeometryError> {
        check_positive("grid spacing", spacing)?;
        Ok(Self {
            spacing,
            ..self.clone()
        })
    }

    /// Split every cell into four; the covered region is unchanged.
    pub fn split_cells(&self) -> Self {
        let (w, h) = (2 * self.width, 2 * self.height);
        let mut cells = vec![false; w * h];
        for (c, r) in self.occupied() {
            for (dc, dr) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                cells[(2 * r + dr) * w + 2 * c + dc] = true;
            }
        }
        Self {
            width: w,
            height: h,
            spacing: self.spacing / 2.0,
            cells,
        }
    }

    /// Nearest-cell resampling to `long_side` cells along the longer axis.
    /// Integer factors reproduce repeated cell splitting exactly.
    pub fn resample(&self, long_side: usize) -> Result<Self, GeometryError> {
        let old_long = self.width.max(self.height);
        let factor = long_side as f64 / old_long as f64;
        let w = ((self.width as f64 * factor).round() as usize).max(1);
        let h = ((self.height as f64 * factor).round() as usize).max(1);
        let spacing = self.spacing * old_long as f64 / long_side as f64;
        let mut cells = vec![false; w * h];
        for r in 0..h {
            let sr = (((r as f64 + 0.5) / factor) as usize).min(self.height - 1);
            for c in 0..w {
                let sc = (((c as f64 + 0.5) / factor) as usize).min(self.width - 1);
                cells[r * w + c] = self.cells[sr * self.width + sc];
            }
        }
        Self::new(w, h, spacing, cells)
    }

    /// Halve the spacing of the cell-centred finite-difference grid.
    ///
    /// The result is `(2W+1) x (2H+1)` with spacing `h/2`. Old midpoints
    /// land on odd indices; a new cell is occupied when it lies within one
    /// old cell width (sup norm) of an occupied old midpoint, which keeps
    /// the region bounded by the first exterior nodes fixed.
    pub fn refine_nodes(&self) -> Self {
        let (w, h) = (2 * self.width + 1, 2 * self.height + 1);
        // old indices whose midpoint is within one old cell of new index i
        let parents = |i: usize, n: usize| -> Vec<usize> {
            let cand = if i % 2 == 1 {
                vec![(i - 1) / 2]
            } else {
                let mut v = Vec::new();
                if i >= 2 {
                    v.push(i / 2 - 1);
                }
                v.push(i / 2);
                v
            };
            cand.into_iter().filter(|&c| c < n).collect()
        };
        let mut cells = vec![false; w * h];
        for r in 0..h {
            let rows = parents(r, self.height);
            for c in 0..w {
                let cols = parents(c, self.width);
                cells[r * w + c] = rows
                    .iter()
                    .any(|&pr| cols.iter().any(|&pc| self.cells[pr * self.width + pc]));
            }
        }
        Self {
            width: w,
            height: h,
            spacing: self.spacing / 2.0,
            cells,
        }
    }

    /// Serialize in the `MASK2D W H h` text format.
    pub fn to_text(&self) -> String {
        let mut out = format!("MASK2D {} {} {}\n", self.width, self.height, self.spacing);
        for row in self.cells.chunks(self.width) {
            let line: Vec<&str> = row.iter().map(|&c| if c { "1" } else { "0" }).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

pub fn parse_mask(text: &str) -> Result<Mask2D, MaskError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| MaskError::MalformedHeader("file is empty".into()))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let [tag, w, h, s] = tokens[..] else {
        return Err(MaskError::MalformedHeader(format!(
            "expected `MASK2D W H h`, got {header:?}"
        )));
    };
    if tag != "MASK2D" {
        return Err(MaskError::MalformedHeader(format!("unknown tag {tag:?}")));
    }
    let parse_dim = |t: &str| {
        t.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| MaskError::MalformedHeader(format!("bad grid dimension {t:?}")))
    };
    let width = parse_dim(w)?;
    let height = parse_dim(h)?;
    let spacing: f64 = s
        .parse()
        .map_err(|_| MaskError::MalformedHeader(format!("bad spacing {s:?}")))?;

    let mut cells = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut found = 0;
        for (col, tok) in line.split_whitespace().enumerate() {
            let v = match tok {
                "0" => false,
                "1" => true,
                other => {
                    return Err(MaskError::NonBinaryCell {
                        line: lineno,
                        column: col + 1,
                        value: other.to_string(),
                    })
                }
            };
            cells.push(v);
            found += 1;
        }
        if found != width {
            return Err(MaskError::RowWidth {
                line: lineno,
                expected: width,
                found,
            });
        }
        rows += 1;
    }
    if rows != height {
        return Err(MaskError::RowCount {
            expected: height,
            found: rows,
        });
    }
    Mask2D::new(width, height, spacing, cells).map_err(|e| match e {
        GeometryError::EmptyMask => MaskError::Empty,
        other => MaskError::Geometry(other),
    })
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask2D, MaskError> {
    parse_mask(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    #[test]
    fn parses_small_masks() {
        let m = parse_mask("MASK2D 2 2 0.5\n1 1\n1 1\n").unwrap();
        assert_eq!(DomainSpec::new_mask(m).volume(), 1.0);

        let l = parse_mask("MASK2D 3 3 1\n1 1 0\n1 1 1\n1 1 1\n").unwrap();
        assert_eq!(DomainSpec::new_mask(l.clone()).volume(), 8.0);
        // row 1 is the top row
        assert!(!l.is_occupied(2, 0));
        assert!(l.is_occupied(2, 2));
        assert_eq!(l.midpoint(2, 0), [2.5, 2.5]);
    }

    #[test]
    fn parse_errors_are_distinct() {
        assert!(matches!(
            parse_mask("MASK2D 2 1 1\n1 2\n"),
            Err(MaskError::NonBinaryCell { line: 2, column: 2, ref value }) if value == "2"
        ));
        assert!(matches!(
            parse_mask("MASK 2 1 1\n1 1\n"),
            Err(MaskError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_mask("MASK2D 2 1\n1 1\n"),
            Err(MaskError::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_mask("MASK2D 2 1 -1\n1 1\n"),
            Err(MaskError::Geometry(_))
        ));
        assert!(matches!(parse_mask("MASK2D 2 1 1\n0 0\n"), Err(MaskError::Empty)));
        assert!(matches!(
            parse_mask("MASK2D 2 2 1\n1 1\n"),
            Err(MaskError::RowCount { expected: 2, found: 1 })
        ));
        assert!(matches!(
            parse_mask("MASK2D 2 1 1\n1 1 1\n"),
            Err(MaskError::RowWidth { .. })
        ));
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        for text in [
            "MASK2D 3 2 0.25\n0 1 1\n1 1 0\n",
            "MASK2D 1 1 1\n1\n",
            "MASK2D 4 1 0.1\n1 0 0 1\n",
        ] {
            assert_eq!(parse_mask(text).unwrap().to_text(), text);
        }
    }

    #[test]
    fn split_cells_geometry() {
        let m = parse_mask("MASK2D 2 1 1\n1 0\n").unwrap();
        let f = m.split_cells();
        assert_eq!((f.width(), f.height(), f.spacing()), (4, 2, 0.5));
        assert_eq!(f.occupied_count(), 4);
        assert_eq!(m.centroid(), f.centroid());
    }

    #[test]
    fn resampling() {
        let m = parse_mask("MASK2D 3 2 0.5\n1 1 0\n0 1 1\n").unwrap();
        let r = m.resample(12).unwrap();
        assert_eq!((r.width(), r.height(), r.spacing()), (12, 8, 0.125));
        assert_eq!(r, m.split_cells().split_cells());
        assert_eq!(m.resample(3).unwrap(), m);
    }

    #[test]
    fn node_refinement() {
        let sq = Mask2D::filled(3, 3, 0.25).unwrap();
        let f = sq.refine_nodes();
        assert_eq!((f.width(), f.height(), f.spacing()), (7, 7, 0.125));
        assert_eq!(f.occupied_count(), 49);

        // single cell: the 3x3 block around it
        let one = Mask2D::new(3, 3, 1.0, vec![false, false, false, false, true, false, false, false, false]).unwrap();
        let f = one.refine_nodes();
        assert_eq!(f.occupied_count(), 9);
        for (c, r) in f.occupied() {
            assert!((2..=4).contains(&c) && (2..=4).contains(&r));
        }
    }
}
