//! Deployment-area geometry: square block division, node-to-block mapping,
//! block distance predicates and unit-disk connectivity.
//!
//! The block grid partitions the deployment rectangle into half-open square
//! cells. Everything downstream (slot assignment, interference checks,
//! routing) is built on the primitives here, so the conventions are pinned
//! once and for all:
//!
//! - block cells are half-open: block (r, c) covers
//!   `[c*side, (c+1)*side) x [r*side, (r+1)*side)`, with positions exactly on
//!   the far grid boundary clamped to the last row/column;
//! - radio reachability is strict: two nodes hear each other iff their
//!   distance is strictly less than the transmission range.

use thiserror::Error;

/// A point in the deployment area, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to another position, in meters.
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Identifies one square block of the grid by row and column.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId {
    pub row: usize,
    pub col: usize,
}

impl BlockId {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl std::fmt::Display for BlockId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("position ({x}, {y}) lies outside the grid ({width} x {height} m)")]
    OutOfArea { x: f64, y: f64, width: f64, height: f64 },
    #[error("invalid grid: side {side} m, {rows} rows, {cols} cols")]
    InvalidGrid { side: f64, rows: usize, cols: usize },
}

/// The division of the deployment area into square blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    pub origin: Position,
    /// Block side length in meters.
    pub side: f64,
    pub rows: usize,
    pub cols: usize,
}

impl BlockGrid {
    pub fn new(origin: Position, side: f64, rows: usize, cols: usize) -> Result<Self, GeometryError> {
        if !(side.is_finite() && side > 0.0) || rows == 0 || cols == 0 {
            return Err(GeometryError::InvalidGrid { side, rows, cols });
        }
        Ok(Self { origin, side, rows, cols })
    }

    /// Builds the grid covering a `width x height` rectangle anchored at the
    /// area origin. Enough rows/columns are allocated that `rows*side >=
    /// height` and `cols*side >= width`.
    pub fn covering(width: f64, height: f64, side: f64) -> Result<Self, GeometryError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(side) || !ok(width) || !ok(height) {
            return Err(GeometryError::InvalidGrid { side, rows: 0, cols: 0 });
        }
        let rows = (height / side).ceil() as usize;
        let cols = (width / side).ceil() as usize;
        Self::new(Position::new(0.0, 0.0), side, rows.max(1), cols.max(1))
    }

    /// Total number of blocks.
    pub fn block_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Width of the covered rectangle in meters.
    pub fn covered_width(&self) -> f64 {
        self.cols as f64 * self.side
    }

    /// Height of the covered rectangle in meters.
    pub fn covered_height(&self) -> f64 {
        self.rows as f64 * self.side
    }

    /// Iterates over all blocks in row-major order.
    pub fn blocks(&self) -> impl Iterator<Item = BlockId> + '_ {
        let cols = self.cols;
        (0..self.rows).flat_map(move |r| (0..cols).map(move |c| BlockId::new(r, c)))
    }

    /// Maps a position to the block containing it.
    ///
    /// Blocks are half-open intervals; a position exactly on the far boundary
    /// of the grid clamps to the last row/column so that the partition covers
    /// the closed rectangle.
    pub fn block_of(&self, p: Position) -> Result<BlockId, GeometryError> {
        let rel_x = p.x - self.origin.x;
        let rel_y = p.y - self.origin.y;
        if rel_x < 0.0
            || rel_y < 0.0
            || rel_x > self.covered_width()
            || rel_y > self.covered_height()
        {
            return Err(GeometryError::OutOfArea {
                x: p.x,
                y: p.y,
                width: self.covered_width(),
                height: self.covered_height(),
            });
        }
        let col = ((rel_x / self.side).floor() as usize).min(self.cols - 1);
        let row = ((rel_y / self.side).floor() as usize).min(self.rows - 1);
        Ok(BlockId::new(row, col))
    }

    /// Closed axis-aligned rectangle of a block: (x0, y0, x1, y1).
    pub fn block_rect(&self, b: BlockId) -> (f64, f64, f64, f64) {
        let x0 = self.origin.x + b.col as f64 * self.side;
        let y0 = self.origin.y + b.row as f64 * self.side;
        (x0, y0, x0 + self.side, y0 + self.side)
    }

    /// Minimum Euclidean distance between the closed rectangles of two
    /// blocks. Zero when the blocks touch or coincide.
    pub fn min_block_distance(&self, a: BlockId, b: BlockId) -> f64 {
        let (ax0, ay0, ax1, ay1) = self.block_rect(a);
        let (bx0, by0, bx1, by1) = self.block_rect(b);
        let dx = (bx0 - ax1).max(ax0 - bx1).max(0.0);
        let dy = (by0 - ay1).max(ay0 - by1).max(0.0);
        dx.hypot(dy)
    }

    /// The blocks edge- or corner-adjacent to `b` (8-neighborhood), within
    /// the grid.
    pub fn neighbors(&self, b: BlockId) -> Vec<BlockId> {
        let mut out = Vec::with_capacity(8);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let r = b.row as i64 + dr;
                let c = b.col as i64 + dc;
                if r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols {
                    out.push(BlockId::new(r as usize, c as usize));
                }
            }
        }
        out
    }
}

/// Chebyshev (chessboard) distance between two block ids.
pub fn chebyshev_distance(a: BlockId, b: BlockId) -> usize {
    let dr = a.row.abs_diff(b.row);
    let dc = a.col.abs_diff(b.col);
    dr.max(dc)
}

/// True iff the blocks are edge- or corner-adjacent (8-neighborhood).
pub fn are_adjacent(a: BlockId, b: BlockId) -> bool {
    chebyshev_distance(a, b) == 1
}

/// Unit-disk connectivity over a set of node positions.
///
/// Node `i` and `j` are connected iff `distance(i, j) < range` (strict).
#[derive(Debug, Clone)]
pub struct Connectivity {
    neighbors: Vec<Vec<usize>>,
}

impl Connectivity {
    pub fn build(nodes: &[Position], range: f64) -> Self {
        let n = nodes.len();
        let mut neighbors = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if nodes[i].distance(&nodes[j]) < range {
                    neighbors[i].push(j);
                    neighbors[j].push(i);
                }
            }
        }
        // Ascending ids make downstream tie-breaking deterministic.
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Self { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Neighbor ids of node `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_4x4() -> BlockGrid {
        BlockGrid::covering(800.0, 800.0, 200.0).unwrap()
    }

    #[test]
    fn block_of_floor_division() {
        let g = grid_4x4();
        let b = g.block_of(Position::new(450.0, 120.0)).unwrap();
        assert_eq!(b, BlockId::new(0, 2));
    }

    #[test]
    fn covering_800_by_800_side_200_has_16_blocks() {
        let g = grid_4x4();
        assert_eq!((g.rows, g.cols), (4, 4));
        assert_eq!(g.block_count(), 16);
    }

    #[test]
    fn block_of_half_open_boundary() {
        let g = grid_4x4();
        let b = g.block_of(Position::new(200.0, 0.0)).unwrap();
        assert_eq!(b.col, 1);
        assert_eq!(b.row, 0);
    }

    #[test]
    fn block_of_clamps_far_boundary() {
        let g = grid_4x4();
        let b = g.block_of(Position::new(800.0, 800.0)).unwrap();
        assert_eq!(b, BlockId::new(3, 3));
    }

    #[test]
    fn block_of_rejects_outside_positions() {
        let g = grid_4x4();
        assert!(g.block_of(Position::new(-0.1, 10.0)).is_err());
        assert!(g.block_of(Position::new(10.0, 800.1)).is_err());
    }

    #[test]
    fn chebyshev_basics() {
        assert_eq!(chebyshev_distance(BlockId::new(0, 0), BlockId::new(0, 0)), 0);
        assert_eq!(chebyshev_distance(BlockId::new(0, 0), BlockId::new(1, 1)), 1);
        assert_eq!(chebyshev_distance(BlockId::new(0, 0), BlockId::new(0, 3)), 3);
    }

    #[test]
    fn adjacency_is_eight_neighborhood() {
        assert!(are_adjacent(BlockId::new(0, 0), BlockId::new(0, 1)));
        assert!(are_adjacent(BlockId::new(0, 0), BlockId::new(1, 1)));
        assert!(!are_adjacent(BlockId::new(0, 0), BlockId::new(0, 2)));
        assert!(!are_adjacent(BlockId::new(0, 0), BlockId::new(0, 0)));
    }

    #[test]
    fn min_block_distance_adjacent_is_zero() {
        let g = grid_4x4();
        assert_eq!(g.min_block_distance(BlockId::new(0, 0), BlockId::new(0, 1)), 0.0);
        assert_eq!(g.min_block_distance(BlockId::new(0, 0), BlockId::new(1, 1)), 0.0);
    }

    #[test]
    fn min_block_distance_one_block_gap() {
        let g = grid_4x4();
        assert_eq!(g.min_block_distance(BlockId::new(0, 0), BlockId::new(0, 2)), 200.0);
    }

    /// Independent oracle: minimize distance over a fine lattice of point
    /// pairs sampled from the two closed rectangles.
    fn sampled_min_distance(g: &BlockGrid, a: BlockId, b: BlockId, steps: usize) -> f64 {
        let (ax0, ay0, ax1, ay1) = g.block_rect(a);
        let (bx0, by0, bx1, by1) = g.block_rect(b);
        let lattice = |x0: f64, y0: f64, x1: f64, y1: f64| {
            let mut pts = Vec::new();
            for i in 0..=steps {
                for j in 0..=steps {
                    let fx = i as f64 / steps as f64;
                    let fy = j as f64 / steps as f64;
                    pts.push(Position::new(x0 + fx * (x1 - x0), y0 + fy * (y1 - y0)));
                }
            }
            pts
        };
        let pa = lattice(ax0, ay0, ax1, ay1);
        let pb = lattice(bx0, by0, bx1, by1);
        let mut best = f64::INFINITY;
        for p in &pa {
            for q in &pb {
                best = best.min(p.distance(q));
            }
        }
        best
    }

    #[test]
    fn min_block_distance_diagonal_matches_sampling_oracle() {
        let g = grid_4x4();
        let a = BlockId::new(0, 0);
        let b = BlockId::new(2, 2);
        let expect = 200.0 * 2.0_f64.sqrt();
        let got = g.min_block_distance(a, b);
        assert!((got - expect).abs() < 1e-9, "got {got}");
        let oracle = sampled_min_distance(&g, a, b, 8);
        assert!((got - oracle).abs() < 1e-9, "oracle {oracle} vs {got}");
    }

    #[test]
    fn min_block_distance_matches_sampling_oracle_on_all_4x4_pairs() {
        let g = grid_4x4();
        let blocks: Vec<_> = g.blocks().collect();
        for &a in &blocks {
            for &b in &blocks {
                let got = g.min_block_distance(a, b);
                let oracle = sampled_min_distance(&g, a, b, 4);
                assert!(
                    (got - oracle).abs() < 1e-9,
                    "blocks {a} {b}: {got} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn connectivity_strict_threshold() {
        let nodes = vec![Position::new(0.0, 0.0), Position::new(249.9, 0.0)];
        let conn = Connectivity::build(&nodes, 250.0);
        assert!(conn.connected(0, 1));

        let nodes = vec![Position::new(0.0, 0.0), Position::new(250.0, 0.0)];
        let conn = Connectivity::build(&nodes, 250.0);
        assert!(!conn.connected(0, 1));
    }

    #[test]
    fn connectivity_chain_of_three() {
        let nodes = vec![
            Position::new(0.0, 0.0),
            Position::new(200.0, 0.0),
            Position::new(400.0, 0.0),
        ];
        let conn = Connectivity::build(&nodes, 250.0);
        assert!(conn.connected(0, 1));
        assert!(conn.connected(1, 2));
        assert!(!conn.connected(0, 2));
        assert_eq!(conn.neighbors(1), &[0, 2]);
    }

    #[test]
    fn partition_and_distance_consistency() {
        let g = grid_4x4();
        // Deterministic quasi-random sample of in-area points.
        let mut pts = Vec::new();
        let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
        for _ in 0..200 {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (s >> 11) as f64 / (1u64 << 53) as f64 * 800.0;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let y = (s >> 11) as f64 / (1u64 << 53) as f64 * 800.0;
            pts.push(Position::new(x, y));
        }
        for p in &pts {
            let bp = g.block_of(*p).unwrap();
            for q in &pts {
                let bq = g.block_of(*q).unwrap();
                let lower = g.min_block_distance(bp, bq);
                assert!(
                    lower <= p.distance(q) + 1e-9,
                    "block distance must lower-bound point distance"
                );
                assert!((lower - g.min_block_distance(bq, bp)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn side_equals_range_separates_chebyshev_two() {
        // Any two nodes in blocks with chebyshev >= 2 sit at least one full
        // block side apart, hence out of range when side == range.
        let g = BlockGrid::covering(1000.0, 1000.0, 250.0).unwrap();
        for a in g.blocks() {
            for b in g.blocks() {
                if chebyshev_distance(a, b) >= 2 {
                    assert!(g.min_block_distance(a, b) >= g.side);
                }
            }
        }
    }
}
