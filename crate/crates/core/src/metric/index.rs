use rayon::prelude::*;

use super::Point;

/// Uniform-grid spatial index over a point cloud for nearest-neighbour
/// distance queries.
///
/// Distances are computed exactly as on the brute-force path and the search
/// only prunes cells that cannot contain a closer point, so results are
/// bit-identical to the double loop.
pub struct GridIndex<'a> {
    points: &'a [Point],
    origin: [f64; 2],
    cell: f64,
    dims: [i64; 2],
    /// CSR layout: points of cell `c` are `order[start[c]..start[c + 1]]`.
    start: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> GridIndex<'a> {
    pub fn new(points: &'a [Point]) -> Self {
        assert!(!points.is_empty(), "cannot index an empty cloud");
        let planar = points[0].dim() == 2;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p.coords[a]);
                hi[a] = hi[a].max(p.coords[a]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]);
        let per_axis = if planar {
            (points.len() as f64).sqrt().ceil()
        } else {
            points.len() as f64
        };
        let cell = if extent > 0.0 { extent / per_axis } else { 1.0 };
        let axis_cells = |a: usize| ((hi[a] - lo[a]) / cell).floor() as i64 + 1;
        let dims = [axis_cells(0), if planar { axis_cells(1) } else { 1 }];

        let mut index = Self {
            points,
            origin: lo,
            cell,
            dims,
            start: Vec::new(),
            order: Vec::new(),
        };
        let n_cells = (dims[0] * dims[1]) as usize;
        let cell_of: Vec<usize> = points
            .iter()
            .map(|p| {
                let [cx, cy] = index.cell_coords(p);
                (cx.clamp(0, dims[0] - 1) * dims[1] + cy.clamp(0, dims[1] - 1)) as usize
            })
            .collect();
        let mut start = vec![0usize; n_cells + 1];
        for &c in &cell_of {
            start[c + 1] += 1;
        }
        for c in 0..n_cells {
            start[c + 1] += start[c];
        }
        let mut fill = start.clone();
        let mut order = vec![0usize; points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        index.start = start;
        index.order = order;
        index
    }

    fn cell_coords(&self, p: &Point) -> [i64; 2] {
        let f = |a: usize| ((p.coords[a] - self.origin[a]) / self.cell).floor() as i64;
        [f(0), if self.dims[1] > 1 { f(1) } else { 0 }]
    }

    fn scan_cell(&self, q: &Point, cx: i64, cy: i64, best: &mut f64) {
        if cx < 0 || cy < 0 || cx >= self.dims[0] || cy >= self.dims[1] {
            return;
        }
        let c = (cx * self.dims[1] + cy) as usize;
        for &i in &self.order[self.start[c]..self.start[c + 1]] {
            let d = q.dist_unchecked(&self.points[i]);
            if d < *best {
                *best = d;
            }
        }
    }

    /// Distance from `q` to the nearest indexed point.
    pub fn nearest(&self, q: &Point) -> f64 {
        let [qx, qy] = self.cell_coords(q);
        let gap = |v: i64, n: i64| {
            if v < 0 {
                -v
            } else if v >= n {
                v - n + 1
            } else {
                0
            }
        };
        let far = |v: i64, n: i64| v.abs().max((v - (n - 1)).abs());
        let r_min = gap(qx, self.dims[0]).max(gap(qy, self.dims[1]));
        let r_max = far(qx, self.dims[0]).max(far(qy, self.dims[1]));
        let mut best = f64::INFINITY;
        for r in r_min..=r_max {
            // every point in ring r is at least (r - 1) cells away
            if r >= 1 && (r - 1) as f64 * self.cell >= best {
                break;
            }
            if r == 0 {
                self.scan_cell(q, qx, qy, &mut best);
                continue;
            }
            let x_lo = (qx - r).max(0);
            let x_hi = (qx + r).min(self.dims[0] - 1);
            for cx in x_lo..=x_hi {
                if cx == qx - r || cx == qx + r {
                    let y_lo = (qy - r).max(0);
                    let y_hi = (qy + r).min(self.dims[1] - 1);
                    for cy in y_lo..=y_hi {
                        self.scan_cell(q, cx, cy, &mut best);
                    }
                } else {
                    self.scan_cell(q, cx, qy - r, &mut best);
                    self.scan_cell(q, cx, qy + r, &mut best);
                }
            }
        }
        best
    }

    /// `max_{a∈A} min_{b∈indexed} d(a, b)`.
    pub fn directed_from(&self, a: &[Point]) -> f64 {
        a.par_iter()
            .map(|p| self.nearest(p))
            .reduce(|| 0.0, f64::max)
    }
}
