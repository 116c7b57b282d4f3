//! One-dimensional sparse operators applied along one axis of a 3D array.
//!
//! Every discrete derivative, average and interpolation on the staggered grid
//! is a composition of these. Keeping them as explicit sparse rows gives an
//! exact transpose for free, which the skew-symmetric advection relies on.

use crate::grid::{Grid, Loc};

#[derive(Clone, Debug)]
pub(crate) struct LineOp {
    pub n_in: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl LineOp {
    fn new(n_in: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        LineOp { n_in, rows }
    }

    pub fn n_out(&self) -> usize {
        self.rows.len()
    }

    /// `out[i] = (in[i] + in[i+1]) / 2`, integer points to half points.
    pub fn periodic_avg_to_half(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| vec![(i, 0.5), ((i + 1) % n, 0.5)]).collect())
    }

    /// `out[i] = (in[i-1] + in[i]) / 2`, half points to integer points.
    pub fn periodic_avg_to_int(n: usize) -> Self {
        Self::new(n, (0..n).map(|i| vec![((i + n - 1) % n, 0.5), (i, 0.5)]).collect())
    }

    /// `out[i] = (in[i+1] - in[i]) / h`, integer points to half points.
    pub fn periodic_diff_to_half(n: usize, h: f64) -> Self {
        Self::new(n, (0..n).map(|i| vec![(i, -1.0 / h), ((i + 1) % n, 1.0 / h)]).collect())
    }

    /// `out[i] = (in[i] - in[i-1]) / h`, half points to integer points.
    pub fn periodic_diff_to_int(n: usize, h: f64) -> Self {
        Self::new(n, (0..n).map(|i| vec![((i + n - 1) % n, -1.0 / h), (i, 1.0 / h)]).collect())
    }

    pub fn periodic_central(n: usize, h: f64) -> Self {
        let w = 0.5 / h;
        Self::new(n, (0..n).map(|i| vec![((i + n - 1) % n, -w), ((i + 1) % n, w)]).collect())
    }

    /// Cell centres (`nc`) to faces (`nc + 1`); plate values by linear extrapolation.
    pub fn wall_avg_to_faces(nc: usize) -> Self {
        let mut rows = Vec::with_capacity(nc + 1);
        rows.push(vec![(0, 1.5), (1, -0.5)]);
        for k in 1..nc {
            rows.push(vec![(k - 1, 0.5), (k, 0.5)]);
        }
        rows.push(vec![(nc - 1, 1.5), (nc - 2, -0.5)]);
        Self::new(nc, rows)
    }

    /// Faces (`nc + 1`) to cell centres (`nc`).
    pub fn wall_avg_to_centres(nc: usize) -> Self {
        Self::new(nc + 1, (0..nc).map(|k| vec![(k, 0.5), (k + 1, 0.5)]).collect())
    }

    /// Faces to centres: `(in[k+1] - in[k]) / h`.
    pub fn wall_diff_to_centres(nc: usize, h: f64) -> Self {
        Self::new(nc + 1, (0..nc).map(|k| vec![(k, -1.0 / h), (k + 1, 1.0 / h)]).collect())
    }

    /// Centres to faces; interior faces only, plate rows are empty (zero flux).
    pub fn wall_diff_to_faces(nc: usize, h: f64) -> Self {
        let mut rows = Vec::with_capacity(nc + 1);
        rows.push(Vec::new());
        for k in 1..nc {
            rows.push(vec![(k - 1, -1.0 / h), (k, 1.0 / h)]);
        }
        rows.push(Vec::new());
        Self::new(nc, rows)
    }

    /// Same-location first derivative on a bounded line: central inside,
    /// second-order one-sided at both ends.
    pub fn wall_central(n: usize, h: f64) -> Self {
        let w = 0.5 / h;
        let mut rows = Vec::with_capacity(n);
        rows.push(vec![(0, -3.0 * w), (1, 4.0 * w), (2, -w)]);
        for k in 1..n - 1 {
            rows.push(vec![(k - 1, -w), (k + 1, w)]);
        }
        rows.push(vec![(n - 3, w), (n - 2, -4.0 * w), (n - 1, 3.0 * w)]);
        Self::new(n, rows)
    }

    /// Apply along `axis` of an array with extents `dims`.
    pub fn apply(&self, data: &[f64], dims: [usize; 3], axis: usize) -> (Vec<f64>, [usize; 3]) {
        debug_assert_eq!(dims[axis], self.n_in);
        let mut out_dims = dims;
        out_dims[axis] = self.n_out();
        let mut out = vec![0.0; out_dims.iter().product()];
        let si = strides(dims);
        let so = strides(out_dims);
        let (a, b) = others(axis);
        for q in 0..dims[b] {
            for p in 0..dims[a] {
                let ib = p * si[a] + q * si[b];
                let ob = p * so[a] + q * so[b];
                for (r, row) in self.rows.iter().enumerate() {
                    let mut s = 0.0;
                    for &(c, w) in row {
                        s += w * data[ib + c * si[axis]];
                    }
                    out[ob + r * so[axis]] = s;
                }
            }
        }
        (out, out_dims)
    }

    /// Apply the transpose along `axis`; `dims[axis]` must equal the output length.
    pub fn apply_transpose(&self, data: &[f64], dims: [usize; 3], axis: usize) -> (Vec<f64>, [usize; 3]) {
        debug_assert_eq!(dims[axis], self.n_out());
        let mut out_dims = dims;
        out_dims[axis] = self.n_in;
        let mut out = vec![0.0; out_dims.iter().product()];
        let si = strides(dims);
        let so = strides(out_dims);
        let (a, b) = others(axis);
        for q in 0..dims[b] {
            for p in 0..dims[a] {
                let ib = p * si[a] + q * si[b];
                let ob = p * so[a] + q * so[b];
                for (r, row) in self.rows.iter().enumerate() {
                    let v = data[ib + r * si[axis]];
                    for &(c, w) in row {
                        out[ob + c * so[axis]] += w * v;
                    }
                }
            }
        }
        (out, out_dims)
    }
}

fn strides(d: [usize; 3]) -> [usize; 3] {
    [1, d[0], d[0] * d[1]]
}

fn others(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Averaging operator that moves samples along `axis` from the placement
/// `from_centred` to the opposite one.
pub(crate) fn avg_op(grid: &Grid, axis: usize, from_centred: bool) -> LineOp {
    match (axis, from_centred) {
        (2, true) => LineOp::wall_avg_to_faces(grid.nz),
        (2, false) => LineOp::wall_avg_to_centres(grid.nz),
        (a, true) => LineOp::periodic_avg_to_int([grid.nx, grid.ny][a]),
        (a, false) => LineOp::periodic_avg_to_half([grid.nx, grid.ny][a]),
    }
}

/// Difference operator from the staggered partner placement onto `to_centred`.
pub(crate) fn diff_op(grid: &Grid, axis: usize, to_centred: bool) -> LineOp {
    let h = grid.spacing(axis);
    match (axis, to_centred) {
        (2, true) => LineOp::wall_diff_to_centres(grid.nz, h),
        (2, false) => LineOp::wall_diff_to_faces(grid.nz, h),
        (a, true) => LineOp::periodic_diff_to_half([grid.nx, grid.ny][a], h),
        (a, false) => LineOp::periodic_diff_to_int([grid.nx, grid.ny][a], h),
    }
}

/// Same-location first derivative along `axis` for a line of `n` samples.
pub(crate) fn central_op(grid: &Grid, axis: usize, n: usize) -> LineOp {
    let h = grid.spacing(axis);
    if axis == 2 {
        LineOp::wall_central(n, h)
    } else {
        LineOp::periodic_central(n, h)
    }
}

/// Interpolate samples stored at placement `from` onto placement `to`.
pub(crate) fn shift_placement(grid: &Grid, data: &[f64], from: [bool; 3], to: [bool; 3]) -> Vec<f64> {
    let mut dims = [grid.nx, grid.ny, if from[2] { grid.nz } else { grid.nz + 1 }];
    let mut cur: Option<Vec<f64>> = None;
    for axis in 0..3 {
        if from[axis] != to[axis] {
            let op = avg_op(grid, axis, from[axis]);
            let src = cur.as_deref().unwrap_or(data);
            let (next, d) = op.apply(src, dims, axis);
            dims = d;
            cur = Some(next);
        }
    }
    cur.unwrap_or_else(|| data.to_vec())
}

pub(crate) fn shift(grid: &Grid, data: &[f64], from: Loc, to: Loc) -> Vec<f64> {
    shift_placement(grid, data, from.centred(), to.centred())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn transpose_is_adjoint() {
        let dims = [4, 5, 6];
        let n: usize = dims.iter().product();
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        for axis in 0..3 {
            let op = if axis == 2 { LineOp::wall_avg_to_faces(6) } else { LineOp::periodic_central(dims[axis], 0.3) };
            let (ax, od) = op.apply(&x, dims, axis);
            let y: Vec<f64> = (0..ax.len()).map(|i| ((i * 13 % 7) as f64).cos()).collect();
            let (aty, back) = op.apply_transpose(&y, od, axis);
            assert_eq!(back, dims);
            assert!((dot(&ax, &y) - dot(&x, &aty)).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_derivative_exact_on_quadratics() {
        let n = 7;
        let h = 0.1;
        let f: Vec<f64> = (0..n).map(|k| (k as f64 * h).powi(2) + 3.0).collect();
        let (d, _) = LineOp::wall_central(n, h).apply(&f, [1, 1, n], 2);
        for (k, v) in d.iter().enumerate() {
            assert!((v - 2.0 * k as f64 * h).abs() < 1e-12);
        }
    }
}
