//! User-supplied surfaces as sampled grids: a plain-text tensor-grid format
//! with Catmull-Rom interpolation behind the standard oracle interface.
//!
//! Format (`#` starts a comment line):
//!
//! ```text
//! n k d1 ... dk
//! u1 ... uk  f1 ... fn  [xi1 ... xin]
//! ...                       (d1*...*dk rows, row-major over the grid)
//! ```
//!
//! `n` is the ambient dimension, `k = n - 1` the parameter dimension, and
//! `d1 ... dk` the per-axis sample counts (at least 4 each). Parameter values
//! must form a uniform tensor grid. Normal columns are optional; without them
//! the unit normal comes from the interpolated jacobian, oriented so that
//! `det [df | ξ] > 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{LieError, Result};
use crate::legendre::{ImmersionOracle, MapFn};

#[derive(Debug, Clone)]
struct GridData {
    axes: Vec<Vec<f64>>,
    /// Row-major node values.
    values: Vec<DVector<f64>>,
    ambient: usize,
}

impl GridData {
    fn strides(&self) -> Vec<usize> {
        let k = self.axes.len();
        let mut s = vec![1usize; k];
        for i in (0..k.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.axes[i + 1].len();
        }
        s
    }

    /// Separable Catmull-Rom interpolation (clamped at the edges).
    fn interpolate(&self, b: &[f64]) -> DVector<f64> {
        let k = self.axes.len();
        let mut cells = Vec::with_capacity(k);
        let mut weights = Vec::with_capacity(k);
        for (axis, x) in b.iter().enumerate() {
            let nodes = &self.axes[axis];
            let h = nodes[1] - nodes[0];
            let mut cell = ((x - nodes[0]) / h).floor() as i64;
            cell = cell.clamp(0, nodes.len() as i64 - 2);
            let t = (x - nodes[cell as usize]) / h;
            cells.push(cell);
            weights.push(catmull_rom_weights(t));
        }
        let strides = self.strides();
        let mut out = DVector::zeros(self.ambient);
        let mut stencil = vec![0usize; k];
        loop {
            let mut w = 1.0;
            let mut flat = 0usize;
            for axis in 0..k {
                let nodes_len = self.axes[axis].len() as i64;
                let node = (cells[axis] - 1 + stencil[axis] as i64).clamp(0, nodes_len - 1);
                w *= weights[axis][stencil[axis]];
                flat += node as usize * strides[axis];
            }
            out += &self.values[flat] * w;
            // Advance the 4^k stencil counter.
            let mut axis = 0;
            loop {
                if axis == k {
                    return out;
                }
                stencil[axis] += 1;
                if stencil[axis] < 4 {
                    break;
                }
                stencil[axis] = 0;
                axis += 1;
            }
        }
    }
}

fn catmull_rom_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// Parses the grid file and wraps it as an immersion oracle. Works on the
/// interior of the sampled box (one cell of margin for the cubic stencil).
pub fn parse_grid_surface(text: &str) -> Result<ImmersionOracle> {
    let mut rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = rows
        .next()
        .ok_or_else(|| LieError::InvalidArgument("empty grid file".into()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| LieError::InvalidArgument(format!("bad header token '{t}'")))
        })
        .collect::<Result<_>>()?;
    if head.len() < 3 {
        return Err(LieError::InvalidArgument(
            "header needs: n k d1 ... dk".into(),
        ));
    }
    let n = head[0];
    let k = head[1];
    let dims = &head[2..];
    if dims.len() != k {
        return Err(LieError::InvalidArgument(format!(
            "header declares k = {k} but {} grid dimensions",
            dims.len()
        )));
    }
    if k + 1 != n {
        return Err(LieError::InvalidArgument(format!(
            "grid surfaces must have codimension one (k = n - 1), got n = {n}, k = {k}"
        )));
    }
    if dims.iter().any(|&d| d < 4) {
        return Err(LieError::InvalidArgument(
            "each grid axis needs at least 4 samples".into(),
        ));
    }
    let total: usize = dims.iter().product();

    let mut params: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut positions: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut normals: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut with_normals: Option<bool> = None;
    for (i, line) in rows.enumerate() {
        if i >= total {
            return Err(LieError::InvalidArgument(format!(
                "more than {total} data rows"
            )));
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| LieError::InvalidArgument(format!("bad number '{t}' in row {i}")))
            })
            .collect::<Result<_>>()?;
        let has_normals = match vals.len() {
            l if l == k + n => false,
            l if l == k + 2 * n => true,
            l => {
                return Err(LieError::InvalidArgument(format!(
                    "row {i} has {l} columns, expected {} or {}",
                    k + n,
                    k + 2 * n
                )))
            }
        };
        if *with_normals.get_or_insert(has_normals) != has_normals {
            return Err(LieError::InvalidArgument(
                "rows mix normal and normal-free layouts".into(),
            ));
        }
        params.push(vals[..k].to_vec());
        positions.push(DVector::from_vec(vals[k..k + n].to_vec()));
        if has_normals {
            normals.push(DVector::from_vec(vals[k + n..].to_vec()));
        }
    }
    if params.len() != total {
        return Err(LieError::InvalidArgument(format!(
            "expected {total} data rows, found {}",
            params.len()
        )));
    }

    // Recover the per-axis node values and check uniformity (row-major).
    let mut strides = vec![1usize; k];
    for i in (0..k - 1).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(k);
    for axis in 0..k {
        let mut nodes = Vec::with_capacity(dims[axis]);
        for j in 0..dims[axis] {
            nodes.push(params[j * strides[axis]][axis]);
        }
        let h = nodes[1] - nodes[0];
        if h <= 0.0 {
            return Err(LieError::InvalidArgument(format!(
                "axis {axis} is not increasing"
            )));
        }
        for w in nodes.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs() {
                return Err(LieError::InvalidArgument(format!(
                    "axis {axis} is not uniformly spaced"
                )));
            }
        }
        axes.push(nodes);
    }
    for (i, p) in params.iter().enumerate() {
        for axis in 0..k {
            let expect = axes[axis][(i / strides[axis]) % dims[axis]];
            if (p[axis] - expect).abs() > 1e-9 * (1.0 + expect.abs()) {
                return Err(LieError::InvalidArgument(format!(
                    "row {i} breaks the row-major tensor grid layout"
                )));
            }
        }
    }

    let data = Arc::new(GridData {
        axes: axes.clone(),
        values: positions,
        ambient: n,
    });
    let normal_data = if normals.is_empty() {
        None
    } else {
        Some(Arc::new(GridData {
            axes: axes.clone(),
            values: normals,
            ambient: n,
        }))
    };

    let domain: Vec<(f64, f64)> = axes
        .iter()
        .map(|nodes| {
            let h = nodes[1] - nodes[0];
            (nodes[0] + h, nodes[nodes.len() - 1] - h)
        })
        .collect();
    let cell = axes
        .iter()
        .map(|nodes| nodes[1] - nodes[0])
        .fold(f64::INFINITY, f64::min);

    let d = data.clone();
    let eval: MapFn = Arc::new(move |b: &[f64]| Ok(d.interpolate(b)));
    let fd_step = cell / 8.0;

    let normal: MapFn = match normal_data {
        Some(nd) => Arc::new(move |b: &[f64]| Ok(nd.interpolate(b))),
        None => {
            let d = data.clone();
            Arc::new(move |b: &[f64]| {
                let eval = |p: &[f64]| -> Result<DVector<f64>> { Ok(d.interpolate(p)) };
                let jac = crate::diff::fd_jacobian(&eval, b, fd_step)?;
                // The normal line is the complement of the tangent columns:
                // project the best coordinate axis off the column space. The
                // line is unique in codimension one, so the axis choice only
                // affects the sign, which the orientation fix pins down.
                let svd = jac.clone().svd(true, false);
                let u = svd.u.expect("requested U");
                let dim = jac.nrows();
                let mut xi = DVector::zeros(dim);
                let mut best = 0.0;
                for i in 0..dim {
                    let mut w = DVector::zeros(dim);
                    w[i] = 1.0;
                    let w = &w - &u * (u.transpose() * &w);
                    let n = w.norm();
                    if n > best {
                        best = n;
                        xi = w / n;
                    }
                }
                if best < 1e-10 {
                    return Err(LieError::NotAnImmersion { smallest_sv: best });
                }
                // Orient so that [df | xi] is positively oriented.
                let mut full = DMatrix::zeros(dim, dim);
                full.view_mut((0, 0), (dim, dim - 1)).copy_from(&jac);
                full.set_column(dim - 1, &xi);
                if full.determinant() < 0.0 {
                    Ok(-xi)
                } else {
                    Ok(xi)
                }
            })
        }
    };

    Ok(ImmersionOracle::new(eval, domain)
        .with_fd_step(fd_step)
        .with_normal(normal))
}
