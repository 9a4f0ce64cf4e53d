//! OBJ mesh assembly for Euclidean projections of generated Legendre maps.
//!
//! Projection-singular samples are skipped; faces keep counterclockwise
//! winding and wrap around periodic chart axes so closed surfaces come out
//! closed. Vertex order is deterministic (row-major grid).

use liesphere::zoo::Generated;
use liesphere::{
    euclidean_projection, spherical_projection, stereographic_inv, ImmersionOracle, LegendreMap,
    LieVector, ProjectionFrame, SphereElement,
};
use nalgebra::DVector;

pub enum MeshError {
    Usage(String),
    Numerical(String),
    Empty(String),
}

pub struct MeshOutput {
    pub obj_text: String,
    pub vertices: usize,
    pub faces: usize,
    pub skipped: usize,
}

/// Narrows slice axes to zero-width boxes so only two parameters stay free.
fn sliced(map: &LegendreMap, slices: &[(usize, f64)]) -> Result<LegendreMap, MeshError> {
    if slices.is_empty() {
        return Ok(map.clone());
    }
    let mut domain = map.domain().to_vec();
    for (axis, value) in slices {
        if *axis >= domain.len() {
            return Err(MeshError::Usage(format!(
                "slice axis {axis} out of range (map has {} parameters)",
                domain.len()
            )));
        }
        domain[*axis] = (*value, *value);
    }
    map.restricted(domain)
        .map_err(|e| MeshError::Usage(e.to_string()))
}

fn parse_frame(map: &LegendreMap, frame: &str) -> Result<ProjectionFrame, MeshError> {
    match frame {
        "standard" => Ok(ProjectionFrame::Standard),
        "pole-center" => {
            // Put the point at infinity on the first line point at the chart
            // center: the projection develops a singular locus there.
            let (y1, _) = map
                .line_reps(&map.center())
                .map_err(|e| MeshError::Numerical(e.to_string()))?;
            ProjectionFrame::pole_at(
                &LieVector::new(y1.iter().cloned().collect::<Vec<_>>())
                    .map_err(|e| MeshError::Numerical(e.to_string()))?,
            )
            .map_err(|e| MeshError::Numerical(e.to_string()))
        }
        other => match other.split_once(':') {
            Some(("random", seed)) => {
                let seed: u64 = seed
                    .parse()
                    .map_err(|e| MeshError::Usage(format!("frame seed: {e}")))?;
                Ok(ProjectionFrame::Transformed(
                    liesphere::random_lie_transform(seed, map.chart_dim(), 0.5),
                ))
            }
            _ => Err(MeshError::Usage(format!(
                "unknown frame '{other}' (expected standard, pole-center, or random:SEED)"
            ))),
        },
    }
}

pub fn build_mesh(
    generated: &Generated,
    resolution: (usize, usize),
    frame: &str,
    slices: &[(usize, f64)],
    flatten: bool,
) -> Result<MeshOutput, MeshError> {
    let map = generated
        .legendre_map()
        .map_err(|e| MeshError::Numerical(e.to_string()))?;
    let map = sliced(&map, slices)?;
    let free_axes: Vec<usize> = map
        .domain()
        .iter()
        .enumerate()
        .filter(|(_, (lo, hi))| hi > lo)
        .map(|(i, _)| i)
        .collect();
    if free_axes.len() != 2 {
        return Err(MeshError::Usage(format!(
            "mesh export needs exactly two free parameters; map has {} (use --slice)",
            free_axes.len()
        )));
    }

    let oracle: ImmersionOracle = if flatten {
        let spherical =
            spherical_projection(&map).map_err(|e| MeshError::Numerical(e.to_string()))?;
        let inner = spherical.clone();
        let eval: liesphere::MapFn = std::sync::Arc::new(move |b: &[f64]| {
            let x = inner.eval(b)?;
            let unit = &x / x.norm();
            match stereographic_inv(&unit)? {
                SphereElement::Point(u) => Ok(u),
                _ => Err(liesphere::LieError::ProjectionSingular { param: b.to_vec() }),
            }
        });
        ImmersionOracle::new(eval, map.domain().to_vec()).with_fd_step(map.fd_step())
    } else {
        let frame = parse_frame(&map, frame)?;
        euclidean_projection(&map, &frame).map_err(|e| MeshError::Numerical(e.to_string()))?
    };

    let (rows, cols) = resolution;
    let (axis_u, axis_v) = (free_axes[0], free_axes[1]);
    let wrap_u = map.periodic_axes()[axis_u];
    let wrap_v = map.periodic_axes()[axis_v];
    let (lo_u, hi_u) = map.domain()[axis_u];
    let (lo_v, hi_v) = map.domain()[axis_v];
    let center = map.center();

    let mut positions: Vec<Option<(DVector<f64>, DVector<f64>)>> = Vec::with_capacity(rows * cols);
    let mut dropped_coords = 0usize;
    for i in 0..rows {
        for j in 0..cols {
            let tu = if wrap_u {
                i as f64 / rows as f64
            } else {
                i as f64 / (rows - 1) as f64
            };
            let tv = if wrap_v {
                j as f64 / cols as f64
            } else {
                j as f64 / (cols - 1) as f64
            };
            let mut b = center.clone();
            b[axis_u] = lo_u + tu * (hi_u - lo_u);
            b[axis_v] = lo_v + tv * (hi_v - lo_v);
            let entry = (|| -> liesphere::Result<(DVector<f64>, DVector<f64>)> {
                let x = oracle.eval(&b)?;
                if x.len() > 3 {
                    dropped_coords = x.len() - 3;
                }
                // Vertex normal from the cross product of the partials of the
                // first three coordinates.
                let oracle3 = oracle.clone();
                let eval3 = move |p: &[f64]| -> liesphere::Result<DVector<f64>> {
                    let v = oracle3.eval(p)?;
                    Ok(DVector::from_vec(vec![v[0], v[1], v[2]]))
                };
                let jac = liesphere::diff::fd_jacobian(&eval3, &b, map.fd_step())?;
                let du = jac.column(axis_u);
                let dv = jac.column(axis_v);
                let mut n = DVector::from_vec(vec![
                    du[1] * dv[2] - du[2] * dv[1],
                    du[2] * dv[0] - du[0] * dv[2],
                    du[0] * dv[1] - du[1] * dv[0],
                ]);
                let norm = n.norm();
                if norm > 1e-12 {
                    n /= norm;
                }
                Ok((DVector::from_vec(vec![x[0], x[1], x[2]]), n))
            })();
            positions.push(entry.ok());
        }
    }

    // Compact vertex indexing over the valid samples.
    let mut index = vec![0usize; rows * cols];
    let mut obj = String::new();
    obj.push_str("# liesphere mesh export\n");
    let mut vertices = 0usize;
    for (flat, entry) in positions.iter().enumerate() {
        if let Some((p, n)) = entry {
            vertices += 1;
            index[flat] = vertices; // 1-based OBJ indices
            obj.push_str(&format!("v {:.9} {:.9} {:.9}\n", p[0], p[1], p[2]));
            obj.push_str(&format!("vn {:.9} {:.9} {:.9}\n", n[0], n[1], n[2]));
        }
    }
    if vertices == 0 {
        return Err(MeshError::Empty(
            "projection is singular on the entire grid".into(),
        ));
    }

    let cells_u = if wrap_u { rows } else { rows - 1 };
    let cells_v = if wrap_v { cols } else { cols - 1 };
    let mut faces = 0usize;
    let mut skipped = 0usize;
    for i in 0..cells_u {
        for j in 0..cells_v {
            let i1 = (i + 1) % rows;
            let j1 = (j + 1) % cols;
            let corner = [i * cols + j, i1 * cols + j, i1 * cols + j1, i * cols + j1];
            if corner.iter().all(|&c| positions[c].is_some()) {
                faces += 1;
                let ids: Vec<String> = corner
                    .iter()
                    .map(|&c| format!("{0}//{0}", index[c]))
                    .collect();
                obj.push_str(&format!("f {}\n", ids.join(" ")));
            } else {
                skipped += 1;
            }
        }
    }
    if dropped_coords > 0 {
        obj.push_str(&format!(
            "# note: {dropped_coords} trailing coordinates dropped orthographically\n"
        ));
    }
    Ok(MeshOutput {
        obj_text: obj,
        vertices,
        faces,
        skipped,
    })
}
