//! Python bindings for the liesphere core: quadric encodings, oriented
//! contact, Lie transformations, curvature spheres of the named generators,
//! and the full analysis pipeline (returned as a JSON report string).

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use liesphere::zoo::build_generator;
use liesphere::{
    curvature_spheres, decode, encode, lie_inner, on_quadric, oriented_contact_lie, run_analysis,
    Criterion, DupinSettings, LieTransform as CoreTransform, LieVector, SphereElement,
    DEFAULT_CLUSTER_TOL,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn vector(coords: Vec<f64>) -> PyResult<LieVector> {
    LieVector::new(coords).map_err(err)
}

/// Quadric coordinates of a point sphere.
#[pyfunction]
fn encode_point(u: Vec<f64>) -> PyResult<Vec<f64>> {
    let n = u.len();
    let x = encode(&SphereElement::point(u), n).map_err(err)?;
    Ok(x.coords().iter().cloned().collect())
}

/// Quadric coordinates of an oriented sphere (positive radius = inward
/// normal orientation).
#[pyfunction]
fn encode_sphere(center: Vec<f64>, radius: f64) -> PyResult<Vec<f64>> {
    let n = center.len();
    let x = encode(&SphereElement::sphere(center, radius), n).map_err(err)?;
    Ok(x.coords().iter().cloned().collect())
}

/// Quadric coordinates of an oriented plane `{u · N = h}`.
#[pyfunction]
fn encode_plane(normal: Vec<f64>, offset: f64) -> PyResult<Vec<f64>> {
    let n = normal.len();
    let x = encode(&SphereElement::plane(normal, offset), n).map_err(err)?;
    Ok(x.coords().iter().cloned().collect())
}

/// Quadric coordinates of the point at infinity of `R^n ∪ {∞}`.
#[pyfunction]
fn encode_infinity(dim: usize) -> PyResult<Vec<f64>> {
    let x = encode(&SphereElement::Infinity { dim }, dim).map_err(err)?;
    Ok(x.coords().iter().cloned().collect())
}

/// Decodes quadric coordinates to a dict with a `kind` key and the element
/// data (`point`, `center`/`radius`, `normal`/`offset`).
#[pyfunction]
#[pyo3(signature = (coords, tol = 1e-8))]
fn decode_coords<'py>(
    py: Python<'py>,
    coords: Vec<f64>,
    tol: f64,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let e = decode(&vector(coords)?, tol).map_err(err)?;
    let dict = pyo3::types::PyDict::new(py);
    match e {
        SphereElement::Point(u) => {
            dict.set_item("kind", "point")?;
            dict.set_item("point", u.iter().cloned().collect::<Vec<f64>>())?;
        }
        SphereElement::Infinity { dim } => {
            dict.set_item("kind", "infinity")?;
            dict.set_item("dim", dim)?;
        }
        SphereElement::Sphere { center, radius } => {
            dict.set_item("kind", "sphere")?;
            dict.set_item("center", center.iter().cloned().collect::<Vec<f64>>())?;
            dict.set_item("radius", radius)?;
        }
        SphereElement::Plane { normal, offset } => {
            dict.set_item("kind", "plane")?;
            dict.set_item("normal", normal.iter().cloned().collect::<Vec<f64>>())?;
            dict.set_item("offset", offset)?;
        }
    }
    Ok(dict)
}

/// The signature-(n+1, 2) inner product.
#[pyfunction]
fn inner(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    lie_inner(&vector(x)?, &vector(y)?).map_err(err)
}

/// Quadric membership predicate.
#[pyfunction]
#[pyo3(signature = (x, tol = 1e-8))]
fn is_on_quadric(x: Vec<f64>, tol: f64) -> PyResult<bool> {
    on_quadric(&vector(x)?, tol).map_err(err)
}

/// Oriented contact of two quadric points.
#[pyfunction]
#[pyo3(signature = (x, y, tol = 1e-9))]
fn oriented_contact(x: Vec<f64>, y: Vec<f64>, tol: f64) -> PyResult<bool> {
    oriented_contact_lie(&vector(x)?, &vector(y)?, tol).map_err(err)
}

/// A Lie sphere transformation (an O(n+1, 2) matrix acting projectively).
#[pyclass]
struct LieTransform {
    inner: CoreTransform,
}

#[pymethods]
impl LieTransform {
    /// Deterministic random group element for chart dimension `n`.
    #[staticmethod]
    #[pyo3(signature = (seed, n, scale = 0.5))]
    fn random(seed: u64, n: usize, scale: f64) -> Self {
        Self {
            inner: liesphere::random_lie_transform(seed, n, scale),
        }
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        Self {
            inner: CoreTransform::identity(n),
        }
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        let m = self.inner.matrix();
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    fn apply(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let y = self.inner.apply(&vector(x)?).map_err(err)?;
        Ok(y.coords().iter().cloned().collect())
    }

    fn compose(&self, other: &LieTransform) -> PyResult<LieTransform> {
        Ok(LieTransform {
            inner: self.inner.compose(&other.inner).map_err(err)?,
        })
    }

    fn inverse(&self) -> LieTransform {
        LieTransform {
            inner: self.inner.inverse(),
        }
    }

    fn is_moebius(&self) -> bool {
        liesphere::is_moebius(&self.inner, 1e-9)
    }
}

/// Curvature spheres of a named generator at a parameter point: a list of
/// `(r, multiplicity, quadric_point)` tuples ordered by ascending `r`.
#[pyfunction]
fn generator_curvature_spheres(
    id: &str,
    params: BTreeMap<String, f64>,
    point: Vec<f64>,
) -> PyResult<Vec<(f64, usize, Vec<f64>)>> {
    let generated = build_generator(id, &params).map_err(err)?;
    let map = generated.legendre_map().map_err(err)?;
    let spheres = curvature_spheres(&map, &point, DEFAULT_CLUSTER_TOL).map_err(err)?;
    Ok(spheres
        .into_iter()
        .map(|s| {
            (
                s.r,
                s.multiplicity,
                s.point.coords().iter().cloned().collect(),
            )
        })
        .collect())
}

/// Runs the analysis pipeline on a named generator and returns the JSON
/// report text (deterministic for fixed inputs and seed).
#[pyfunction]
#[pyo3(signature = (id, params, grid, criteria, seed = 0))]
fn analyze_generator(
    id: &str,
    params: BTreeMap<String, f64>,
    grid: Vec<usize>,
    criteria: Vec<String>,
    seed: u64,
) -> PyResult<String> {
    let generated = build_generator(id, &params).map_err(err)?;
    let criteria: Vec<Criterion> = criteria
        .iter()
        .map(|c| c.parse::<Criterion>())
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let settings = DupinSettings {
        seed,
        ..DupinSettings::default()
    };
    let report = run_analysis(&generated, &params, &grid, &criteria, &settings).map_err(err)?;
    Ok(report.to_json())
}

/// List of generator ids with their parameter names and defaults.
#[pyfunction]
fn generators() -> Vec<(String, Vec<(String, f64)>)> {
    liesphere::zoo::generator_ids()
        .into_iter()
        .map(|(id, params)| {
            (
                id.to_string(),
                params
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect(),
            )
        })
        .collect()
}

#[pymodule]
fn liesphere_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(encode_point, m)?)?;
    m.add_function(wrap_pyfunction!(encode_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(encode_plane, m)?)?;
    m.add_function(wrap_pyfunction!(encode_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(decode_coords, m)?)?;
    m.add_function(wrap_pyfunction!(inner, m)?)?;
    m.add_function(wrap_pyfunction!(is_on_quadric, m)?)?;
    m.add_function(wrap_pyfunction!(oriented_contact, m)?)?;
    m.add_function(wrap_pyfunction!(generator_curvature_spheres, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_generator, m)?)?;
    m.add_function(wrap_pyfunction!(generators, m)?)?;
    m.add_class::<LieTransform>()?;
    Ok(())
}
