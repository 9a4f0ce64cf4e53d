//! Central finite differences for smooth-map oracles.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;

/// Central-difference jacobian with one Richardson refinement per axis:
/// `D = (4 D_{h/2} - D_h) / 3`, error `O(h^4)`.
pub fn fd_jacobian<F>(eval: &F, b: &[f64], h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>> + ?Sized,
{
    let k = b.len();
    let probe = eval(b)?;
    let m = probe.len();
    let mut jac = DMatrix::zeros(m, k);
    let mut point = b.to_vec();
    for axis in 0..k {
        let coarse = central(eval, &mut point, b, axis, h)?;
        let fine = central(eval, &mut point, b, axis, h / 2.0)?;
        jac.set_column(axis, &((fine * 4.0 - coarse) / 3.0));
    }
    Ok(jac)
}

/// Plain central difference along an arbitrary direction.
pub fn fd_directional<F>(eval: &F, b: &[f64], dir: &[f64], h: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>> + ?Sized,
{
    let plus: Vec<f64> = b.iter().zip(dir).map(|(x, d)| x + h * d).collect();
    let minus: Vec<f64> = b.iter().zip(dir).map(|(x, d)| x - h * d).collect();
    Ok((eval(&plus)? - eval(&minus)?) / (2.0 * h))
}

fn central<F>(eval: &F, point: &mut [f64], b: &[f64], axis: usize, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&[f64]) -> Result<DVector<f64>> + ?Sized,
{
    point.copy_from_slice(b);
    point[axis] = b[axis] + h;
    let plus = eval(point)?;
    point[axis] = b[axis] - h;
    let minus = eval(point)?;
    point[axis] = b[axis];
    Ok((plus - minus) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_of_smooth_map_is_accurate() {
        let f = |b: &[f64]| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![
                b[0] * b[0] * b[1],
                (b[0] * 3.0).sin(),
            ]))
        };
        let jac = fd_jacobian(&f, &[0.7, -0.3], 1e-4).unwrap();
        assert!((jac[(0, 0)] - 2.0 * 0.7 * -0.3).abs() < 1e-11);
        assert!((jac[(0, 1)] - 0.49).abs() < 1e-11);
        assert!((jac[(1, 0)] - 3.0 * (2.1f64).cos()).abs() < 1e-11);
        assert!(jac[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn directional_derivative_matches_gradient() {
        let f =
            |b: &[f64]| -> Result<DVector<f64>> { Ok(DVector::from_vec(vec![b[0].exp() * b[1]])) };
        let d = fd_directional(&f, &[0.2, 1.5], &[1.0, -2.0], 1e-5).unwrap();
        let expected = 0.2f64.exp() * 1.5 - 2.0 * 0.2f64.exp();
        assert!((d[0] - expected).abs() < 1e-9);
    }
}
