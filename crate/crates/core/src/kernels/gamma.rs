//! Fundamental solutions of the Laplacian and their derivatives.
//!
//! With the sign convention −ΔΓ = δ,
//!   Γ(x) = −ln|x| / 2π      in two dimensions,
//!   Γ(x) = 1 / (4π|x|)      in three.

use crate::error::{Error, Result};
use crate::meshgeom::Point;
use nalgebra::Matrix3;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

fn check(dim: usize, x: &Point) -> Result<f64> {
    if dim != 2 && dim != 3 {
        return Err(Error::Dimension(dim));
    }
    let r = x.norm();
    if r == 0.0 {
        return Err(Error::Quadrature(
            "fundamental solution evaluated at its singularity".into(),
        ));
    }
    Ok(r)
}

pub fn gamma(dim: usize, x: &Point) -> Result<f64> {
    let r = check(dim, x)?;
    Ok(gamma_unchecked(dim, r))
}

pub fn grad_gamma(dim: usize, x: &Point) -> Result<Point> {
    let r = check(dim, x)?;
    Ok(grad_gamma_unchecked(dim, x, r))
}

pub fn hess_gamma(dim: usize, x: &Point) -> Result<Matrix3<f64>> {
    let r = check(dim, x)?;
    Ok(hess_gamma_unchecked(dim, x, r))
}

#[inline]
pub(crate) fn gamma_unchecked(dim: usize, r: f64) -> f64 {
    if dim == 2 {
        -r.ln() / TWO_PI
    } else {
        1.0 / (FOUR_PI * r)
    }
}

#[inline]
pub(crate) fn grad_gamma_unchecked(dim: usize, x: &Point, r: f64) -> Point {
    if dim == 2 {
        -x / (TWO_PI * r * r)
    } else {
        -x / (FOUR_PI * r * r * r)
    }
}

#[inline]
pub(crate) fn hess_gamma_unchecked(dim: usize, x: &Point, r: f64) -> Matrix3<f64> {
    let eye = Matrix3::identity();
    let outer = x * x.transpose();
    if dim == 2 {
        (-eye / (r * r) + 2.0 * outer / (r * r * r * r)) / TWO_PI
    } else {
        (-eye / (r * r * r) + 3.0 * outer / (r * r * r * r * r)) / FOUR_PI
    }
}
