//! Background medium data entering the corrector equations.

use crate::error::{Error, Result};
use crate::meshgeom::{multi_indices_range, MultiIndex, Point};
use std::collections::BTreeMap;

/// Background coefficients around the inclusion center.
///
/// Diffusion mode carries D₀(x₀) together with the Taylor coefficients
/// tₘ = ∂^m D₀⁻¹(x₀)/m! of the inverse coefficient, for 1 ≤ |m| ≤ d.
/// Helmholtz mode carries the constant background potential q₀ and the
/// contrast exponent η.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelMode {
    Diffusion,
    Helmholtz,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BackgroundModel {
    dim: usize,
    mode: ModelMode,
    d0: f64,
    taylor: BTreeMap<MultiIndex, f64>,
    q0: f64,
    eta: f64,
}

impl BackgroundModel {
    /// Constant diffusion background D₀ ≡ d0 near the inclusion.
    pub fn constant_diffusion(dim: usize, d0: f64) -> Result<Self> {
        Self::with_inverse_taylor(dim, d0, BTreeMap::new())
    }

    /// Diffusion background with prescribed Taylor data of D₀⁻¹ at x₀.
    ///
    /// Keys must satisfy 1 ≤ |m| ≤ d; the |m| = 0 coefficient is implied
    /// by d0.
    pub fn with_inverse_taylor(
        dim: usize,
        d0: f64,
        taylor: BTreeMap<MultiIndex, f64>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if !(d0 > 0.0) {
            return Err(Error::IllPosed(format!(
                "background coefficient must be positive, got {d0}"
            )));
        }
        for m in taylor.keys() {
            if m.dim() != dim {
                return Err(Error::Config(format!(
                    "Taylor index {m:?} has dimension {}, model has {dim}",
                    m.dim()
                )));
            }
            if m.order() == 0 || m.order() as usize > dim {
                return Err(Error::Config(format!(
                    "Taylor index order {} outside 1..={dim}",
                    m.order()
                )));
            }
        }
        Ok(BackgroundModel {
            dim,
            mode: ModelMode::Diffusion,
            d0,
            taylor,
            q0: 0.0,
            eta: 0.0,
        })
    }

    /// Helmholtz background with constant q₀ and contrast exponent η.
    pub fn helmholtz(dim: usize, q0: f64, eta: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        if !(0.0..=2.0).contains(&eta) {
            return Err(Error::Config(format!("eta must lie in [0, 2], got {eta}")));
        }
        Ok(BackgroundModel {
            dim,
            mode: ModelMode::Helmholtz,
            d0: 1.0,
            taylor: BTreeMap::new(),
            q0,
            eta,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn d0_inv(&self) -> f64 {
        1.0 / self.d0
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Whether all Taylor coefficients of order ≥ 1 vanish.
    pub fn is_constant(&self) -> bool {
        self.taylor.values().all(|t| *t == 0.0)
    }

    /// Taylor coefficient tₘ = ∂^m D₀⁻¹(x₀)/m!; zero when not stored.
    pub fn taylor_coeff(&self, m: &MultiIndex) -> f64 {
        if m.order() == 0 {
            return self.d0_inv();
        }
        self.taylor.get(m).copied().unwrap_or(0.0)
    }

    /// All stored Taylor indices with nonzero coefficient.
    pub fn taylor_indices(&self) -> impl Iterator<Item = (&MultiIndex, &f64)> {
        self.taylor.iter().filter(|(_, t)| **t != 0.0)
    }

    /// Evaluates the polynomial D₀⁻¹(x₀ + z) = Σ tₘ z^m over the stored
    /// Taylor data.
    pub fn d0_inv_at(&self, z: &Point) -> f64 {
        let mut v = self.d0_inv();
        for (m, t) in &self.taylor {
            v += t * m.eval(z);
        }
        v
    }

    /// Multi-indices the hierarchy may request, 1 ≤ |m| ≤ d.
    pub fn hierarchy_indices(&self) -> Vec<MultiIndex> {
        multi_indices_range(self.dim, 1, self.dim as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_model_basics() {
        let m = BackgroundModel::constant_diffusion(2, 2.0).unwrap();
        assert!(m.is_constant());
        assert_relative_eq!(m.d0_inv(), 0.5);
        assert_relative_eq!(m.d0_inv_at(&Point::new(0.3, -0.2, 0.0)), 0.5);
        assert!(BackgroundModel::constant_diffusion(2, 0.0).is_err());
        assert!(BackgroundModel::constant_diffusion(4, 1.0).is_err());
    }

    #[test]
    fn taylor_evaluation_matches_polynomial() {
        let mut taylor = BTreeMap::new();
        taylor.insert(MultiIndex::new(&[1, 0]).unwrap(), 0.25);
        taylor.insert(MultiIndex::new(&[0, 2]).unwrap(), -0.125);
        let m = BackgroundModel::with_inverse_taylor(2, 1.0, taylor).unwrap();
        assert!(!m.is_constant());
        let z = Point::new(0.4, 0.6, 0.0);
        assert_relative_eq!(m.d0_inv_at(&z), 1.0 + 0.25 * 0.4 - 0.125 * 0.36);
        assert_relative_eq!(
            m.taylor_coeff(&MultiIndex::new(&[1, 0]).unwrap()),
            0.25
        );
        assert_relative_eq!(m.taylor_coeff(&MultiIndex::new(&[2, 0]).unwrap()), 0.0);
        assert_relative_eq!(m.taylor_coeff(&MultiIndex::zero(2)), 1.0);
    }

    #[test]
    fn taylor_order_bounds_enforced() {
        let mut too_deep = BTreeMap::new();
        too_deep.insert(MultiIndex::new(&[3, 0]).unwrap(), 1.0);
        assert!(BackgroundModel::with_inverse_taylor(2, 1.0, too_deep).is_err());
        let mut zeroth = BTreeMap::new();
        zeroth.insert(MultiIndex::zero(2), 1.0);
        assert!(BackgroundModel::with_inverse_taylor(2, 1.0, zeroth).is_err());
    }

    #[test]
    fn helmholtz_mode_validates_eta() {
        let m = BackgroundModel::helmholtz(2, 1.0, 2.0).unwrap();
        assert_relative_eq!(m.q0(), 1.0);
        assert_relative_eq!(m.eta(), 2.0);
        assert!(BackgroundModel::helmholtz(2, 1.0, 2.5).is_err());
    }
}
