//! Multi-indices and monomial calculus.
//!
//! A multi-index `i = (i_1, …, i_d)` encodes the monomial
//! `x^i = x_1^{i_1} ··· x_d^{i_d}` together with `i! = i_1!···i_d!` and
//! `|i| = i_1 + … + i_d`. Tensor storage and expansion bookkeeping both key
//! on the graded-lexicographic enumeration produced by [`multi_indices`].

use crate::error::{Error, Result};
use crate::meshgeom::Point;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A d-dimensional multi-index, d ∈ {2, 3}.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    exp: [u32; 3],
    dim: u8,
}

impl MultiIndex {
    pub fn new(exponents: &[u32]) -> Result<Self> {
        let dim = exponents.len();
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        let mut exp = [0u32; 3];
        exp[..dim].copy_from_slice(exponents);
        Ok(MultiIndex {
            exp,
            dim: dim as u8,
        })
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex::new(&vec![0; dim]).expect("dimension must be 2 or 3")
    }

    /// The unit index e_axis (0-based axis).
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut exp = vec![0u32; dim];
        exp[axis] = 1;
        MultiIndex::new(&exp).expect("dimension must be 2 or 3")
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    /// |i| = i_1 + … + i_d.
    pub fn order(&self) -> u32 {
        self.exp.iter().sum()
    }

    pub fn exp(&self, axis: usize) -> u32 {
        self.exp[axis]
    }

    pub fn exps(&self) -> &[u32] {
        &self.exp[..self.dim()]
    }

    /// i! = i_1!···i_d! as a float (orders stay far below overflow).
    pub fn factorial(&self) -> f64 {
        self.exps().iter().map(|&e| factorial(e)).product()
    }

    /// Monomial value x^i.
    pub fn eval(&self, x: &Point) -> f64 {
        let mut v = 1.0;
        for (axis, &e) in self.exps().iter().enumerate() {
            if e > 0 {
                v *= x[axis].powi(e as i32);
            }
        }
        v
    }

    /// Gradient ∇x^i with components i_l · x^{i − e_l}.
    pub fn grad(&self, x: &Point) -> Point {
        let mut g = Point::zeros();
        for axis in 0..self.dim() {
            let e = self.exp[axis];
            if e == 0 {
                continue;
            }
            let mut v = e as f64;
            for (other, &eo) in self.exps().iter().enumerate() {
                let p = if other == axis { eo - 1 } else { eo };
                if p > 0 {
                    v *= x[other].powi(p as i32);
                }
            }
            g[axis] = v;
        }
        g
    }

    /// Laplacian Δx^i = Σ_l i_l(i_l−1) x^{i−2e_l}.
    pub fn laplacian(&self, x: &Point) -> f64 {
        let mut acc = 0.0;
        for axis in 0..self.dim() {
            let e = self.exp[axis];
            if e < 2 {
                continue;
            }
            let mut v = (e * (e - 1)) as f64;
            for (other, &eo) in self.exps().iter().enumerate() {
                let p = if other == axis { eo - 2 } else { eo };
                if p > 0 {
                    v *= x[other].powi(p as i32);
                }
            }
            acc += v;
        }
        acc
    }

    /// Componentwise sum i + k.
    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim, other.dim);
        let mut exp = self.exp;
        for (e, o) in exp.iter_mut().zip(other.exp.iter()) {
            *e += o;
        }
        MultiIndex { exp, dim: self.dim }
    }

    /// i − k when k ≤ i componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        debug_assert_eq!(self.dim, other.dim);
        let mut exp = [0u32; 3];
        for axis in 0..3 {
            exp[axis] = self.exp[axis].checked_sub(other.exp[axis])?;
        }
        Some(MultiIndex { exp, dim: self.dim })
    }

    /// The derivative relation ∂^k x^i = c · x^{i−k}: returns `(c, i−k)`
    /// with c = Π i_l!/(i_l−k_l)!, or `None` when the derivative vanishes.
    pub fn derivative_of_monomial(&self, k: &MultiIndex) -> Option<(f64, MultiIndex)> {
        let rest = self.checked_sub(k)?;
        let mut c = 1.0;
        for axis in 0..self.dim() {
            c *= factorial(self.exp[axis]) / factorial(rest.exp[axis]);
        }
        Some((c, rest))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, e) in self.exps().iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded-lexicographic order: lower |i| first; within an order block,
/// indices with larger leading exponents first, e.g. (1,0) before (0,1).
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.order()
            .cmp(&other.order())
            .then_with(|| other.exp.cmp(&self.exp))
    }
}

/// All multi-indices with 0 ≤ |i| ≤ max_order in graded-lexicographic order.
pub fn multi_indices(dim: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        compositions(dim, order, &mut Vec::new(), &mut out);
    }
    out
}

/// Multi-indices with min_order ≤ |i| ≤ max_order, same ordering.
pub fn multi_indices_range(dim: usize, min_order: u32, max_order: u32) -> Vec<MultiIndex> {
    multi_indices(dim, max_order)
        .into_iter()
        .filter(|i| i.order() >= min_order)
        .collect()
}

fn compositions(dim: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if prefix.len() == dim - 1 {
        prefix.push(total);
        out.push(MultiIndex::new(prefix).expect("valid dimension"));
        prefix.pop();
        return;
    }
    for lead in (0..=total).rev() {
        prefix.push(lead);
        compositions(dim, total - lead, prefix, out);
        prefix.pop();
    }
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::new(e).unwrap()
    }

    #[test]
    fn enumeration_matches_expected_order() {
        let got = multi_indices(2, 1);
        assert_eq!(got, vec![mi(&[0, 0]), mi(&[1, 0]), mi(&[0, 1])]);
        assert_eq!(multi_indices(2, 2).len(), 6);
        assert_eq!(multi_indices(3, 3).len(), 20);
        let order2: Vec<_> = multi_indices(2, 2)[3..].to_vec();
        assert_eq!(order2, vec![mi(&[2, 0]), mi(&[1, 1]), mi(&[0, 2])]);
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        for d in [2, 3] {
            let list = multi_indices(d, 4);
            let mut sorted = list.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(list, sorted);
        }
    }

    #[test]
    fn monomial_values_and_gradients() {
        let x = Vector3::new(3.0, 5.0, 0.0);
        assert_relative_eq!(mi(&[2, 0]).eval(&x), 9.0);
        assert_eq!(mi(&[2, 0]).grad(&x), Vector3::new(6.0, 0.0, 0.0));
        assert_relative_eq!(mi(&[0, 0]).eval(&x), 1.0);
        assert_eq!(mi(&[0, 0]).grad(&x), Vector3::zeros());
        let y = Vector3::new(2.0, -1.0, 0.0);
        assert_relative_eq!(mi(&[1, 1]).eval(&y), -2.0);
        assert_eq!(mi(&[1, 1]).grad(&y), Vector3::new(-1.0, 2.0, 0.0));
    }

    #[test]
    fn laplacian_of_monomials() {
        let x = Vector3::new(1.5, -0.5, 0.0);
        assert_relative_eq!(mi(&[2, 0]).laplacian(&x), 2.0);
        // x²−y² is harmonic, checked as two monomials
        assert_relative_eq!(
            mi(&[2, 0]).laplacian(&x) - mi(&[0, 2]).laplacian(&x),
            0.0
        );
        assert_relative_eq!(mi(&[2, 2]).laplacian(&x), 2.0 * 0.25 + 2.0 * 2.25);
    }

    #[test]
    fn factorials_and_derivatives() {
        assert_relative_eq!(mi(&[3, 2]).factorial(), 12.0);
        let (c, rest) = mi(&[3, 2]).derivative_of_monomial(&mi(&[1, 2])).unwrap();
        assert_relative_eq!(c, 3.0 * 2.0);
        assert_eq!(rest, mi(&[2, 0]));
        assert!(mi(&[1, 0]).derivative_of_monomial(&mi(&[0, 1])).is_none());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = Vector3::new(0.7, -0.4, 0.0);
        let idx = mi(&[2, 3]);
        let g = idx.grad(&x);
        let h = 1e-6;
        for axis in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[axis] += h;
            xm[axis] -= h;
            let fd = (idx.eval(&xp) - idx.eval(&xm)) / (2.0 * h);
            assert_relative_eq!(g[axis], fd, max_relative = 1e-6);
        }
    }
}
