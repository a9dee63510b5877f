//! Tensor containers with validated index sets and provenance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meshgeom::{multi_indices, multi_indices_range, MultiIndex};

/// Which expansion object a tensor represents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorKind {
    /// Leading polarization tensor of the diffusion expansion.
    M,
    /// Hierarchy tensor carrying the variable-background corrections; its
    /// entries are keyed by (i, j) plus an auxiliary pair (k, l).
    M2,
    /// Full-coefficient tensor at a fixed inclusion scale.
    MEps { eps: f64 },
    /// Boundary-integral variant for a piecewise-constant jump contrast.
    LayerM,
    /// Moment tensor of the Helmholtz potential; indices start at order 0.
    Q,
    /// Corrector-weighted Helmholtz tensor at coupling `eta` and scale `eps`.
    QEta { eta: f64, eps: f64 },
}

impl TensorKind {
    fn includes_order_zero(&self) -> bool {
        matches!(self, TensorKind::Q | TensorKind::QEta { .. })
    }

    fn has_hierarchy(&self) -> bool {
        matches!(self, TensorKind::M2)
    }
}

/// Inputs that produced a tensor, for reproducibility checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub profile_hash: String,
    pub mesh_hash: String,
    pub solver_tol: f64,
}

/// A polarization-type tensor over graded multi-index blocks.
///
/// Values are stored row-major over (row, col) with the auxiliary
/// hierarchy index fastest when present. The index sets are derived from
/// the kind, dimension and order, and every constructor and deserializer
/// re-checks them together with entry finiteness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarizationTensor {
    kind: TensorKind,
    dim: usize,
    max_order: u32,
    rows: Vec<MultiIndex>,
    cols: Vec<MultiIndex>,
    aux: Vec<(MultiIndex, u32)>,
    values: Vec<f64>,
    provenance: Provenance,
}

pub(crate) fn expected_entry_indices(
    kind: TensorKind,
    dim: usize,
    max_order: u32,
) -> Vec<MultiIndex> {
    if kind.includes_order_zero() {
        multi_indices(dim, max_order)
    } else {
        multi_indices_range(dim, 1, max_order)
    }
}

/// Hierarchy pairs (k, l): every weight index k up to the tensor order,
/// every level the corrector cascade supports, minus the trivial pair.
pub(crate) fn expected_aux_indices(
    kind: TensorKind,
    dim: usize,
    max_order: u32,
) -> Vec<(MultiIndex, u32)> {
    if !kind.has_hierarchy() {
        return Vec::new();
    }
    let level_cap = max_order.min(dim as u32);
    let mut aux = Vec::new();
    for k in multi_indices(dim, max_order) {
        for l in 0..=level_cap {
            if k.order() + l == 0 {
                continue;
            }
            aux.push((k, l));
        }
    }
    aux
}

impl PolarizationTensor {
    pub(crate) fn new(
        kind: TensorKind,
        dim: usize,
        max_order: u32,
        values: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        let rows = expected_entry_indices(kind, dim, max_order);
        let cols = rows.clone();
        let aux = expected_aux_indices(kind, dim, max_order);
        let tensor = PolarizationTensor {
            kind,
            dim,
            max_order,
            rows,
            cols,
            aux,
            values,
            provenance,
        };
        tensor.validate()?;
        Ok(tensor)
    }

    fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::Dimension(self.dim));
        }
        if self.rows != expected_entry_indices(self.kind, self.dim, self.max_order)
            || self.cols != expected_entry_indices(self.kind, self.dim, self.max_order)
        {
            return Err(Error::Config(
                "tensor index set does not match its kind and order".into(),
            ));
        }
        if self.aux != expected_aux_indices(self.kind, self.dim, self.max_order) {
            return Err(Error::Config(
                "tensor hierarchy index set does not match its kind and order".into(),
            ));
        }
        let slots = self.rows.len() * self.cols.len() * self.aux.len().max(1);
        if self.values.len() != slots {
            return Err(Error::Config(format!(
                "tensor stores {} values but the index set needs {slots}",
                self.values.len()
            )));
        }
        if let Some(bad) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite tensor entry {bad}")));
        }
        Ok(())
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn row_indices(&self) -> &[MultiIndex] {
        &self.rows
    }

    pub fn col_indices(&self) -> &[MultiIndex] {
        &self.cols
    }

    pub fn hierarchy_indices(&self) -> &[(MultiIndex, u32)] {
        &self.aux
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn slot(&self, i: &MultiIndex, j: &MultiIndex, aux: usize) -> Option<usize> {
        let r = self.rows.iter().position(|m| m == i)?;
        let c = self.cols.iter().position(|m| m == j)?;
        Some((r * self.cols.len() + c) * self.aux.len().max(1) + aux)
    }

    /// Entry for (i, j); `None` when the index is absent or the tensor
    /// carries a hierarchy axis.
    pub fn get(&self, i: &MultiIndex, j: &MultiIndex) -> Option<f64> {
        if !self.aux.is_empty() {
            return None;
        }
        self.slot(i, j, 0).map(|s| self.values[s])
    }

    /// Hierarchy entry for (i, j, k, l).
    pub fn get_hierarchy(&self, i: &MultiIndex, j: &MultiIndex, k: &MultiIndex, l: u32) -> Option<f64> {
        let a = self.aux.iter().position(|(m, lev)| m == k && *lev == l)?;
        self.slot(i, j, a).map(|s| self.values[s])
    }

    /// The block over unit indices, ordered by axis.
    pub fn first_order_block(&self) -> Option<DMatrix<f64>> {
        if !self.aux.is_empty() {
            return None;
        }
        let units: Vec<MultiIndex> = (0..self.dim).map(|a| MultiIndex::unit(self.dim, a)).collect();
        let mut block = DMatrix::zeros(self.dim, self.dim);
        for (r, i) in units.iter().enumerate() {
            for (c, j) in units.iter().enumerate() {
                block[(r, c)] = self.get(i, j)?;
            }
        }
        Some(block)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest |v_ij - v_ji| over the stored block, relative to the
    /// largest entry; `None` for hierarchy tensors.
    pub fn symmetry_defect(&self) -> Option<f64> {
        if !self.aux.is_empty() {
            return None;
        }
        let n = self.rows.len();
        let scale = self.max_abs();
        if scale == 0.0 {
            return Some(0.0);
        }
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in (r + 1)..n {
                worst = worst.max((self.values[r * n + c] - self.values[c * n + r]).abs());
            }
        }
        Some(worst / scale)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let tensor: PolarizationTensor = serde_json::from_str(text)?;
        tensor.validate()?;
        Ok(tensor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dummy_provenance() -> Provenance {
        Provenance {
            profile_hash: "abc".into(),
            mesh_hash: "def".into(),
            solver_tol: 1e-10,
        }
    }

    #[test]
    fn index_sets_follow_kind() {
        let m_rows = expected_entry_indices(TensorKind::M, 2, 2);
        assert_eq!(m_rows.len(), 5);
        assert!(m_rows.iter().all(|i| i.order() >= 1));

        let q_rows = expected_entry_indices(TensorKind::Q, 2, 2);
        assert_eq!(q_rows.len(), 6);
        assert_eq!(q_rows[0].order(), 0);
    }

    #[test]
    fn hierarchy_pairs_drop_trivial_and_cap_level() {
        let aux = expected_aux_indices(TensorKind::M2, 2, 3);
        assert!(aux.iter().all(|(k, l)| k.order() + l > 0));
        assert!(aux.iter().all(|(_, l)| *l <= 2));
        let count = multi_indices(2, 3).len() * 3 - 1;
        assert_eq!(aux.len(), count);
        assert!(expected_aux_indices(TensorKind::M, 2, 3).is_empty());
    }

    #[test]
    fn constructor_checks_slot_count_and_finiteness() {
        let err = PolarizationTensor::new(TensorKind::M, 2, 1, vec![0.0; 3], dummy_provenance());
        assert!(err.is_err());
        let err = PolarizationTensor::new(
            TensorKind::M,
            2,
            1,
            vec![1.0, 0.0, 0.0, f64::NAN],
            dummy_provenance(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn lookup_and_first_order_block() {
        let t = PolarizationTensor::new(
            TensorKind::M,
            2,
            1,
            vec![2.0, 0.5, 0.5, 3.0],
            dummy_provenance(),
        )
        .unwrap();
        let e1 = MultiIndex::unit(2, 0);
        let e2 = MultiIndex::unit(2, 1);
        assert_eq!(t.get(&e1, &e1), Some(2.0));
        assert_eq!(t.get(&e1, &e2), Some(0.5));
        let block = t.first_order_block().unwrap();
        assert_eq!(block[(1, 1)], 3.0);
        assert_eq!(t.symmetry_defect(), Some(0.0));
    }

    #[test]
    fn json_round_trip_is_bitwise_and_revalidated() {
        let t = PolarizationTensor::new(
            TensorKind::MEps { eps: 0.25 },
            2,
            1,
            vec![2.0, 0.5, 0.25, 3.0],
            dummy_provenance(),
        )
        .unwrap();
        let text = t.to_json().unwrap();
        let back = PolarizationTensor::from_json(&text).unwrap();
        assert_eq!(back.values(), t.values());
        assert_eq!(back.kind(), t.kind());

        let tampered = text.replace("0.25", "1e400");
        assert!(PolarizationTensor::from_json(&tampered).is_err());
    }
}
