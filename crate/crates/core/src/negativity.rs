//! Negative volume of a field on its own grid.

use crate::closedform::{ClosedFormCase, Shape};
use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::regularizer::{norm_factor, Regularizer};
use crate::transform::WignerField;

/// Grid points excluded from a volume sum (true = excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    excluded: Vec<bool>,
    /// human-readable policy, echoed into reports
    pub policy: String,
}

impl Mask {
    pub fn new(excluded: Vec<bool>, policy: impl Into<String>) -> Self {
        Self { excluded, policy: policy.into() }
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn fraction(&self) -> f64 {
        if self.excluded.is_empty() {
            return 0.0;
        }
        self.excluded.iter().filter(|e| **e).count() as f64 / self.excluded.len() as f64
    }

    /// Excludes (R - |x|) <= width, x the case's Bloch coordinates. Only disk
    /// shapes are singular; for others the mask is empty.
    pub fn singular_shell(case: &ClosedFormCase, grid: &PhaseGrid, width: f64) -> Result<Self> {
        let policy = format!("(R-|x|)>{width:e} on {}", case.expression());
        if case.shape() != Shape::Disk {
            return Ok(Self::new(vec![false; grid.len()], "none"));
        }
        let excluded = (0..grid.len())
            .map(|i| case.shell_distance(&grid.point(i)).map(|d| d <= width))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(excluded, policy))
    }
}

fn sum_where(field: &WignerField, mask: Option<&Mask>, keep: impl Fn(f64) -> f64) -> Result<f64> {
    let values = field.values();
    if let Some(m) = mask {
        if m.excluded.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), got: m.excluded.len() });
        }
    }
    // fixed order for reproducibility
    let mut s = 0.0;
    for (i, &v) in values.iter().enumerate() {
        if mask.is_some_and(|m| m.excluded[i]) {
            continue;
        }
        s += keep(v);
    }
    Ok(s * field.grid().cell_volume())
}

/// int (W - |W|)/2 as a Riemann sum on the field's grid.
pub fn negative_volume(field: &WignerField) -> f64 {
    sum_where(field, None, |v| v.min(0.0)).expect("no mask")
}

pub fn positive_volume(field: &WignerField) -> f64 {
    sum_where(field, None, |v| v.max(0.0)).expect("no mask")
}

/// Negative volume over the points the mask keeps.
pub fn negative_volume_masked(field: &WignerField, mask: &Mask) -> Result<f64> {
    sum_where(field, Some(mask), |v| v.min(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NegativityReport {
    pub raw: f64,
    pub norm_factor: f64,
    pub normalized: f64,
    pub mask_fraction: f64,
    pub mask_policy: String,
    pub epsilon: f64,
    pub kernel: String,
    pub reference: String,
    /// operator set echo
    pub set: String,
}

/// Negative volume divided by I_reg / I_reference.
pub fn normalized_negativity(field: &WignerField, reference: &Regularizer, mask: Option<&Mask>) -> Result<NegativityReport> {
    let reg = field.regularizer();
    let factor = norm_factor(reg, reference)?;
    let raw = match mask {
        Some(m) => negative_volume_masked(field, m)?,
        None => negative_volume(field),
    };
    Ok(NegativityReport {
        raw,
        norm_factor: factor,
        normalized: raw / factor,
        mask_fraction: mask.map(|m| m.fraction()).unwrap_or(0.0),
        mask_policy: mask.map(|m| m.policy.clone()).unwrap_or_else(|| "none".into()),
        epsilon: reg.epsilon(),
        kernel: reg.describe(),
        reference: reference.describe(),
        set: field.provenance().set.clone(),
    })
}
