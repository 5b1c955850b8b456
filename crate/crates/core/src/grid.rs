//! Rectangular phase-space grids, optionally in an affine frame a = L x + o.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::catalog::OperatorSet;
use crate::error::{Error, Result};
use crate::regularizer::Regularizer;

pub const MAX_POINTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub l: DMatrix<f64>,
    pub o: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    axes: Vec<Axis>,
    frame: Option<Frame>,
}

pub fn default_count(n: usize) -> usize {
    match n {
        0..=2 => 257,
        3 => 129,
        _ => 49,
    }
}

impl PhaseGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("no axes".into()));
        }
        let mut total: usize = 1;
        for (k, ax) in axes.iter().enumerate() {
            if ax.count < 8 {
                return Err(Error::InvalidGrid(format!("axis {} has {} points, need >= 8", k + 1, ax.count)));
            }
            if !(ax.max > ax.min) || !ax.min.is_finite() || !ax.max.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {} has max <= min", k + 1)));
            }
            total = total.saturating_mul(ax.count);
        }
        if total > MAX_POINTS {
            return Err(Error::InvalidGrid(format!("{total} points exceed the limit of {MAX_POINTS}")));
        }
        Ok(Self { axes, frame: None })
    }

    /// Grid in coordinates x with phase-space points a = L x + o.
    pub fn with_frame(axes: Vec<Axis>, l: DMatrix<f64>, o: DVector<f64>) -> Result<Self> {
        let n = axes.len();
        if l.nrows() != n || l.ncols() != n || o.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: l.nrows() });
        }
        if l.determinant().abs() < 1e-300 || l.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("singular frame".into()));
        }
        let mut g = Self::new(axes)?;
        g.frame = Some(Frame { l, o });
        Ok(g)
    }

    /// Spectral box padded by max(0.25 s_k, 8 sqrt(eps) t_k), where s_k is the
    /// half-spread of A_k and t_k the kernel length scale along a_k.
    pub fn default_for(set: &OperatorSet, reg: &Regularizer, count: Option<usize>) -> Result<Self> {
        let n = set.n();
        let count = count.unwrap_or_else(|| default_count(n));
        let c = reg.matrix();
        let root = reg.epsilon().sqrt();
        let axes = set
            .spectral_box()
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi))| {
                let t = c.column(k).norm();
                let pad = (0.25 * 0.5 * (hi - lo)).max(8.0 * root * t);
                Axis::new(lo - pad, hi + pad, count)
            })
            .collect();
        Self::new(axes)
    }

    /// Grid axis-aligned in the family's primed coordinates (a'' for the
    /// equal-noise family): Bloch axes span the unit ball, kernel axes
    /// a few kernel widths around 0.
    pub fn natural(set: &OperatorSet, reg: &Regularizer, counts: Option<&[usize]>) -> Result<Self> {
        let n = set.n();
        let coords = set.coords().ok_or(Error::NoAffineMap)?;
        let root = reg.epsilon().sqrt();
        let default = vec![default_count(n); n];
        let counts = counts.unwrap_or(&default);
        if counts.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: counts.len() });
        }
        let (l, o, radius) = match &coords.secondary {
            Some(sec) => {
                // a'' = a + offset, radius 1 - lambda
                let r = 1.0 / coords.map.matrix[(0, 0)];
                (DMatrix::identity(n, n), -&sec.offset, r)
            }
            None => {
                let inv = coords.map.inverse().ok_or_else(|| Error::InvalidGrid("singular primed map".into()))?;
                (inv.matrix, inv.offset, 1.0)
            }
        };
        // kernel matrix in x is C L^{-T}, the identity for the family kernels
        let lit = l.transpose().try_inverse().ok_or_else(|| Error::InvalidGrid("singular frame".into()))?;
        let t = (reg.matrix() * lit).column_iter().map(|col| col.norm()).fold(0.0, f64::max);
        let axes = (0..n)
            .map(|k| {
                if coords.kernel.contains(&k) {
                    let w = 8.0 * root * t;
                    Axis::new(-w, w, counts[k])
                } else {
                    let w = radius + (0.25 * radius).max(8.0 * root * t);
                    Axis::new(-w, w, counts[k])
                }
            })
            .collect();
        Self::with_frame(axes, l, o)
    }

    pub fn n(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn frame(&self) -> Option<&Frame> {
        self.frame.as_ref()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.step()).collect()
    }

    pub fn frame_matrix(&self) -> DMatrix<f64> {
        self.frame.as_ref().map(|f| f.l.clone()).unwrap_or_else(|| DMatrix::identity(self.n(), self.n()))
    }

    pub fn frame_offset(&self) -> DVector<f64> {
        self.frame.as_ref().map(|f| f.o.clone()).unwrap_or_else(|| DVector::zeros(self.n()))
    }

    /// Phase-space volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        let det = self.frame.as_ref().map(|f| f.l.determinant().abs()).unwrap_or(1.0);
        det * self.axes.iter().map(|a| a.step()).product::<f64>()
    }

    /// Row-major multi-index (last axis fastest).
    pub fn index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n()];
        for k in (0..self.n()).rev() {
            idx[k] = flat % self.axes[k].count;
            flat /= self.axes[k].count;
        }
        idx
    }

    pub fn local(&self, flat: usize) -> Vec<f64> {
        self.index(flat).iter().zip(&self.axes).map(|(&i, ax)| ax.value(i)).collect()
    }

    pub fn to_phase(&self, x: &[f64]) -> Vec<f64> {
        match &self.frame {
            None => x.to_vec(),
            Some(f) => {
                let n = x.len();
                (0..n).map(|r| f.o[r] + (0..n).map(|c| f.l[(r, c)] * x[c]).sum::<f64>()).collect()
            }
        }
    }

    /// Phase-space point a of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.to_phase(&self.local(flat))
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn describe(&self) -> String {
        let ax: Vec<String> = self.axes.iter().map(|a| format!("[{:e},{:e}]x{}", a.min, a.max, a.count)).collect();
        let frame = if self.frame.is_some() { "framed" } else { "plain" };
        format!("{}:{}", frame, ax.join("*"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::*;
    use crate::regularizer::family_regularizer;

    #[test]
    fn guards() {
        assert!(PhaseGrid::new(vec![Axis::new(0.0, 1.0, 7)]).is_err());
        assert!(PhaseGrid::new(vec![Axis::new(1.0, 1.0, 9)]).is_err());
        assert!(PhaseGrid::new(vec![Axis::new(0.0, 1.0, 1000); 3]).is_err());
        assert!(PhaseGrid::new(vec![Axis::new(0.0, 1.0, 200); 3]).is_ok());
    }

    #[test]
    fn row_major_order_and_volume() {
        let g = PhaseGrid::new(vec![Axis::new(0.0, 1.0, 11), Axis::new(-1.0, 1.0, 9)]).unwrap();
        assert_eq!(g.point(0), vec![0.0, -1.0]);
        assert_eq!(g.point(1), vec![0.0, -0.75]);
        assert_eq!(g.point(9), vec![0.1, -1.0]);
        assert!((g.cell_volume() - 0.1 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn natural_frame_maps_to_primed_coordinates() {
        let set = noisy_pauli_set(&[0.2, 0.4], false).unwrap();
        let reg = family_regularizer(&set, 1e-4).unwrap();
        let g = PhaseGrid::natural(&set, &reg, Some(&[9, 9])).unwrap();
        let map = set.affine().unwrap();
        for i in [0, 17, 80] {
            let ap = map.apply(&g.point(i));
            for (u, v) in ap.iter().zip(g.local(i)) {
                assert!((u - v).abs() < 1e-13);
            }
        }
        let symm = noisy_pauli_set(&[0.3, 0.3, 0.3], true).unwrap();
        let reg = family_regularizer(&symm, 1e-4).unwrap();
        let g = PhaseGrid::natural(&symm, &reg, Some(&[9, 9, 9])).unwrap();
        let x = g.local(5);
        let a = g.point(5);
        assert!((a[2] - x[2] - 0.3).abs() < 1e-15);
        assert!((g.axes()[0].max - 0.7 - 0.25 * 0.7).abs() < 1e-12);
    }
}
