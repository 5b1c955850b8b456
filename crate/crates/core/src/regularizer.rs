//! Regularizing kernels in canonical form
//! G^(xi) = exp(-eps |C_E xi| - eps |C_G xi|^2),
//! where C_E is the first `m_e` rows of an invertible matrix C and C_G the rest.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::catalog::{eta_matrix, Family, OperatorSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KernelKind {
    GaussIso,
    GaussScaled,
    ExpIso,
    ExpScaled,
    EtaGauss,
    EtaExp,
    Mixed,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::GaussIso => "GAUSS_ISO",
            KernelKind::GaussScaled => "GAUSS_SCALED",
            KernelKind::ExpIso => "EXP_ISO",
            KernelKind::ExpScaled => "EXP_SCALED",
            KernelKind::EtaGauss => "ETA_GAUSS",
            KernelKind::EtaExp => "ETA_EXP",
            KernelKind::Mixed => "MIXED",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let all = [
            KernelKind::GaussIso,
            KernelKind::GaussScaled,
            KernelKind::ExpIso,
            KernelKind::ExpScaled,
            KernelKind::EtaGauss,
            KernelKind::EtaExp,
            KernelKind::Mixed,
        ];
        all.into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regularizer {
    kind: KernelKind,
    epsilon: f64,
    c: DMatrix<f64>,
    m_e: usize,
}

/// Surface area of the unit sphere in R^m.
fn sphere_area(m: usize) -> f64 {
    // S_{m-1} = 2 pi^{m/2} / Gamma(m/2)
    let half_gamma = |m: usize| -> f64 {
        if m % 2 == 0 {
            (1..m / 2).map(|k| k as f64).product()
        } else {
            // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
            let k = m / 2;
            (0..k).map(|j| j as f64 + 0.5).product::<f64>() * PI.sqrt()
        }
    };
    2.0 * PI.powf(m as f64 / 2.0) / half_gamma(m)
}

impl Regularizer {
    pub fn new(kind: KernelKind, epsilon: f64, c: DMatrix<f64>, m_e: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
        }
        if !c.is_square() || m_e > c.nrows() || c.nrows() == 0 {
            return Err(Error::InvalidParameter("kernel matrix must be square with m_e <= n".into()));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("kernel matrix has non-finite entries".into()));
        }
        Ok(Self { kind, epsilon, c, m_e })
    }

    pub fn gauss_iso(n: usize, epsilon: f64) -> Result<Self> {
        Self::new(KernelKind::GaussIso, epsilon, DMatrix::identity(n, n), 0)
    }

    pub fn exp_iso(n: usize, epsilon: f64) -> Result<Self> {
        Self::new(KernelKind::ExpIso, epsilon, DMatrix::identity(n, n), n)
    }

    pub fn gauss_scaled(scales: &[f64], epsilon: f64) -> Result<Self> {
        Self::new(KernelKind::GaussScaled, epsilon, DMatrix::from_diagonal(&DVector::from_column_slice(scales)), 0)
    }

    pub fn exp_scaled(scales: &[f64], epsilon: f64) -> Result<Self> {
        let n = scales.len();
        Self::new(KernelKind::ExpScaled, epsilon, DMatrix::from_diagonal(&DVector::from_column_slice(scales)), n)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Number of exponential (non-Gaussian) canonical directions.
    pub fn m_e(&self) -> usize {
        self.m_e
    }

    pub fn m_g(&self) -> usize {
        self.n() - self.m_e
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.kind, epsilon, self.c.clone(), self.m_e)
    }

    /// Same kernel shape with C = I: the unscaled reference for normalization.
    pub fn reference(&self) -> Self {
        let n = self.n();
        let kind = match self.kind {
            KernelKind::Mixed => KernelKind::Mixed,
            _ if self.m_e == 0 => KernelKind::GaussIso,
            _ if self.m_e == n => KernelKind::ExpIso,
            _ => KernelKind::Mixed,
        };
        Self { kind, epsilon: self.epsilon, c: DMatrix::identity(n, n), m_e: self.m_e }
    }

    /// (|C_E xi|, |C_G xi|^2)
    pub fn parts(&self, xi: &[f64]) -> (f64, f64) {
        let n = self.n();
        let mut e2 = 0.0;
        let mut g2 = 0.0;
        for r in 0..n {
            let z: f64 = (0..n).map(|k| self.c[(r, k)] * xi[k]).sum();
            if r < self.m_e {
                e2 += z * z;
            } else {
                g2 += z * z;
            }
        }
        (e2.sqrt(), g2)
    }

    pub fn ghat(&self, xi: &[f64]) -> f64 {
        let (e, g) = self.parts(xi);
        (-self.epsilon * (e + g)).exp()
    }

    pub fn det(&self) -> f64 {
        self.c.determinant()
    }

    pub fn is_integrable(&self) -> bool {
        self.c.clone().try_inverse().is_some() && self.det().abs() > 1e-300
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let d = self.det();
        if !(d.abs() > 1e-12 * self.c.norm().powi(self.n() as i32).max(1e-300)) {
            return Err(Error::NonIntegrable(format!("kernel matrix is singular (det {d:.3e})")));
        }
        self.c.clone().try_inverse().ok_or_else(|| Error::NonIntegrable("kernel matrix is singular".into()))
    }

    /// Integral of G^ over R^n.
    pub fn integral(&self) -> Result<f64> {
        self.inverse()?;
        let eps = self.epsilon;
        let m_e = self.m_e;
        let exp_part = if m_e == 0 {
            1.0
        } else {
            let fact: f64 = (1..m_e).map(|k| k as f64).product();
            sphere_area(m_e) * fact / eps.powi(m_e as i32)
        };
        let gauss_part = (PI / eps).powf(self.m_g() as f64 / 2.0);
        Ok(exp_part * gauss_part / self.det().abs())
    }

    /// Largest G^ over the faces |xi_k| = r of the box (over the whole
    /// hyperplane, which bounds the face from above).
    pub fn face_max(&self, r: f64) -> Result<f64> {
        let ci = self.inverse()?;
        let mut worst: f64 = 0.0;
        for k in 0..self.n() {
            let w = ci.row(k);
            let we = (0..self.m_e).map(|j| w[j] * w[j]).sum::<f64>().sqrt();
            let wg = (self.m_e..self.n()).map(|j| w[j] * w[j]).sum::<f64>().sqrt();
            // minimize s + t^2 subject to we s + wg t = r, s, t >= 0
            let cost = if wg == 0.0 {
                r / we
            } else if we == 0.0 {
                (r / wg).powi(2)
            } else {
                let t = wg / (2.0 * we);
                if wg * t <= r {
                    (r - wg * t) / we + t * t
                } else {
                    (r / wg).powi(2)
                }
            };
            worst = worst.max((-self.epsilon * cost).exp());
        }
        Ok(worst)
    }

    /// Smallest box half-width with face_max below 1e-10.
    pub fn default_cutoff(&self) -> Result<f64> {
        let level = 1e-10;
        let mut hi = 1.0;
        while self.face_max(hi)? > level {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(Error::NonIntegrable("kernel does not decay".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.face_max(mid)? > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    pub fn check_cutoff(&self, r: f64) -> Result<()> {
        let g = self.face_max(r)?;
        if g > 1e-10 {
            return Err(Error::CutoffTooSmall(g));
        }
        Ok(())
    }

    /// Short text form for CSV rows and sidecars.
    pub fn describe(&self) -> String {
        let rows: Vec<String> = self
            .c
            .row_iter()
            .map(|r| r.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" "))
            .collect();
        format!("{}(eps={:e};m_e={};C=[{}])", self.kind.name(), self.epsilon, self.m_e, rows.join("; "))
    }
}

/// I_reg / I_ref: the factor the scaled-kernel negativity is divided by.
pub fn norm_factor(reg: &Regularizer, reference: &Regularizer) -> Result<f64> {
    if reg.n() != reference.n() {
        return Err(Error::DimensionMismatch { expected: reference.n(), got: reg.n() });
    }
    if reg == reference {
        return Ok(1.0);
    }
    Ok(reg.integral()? / reference.integral()?)
}

/// The kernel each family is paired with.
pub fn family_regularizer(set: &OperatorSet, epsilon: f64) -> Result<Regularizer> {
    let n = set.n();
    match set.family() {
        Family::MubPauli { n: 2 } | Family::GellMann { n: 2, .. } => Regularizer::exp_iso(2, epsilon),
        Family::MubPauli { .. } | Family::GellMann { .. } | Family::Custom => Regularizer::gauss_iso(n, epsilon),
        Family::NoisyPauli { lambdas, symmetric } => {
            if *symmetric {
                if n == 2 {
                    Regularizer::exp_iso(2, epsilon)
                } else {
                    Regularizer::gauss_iso(n, epsilon)
                }
            } else {
                scaled(lambdas, epsilon)
            }
        }
        Family::NoisyGellMann { lambdas, .. } => scaled(lambdas, epsilon),
        Family::NoisyProj { .. } => {
            let coords = set
                .coords()
                .ok_or_else(|| Error::NonIntegrable("fully noisy projectors have a degenerate kernel".into()))?;
            let m = &coords.map.matrix;
            let c = m.transpose().try_inverse().ok_or(Error::NonIntegrable("singular primed map".into()))?;
            let nb = coords.bloch_dims();
            let m_e = if nb == 2 { 2 } else { 0 };
            let kind = match (m_e > 0, coords.kernel.is_empty()) {
                (true, false) => KernelKind::Mixed,
                (true, true) => KernelKind::ExpScaled,
                (false, _) => KernelKind::GaussScaled,
            };
            Regularizer::new(kind, epsilon, c, m_e)
        }
        fam @ Family::ArbQubitTriple { .. } => {
            Regularizer::new(KernelKind::EtaGauss, epsilon, eta_matrix(fam).expect("triple"), 0)
        }
        fam @ Family::ArbQubitPair { .. } => Regularizer::new(KernelKind::EtaExp, epsilon, eta_matrix(fam).expect("pair"), 2),
    }
}

fn scaled(lambdas: &[f64], epsilon: f64) -> Result<Regularizer> {
    let s: Vec<f64> = lambdas.iter().map(|l| 1.0 - l).collect();
    if s.len() == 2 {
        Regularizer::exp_scaled(&s, epsilon)
    } else {
        Regularizer::gauss_scaled(&s, epsilon)
    }
}
