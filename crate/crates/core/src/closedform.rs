//! Analytic Wigner functions and negative volumes of the built-in families.
//!
//! Every family reduces, in its primed coordinates x (a'' for the equal-noise
//! family), to one of three shapes times the factor c = (1/N)(1 + t.x):
//!
//!   line   n = 1 Bloch direction, two Gaussians at x = +-R
//!   disk   -R / (pi (R^2 - |x|^2)^{3/2}) inside |x| < R
//!   shell  -(delta'(|x| - R) + delta'(|x| + R) + (N-2) delta'(|x|)) / (2 pi |x|)
//!
//! with delta(u) = e^{-u^2/4eps}/sqrt(4 pi eps) and a Gaussian delta for every
//! pure kernel coordinate. The delta'(|x| + R) term is exponentially small; it
//! keeps the shell finite at the origin and makes it the exact Gaussian
//! regularization of W_I.

use crate::catalog::{Family, OperatorSet, AffineMap};
use crate::charfunc::bloch_weights;
use crate::error::{Error, Result};
use crate::linalg::QuantumState;
use crate::regularizer::{family_regularizer, KernelKind};
use crate::special::{erfc, gauss_legendre};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Line,
    Disk,
    Shell,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Line => "line",
            Shape::Disk => "disk",
            Shape::Shell => "shell",
        }
    }

    fn of(bloch_dims: usize) -> Self {
        match bloch_dims {
            1 => Shape::Line,
            2 => Shape::Disk,
            _ => Shape::Shell,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedFormCase {
    set: OperatorSet,
    shape: Shape,
    /// kernel the analytic form assumes (None when it degenerates, lambda = 1)
    kernel: Option<KernelKind>,
    /// a -> x; None when the family has no primed frame at these parameters
    frame: Option<AffineMap>,
    kernel_coords: Vec<usize>,
    radius: f64,
    /// |dx/da|
    jacobian: f64,
    dim: usize,
}

/// Singular-mask default for disk shapes: (R - |x|) > 3 sqrt(eps).
pub fn default_mask(epsilon: f64) -> f64 {
    3.0 * epsilon.sqrt()
}

/// Gaussian delta of width sqrt(2 eps).
pub fn delta(u: f64, epsilon: f64) -> f64 {
    (-u * u / (4.0 * epsilon)).exp() / (4.0 * PI * epsilon).sqrt()
}

/// d/du of the Gaussian delta.
pub fn delta_prime(u: f64, epsilon: f64) -> f64 {
    -u / (2.0 * epsilon) * delta(u, epsilon)
}

fn delta_second(u: f64, epsilon: f64) -> f64 {
    (u * u / (4.0 * epsilon * epsilon) - 1.0 / (2.0 * epsilon)) * delta(u, epsilon)
}

/// Number of Bloch directions for a projector sign pattern (pairs count once).
fn projector_dims(signs: &[(usize, crate::catalog::Sign)]) -> usize {
    let mut axes: Vec<usize> = signs.iter().map(|(a, _)| *a).collect();
    axes.sort_unstable();
    axes.dedup();
    axes.len()
}

impl ClosedFormCase {
    pub fn new(set: &OperatorSet) -> Result<Self> {
        let family = set.family();
        let bloch_dims = match family {
            Family::Custom => return Err(Error::UnknownCase("CUSTOM operator sets have no closed form".into())),
            Family::NoisyProj { signs, .. } => projector_dims(signs),
            _ => set.n(),
        };
        let (frame, radius, jacobian) = match set.coords() {
            None => (None, 0.0, f64::INFINITY),
            Some(coords) => match &coords.secondary {
                Some(sec) => (Some(sec.clone()), 1.0 / coords.map.matrix[(0, 0)], 1.0),
                None => (Some(coords.map.clone()), 1.0, coords.map.det().abs()),
            },
        };
        let kernel_coords = set.coords().map(|c| c.kernel.clone()).unwrap_or_default();
        Ok(Self {
            set: set.clone(),
            shape: Shape::of(bloch_dims),
            kernel: family_regularizer(set, 1.0).ok().map(|r| r.kind()),
            frame,
            kernel_coords,
            radius,
            jacobian,
            dim: set.dim(),
        })
    }

    pub fn family(&self) -> &Family {
        self.set.family()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn kernel(&self) -> Option<KernelKind> {
        self.kernel
    }

    /// Identifier of the analytic expression, e.g. `NOISY_PROJ_MIXED/disk+1`.
    pub fn expression(&self) -> String {
        let extra = if self.kernel_coords.is_empty() { String::new() } else { format!("+{}", self.kernel_coords.len()) };
        format!("{}/{}{}", self.family().tag(), self.shape.name(), extra)
    }

    /// Radius of the singular set in x (1 - lambda for the equal-noise family).
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn jacobian(&self) -> f64 {
        self.jacobian
    }

    /// Primed coordinates of a phase-space point.
    pub fn primed(&self, a: &[f64]) -> Result<Vec<f64>> {
        let frame = self.frame.as_ref().ok_or_else(|| Error::UnknownCase("degenerate family (lambda = 1)".into()))?;
        if a.len() != frame.n() {
            return Err(Error::DimensionMismatch { expected: frame.n(), got: a.len() });
        }
        Ok(frame.apply(a))
    }

    /// |x_Bloch| and (R - |x_Bloch|) of a phase-space point.
    pub fn shell_distance(&self, a: &[f64]) -> Result<f64> {
        let x = self.primed(a)?;
        let nb = self.bloch_len();
        Ok(self.radius - x[..nb].iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn bloch_len(&self) -> usize {
        match self.shape {
            Shape::Line => 1,
            Shape::Disk => 2,
            Shape::Shell => 3,
        }
    }
}

/// Closed-form regularized W_rho(a).
pub fn wigner_closed(case: &ClosedFormCase, rho: &QuantumState, a: &[f64], epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    let x = case.primed(a)?;
    let t = bloch_weights(rho, &case.set)?;
    let nb = case.bloch_len();
    let big_r = case.radius;
    let n_dim = case.dim as f64;
    let tx: f64 = t.iter().zip(&x).map(|(t, x)| t * x).sum::<f64>() / big_r;
    let c = (1.0 + tx) / n_dim;
    let kernel: f64 = case.kernel_coords.iter().map(|&k| delta(x[k], epsilon)).product();
    let r = x[..nb].iter().map(|v| v * v).sum::<f64>().sqrt();
    let w = match case.shape {
        Shape::Line => {
            // exact: weights (1 +- t)/N sit on the two eigenvalues
            let plus = (1.0 + t[0]) / n_dim;
            let minus = (1.0 - t[0]) / n_dim;
            plus * delta(x[0] - big_r, epsilon) + minus * delta(x[0] + big_r, epsilon)
        }
        Shape::Disk => {
            let gap = big_r - r;
            if gap.abs() < 1e-12 {
                return Err(Error::SingularPoint(gap.abs()));
            }
            if gap < 0.0 {
                0.0
            } else {
                -c * big_r / (PI * (big_r * big_r - r * r).powf(1.5))
            }
        }
        Shape::Shell => {
            // delta'(r - R) + delta'(r + R) over r, and -delta'(r)/r = delta(r)/(2 eps)
            let ring = if r < 1e-8 {
                2.0 * delta_second(big_r, epsilon)
            } else {
                (delta_prime(r - big_r, epsilon) + delta_prime(r + big_r, epsilon)) / r
            };
            let origin = (n_dim - 2.0) * delta(r, epsilon) / (2.0 * epsilon);
            c * (-ring + origin) / (2.0 * PI)
        }
    };
    Ok(case.jacobian * w * kernel)
}

/// Closed-form negative volume, as a ratio to the qubit MUB baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedNegativity {
    /// normalized negativity / qubit MUB baseline at the same n and mask
    pub ratio: f64,
    /// ratio * baseline
    pub absolute: f64,
    pub baseline: f64,
    pub reference_kernel: KernelKind,
    /// singular mask width (disk shapes only)
    pub mask: Option<f64>,
}

/// Negative volume of the masked n=2 MUB form, -(1/sqrt(2 delta - delta^2) - 1) * 2/N.
fn disk_reference(dim: usize, mask: f64) -> Result<f64> {
    if !(mask > 0.0 && mask < 1.0) {
        return Err(Error::InvalidParameter(format!("mask {mask} outside (0, 1)")));
    }
    // int_0^{1-mask} rho (1 - rho^2)^{-3/2} d rho with s = 1 - rho = e^u
    let (x, w) = gauss_legendre(20);
    let panels = 16;
    let (lo, hi) = (mask.ln(), 0.0);
    let h = (hi - lo) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let u = a + 0.5 * h * (xi + 1.0);
            let s = u.exp();
            let rho = 1.0 - s;
            sum += 0.5 * h * wi * s * rho / (s * (2.0 - s)).powf(1.5);
        }
    }
    Ok(-sum * 2.0 / dim as f64)
}

/// Negative volume of the n=3 MUB form, -(1/2)(-1 + 1/sqrt(pi eps) + erfc(1/(2 sqrt eps))) * 2/N.
fn shell_reference(dim: usize, epsilon: f64) -> f64 {
    -0.5 * (-1.0 + 1.0 / (PI * epsilon).sqrt() + erfc(1.0 / (2.0 * epsilon.sqrt()))) * 2.0 / dim as f64
}

/// Baseline negative volume of the MUB form for n Bloch directions and qudit
/// dimension N. n = 2 pairs with EXP_ISO and needs a mask; n = 3 pairs with
/// GAUSS_ISO.
pub fn mub_reference(n: usize, dim: usize, epsilon: f64, kernel: KernelKind, mask: Option<f64>) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    if dim < 2 {
        return Err(Error::BadDim(format!("N = {dim} < 2")));
    }
    match (n, kernel) {
        (2, KernelKind::ExpIso) => disk_reference(dim, mask.unwrap_or_else(|| default_mask(epsilon))),
        (3, KernelKind::GaussIso) => Ok(shell_reference(dim, epsilon)),
        _ => Err(Error::InvalidParameter(format!(
            "no MUB baseline for n = {n} with {} (use n=2 EXP_ISO or n=3 GAUSS_ISO)",
            kernel.name()
        ))),
    }
}

fn symm_shell_absolute(lambda: f64, epsilon: f64) -> f64 {
    let x = lambda - 1.0;
    0.5 * (-1.0 + x / (PI * epsilon).sqrt() + erfc(x / (2.0 * epsilon.sqrt())))
}

/// Closed-form negativity. The ratio is independent of the state; for disk
/// shapes it is taken at the singular mask (default 3 sqrt(eps)).
pub fn negativity_closed(case: &ClosedFormCase, epsilon: f64, mask: Option<f64>) -> Result<ClosedNegativity> {
    let family = case.family();
    let (kernel, n_ref) = match case.shape {
        Shape::Disk => (KernelKind::ExpIso, 2),
        Shape::Shell => (KernelKind::GaussIso, 3),
        Shape::Line => {
            // one Bloch direction: the field is a pair of positive bumps
            return Ok(ClosedNegativity {
                ratio: 0.0,
                absolute: 0.0,
                baseline: 0.0,
                reference_kernel: KernelKind::GaussIso,
                mask: None,
            });
        }
    };
    let mask = match case.shape {
        Shape::Disk => Some(mask.unwrap_or_else(|| default_mask(epsilon))),
        _ => None,
    };
    let baseline = mub_reference(n_ref, 2, epsilon, kernel, mask)?;
    let product = |ls: &[f64]| ls.iter().map(|l| 1.0 - l).product::<f64>();
    let ratio = match family {
        Family::MubPauli { .. } => 1.0,
        Family::NoisyProj { signs, lambda } => {
            // 1 / |det M|: (1 - lambda)/2 per single projector, (1 - lambda)^2/2 per +- pair
            let dims = projector_dims(signs);
            let pairs = signs.len() - dims;
            let singles = dims - pairs;
            let s = 1.0 - lambda;
            (s / 2.0).powi(singles as i32) * (s * s / 2.0).powi(pairs as i32)
        }
        Family::NoisyPauli { lambdas, symmetric: false } => product(lambdas),
        Family::NoisyPauli { lambdas, symmetric: true } => {
            let l = lambdas[0];
            match case.shape {
                Shape::Shell => symm_shell_absolute(l, epsilon) / baseline,
                _ => {
                    // mask in a'' units: the kernel is unscaled
                    let r = 1.0 - l;
                    let m = mask.expect("disk mask");
                    if m >= r {
                        0.0
                    } else {
                        disk_reference(2, m / r)? / baseline
                    }
                }
            }
        }
        &Family::ArbQubitTriple { theta1, phi1, theta2, phi2 } => {
            crate::catalog::coplanarity_factor(theta1, phi1, theta2, phi2)
        }
        Family::ArbQubitPair { beta } => beta.abs(),
        Family::GellMann { dim, .. } => 2.0 / *dim as f64,
        Family::NoisyGellMann { dim, lambdas } => 2.0 / *dim as f64 * product(lambdas),
        Family::Custom => unreachable!("rejected in ClosedFormCase::new"),
    };
    Ok(ClosedNegativity { ratio, absolute: ratio * baseline, baseline, reference_kernel: kernel, mask })
}
