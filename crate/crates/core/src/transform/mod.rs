//! Numeric regularized inverse Fourier transform
//! W(a) = (2 pi)^{-n} int_{|xi|_inf <= R} e^{-i xi.a} W^(xi) G^(xi) dxi.

mod lattice;
mod ray;

use std::io::Write;

use crate::catalog::OperatorSet;
use crate::charfunc::{CharEvaluator, Weight};
use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::linalg::{eigh, lin_comb, QuantumState};
use crate::regularizer::Regularizer;

pub use lattice::LATTICE_BUDGET;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Lattice,
    Ray,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Lattice => "lattice",
            Engine::Ray => "ray",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub state: String,
    pub set: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    grid: PhaseGrid,
    values: Vec<f64>,
    regularizer: Regularizer,
    provenance: Provenance,
    cutoff: f64,
    engine: Engine,
    imag_ratio: f64,
}

impl WignerField {
    /// A field from precomputed values (tests, closed-form grids).
    pub fn from_values(grid: PhaseGrid, values: Vec<f64>, regularizer: Regularizer, provenance: Provenance) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field has non-finite values".into()));
        }
        Ok(Self { grid, values, regularizer, provenance, cutoff: f64::INFINITY, engine: Engine::Lattice, imag_ratio: 0.0 })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.regularizer
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    /// max|Im| / max|Re| before the imaginary part was dropped.
    pub fn imag_ratio(&self) -> f64 {
        self.imag_ratio
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann integral over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// CSV with header `a1,...,an,w`, row-major, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.grid.n();
        let header: Vec<String> = (1..=n).map(|k| format!("a{k}")).chain(std::iter::once("w".to_string())).collect();
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for (i, v) in self.values.iter().enumerate() {
            line.clear();
            for a in self.grid.point(i) {
                line.push_str(&format!("{a:.16e},"));
            }
            line.push_str(&format!("{v:.16e}"));
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Smallest epsilon the numeric engines accept: below it delta'-type fields
/// are unresolvable at the default grid counts.
pub fn epsilon_floor(n: usize) -> f64 {
    if n <= 2 {
        1e-5
    } else {
        1e-4
    }
}

/// Which engine evaluates a (set, kernel) pair.
pub fn plan_engine(set: &OperatorSet, reg: &Regularizer) -> Result<Engine> {
    if ray::separable(set, reg)?.is_some() {
        Ok(Engine::Ray)
    } else {
        Ok(Engine::Lattice)
    }
}

fn check_dims(set: &OperatorSet, grid: &PhaseGrid, reg: &Regularizer) -> Result<()> {
    if reg.n() != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), got: reg.n() });
    }
    if grid.n() != set.n() {
        return Err(Error::DimensionMismatch { expected: set.n(), got: grid.n() });
    }
    Ok(())
}

pub fn regularized_wigner(
    rho: &QuantumState,
    set: &OperatorSet,
    grid: &PhaseGrid,
    reg: &Regularizer,
    xi_cutoff: f64,
) -> Result<WignerField> {
    if rho.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: rho.dim() });
    }
    weighted_wigner(&Weight::State(rho.clone()), set, grid, reg, xi_cutoff)
}

/// Field of the identity weight, W_I (no 1/d).
pub fn identity_wigner(set: &OperatorSet, grid: &PhaseGrid, reg: &Regularizer, xi_cutoff: f64) -> Result<WignerField> {
    weighted_wigner(&Weight::Identity, set, grid, reg, xi_cutoff)
}

pub fn weighted_wigner(
    weight: &Weight,
    set: &OperatorSet,
    grid: &PhaseGrid,
    reg: &Regularizer,
    xi_cutoff: f64,
) -> Result<WignerField> {
    check_dims(set, grid, reg)?;
    let floor = epsilon_floor(set.n());
    if reg.epsilon() < floor {
        return Err(Error::InvalidParameter(format!(
            "epsilon = {:e} is below the numeric floor {floor:e} for n = {}",
            reg.epsilon(),
            set.n()
        )));
    }
    reg.check_cutoff(xi_cutoff)?;
    let (values, imag_ratio, engine) = match ray::separable(set, reg)? {
        Some(sep) => {
            let (v, r) = ray::ray_field(&sep, weight, set, grid, reg)?;
            (v, r, Engine::Ray)
        }
        None => {
            let ev = CharEvaluator::new(weight, set);
            let (v, r) = lattice::lattice_field(&ev, set, grid, reg, xi_cutoff)?;
            (v, r, Engine::Lattice)
        }
    };
    if imag_ratio > 1e-8 {
        return Err(Error::ImaginaryResidue(imag_ratio));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnderResolved("non-finite field values".into()));
    }
    let provenance = Provenance { state: weight.label(), set: set.family().tag().to_string() };
    Ok(WignerField { grid: grid.clone(), values, regularizer: reg.clone(), provenance, cutoff: xi_cutoff, engine, imag_ratio })
}

/// Number of xi-lattice points the lattice engine would visit (before the
/// kernel ellipsoid test).
pub fn lattice_work(grid: &PhaseGrid, reg: &Regularizer, xi_cutoff: f64) -> Result<f64> {
    lattice::lattice_points(grid, reg, xi_cutoff)
}

/// Lower bound on the distance from a to the joint numerical range, from
/// support functions h(u) = lambda_max(u.A) over the given unit directions.
pub fn support_distance_lower_bound(set: &OperatorSet, a: &[f64], directions: &[Vec<f64>]) -> f64 {
    directions
        .iter()
        .map(|u| {
            let (vals, _) = eigh(&lin_comb(u, set.ops()));
            let h = vals[vals.len() - 1];
            u.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() - h
        })
        .fold(0.0, f64::max)
}

/// Coordinate axes, their negatives and the normalized (+-1, ..., +-1) diagonals.
pub fn probe_directions(n: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for k in 0..n {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; n];
            u[k] = s;
            dirs.push(u);
        }
    }
    if n > 1 {
        let r = 1.0 / (n as f64).sqrt();
        for mask in 0..(1usize << n) {
            dirs.push((0..n).map(|k| if mask >> k & 1 == 1 { -r } else { r }).collect());
        }
    }
    dirs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalReport {
    /// |lhs - rhs| for f = t, t^2, cos t (None where the moment is undefined)
    pub linear: Option<f64>,
    pub quadratic: Option<f64>,
    pub cosine: f64,
}

impl MarginalReport {
    pub fn max(&self) -> f64 {
        [self.linear.unwrap_or(0.0), self.quadratic.unwrap_or(0.0), self.cosine].into_iter().fold(0.0, f64::max)
    }
}

/// Compare int W(a) f(u.a) da with tr[rho f(u.A)] for f in {t, t^2, cos t}.
///
/// Smearing corrections: the kernel adds 2 eps |C_G u|^2 to the variance and
/// multiplies the cos moment by G^(u). Exponential kernels have Cauchy tails,
/// so only the cos moment is compared for them.
pub fn marginal_check(rho: &QuantumState, set: &OperatorSet, direction: &[f64], field: &WignerField) -> Result<MarginalReport> {
    let n = set.n();
    if direction.len() != n || field.grid().n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: direction.len() });
    }
    let reg = field.regularizer();
    let eps = reg.epsilon();
    check_coverage(set, field.grid(), reg, 3.0)?;

    let grid = field.grid();
    let dv = grid.cell_volume();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    let mut mc = 0.0;
    for (i, w) in field.values().iter().enumerate() {
        let t: f64 = grid.point(i).iter().zip(direction).map(|(a, u)| a * u).sum();
        m1 += w * t;
        m2 += w * t * t;
        mc += w * t.cos();
    }
    m1 *= dv;
    m2 *= dv;
    mc *= dv;

    let (vals, vecs) = eigh(&lin_comb(direction, set.ops()));
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    let mut ec = 0.0;
    for (j, mu) in vals.iter().enumerate() {
        let v = vecs.column(j);
        let p = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
        e1 += p * mu;
        e2 += p * mu * mu;
        ec += p * mu.cos();
    }
    let (_, g2) = reg.parts(direction);
    ec *= reg.ghat(direction);
    let cosine = (mc - ec).abs();
    if reg.m_e() > 0 {
        return Ok(MarginalReport { linear: None, quadratic: None, cosine });
    }
    e2 += 2.0 * eps * g2;
    Ok(MarginalReport { linear: Some((m1 - e1).abs()), quadratic: Some((m2 - e2).abs()), cosine })
}

/// The grid must contain the joint numerical range padded by `widths` kernel
/// widths sqrt(eps) |C L^{-T} e_j| (checked per grid axis in the grid's own
/// coordinates x, a = L x + o).
pub fn check_coverage(set: &OperatorSet, grid: &PhaseGrid, reg: &Regularizer, widths: f64) -> Result<()> {
    let n = set.n();
    let l_inv = grid
        .frame_matrix()
        .try_inverse()
        .ok_or_else(|| Error::InvalidGrid("singular frame".into()))?;
    let x_off = &l_inv * grid.frame_offset();
    let kernel_x = reg.matrix() * l_inv.transpose();
    for j in 0..n {
        let row: Vec<f64> = (0..n).map(|k| l_inv[(j, k)]).collect();
        let (vals, _) = eigh(&lin_comb(&row, set.ops()));
        let margin = widths * reg.epsilon().sqrt() * kernel_x.column(j).norm();
        let lo = vals[0] - x_off[j] - margin;
        let hi = vals[vals.len() - 1] - x_off[j] + margin;
        let ax = grid.axes()[j];
        if lo < ax.min || hi > ax.max {
            return Err(Error::InsufficientSupport(format!(
                "axis {} covers [{:.4}, {:.4}], needs [{:.4}, {:.4}]",
                j + 1,
                ax.min,
                ax.max,
                lo,
                hi
            )));
        }
    }
    Ok(())
}
