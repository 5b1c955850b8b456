//! Trapezoid rule on the xi-lattice dual to the grid, alias-folded into one
//! period and finished with an n-D FFT.
//!
//! With a = F i + a0 (F = L diag(h)) the lattice xi_k = F^{-T} (2 pi k / N)
//! makes e^{-i xi_k . a_i} = e^{-2 pi i k.i/N} e^{-i k.phi}, so every lattice
//! point of the truncated box contributes to bin k mod N.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::catalog::OperatorSet;
use crate::charfunc::CharEvaluator;
use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::linalg::{eigh, lin_comb, C64};
use crate::regularizer::Regularizer;

/// ln(1e15): lattice points with G^ below e^{-T} are skipped.
const SKIP: f64 = 34.538776394910684;
/// Alias margin in kernel standard deviations.
const ALIAS_SIGMAS: f64 = 5.0;
pub const LATTICE_BUDGET: f64 = 4e8;

pub(crate) struct Geometry {
    n: usize,
    counts: Vec<usize>,
    f_inv: DMatrix<f64>,
    det_f: f64,
    /// xi = g k
    g: DMatrix<f64>,
    phi: Vec<f64>,
    a0_local: DVector<f64>,
}

impl Geometry {
    pub(crate) fn new(grid: &PhaseGrid) -> Result<Self> {
        let n = grid.n();
        let counts = grid.counts();
        let h = grid.steps();
        let l = grid.frame_matrix();
        let f = &l * DMatrix::from_diagonal(&DVector::from_column_slice(&h));
        let f_inv = f.clone().try_inverse().ok_or_else(|| Error::InvalidGrid("singular grid frame".into()))?;
        let xmin = DVector::from_iterator(n, grid.axes().iter().map(|a| a.min));
        let a0 = &l * xmin + grid.frame_offset();
        let a0_local = &f_inv * &a0;
        let scale = DMatrix::from_diagonal(&DVector::from_iterator(
            n,
            counts.iter().map(|&c| 2.0 * std::f64::consts::PI / c as f64),
        ));
        let g = f_inv.transpose() * scale;
        let phi = (0..n).map(|j| 2.0 * std::f64::consts::PI * a0_local[j] / counts[j] as f64).collect();
        Ok(Self { n, det_f: f.determinant().abs(), counts, f_inv, g, phi, a0_local })
    }
}

/// Field support (numerical range plus kernel spread) must fit in one period.
pub(crate) fn alias_check(geo: &Geometry, set: &OperatorSet, reg: &Regularizer) -> Result<()> {
    let n = geo.n;
    let c = reg.matrix();
    let m_e = reg.m_e();
    let cg = c.rows(m_e, n - m_e).into_owned();
    let cov = geo.f_inv.clone() * (cg.transpose() * &cg) * geo.f_inv.transpose() * (2.0 * reg.epsilon());
    let ce = c.rows(0, m_e).into_owned();
    let spread_e = &geo.f_inv * ce.transpose();
    for j in 0..n {
        let coeffs: Vec<f64> = (0..n).map(|k| geo.f_inv[(j, k)]).collect();
        let (vals, _) = eigh(&lin_comb(&coeffs, set.ops()));
        let lo = vals[0] - geo.a0_local[j];
        let hi = vals[vals.len() - 1] - geo.a0_local[j];
        // exponential parts have algebraic tails; 30 scale lengths is a heuristic
        let sigma = cov[(j, j)].max(0.0).sqrt() + 30.0 * reg.epsilon() * spread_e.row(j).norm();
        let big_n = geo.counts[j] as f64;
        let t = ALIAS_SIGMAS * sigma;
        if lo < t - 1.0 || hi > big_n - t {
            return Err(Error::UnderResolved(format!(
                "axis {}: support [{:.1}, {:.1}] +- {:.1} cells does not fit in a period of {} cells",
                j + 1,
                lo,
                hi,
                t,
                geo.counts[j]
            )));
        }
    }
    Ok(())
}

struct Bounds {
    kmax: Vec<i64>,
}

fn bounds(geo: &Geometry, reg: &Regularizer, cutoff: f64) -> Result<Bounds> {
    let n = geo.n;
    let eps = reg.epsilon();
    let cgk = reg.matrix() * &geo.g;
    let kz = cgk.try_inverse().ok_or_else(|| Error::NonIntegrable("singular kernel".into()))?;
    let g_inv = geo.g.clone().try_inverse().ok_or_else(|| Error::InvalidGrid("singular lattice".into()))?;
    let m_e = reg.m_e();
    let mut kmax = Vec::with_capacity(n);
    for j in 0..n {
        let row = kz.row(j);
        let re = (0..m_e).map(|l| row[l] * row[l]).sum::<f64>().sqrt();
        let rg = (m_e..n).map(|l| row[l] * row[l]).sum::<f64>().sqrt();
        let by_kernel = re * SKIP / eps + rg * (SKIP / eps).sqrt();
        let by_box: f64 = g_inv.row(j).iter().map(|v| v.abs()).sum::<f64>() * cutoff;
        kmax.push(by_kernel.min(by_box).floor() as i64);
    }
    Ok(Bounds { kmax })
}

pub(crate) fn lattice_points(grid: &PhaseGrid, reg: &Regularizer, cutoff: f64) -> Result<f64> {
    let geo = Geometry::new(grid)?;
    let b = bounds(&geo, reg, cutoff)?;
    Ok(b.kmax.iter().map(|&k| (2 * k + 1) as f64).product())
}

/// Returns (field values in row-major grid order, max|Im| / max|Re|).
pub(crate) fn lattice_field(
    ev: &CharEvaluator,
    set: &OperatorSet,
    grid: &PhaseGrid,
    reg: &Regularizer,
    cutoff: f64,
) -> Result<(Vec<f64>, f64)> {
    let geo = Geometry::new(grid)?;
    alias_check(&geo, set, reg)?;
    let b = bounds(&geo, reg, cutoff)?;
    let work: f64 = b.kmax.iter().map(|&k| (2 * k + 1) as f64).product();
    if work > LATTICE_BUDGET {
        return Err(Error::QuadratureBudget(format!("{work:.3e} lattice points exceed {LATTICE_BUDGET:.0e}")));
    }
    let n = geo.n;
    let total: usize = geo.counts.iter().product();
    let slab = total / geo.counts[0];
    let mut sums = vec![C64::new(0.0, 0.0); total];
    let eps = reg.epsilon();
    let m_e = reg.m_e();
    let cgk = reg.matrix() * &geo.g;
    let n0 = geo.counts[0] as i64;
    sums.par_chunks_mut(slab).enumerate().for_each(|(q0, chunk)| {
        let mut k = vec![0i64; n];
        let mut xi = vec![0.0; n];
        let mut zeta = vec![0.0; n];
        let first = -b.kmax[0] + (q0 as i64 + b.kmax[0]).rem_euclid(n0);
        let mut k0 = first;
        while k0 <= b.kmax[0] {
            k[0] = k0;
            // odometer over the remaining axes
            for (j, kj) in k.iter_mut().enumerate().skip(1) {
                *kj = -b.kmax[j];
            }
            'outer: loop {
                for r in 0..n {
                    xi[r] = (0..n).map(|j| geo.g[(r, j)] * k[j] as f64).sum();
                    zeta[r] = (0..n).map(|j| cgk[(r, j)] * k[j] as f64).sum();
                }
                if xi.iter().all(|x| x.abs() <= cutoff) {
                    let e = zeta[..m_e].iter().map(|z| z * z).sum::<f64>().sqrt();
                    let g2 = zeta[m_e..].iter().map(|z| z * z).sum::<f64>();
                    let expo = eps * (e + g2);
                    if expo <= SKIP {
                        let theta: f64 = (0..n).map(|j| k[j] as f64 * geo.phi[j]).sum();
                        let v = ev.eval(&xi) * C64::from_polar((-expo).exp(), -theta);
                        let mut idx = 0usize;
                        for j in 1..n {
                            idx = idx * geo.counts[j] + k[j].rem_euclid(geo.counts[j] as i64) as usize;
                        }
                        chunk[idx] += v;
                    }
                }
                let mut j = n - 1;
                loop {
                    if j == 0 {
                        break 'outer;
                    }
                    if k[j] < b.kmax[j] {
                        k[j] += 1;
                        break;
                    }
                    k[j] = -b.kmax[j];
                    j -= 1;
                }
            }
            k0 += n0;
        }
    });
    fft_nd(&mut sums, &geo.counts);
    let norm = 1.0 / (geo.det_f * total as f64);
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    let values: Vec<f64> = sums
        .iter()
        .map(|z| {
            max_re = max_re.max(z.re.abs());
            max_im = max_im.max(z.im.abs());
            z.re * norm
        })
        .collect();
    let ratio = if max_re > 0.0 { max_im / max_re } else { 0.0 };
    Ok((values, ratio))
}

/// In-place forward FFT along every axis of a row-major array.
fn fft_nd(data: &mut [C64], counts: &[usize]) {
    let mut planner = FftPlanner::<f64>::new();
    let total = data.len();
    let mut stride = total;
    for &len in counts {
        stride /= len;
        let fft = planner.plan_fft_forward(len);
        let block = len * stride;
        let lines: Vec<usize> =
            (0..total / block).flat_map(|outer| (0..stride).map(move |inner| outer * block + inner)).collect();
        let mut buf = vec![C64::new(0.0, 0.0); len];
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for start in lines {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = data[start + i * stride];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (i, b) in buf.iter().enumerate() {
                data[start + i * stride] = *b;
            }
        }
    }
}
