//! Exponential kernels in polar form.
//!
//! In the canonical frame zeta = C xi the exponential block is
//! e^{-eps |zeta_E|}. For m_E = 2 the radial integral is analytic per
//! eigenbranch of Omega(theta).B:
//!   W_E(b) = (2 pi)^{-2} int dtheta sum_j p_j / (eps - i u_j)^2,  u_j = mu_j - Omega.b,
//! leaving a 1-D angular integral with spikes where u_j crosses 0.
//! Panels holding a root are integrated by parts (exact boundary terms plus a
//! smooth remainder); near-tangent panels fall back to adaptive Gauss-Kronrod.
//! For m_E = 1 it is a sum of Lorentzians. Gaussian canonical directions
//! whose operators are multiples of I factor out as a plain Gaussian.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::catalog::OperatorSet;
use crate::charfunc::Weight;
use crate::error::{Error, Result};
use crate::grid::PhaseGrid;
use crate::linalg::{eigh, ComplexMatrix, C64};
use crate::regularizer::Regularizer;
use crate::special::{adaptive_gk, gauss_legendre};

const PANELS: usize = 256;
const NODES: usize = 16;
const ABS_TOL: f64 = 1e-8;
const REL_TOL: f64 = 1e-10;
const MAX_INTERVALS: usize = 500;

/// The canonical operators B_l = sum_k (C^{-1})_{kl} A_k, or None if some
/// Gaussian direction is not a multiple of the identity.
pub(crate) struct Separable {
    b_e: Vec<ComplexMatrix>,
    /// B_l = c_l I for the Gaussian directions
    c_g: Vec<f64>,
}

pub(crate) fn separable(set: &OperatorSet, reg: &Regularizer) -> Result<Option<Separable>> {
    let m_e = reg.m_e();
    if m_e == 0 || m_e > 2 {
        return Ok(None);
    }
    let ci = reg.inverse()?;
    let n = set.n();
    let d = set.dim();
    let mut b_e = Vec::new();
    let mut c_g = Vec::new();
    for l in 0..n {
        let mut b = ComplexMatrix::zeros(d, d);
        for k in 0..n {
            b += set.ops()[k].matrix() * C64::new(ci[(k, l)], 0.0);
        }
        if l < m_e {
            b_e.push(b);
        } else {
            let c = (0..d).map(|i| b[(i, i)].re).sum::<f64>() / d as f64;
            let resid = (&b - ComplexMatrix::identity(d, d) * C64::new(c, 0.0)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if resid > 1e-12 * (1.0 + c.abs()) {
                return Ok(None);
            }
            c_g.push(c);
        }
    }
    Ok(Some(Separable { b_e, c_g }))
}

/// Eigenvalues of h ascending, with p_j = <v_j|W|v_j> averaged over
/// numerically degenerate clusters so both vary smoothly with theta.
fn branches(h: &ComplexMatrix, w: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let (vals, vecs) = eigh(h);
    let d = vals.len();
    let mut p: Vec<f64> = (0..d)
        .map(|j| {
            let v = vecs.column(j);
            (v.adjoint() * w * v)[(0, 0)].re
        })
        .collect();
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && vals[end] - vals[end - 1] < 1e-9 * scale {
            end += 1;
        }
        if end - start > 1 {
            let avg = p[start..end].iter().sum::<f64>() / (end - start) as f64;
            p[start..end].iter_mut().for_each(|x| *x = avg);
        }
        start = end;
    }
    (vals, p)
}

struct Panel {
    lo: f64,
    hi: f64,
    /// endpoints first and last, Gauss-Legendre nodes in between
    theta: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    /// per branch j, values at the nodes: mu, mu', mu'', p, p'
    mu: Vec<Vec<f64>>,
    dmu: Vec<Vec<f64>>,
    ddmu: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
    dp: Vec<Vec<f64>>,
}

pub(crate) struct RayPlan {
    eps: f64,
    m: usize,
    // m = 1
    mu1: Vec<f64>,
    p1: Vec<f64>,
    // m = 2
    panels: Vec<Panel>,
    op_scale: f64,
    /// shared by all panels (same node offsets)
    gl_weight: Vec<f64>,
    bary: Vec<f64>,
    diff: Vec<Vec<f64>>,
}

const BY_PARTS_LEVELS: usize = 5;

fn apply(d: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    d.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

impl RayPlan {
    pub(crate) fn new(sep: &Separable, weight: &ComplexMatrix, eps: f64) -> Self {
        let m = sep.b_e.len();
        if m == 1 {
            let (mu1, p1) = branches(&sep.b_e[0], weight);
            return Self { eps, m, mu1, p1, panels: vec![], op_scale: 0.0, gl_weight: vec![], bary: vec![], diff: vec![] };
        }
        let (x, w) = gauss_legendre(NODES);
        let width = 2.0 * PI / PANELS as f64;
        let mut offs = vec![0.0];
        offs.extend(x.iter().map(|t| 0.5 * width * (t + 1.0)));
        offs.push(width);
        let k = offs.len();
        let mut gl_weight = vec![0.0];
        gl_weight.extend(w.iter().map(|v| 0.5 * width * v));
        gl_weight.push(0.0);
        let bary: Vec<f64> = (0..k)
            .map(|a| 1.0 / (0..k).filter(|&b| b != a).map(|b| (offs[a] - offs[b]) / width).product::<f64>())
            .collect();
        // differentiation matrix of the interpolant through the nodes
        let mut diff = vec![vec![0.0; k]; k];
        for i in 0..k {
            let mut diag = 0.0;
            for j in 0..k {
                if i != j {
                    diff[i][j] = bary[j] / bary[i] / (offs[i] - offs[j]);
                    diag -= diff[i][j];
                }
            }
            diff[i][i] = diag;
        }
        let norm = |b: &ComplexMatrix| {
            let (v, _) = eigh(b);
            v[0].abs().max(v[v.len() - 1].abs())
        };
        let op_scale = (norm(&sep.b_e[0]).powi(2) + norm(&sep.b_e[1]).powi(2)).sqrt();
        let d = weight.nrows();
        let panels = (0..PANELS)
            .map(|i| {
                let lo = i as f64 * width;
                let theta: Vec<f64> = offs.iter().map(|o| lo + o).collect();
                let cos: Vec<f64> = theta.iter().map(|t| t.cos()).collect();
                let sin: Vec<f64> = theta.iter().map(|t| t.sin()).collect();
                let mut mu = vec![vec![0.0; k]; d];
                let mut p = vec![vec![0.0; k]; d];
                for q in 0..k {
                    let h = &sep.b_e[0] * C64::new(cos[q], 0.0) + &sep.b_e[1] * C64::new(sin[q], 0.0);
                    let (vals, ps) = branches(&h, weight);
                    for j in 0..d {
                        mu[j][q] = vals[j];
                        p[j][q] = ps[j];
                    }
                }
                let dmu: Vec<Vec<f64>> = mu.iter().map(|v| apply(&diff, v)).collect();
                let ddmu = dmu.iter().map(|v| apply(&diff, v)).collect();
                let dp = p.iter().map(|v| apply(&diff, v)).collect();
                Panel { lo, hi: lo + width, theta, cos, sin, mu, dmu, ddmu, p, dp }
            })
            .collect();
        Self { eps, m, mu1: vec![], p1: vec![], panels, op_scale, gl_weight, bary, diff }
    }

    /// (Re, Im) of W_E(b).
    pub(crate) fn eval(&self, b: &[f64]) -> Result<[f64; 2]> {
        let eps = self.eps;
        if self.m == 1 {
            let s: f64 = self.mu1.iter().zip(&self.p1).map(|(mu, p)| p * eps / (eps * eps + (mu - b[0]).powi(2))).sum();
            return Ok([s / PI, 0.0]);
        }
        let e2 = eps * eps;
        let kernel = |u: f64| {
            let den = e2 + u * u;
            let den2 = den * den;
            [(e2 - u * u) / den2, 2.0 * eps * u / den2]
        };
        let bn = (b[0] * b[0] + b[1] * b[1]).sqrt();
        let slope = self.op_scale + bn;
        let mut total = [0.0; 2];
        let k = NODES + 2;
        let last = k - 1;
        let mut ob = [0.0; NODES + 2];
        let mut u = [0.0; NODES + 2];
        for panel in &self.panels {
            let width = panel.hi - panel.lo;
            for q in 0..k {
                ob[q] = panel.cos[q] * b[0] + panel.sin[q] * b[1];
            }
            for j in 0..panel.mu.len() {
                let mu = &panel.mu[j];
                let p = &panel.p[j];
                let mut umin = f64::INFINITY;
                for q in 0..k {
                    u[q] = mu[q] - ob[q];
                    umin = umin.min(u[q].abs());
                }
                // a pole (root of eps - iu) further than width/2 from the panel
                // leaves GL16 exact to rounding
                let reach = 0.5 * width * slope;
                if (u[0].signum() == u[last].signum() && umin >= reach) || eps >= reach {
                    for q in 1..last {
                        let kq = kernel(u[q]);
                        total[0] += self.gl_weight[q] * p[q] * kq[0];
                        total[1] += self.gl_weight[q] * p[q] * kq[1];
                    }
                    continue;
                }
                let r = match self.by_parts(panel, j, b, &u) {
                    Some(r) => r,
                    None => self.adaptive(panel, j, b, slope)?,
                };
                total[0] += r[0];
                total[1] += r[1];
            }
        }
        let s = 1.0 / (4.0 * PI * PI);
        Ok([total[0] * s, total[1] * s])
    }

    /// Branch j over one panel by two integrations by parts:
    ///   int p/(eps - iu)^2 = [r/(eps - iu)] - [s log(eps - iu)] + int s' log(eps - iu),
    /// with r = -i p/u' and s = (p'u' - p u'')/u'^3. Needs u' bounded away from 0.
    fn by_parts(&self, panel: &Panel, j: usize, b: &[f64], u: &[f64]) -> Option<[f64; 2]> {
        let k = NODES + 2;
        let last = k - 1;
        let mut du = vec![0.0; k];
        let mut s = vec![0.0; k];
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for q in 0..k {
            // Omega' . b and Omega'' . b = -Omega . b
            let obp = -panel.sin[q] * b[0] + panel.cos[q] * b[1];
            let ob = panel.cos[q] * b[0] + panel.sin[q] * b[1];
            du[q] = panel.dmu[j][q] - obp;
            let ddu = panel.ddmu[j][q] + ob;
            lo = lo.min(du[q].abs());
            hi = hi.max(du[q].abs());
            s[q] = (panel.dp[j][q] * du[q] - panel.p[j][q] * ddu) / du[q].powi(3);
        }
        // without a root within a panel width the boundary terms are large and
        // cancel; those (near-tangent) cases go to the adaptive rule
        let umin = u.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        let width = panel.hi - panel.lo;
        let crosses = u[0].signum() != u[last].signum();
        // with eps comparable to the panel the repeated derivatives lose digits
        let slope = self.op_scale + b[0].hypot(b[1]);
        let wide = self.eps > 0.03 * width * slope;
        if wide || !(lo > 0.7 * hi && lo > 0.0) || !(crosses || umin < width * lo) {
            return None;
        }
        let eps = self.eps;
        let z: Vec<C64> = u.iter().map(|&v| C64::new(eps, -v)).collect();
        let edge = |q: usize| C64::new(0.0, -panel.p[j][q] / du[q]) / z[q] - z[q].ln() * s[q];
        let mut acc = edge(last) - edge(0);
        // the remainder int g Phi_0, Phi_0 = log z, still has a log kink at the
        // root; d Phi_{k+1} = Phi_k dz moves it into z^k log z
        // Phi_k = z^k / k! (log z - H_k)
        let phi = |k: usize, z: C64| {
            let mut c = C64::new(1.0, 0.0);
            let mut harmonic = 0.0;
            for i in 1..=k {
                c *= z / i as f64;
                harmonic += 1.0 / i as f64;
            }
            c * (z.ln() - harmonic)
        };
        let mut g: Vec<C64> = apply(&self.diff, &s).into_iter().map(|v| C64::new(v, 0.0)).collect();
        for k in 0..BY_PARTS_LEVELS {
            // h = g / (dz/dtheta), dz/dtheta = -i u'
            let h: Vec<C64> = (0..g.len()).map(|q| g[q] / C64::new(0.0, -du[q])).collect();
            acc += h[last] * phi(k + 1, z[last]) - h[0] * phi(k + 1, z[0]);
            g = (0..h.len())
                .map(|i| -(0..h.len()).map(|c| h[c] * self.diff[i][c]).sum::<C64>())
                .collect();
        }
        for q in 1..last {
            acc += g[q] * phi(BY_PARTS_LEVELS, z[q]) * self.gl_weight[q];
        }
        Some([acc.re, acc.im])
    }

    /// Adaptive Gauss-Kronrod on the interpolated branch (tangent roots).
    fn adaptive(&self, panel: &Panel, j: usize, b: &[f64], slope: f64) -> Result<[f64; 2]> {
        let eps = self.eps;
        let e2 = eps * eps;
        let width = panel.hi - panel.lo;
        let k = NODES + 2;
        let mut lag = [0.0; NODES + 2];
        let f = |t: f64| {
            let mut exact = None;
            let mut sw = 0.0;
            for q in 0..k {
                let dt = t - panel.theta[q];
                if dt == 0.0 {
                    exact = Some(q);
                    break;
                }
                lag[q] = self.bary[q] / (dt / width);
                sw += lag[q];
            }
            let (m, pp) = match exact {
                Some(q) => (panel.mu[j][q], panel.p[j][q]),
                None => {
                    let mut sm = 0.0;
                    let mut sp = 0.0;
                    for q in 0..k {
                        sm += lag[q] * panel.mu[j][q];
                        sp += lag[q] * panel.p[j][q];
                    }
                    (sm / sw, sp / sw)
                }
            };
            let u = m - (t.cos() * b[0] + t.sin() * b[1]);
            let den = e2 + u * u;
            let den2 = den * den;
            [pp * (e2 - u * u) / den2, pp * 2.0 * eps * u / den2]
        };
        // u = mu - Omega.b carries an absolute rounding error ~ eps_mach * slope,
        // a relative error ~ eps_mach * slope / eps in the integrand
        let noise = 8.0 * f64::EPSILON * slope.max(1.0) / eps;
        adaptive_gk(f, panel.lo, panel.hi, ABS_TOL, REL_TOL, noise, MAX_INTERVALS).ok_or_else(|| {
            Error::UnderResolved(format!(
                "angular quadrature at b = ({:.6}, {:.6}) did not converge in {MAX_INTERVALS} intervals",
                b[0], b[1]
            ))
        })
    }
}

/// Returns (values, max|Im| / max|Re|).
pub(crate) fn ray_field(
    sep: &Separable,
    weight: &Weight,
    set: &OperatorSet,
    grid: &PhaseGrid,
    reg: &Regularizer,
) -> Result<(Vec<f64>, f64)> {
    let n = set.n();
    let m_e = reg.m_e();
    let eps = reg.epsilon();
    let plan = RayPlan::new(sep, &weight.matrix(set.dim()), eps);
    let ci_t = reg.inverse()?.transpose();
    // b = C^{-T} a = P x + q
    let mut p: DMatrix<f64> = &ci_t * grid.frame_matrix();
    let q = &ci_t * grid.frame_offset();
    let scale = p.abs().max();
    p.iter_mut().filter(|v| v.abs() < 1e-14 * scale).for_each(|v| *v = 0.0);
    let det = reg.det().abs();
    let gauss_norm = (4.0 * PI * eps).powf(-((n - m_e) as f64) / 2.0);

    let total = grid.len();
    let b_of = |i: usize| -> Vec<f64> {
        let x = grid.local(i);
        (0..n).map(|r| q[r] + (0..n).map(|c| p[(r, c)] * x[c]).sum::<f64>()).collect()
    };
    // distinct b_E values, in first-seen order
    let mut keys: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    let mut slot = Vec::with_capacity(total);
    for i in 0..total {
        let be: Vec<f64> = b_of(i)[..m_e].to_vec();
        let key: Vec<u64> = be.iter().map(|v| v.to_bits()).collect();
        let id = *keys.entry(key).or_insert_with(|| {
            uniq.push(be);
            uniq.len() - 1
        });
        slot.push(id);
    }
    let we: Vec<[f64; 2]> = uniq.par_iter().map(|be| plan.eval(be)).collect::<Result<Vec<_>>>()?;
    let mut max_re: f64 = 0.0;
    let mut max_im: f64 = 0.0;
    let mut values = Vec::with_capacity(total);
    for (i, &id) in slot.iter().enumerate() {
        let b = b_of(i);
        let g2: f64 = (m_e..n).map(|l| (b[l] - sep.c_g[l - m_e]).powi(2)).sum();
        let factor = gauss_norm * (-g2 / (4.0 * eps)).exp() / det;
        let re = factor * we[id][0];
        let im = factor * we[id][1];
        max_re = max_re.max(re.abs());
        max_im = max_im.max(im.abs());
        values.push(re);
    }
    let ratio = if max_re > 0.0 { max_im / max_re } else { 0.0 };
    Ok((values, ratio))
}
