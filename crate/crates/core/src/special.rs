//! Erfc and the quadrature rules used by the engines.

use std::f64::consts::PI;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Complementary error function, relative error below 1e-13 on the real line.
///
/// Positive-term series for erf below x = 2 (no cancellation inside the sum),
/// Lentz continued fraction above.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        return 1.0 - erf_series(x);
    }
    if x > 27.3 {
        return 0.0;
    }
    erfc_cf(x)
}

pub fn erf(x: f64) -> f64 {
    if x.abs() < 2.0 {
        if x < 0.0 {
            -erf_series(-x)
        } else {
            erf_series(x)
        }
    } else {
        1.0 - erfc(x)
    }
}

// erf(x) = 2x/sqrt(pi) e^{-x^2} sum_n (2x^2)^n / (2n+1)!!
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut n = 0.0;
    while term > 1e-17 * sum {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
    }
    FRAC_2_SQRT_PI * x * (-x2).exp() * sum
}

// erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

const GK_X: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> [f64; 2]>(f: &mut F, a: f64, b: f64) -> ([f64; 2], f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [fc[0] * GK_WK[7], fc[1] * GK_WK[7]];
    let mut g = [fc[0] * GK_WG[3], fc[1] * GK_WG[3]];
    let mut abs = GK_WK[7] * (fc[0].abs() + fc[1].abs());
    for j in 0..7 {
        let dx = h * GK_X[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for q in 0..2 {
            abs += GK_WK[j] * (f1[q].abs() + f2[q].abs());
            k[q] += GK_WK[j] * (f1[q] + f2[q]);
            if j % 2 == 1 {
                g[q] += GK_WG[j / 2] * (f1[q] + f2[q]);
            }
        }
    }
    let res = [k[0] * h, k[1] * h];
    let err = ((k[0] - g[0]).abs() + (k[1] - g[1]).abs()) * h;
    (res, err, abs * h.abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of a two-component integrand.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate is below max(abs_tol, rel_tol |I|, noise int|f|), where `noise`
/// is the relative rounding level of the integrand values. `None` if
/// `max_intervals` is reached first.
pub fn adaptive_gk<F: FnMut(f64) -> [f64; 2]>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    noise: f64,
    max_intervals: usize,
) -> Option<[f64; 2]> {
    let (r0, e0, m0) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, r0, e0, m0)];
    loop {
        let mut tot = [0.0; 2];
        let mut err = 0.0;
        let mut mass = 0.0;
        let mut worst = 0;
        for (i, p) in parts.iter().enumerate() {
            tot[0] += p.2[0];
            tot[1] += p.2[1];
            err += p.3;
            mass += p.4;
            if p.3 > parts[worst].3 {
                worst = i;
            }
        }
        if err <= abs_tol.max(rel_tol * (tot[0].abs() + tot[1].abs())).max(noise * mass) {
            return Some(tot);
        }
        if parts.len() >= max_intervals {
            return None;
        }
        let (pa, pb, _, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        let (r1, e1, m1) = gk15(&mut f, pa, mid);
        let (r2, e2, m2) = gk15(&mut f, mid, pb);
        parts.push((pa, mid, r1, e1, m1));
        parts.push((mid, pb, r2, e2, m2));
    }
}
