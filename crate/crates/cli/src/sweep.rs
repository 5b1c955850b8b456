//! Parameter sweeps: one row per (operator set, value), written as CSV.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;
use wigvol_core::catalog::{mub_pauli, Family, OperatorSetDoc};
use wigvol_core::closedform::{default_mask, negativity_closed, ClosedFormCase, Shape};
use wigvol_core::grid::PhaseGrid;
use wigvol_core::linalg::QuantumState;
use wigvol_core::negativity::{normalized_negativity, Mask};
use wigvol_core::regularizer::Regularizer;
use wigvol_core::transform::regularized_wigner;

use crate::config::{set_lambdas, Config, FrameKind, Job, Variable};
use crate::error::{CliError, Result};

/// Columns every sweep CSV starts with; `lambda1..k` sits after `N`.
pub const LEADING: [&str; 3] = ["family", "n", "N"];
pub const TRAILING: [&str; 17] = [
    "epsilon",
    "raw",
    "norm_factor",
    "normalized",
    "closed_ratio",
    "closed_absolute",
    "mask_fraction",
    "numeric_ratio",
    "variable",
    "value",
    "params",
    "kernel",
    "mask",
    "engine",
    "grid",
    "group",
    "comparison",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub family: String,
    pub n: usize,
    pub dim: usize,
    pub lambdas: Vec<f64>,
    pub epsilon: f64,
    pub raw: f64,
    pub norm_factor: f64,
    pub normalized: f64,
    pub closed_ratio: f64,
    pub closed_absolute: f64,
    pub mask_fraction: f64,
    /// normalized / numeric qubit MUB baseline on the same Bloch grid and mask
    pub numeric_ratio: f64,
    pub variable: Variable,
    pub value: f64,
    pub params: String,
    pub kernel: String,
    pub mask: String,
    pub engine: String,
    pub grid: String,
    /// index of the operator set in the config
    pub group: usize,
    pub qualitative: bool,
}

/// One sweep point before evaluation.
#[derive(Debug, Clone)]
pub struct Point {
    pub group: usize,
    pub doc: OperatorSetDoc,
    pub epsilon: f64,
    pub value: f64,
}

pub fn points(cfg: &Config) -> Result<(Variable, Vec<Point>)> {
    let sweep = cfg.validate_sweep()?;
    let docs = cfg.operator_docs()?;
    let mut out = Vec::new();
    for (group, doc) in docs.iter().enumerate() {
        for &v in &sweep.values {
            let mut doc = doc.clone();
            let mut epsilon = cfg.epsilon();
            match sweep.variable {
                Variable::Lambda => set_lambdas(&mut doc, &[v]),
                Variable::Epsilon => epsilon = v,
                Variable::Dimension => {
                    if !matches!(doc.family.as_str(), "GELLMANN" | "NOISY_GELLMANN") {
                        return Err(CliError::Config(format!(
                            "sweep.variable: dimension sweeps need a Gell-Mann family, not {}",
                            doc.family
                        )));
                    }
                    doc.params.dim = Some(v as usize);
                }
            }
            out.push(Point { group, doc, epsilon, value: v });
        }
    }
    Ok((sweep.variable, out))
}

/// Key of a numeric baseline: Bloch dims, epsilon, Bloch-axis counts, mask.
type BaselineKey = (usize, u64, Vec<usize>, u64);

struct Prepared {
    point: Point,
    job: Job,
    case: Option<ClosedFormCase>,
    mask_width: Option<f64>,
    key: Option<BaselineKey>,
}

fn bloch_dims(case: &ClosedFormCase) -> usize {
    match case.shape() {
        Shape::Line => 1,
        Shape::Disk => 2,
        Shape::Shell => 3,
    }
}

fn prepare(cfg: &Config, point: Point) -> Result<Prepared> {
    let job = Job::resolve(cfg, &point.doc, point.epsilon)?;
    let case = ClosedFormCase::new(&job.set).ok();
    let mask_width = match &case {
        Some(c) if c.shape() == Shape::Disk => {
            Some(cfg.sweep.as_ref().and_then(|s| s.mask).unwrap_or_else(|| default_mask(point.epsilon)))
        }
        _ => None,
    };
    let key = case.as_ref().filter(|c| c.shape() != Shape::Line).map(|c| {
        let nb = bloch_dims(c);
        let counts = if cfg.grid.frame == FrameKind::Natural && job.set.coords().is_some() && cfg.grid.axes.is_none() {
            job.grid.counts()[..nb].to_vec()
        } else {
            vec![wigvol_core::grid::default_count(nb); nb]
        };
        (nb, point.epsilon.to_bits(), counts, mask_width.unwrap_or(0.0).to_bits())
    });
    Ok(Prepared { point, job, case, mask_width, key })
}

/// Negative volume of the qubit MUB field with `nb` operators on its natural
/// grid, masked like the family.
pub fn numeric_baseline(nb: usize, epsilon: f64, counts: &[usize], mask: Option<f64>) -> Result<f64> {
    // baselines recur across sweeps in one process; cache them
    static CACHE: Mutex<BTreeMap<BaselineKey, f64>> = Mutex::new(BTreeMap::new());
    let key = (nb, epsilon.to_bits(), counts.to_vec(), mask.unwrap_or(0.0).to_bits());
    if let Some(v) = CACHE.lock().expect("cache").get(&key) {
        return Ok(*v);
    }
    let v = baseline_uncached(nb, epsilon, counts, mask)?;
    CACHE.lock().expect("cache").insert(key, v);
    Ok(v)
}

fn baseline_uncached(nb: usize, epsilon: f64, counts: &[usize], mask: Option<f64>) -> Result<f64> {
    let set = mub_pauli(nb)?;
    let reg = if nb == 2 { Regularizer::exp_iso(2, epsilon)? } else { Regularizer::gauss_iso(nb, epsilon)? };
    let grid = PhaseGrid::natural(&set, &reg, Some(counts))?;
    let field = regularized_wigner(&QuantumState::maximally_mixed(2), &set, &grid, &reg, reg.default_cutoff()?)?;
    let case = ClosedFormCase::new(&set)?;
    let m = match mask {
        Some(w) => Some(Mask::singular_shell(&case, &grid, w)?),
        None => None,
    };
    Ok(normalized_negativity(&field, &reg, m.as_ref())?.raw)
}

fn params_text(doc: &OperatorSetDoc) -> String {
    let v = serde_json::to_value(&doc.params).expect("plain data");
    let mut parts = Vec::new();
    if let Some(map) = v.as_object() {
        for (k, v) in map {
            let text = match v {
                serde_json::Value::Array(a) => {
                    a.iter().map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string())).collect::<Vec<_>>().join(" ")
                }
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            parts.push(format!("{k}={text}"));
        }
    }
    parts.join(";")
}

fn evaluate(p: &Prepared, baselines: &BTreeMap<BaselineKey, f64>, variable: Variable) -> Result<Row> {
    let job = &p.job;
    let field = job.field()?;
    let mask = match (&p.case, p.mask_width) {
        (Some(c), Some(w)) if job.set.coords().is_some() => Some(Mask::singular_shell(c, &job.grid, w)?),
        _ => None,
    };
    let mut rep = normalized_negativity(&field, &job.reg.reference(), mask.as_ref())?;
    if matches!(job.set.family(), Family::NoisyProj { .. }) && job.set.coords().is_none() {
        // lambda = 1: the scaled kernel has infinite mass
        rep.norm_factor = f64::INFINITY;
        rep.normalized = 0.0;
    }
    let closed = match &p.case {
        Some(c) => Some(negativity_closed(c, p.point.epsilon, p.mask_width)?),
        None => None,
    };
    let numeric_ratio = match &p.key {
        Some(k) => rep.normalized / baselines[k],
        None if p.case.is_some() => 0.0,
        None => f64::NAN,
    };
    Ok(Row {
        family: job.set.family().tag().to_string(),
        n: job.set.n(),
        dim: job.set.dim(),
        lambdas: job.set.family().lambdas(),
        epsilon: p.point.epsilon,
        raw: rep.raw,
        norm_factor: rep.norm_factor,
        normalized: rep.normalized,
        closed_ratio: closed.as_ref().map(|c| c.ratio).unwrap_or(f64::NAN),
        closed_absolute: closed.as_ref().map(|c| c.absolute).unwrap_or(f64::NAN),
        mask_fraction: rep.mask_fraction,
        numeric_ratio,
        variable,
        value: p.point.value,
        params: params_text(&p.point.doc),
        kernel: rep.kernel,
        mask: rep.mask_policy,
        engine: field.engine().name().to_string(),
        grid: job.grid.describe(),
        group: p.point.group,
        qualitative: false,
    })
}

/// Evaluate every point, in parallel, keeping config order.
pub fn run(cfg: &Config) -> Result<Vec<Row>> {
    let (variable, pts) = points(cfg)?;
    let prepared = pts.into_iter().map(|p| prepare(cfg, p)).collect::<Result<Vec<_>>>()?;

    let keys: Vec<BaselineKey> = {
        let mut k: Vec<_> = prepared.iter().filter_map(|p| p.key.clone()).collect();
        k.sort();
        k.dedup();
        k
    };
    let baselines: BTreeMap<BaselineKey, f64> = keys
        .into_par_iter()
        .map(|k| {
            let (nb, eps, counts, mask) = &k;
            let mask = (*mask != 0).then(|| f64::from_bits(*mask));
            numeric_baseline(*nb, f64::from_bits(*eps), counts, mask).map(|v| (k.clone(), v))
        })
        .collect::<Result<_>>()?;

    let mut rows = prepared.par_iter().map(|p| evaluate(p, &baselines, variable)).collect::<Result<Vec<_>>>()?;
    let first = rows.first().map(|r| r.n);
    let mixed_n = rows.iter().any(|r| Some(r.n) != first);
    for r in &mut rows {
        r.qualitative = mixed_n;
    }
    Ok(rows)
}

pub fn header(rows: &[Row]) -> Vec<String> {
    let k = rows.iter().map(|r| r.lambdas.len()).max().unwrap_or(0);
    let mut h: Vec<String> = LEADING.iter().map(|s| s.to_string()).collect();
    h.extend((1..=k).map(|i| format!("lambda{i}")));
    h.extend(TRAILING.iter().map(|s| s.to_string()));
    h
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Commas and quotes never appear in our text fields except params; quote those.
fn text(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_csv<W: Write>(rows: &[Row], mut out: W) -> std::io::Result<()> {
    let h = header(rows);
    let k = h.iter().filter(|c| c.starts_with("lambda")).count();
    writeln!(out, "{}", h.join(","))?;
    for r in rows {
        let mut f = vec![r.family.clone(), r.n.to_string(), r.dim.to_string()];
        f.extend((0..k).map(|i| r.lambdas.get(i).map(|&l| num(l)).unwrap_or_default()));
        f.extend([
            num(r.epsilon),
            num(r.raw),
            num(r.norm_factor),
            num(r.normalized),
            num(r.closed_ratio),
            num(r.closed_absolute),
            num(r.mask_fraction),
            num(r.numeric_ratio),
            r.variable.name().to_string(),
            num(r.value),
            text(&r.params),
            text(&r.kernel),
            text(&r.mask),
            r.engine.clone(),
            text(&r.grid),
            r.group.to_string(),
            if r.qualitative { "qualitative" } else { "quantitative" }.to_string(),
        ]);
        writeln!(out, "{}", f.join(","))?;
    }
    Ok(())
}

/// One line per group: is |normalized| monotone along the sweep?
pub fn monotone_summary(rows: &[Row]) -> Vec<String> {
    let mut groups: BTreeMap<usize, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.group).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(g, mut rs)| {
            rs.sort_by(|a, b| a.value.total_cmp(&b.value));
            let v: Vec<f64> = rs.iter().map(|r| r.normalized.abs()).collect();
            let tol = 1e-12 * v.iter().cloned().fold(0.0, f64::max);
            let down = v.windows(2).all(|w| w[1] <= w[0] + tol);
            let up = v.windows(2).all(|w| w[1] + tol >= w[0]);
            let trend = match (down, up) {
                (true, true) => "constant",
                (true, false) => "non-increasing",
                (false, true) => "non-decreasing",
                _ => "not monotone",
            };
            let var = rs.first().map(|r| r.variable.name()).unwrap_or("?");
            let fam = rs.first().map(|r| r.family.as_str()).unwrap_or("?");
            format!("group {g} ({fam}): |normalized| {trend} in {var}")
        })
        .collect()
}
