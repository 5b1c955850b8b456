//! gnuplot scripts from sweep CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{CliError, Result};

const NEEDED: [&str; 6] = ["family", "normalized", "closed_absolute", "variable", "value", "group"];

#[derive(Debug, Clone, PartialEq)]
struct Series {
    label: String,
    points: Vec<(f64, f64, f64)>,
}

/// Script plotting |normalized| (points) and |closed| (lines) against the
/// swept variable, one colour per operator set. Log scale when asked for or
/// when the sweep mixes set sizes.
pub fn script(csv_text: &str, log: bool) -> Result<String> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::SchemaMismatch(e.to_string()))?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let missing: Vec<&str> = NEEDED.iter().copied().filter(|c| col(c).is_none()).collect();
    if !missing.is_empty() {
        return Err(CliError::SchemaMismatch(format!("missing columns: {}", missing.join(", "))));
    }
    let [fam, norm, closed, var, val, grp] = NEEDED.map(|c| col(c).expect("checked"));
    let cmp = col("comparison");

    let mut series: BTreeMap<usize, Series> = BTreeMap::new();
    let mut variable = String::new();
    let mut qualitative = false;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::SchemaMismatch(format!("row {}: {e}", line + 1)))?;
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| CliError::SchemaMismatch(format!("row {}: {:?} is not a number", line + 1, &rec[i])))
        };
        let g: usize = rec[grp].parse().map_err(|_| CliError::SchemaMismatch(format!("row {}: bad group", line + 1)))?;
        variable = rec[var].to_string();
        qualitative |= cmp.is_some_and(|c| &rec[c] == "qualitative");
        let s = series.entry(g).or_insert_with(|| Series { label: format!("{} #{g}", &rec[fam]), points: vec![] });
        s.points.push((num(val)?, num(norm)?.abs(), num(closed)?.abs()));
    }
    if series.is_empty() {
        return Err(CliError::SchemaMismatch("no data rows".into()));
    }

    let log = log || qualitative;
    let mut out = String::new();
    let _ = writeln!(out, "set xlabel '{variable}'");
    let _ = writeln!(out, "set ylabel '|negative volume| (normalized)'");
    let _ = writeln!(out, "set key outside right");
    if log {
        let _ = writeln!(out, "set logscale y");
    }
    for (g, s) in &series {
        let _ = writeln!(out, "$g{g} << EOD");
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (x, y, c) in pts {
            // zeros vanish on a log axis; gnuplot skips NaN
            let fmt = |v: f64| if log && v <= 0.0 { "NaN".to_string() } else { format!("{v:.10e}") };
            let _ = writeln!(out, "{x:.10e} {} {}", fmt(y), fmt(c));
        }
        let _ = writeln!(out, "EOD");
    }
    let mut parts = Vec::new();
    for (i, (g, s)) in series.iter().enumerate() {
        let lc = i + 1;
        parts.push(format!("$g{g} using 1:2 with points pt 7 lc {lc} title '{} numeric'", s.label));
        parts.push(format!("$g{g} using 1:3 with lines lc {lc} title '{} closed'", s.label));
    }
    let _ = writeln!(out, "plot {}", parts.join(", \\\n     "));
    Ok(out)
}
