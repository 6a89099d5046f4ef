//! Two-parameter verdict grids over template specs.

use crate::classifier::{classify_any, Verdict};
use crate::grammar::Template;
use crate::params::{format_rational, ExtScalar, Rational};

pub const HEADER: &str = "x,y,compact,nuclear,threshold_compact,threshold_nuclear";

pub struct Row {
    pub x: Rational,
    pub y: Rational,
    pub verdict: Verdict,
}

/// Rows ordered by the first sweep, then the second: the first sweep
/// indexes rows of the grid and the second indexes columns.
pub fn sweep(source: &str, target: &str) -> Result<Vec<Row>, String> {
    let templates = [
        Template::parse(source).map_err(|e| e.to_string())?,
        Template::parse(target).map_err(|e| e.to_string())?,
    ];
    let owners: Vec<(usize, usize)> = templates
        .iter()
        .enumerate()
        .flat_map(|(t, tpl)| (0..tpl.sweeps.len()).map(move |k| (t, k)))
        .collect();
    if owners.len() != 2 {
        return Err(format!(
            "expected exactly two swept parameters, found {}",
            owners.len()
        ));
    }
    let sweep_of = |i: usize| &templates[owners[i].0].sweeps[owners[i].1];
    let (xs, ys) = (sweep_of(0).nodes(), sweep_of(1).nodes());
    let mut rows = Vec::with_capacity(xs.len() * ys.len());
    for x in &xs {
        for y in &ys {
            let mut values: [Vec<ExtScalar>; 2] = [Vec::new(), Vec::new()];
            for (i, node) in [*x, *y].into_iter().enumerate() {
                let v = sweep_of(i).field_value(node).map_err(|e| e.to_string())?;
                values[owners[i].0].push(v);
            }
            let a = templates[0]
                .instantiate(&values[0])
                .map_err(|e| e.to_string())?;
            let b = templates[1]
                .instantiate(&values[1])
                .map_err(|e| e.to_string())?;
            let verdict = classify_any(&a, &b).map_err(|e| format!("at x={x}, y={y}: {e}"))?;
            rows.push(Row {
                x: *x,
                y: *y,
                verdict,
            });
        }
    }
    Ok(rows)
}

fn cell(t: &Option<ExtScalar>) -> String {
    t.map(|v| v.to_string()).unwrap_or_default()
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_rational(r.x),
            format_rational(r.y),
            r.verdict.compact.as_str(),
            r.verdict.nuclear.as_str(),
            cell(&r.verdict.threshold_compact),
            cell(&r.verdict.threshold_nuclear),
        ));
    }
    out
}
