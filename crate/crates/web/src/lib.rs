//! Browser bindings: classification, region grids and finite-block norm
//! profiles, each returned as JSON or CSV text.

use morrey_core::classifier::classify_any;
use morrey_core::grammar::parse_any;
use morrey_core::morrey_seq::{op_norm_bracket, op_norm_formula, MorreyParams};
use morrey_core::nuclear_engine::{nuclear_formula_id_j, nuclear_lower_id_j, nuclear_upper_id_j};
use morrey_core::params::ExtScalar;
use morrey_core::region;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest `j * d` the profile accepts.
pub const PROFILE_MAX_BITS: u32 = 6;

pub fn classify_json(source: &str, target: &str) -> Result<String, String> {
    let a = parse_any(source).map_err(|e| e.to_string())?;
    let b = parse_any(target).map_err(|e| e.to_string())?;
    let v = classify_any(&a, &b).map_err(|e| e.to_string())?;
    let out = json!({ "source": a.to_string(), "target": b.to_string(), "verdict": v });
    Ok(out.to_string())
}

pub fn region_csv(source: &str, target: &str) -> Result<String, String> {
    region::sweep(source, target).map(|rows| region::to_csv(&rows))
}

fn params(u: &str, p: &str) -> Result<MorreyParams, String> {
    let u: ExtScalar = u.parse().map_err(|e| format!("u: {e}"))?;
    let p: ExtScalar = p.parse().map_err(|e| format!("p: {e}"))?;
    MorreyParams::admissible(u, p).map_err(|e| e.to_string())
}

/// Operator and nuclear norms of `id_j` for `j = 0..=max_j`.
pub fn profile_json(
    src_u: &str,
    src_p: &str,
    dst_u: &str,
    dst_p: &str,
    d: u32,
    max_j: u32,
) -> Result<String, String> {
    let (src, dst) = (params(src_u, src_p)?, params(dst_u, dst_p)?);
    if d == 0 || max_j * d > PROFILE_MAX_BITS {
        return Err(format!("need d >= 1 and j*d <= {PROFILE_MAX_BITS}"));
    }
    let mut levels = Vec::new();
    for j in 0..=max_j {
        let op = op_norm_formula(src, dst, j, d);
        let bracket = op_norm_bracket(src, dst, j, d).map_err(|e| e.to_string())?;
        let nf = nuclear_formula_id_j(src, dst, j, d).map_err(|e| e.to_string())?;
        let up = nuclear_upper_id_j(src, dst, j, d).map_err(|e| e.to_string())?;
        let low = nuclear_lower_id_j(src, dst, j, d).map_err(|e| e.to_string())?;
        levels.push(json!({
            "j": j,
            "op_formula": op.value,
            "op_exact": op.exact,
            "op_lower": bracket.as_ref().map(|b| b.lower),
            "op_upper": bracket.as_ref().map(|b| b.upper),
            "nuclear_formula": nf.value,
            "nuclear_exact": nf.exact,
            "nuclear_lower": low.lower_bound,
            "nuclear_upper": up.bound,
        }));
    }
    Ok(json!({ "d": d, "levels": levels }).to_string())
}

#[wasm_bindgen]
pub fn classify(source: &str, target: &str) -> Result<String, JsValue> {
    classify_json(source, target).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn region(source: &str, target: &str) -> Result<String, JsValue> {
    region_csv(source, target).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn profile(
    src_u: &str,
    src_p: &str,
    dst_u: &str,
    dst_p: &str,
    d: u32,
    max_j: u32,
) -> Result<String, JsValue> {
    profile_json(src_u, src_p, dst_u, dst_p, d, max_j).map_err(|e| JsValue::from_str(&e))
}
