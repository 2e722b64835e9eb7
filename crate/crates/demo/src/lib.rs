//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns plain numbers and JSON strings. Exact
//! values travel as `p/q` strings next to `f64` copies used for drawing.

use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use extparabola::activeset::{active_set_run, pullback_objective, RuleSpec};
use extparabola::exactla::Rational;
use extparabola::extension::{build, ConstructionParams, ExtendedParabola};
use extparabola::lowerbound::{chord_inner_product, projected_vertex};
use extparabola::Error;

/// Largest dimension the page will build.
pub const MAX_D: u32 = 12;

fn approx(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn instance(d: u32, n: u32) -> Result<ExtendedParabola, Error> {
    if d > MAX_D {
        return Err(Error::BadParameters(format!("d = {d} above {MAX_D}")));
    }
    let n = if n == 0 { 4 * d } else { n };
    build(ConstructionParams::new(n as u64, d as u64)?)
}

fn error_json(e: Error) -> String {
    json!({ "error": e.to_string() }).to_string()
}

#[derive(Serialize)]
struct Point {
    t: u64,
    x: f64,
    y: f64,
    exact: [String; 2],
}

fn projection_inner(d: u32, n: u32) -> Result<String, Error> {
    let ext = instance(d, n)?;
    let points = (0..ext.m())
        .map(|t| {
            let [x, y] = ext.project(&ext.vertex_for_t(t)?)?;
            Ok(Point {
                t,
                x: approx(&x),
                y: approx(&y),
                exact: [x.to_string(), y.to_string()],
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(json!({
        "n": ext.params.n,
        "d": ext.params.d,
        "M": ext.m(),
        "facets": ext.q().num_facets(),
        "points": points,
    })
    .to_string())
}

/// Projected vertices `(φ, φ')` of `Q_d`; `n = 0` means `4d`.
#[wasm_bindgen]
pub fn projection(d: u32, n: u32) -> String {
    projection_inner(d, n).unwrap_or_else(error_json)
}

fn path_inner(d: u32, rule: &str, seed: u32) -> Result<String, Error> {
    let spec = RuleSpec::parse(rule)?;
    let ext = instance(d, 0)?;
    let pb = pullback_objective(&ext);
    let x0 = ext.vertex_for_t(0)?;
    let mut pivot = spec.instantiate(seed as u64);
    let trace = active_set_run(ext.q(), &pb.objective, &x0, pivot.as_mut(), 4 * ext.m() as usize)?;
    let steps: Vec<_> = trace
        .steps
        .iter()
        .map(|s| {
            let [x, y] = ext.project(&s.vertex).unwrap_or_default();
            json!({
                "t": ext.t_of(&s.vertex),
                "x": approx(&x),
                "y": approx(&y),
                "f": s.f_value.to_string(),
                "f_approx": approx(&s.f_value),
            })
        })
        .collect();
    Ok(json!({
        "rule": trace.rule,
        "c": pb.c.to_string(),
        "vertices_visited": trace.vertices_visited,
        "edge_moves": trace.edge_moves,
        "steps": steps,
    })
    .to_string())
}

/// The active-set run from `t = 0` with a named rule.
#[wasm_bindgen]
pub fn active_set_path(d: u32, rule: &str, seed: u32) -> String {
    path_inner(d, rule, seed).unwrap_or_else(error_json)
}

fn chords_inner(m: u32, t: u32) -> Result<String, Error> {
    let (m, t) = (m as u64, t as u64);
    let from = projected_vertex(m, t)?;
    let chords = (0..m)
        .filter(|&end| end != t)
        .map(|end| {
            let k = end as i64 - t as i64;
            let value = chord_inner_product(m, t, k)?;
            let [x, y] = projected_vertex(m, end)?;
            Ok(json!({
                "k": k,
                "to": [approx(&x), approx(&y)],
                "value": value.to_string(),
                "improving": value > Rational::from_integer(0.into()),
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    Ok(json!({
        "M": m,
        "t": t,
        "from": [approx(&from[0]), approx(&from[1])],
        "chords": chords,
    })
    .to_string())
}

/// Gradient inner products along every chord leaving `x⁽ᵗ⁾`.
#[wasm_bindgen]
pub fn chords_from(m: u32, t: u32) -> String {
    if m > 1 << 12 {
        return error_json(Error::CapExceeded { m: m as u64, cap: 1 << 12 });
    }
    chords_inner(m, t).unwrap_or_else(error_json)
}
