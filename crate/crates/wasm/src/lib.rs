//! Browser bindings: spectral-region rasters and a point oracle.
//!
//! Rasters are row-major with the imaginary axis as the slow index, first
//! row at `im_min`. The spectrum is where the value is at least 1.

use num_complex::Complex64 as C64;
use wasm_bindgen::prelude::*;

use freespec::families::{walk_field, WalkSpec};
use freespec::quadratic::radius_field;
use freespec::region::GridSpec;
use freespec::resolvent::{membership_oracle_with_budget, DEFAULT_MARGIN, DEFAULT_WINDOW};
use freespec::{NCPolynomial, VariableKind};

/// Keeps a browser tab responsive.
const ORACLE_BUDGET: usize = 2_000_000;
const MAX_NODES: usize = 1_000_000;

fn grid(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<GridSpec, String> {
    let g = GridSpec::new(re_min, re_max, im_min, im_max, nx, ny).map_err(|e| e.to_string())?;
    if g.len() > MAX_NODES {
        return Err(format!("grid has {} nodes, limit is {MAX_NODES}", g.len()));
    }
    Ok(g)
}

fn raster<F: Fn(C64) -> f64>(g: &GridSpec, f: F) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.push(f(g.point(i, j)));
        }
    }
    out
}

fn circular(text: &str, d: usize) -> Result<NCPolynomial, String> {
    NCPolynomial::parse(text, d, VariableKind::Circular).map_err(|e| e.to_string())
}

/// `r(Q_lambda)` for a quadratic in `c1, c2`.
pub fn quadratic_values(
    poly: &str,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, String> {
    let form = circular(poly, 2)?.extract_quadratic().map_err(|e| e.to_string())?;
    let g = grid(re_min, re_max, im_min, im_max, nx, ny)?;
    Ok(raster(&g, |z| radius_field(&form, z)))
}

/// `t^2 / g` for the walk `(1 + t c1)...(1 + t ck)`.
pub fn walk_values(
    k: usize,
    t: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, String> {
    let spec = WalkSpec::new(k, t).map_err(|e| e.to_string())?;
    let g = grid(re_min, re_max, im_min, im_max, nx, ny)?;
    Ok(raster(&g, |z| walk_field(spec, z)))
}

/// Generic membership verdict with diagnostics, as JSON.
pub fn oracle(poly: &str, d: usize, re: f64, im: f64, levels: usize) -> Result<String, String> {
    let p = circular(poly, d)?;
    let v = membership_oracle_with_budget(&p, C64::new(re, im), levels, DEFAULT_WINDOW, DEFAULT_MARGIN, ORACLE_BUDGET)
        .map_err(|e| e.to_string())?;
    Ok(serde_json::to_string(&v).expect("verdict serializes"))
}

#[wasm_bindgen(js_name = quadraticRaster)]
pub fn quadratic_raster_js(
    poly: &str,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, JsError> {
    quadratic_values(poly, re_min, re_max, im_min, im_max, nx, ny).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = walkRaster)]
#[allow(clippy::too_many_arguments)]
pub fn walk_raster_js(
    k: usize,
    t: f64,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
) -> Result<Vec<f64>, JsError> {
    walk_values(k, t, re_min, re_max, im_min, im_max, nx, ny).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = oracleVerdict)]
pub fn oracle_js(poly: &str, d: usize, re: f64, im: f64, levels: usize) -> Result<String, JsError> {
    oracle(poly, d, re, im, levels).map_err(|e| JsError::new(&e))
}
