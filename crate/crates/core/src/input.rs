//! JSON ingestion of measures, grid functions and balls, and the
//! `key=value` parameter syntax.
//!
//! Measure schema:
//!
//! * `{"type":"points","atoms":[{"x":[...],"m":...}, ...]}`
//! * `{"type":"cells","box":{"generation":g,"index":[...]},"generation":h,"values":[...]}`
//! * `{"type":"radial_power","a":...,"gamma":...,"R":...,"center":[...]}`
//!
//! `R` may be the string `"inf"`; `center` defaults to the origin when a
//! dimension is known. Errors carry the JSON pointer of the offending field.

use serde_json::{json, Map, Value};

use crate::capacity::CapacitySet;
use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::json::{parse_error, parse_real, Real};
use crate::measures::{Atom, CellDensityMeasure, CellGrid, Measure, PointMassMeasure, RadialPowerMeasure};
use crate::params::{hessian_params, make_params, Params};
use crate::solver::GridFunction;
use crate::verifiers::Ball;

/// Parse a measure from JSON text.
pub fn measure_from_str(text: &str, dim: Option<usize>) -> Result<Measure> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_error("", &e.to_string()))?;
    measure_from_json(&v, dim)
}

/// Parse a measure; `dim` is checked against the data and supplies the
/// default center of radial measures.
pub fn measure_from_json(v: &Value, dim: Option<usize>) -> Result<Measure> {
    let obj = object(v, "")?;
    let kind = string(field(obj, "", "type")?, "/type")?;
    let mu: Measure = match kind {
        "points" => {
            let atoms = array(field(obj, "", "atoms")?, "/atoms")?;
            let mut parsed = Vec::with_capacity(atoms.len());
            for (i, a) in atoms.iter().enumerate() {
                let ptr = format!("/atoms/{i}");
                let ao = object(a, &ptr)?;
                let x = reals(field(ao, &ptr, "x")?, &format!("{ptr}/x"))?;
                let m = parse_real(field(ao, &ptr, "m")?, &format!("{ptr}/m"))?;
                if !(m >= 0.0 && m.is_finite()) {
                    return Err(parse_error(&format!("{ptr}/m"), "mass must be finite and ≥ 0"));
                }
                if let Some(j) = x.iter().position(|v| !v.is_finite()) {
                    return Err(parse_error(&format!("{ptr}/x/{j}"), "coordinate must be finite"));
                }
                if let Some(d) = dim.or(parsed.first().map(|a: &Atom| a.x.len())) {
                    if x.len() != d {
                        return Err(parse_error(&format!("{ptr}/x"), &format!("expected {d} coordinates")));
                    }
                }
                parsed.push(Atom { x, m });
            }
            let d = match (dim, parsed.first()) {
                (Some(d), _) => d,
                (None, Some(a)) => a.x.len(),
                (None, None) => return Err(parse_error("/atoms", "empty atom list and no dimension given")),
            };
            PointMassMeasure::new(d, parsed).map_err(|e| relabel(e, "/atoms"))?.into()
        }
        "cells" => {
            let (grid, values) = grid_and_values(obj)?;
            CellDensityMeasure::new(grid, values).map_err(|e| relabel(e, "/values"))?.into()
        }
        "radial_power" => {
            let a = parse_real(field(obj, "", "a")?, "/a")?;
            let gamma = parse_real(field(obj, "", "gamma")?, "/gamma")?;
            let r = parse_real(field(obj, "", "R")?, "/R")?;
            let center = match obj.get("center") {
                Some(c) => reals(c, "/center")?,
                None => match dim {
                    Some(d) => vec![0.0; d],
                    None => return Err(parse_error("/center", "missing center and no dimension given")),
                },
            };
            RadialPowerMeasure::new(a, gamma, r, center).map_err(|e| relabel(e, ""))?.into()
        }
        other => return Err(parse_error("/type", &format!("unknown measure type {other:?}"))),
    };
    if let Some(d) = dim {
        if mu.dim() != d {
            return Err(parse_error("", &format!("measure has dimension {} but n = {d}", mu.dim())));
        }
    }
    Ok(mu)
}

/// JSON form of a measure, inverse to [`measure_from_json`] on the three
/// ingestible types.
pub fn measure_to_json(mu: &Measure) -> Value {
    match mu {
        Measure::Points(m) => json!({
            "type": "points",
            "atoms": m.atoms().iter().map(|a| json!({"x": a.x, "m": Real(a.m)})).collect::<Vec<_>>(),
        }),
        Measure::Cells(c) => json!({
            "type": "cells",
            "box": c.grid.bbox,
            "generation": c.grid.generation,
            "values": c.values,
        }),
        Measure::RadialPower(m) => json!({
            "type": "radial_power",
            "a": Real(m.a),
            "gamma": Real(m.gamma),
            "R": Real(m.radius),
            "center": m.center,
        }),
        Measure::Radial(m) => json!({
            "type": "radial",
            "center": m.center(),
            "R": Real(m.support_radius()),
            "total_mass": Real(m.total_mass()),
        }),
    }
}

/// Parse a grid function `{"box":...,"generation":h,"values":[...]}`.
pub fn grid_function_from_json(v: &Value) -> Result<GridFunction> {
    let obj = object(v, "")?;
    let (grid, values) = grid_and_values(obj)?;
    GridFunction::new(grid, values).map_err(|e| relabel(e, "/values"))
}

pub fn grid_function_from_str(text: &str) -> Result<GridFunction> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_error("", &e.to_string()))?;
    grid_function_from_json(&v)
}

/// Parse `[{"center":[...],"radius":r}, ...]`.
pub fn balls_from_json(v: &Value) -> Result<Vec<Ball>> {
    let items = array(v, "")?;
    let mut out = Vec::with_capacity(items.len());
    for (i, b) in items.iter().enumerate() {
        let ptr = format!("/{i}");
        let o = object(b, &ptr)?;
        let c = reals(field(o, &ptr, "center")?, &format!("{ptr}/center"))?;
        let r = parse_real(field(o, &ptr, "radius")?, &format!("{ptr}/radius"))?;
        out.push(Ball::new(c, r).map_err(|e| relabel(e, &ptr))?);
    }
    Ok(out)
}

/// Parse `[{"kind":"ball","center":[...],"radius":r}, {"kind":"cube","cube":{"generation":g,"index":[...]}}]`.
pub fn capacity_sets_from_json(v: &Value) -> Result<Vec<CapacitySet>> {
    let items = array(v, "")?;
    if items.is_empty() {
        return Err(parse_error("", "empty set"));
    }
    let mut out = Vec::with_capacity(items.len());
    for (i, b) in items.iter().enumerate() {
        let ptr = format!("/{i}");
        let o = object(b, &ptr)?;
        match string(field(o, &ptr, "kind")?, &format!("{ptr}/kind"))? {
            "ball" => {
                let center = reals(field(o, &ptr, "center")?, &format!("{ptr}/center"))?;
                let radius = parse_real(field(o, &ptr, "radius")?, &format!("{ptr}/radius"))?;
                let ball = Ball::new(center, radius).map_err(|e| relabel(e, &ptr))?;
                out.push(CapacitySet::from(&ball));
            }
            "cube" => {
                let cptr = format!("{ptr}/cube");
                let co = object(field(o, &ptr, "cube")?, &cptr)?;
                let cube = cube_from(co, &cptr)?;
                out.push(CapacitySet::Cube { cube });
            }
            other => return Err(parse_error(&format!("{ptr}/kind"), &format!("unknown set kind {other:?}"))),
        }
    }
    Ok(out)
}

/// Parse `n=3,p=2,q=5` with optional `alpha` (default 1), or the Hessian
/// form `n=5,k=1,q=5`.
pub fn params_from_str(text: &str) -> Result<Params> {
    let mut n = None;
    let mut alpha = None;
    let mut p = None;
    let mut q = None;
    let mut k = None;
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, val) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected key=value, got {part:?}")))?;
        let key = key.trim();
        let val = val.trim();
        let num = || -> Result<f64> {
            val.parse::<f64>()
                .map_err(|_| Error::invalid(format!("{key}: expected a number, got {val:?}")))
        };
        let int = || -> Result<u32> {
            val.parse::<u32>()
                .map_err(|_| Error::invalid(format!("{key}: expected a positive integer, got {val:?}")))
        };
        match key {
            "n" => n = Some(int()? as usize),
            "alpha" => alpha = Some(num()?),
            "p" => p = Some(num()?),
            "q" => q = Some(num()?),
            "k" => k = Some(int()?),
            other => return Err(Error::invalid(format!("unknown parameter {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| Error::invalid("missing n"))?;
    let q = q.ok_or_else(|| Error::invalid("missing q"))?;
    match k {
        Some(k) => {
            if alpha.is_some() || p.is_some() {
                return Err(Error::invalid("k fixes alpha and p; do not pass them"));
            }
            hessian_params(n, k, q)
        }
        None => make_params(n, alpha.unwrap_or(1.0), p.ok_or_else(|| Error::invalid("missing p"))?, q),
    }
}

fn grid_and_values(obj: &Map<String, Value>) -> Result<(CellGrid, Vec<f64>)> {
    let bbox = cube_from(object(field(obj, "", "box")?, "/box")?, "/box")?;
    let g = integer(field(obj, "", "generation")?, "/generation")?;
    let grid = CellGrid::new(bbox, g).map_err(|e| relabel(e, "/generation"))?;
    let values = reals(field(obj, "", "values")?, "/values")?;
    Ok((grid, values))
}

fn cube_from(o: &Map<String, Value>, ptr: &str) -> Result<DyadicCube> {
    let g = integer(field(o, ptr, "generation")?, &format!("{ptr}/generation"))?;
    let idx = array(field(o, ptr, "index")?, &format!("{ptr}/index"))?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_i64()
                .ok_or_else(|| parse_error(&format!("{ptr}/index/{i}"), "expected an integer"))
        })
        .collect::<Result<Vec<i64>>>()?;
    if idx.is_empty() {
        return Err(parse_error(&format!("{ptr}/index"), "empty index"));
    }
    Ok(DyadicCube::new(g, idx))
}

fn relabel(e: Error, pointer: &str) -> Error {
    match e {
        Error::Validation(m) | Error::Regime(m) => parse_error(pointer, &m),
        other => other,
    }
}

fn object<'a>(v: &'a Value, ptr: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| parse_error(ptr, "expected an object"))
}

fn array<'a>(v: &'a Value, ptr: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_error(ptr, "expected an array"))
}

fn string<'a>(v: &'a Value, ptr: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| parse_error(ptr, "expected a string"))
}

fn integer(v: &Value, ptr: &str) -> Result<i32> {
    v.as_i64()
        .and_then(|i| i32::try_from(i).ok())
        .ok_or_else(|| parse_error(ptr, "expected an integer"))
}

fn field<'a>(obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| parse_error(&format!("{ptr}/{key}"), "missing field"))
}

fn reals(v: &Value, ptr: &str) -> Result<Vec<f64>> {
    array(v, ptr)?
        .iter()
        .enumerate()
        .map(|(i, x)| parse_real(x, &format!("{ptr}/{i}")))
        .collect()
}
