//! Capacity lower bounds through the Wolff-potential dual, truncated Riesz
//! energies, and dilation scaling of the capacity bound.
//!
//! Only lower bounds are certified: a trial measure rescaled so that its
//! Wolff potential is at most one on its support is dual feasible.

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{side_of, DyadicCube};
use crate::error::{Error, Result};
use crate::geometry::distance;
use crate::json::real;
use crate::measures::{CellGrid, Measure, RadialPowerMeasure};
use crate::params::{Exponents, Params};
use crate::potentials::{riesz_truncated, wolff_truncated};
use crate::verifiers::{Ball, VerifierReport, Witness};

/// Component of a compact set `E`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapacitySet {
    Ball { center: Vec<f64>, radius: f64 },
    Cube { cube: DyadicCube },
}

impl CapacitySet {
    fn contains_point(&self, x: &[f64]) -> bool {
        match self {
            CapacitySet::Ball { center, radius } => distance(center, x) <= *radius,
            CapacitySet::Cube { cube } => {
                let lo = cube.lower();
                let hi = cube.upper();
                x.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| v >= l && v <= h)
            }
        }
    }

    fn contains_ball(&self, c: &[f64], r: f64) -> bool {
        match self {
            CapacitySet::Ball { center, radius } => distance(center, c) + r <= *radius,
            CapacitySet::Cube { cube } => {
                let lo = cube.lower();
                let hi = cube.upper();
                c.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| v - r >= *l && v + r <= *h)
            }
        }
    }

    fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        match self {
            CapacitySet::Ball { center, radius } => {
                let far: f64 = center
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(c, (l, h))| (c - l).abs().max((h - c).abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                far <= *radius
            }
            CapacitySet::Cube { cube } => {
                let clo = cube.lower();
                let chi = cube.upper();
                lo.iter().zip(hi).zip(clo.iter().zip(&chi)).all(|((l, h), (cl, ch))| l >= cl && h <= ch)
            }
        }
    }
}

/// Result of [`riesz_capacity_lower`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityEstimate {
    /// `trial(E) / M^{s-1}`, a lower bound for the dual capacity.
    #[serde(serialize_with = "real")]
    pub lower_bound: f64,
    /// `M`, the largest sampled `W^{4R}_{alpha p, s}` of the trial measure on its support.
    #[serde(serialize_with = "real")]
    pub max_potential: f64,
    #[serde(serialize_with = "real")]
    pub trial_mass: f64,
    pub samples: usize,
    /// Wolff exponents dual to `Cap_{I_{alpha p}, q/(q-p+1)}`.
    pub wolff_exponents: Exponents,
    pub diagnostics: Vec<String>,
}

/// Wolff exponents `(n, alpha p, s)` with `s = q/(q-p+1)`, dual to the
/// capacity `Cap_{I_{alpha p}, s}`.
pub fn dual_wolff_exponents(params: &Params) -> Result<Exponents> {
    let ex = params.capacity_exponents();
    Exponents::new(ex.n, ex.alpha, ex.p)
}

/// Number of sample radii along a ray for radial trial measures.
pub const RAY_SAMPLES: usize = 17;

/// Dual lower bound for `Cap_{I_{alpha p}, q/(q-p+1)}(E)`.
///
/// `M` is the maximum of `W^{4R}_{alpha p, s}(trial)` over the atoms, the
/// centers of positive cells, or [`RAY_SAMPLES`] radii of a radial trial;
/// the bound is `trial(E)/M^{s-1}`.
pub fn riesz_capacity_lower(e: &[CapacitySet], trial: &Measure, params: &Params, r: f64) -> Result<CapacityEstimate> {
    if e.is_empty() {
        return Err(Error::invalid("the set E is empty"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("R must be positive and finite"));
    }
    let ex = dual_wolff_exponents(params)?;
    let s = ex.p;
    let samples = support_samples(trial, e)?;
    let mass = trial.total_mass();
    let mut est = CapacityEstimate {
        lower_bound: 0.0,
        max_potential: 0.0,
        trial_mass: mass,
        samples: samples.len(),
        wolff_exponents: ex,
        diagnostics: vec!["lower bound only: the trial measure is a dual feasible point".into()],
    };
    if trial.is_zero() {
        est.diagnostics.push("zero trial measure".into());
        return Ok(est);
    }
    if let Measure::Points(_) = trial {
        est.max_potential = f64::INFINITY;
        est.diagnostics.push("atoms have zero capacity contribution".into());
        return Ok(est);
    }
    let values = samples
        .par_iter()
        .map(|x| Ok(wolff_truncated(trial, x, &ex, 4.0 * r)?.value()))
        .collect::<Result<Vec<f64>>>()?;
    let m = values.iter().cloned().fold(0.0, f64::max);
    est.max_potential = m;
    if m.is_infinite() {
        est.diagnostics.push("the trial potential is infinite on its support".into());
        return Ok(est);
    }
    est.lower_bound = mass / m.powf(s - 1.0);
    Ok(est)
}

/// Points of the support of `trial` where the potential is sampled; also
/// checks that `trial` is carried by `e`.
fn support_samples(trial: &Measure, e: &[CapacitySet]) -> Result<Vec<Vec<f64>>> {
    let outside = || Error::invalid("trial measure is not supported in E");
    match trial {
        Measure::Points(m) => {
            let pts: Vec<Vec<f64>> = m.support().map(|a| a.x.clone()).collect();
            if pts.iter().any(|x| !e.iter().any(|s| s.contains_point(x))) {
                return Err(outside());
            }
            Ok(pts)
        }
        Measure::Cells(c) => {
            let mut pts = Vec::new();
            for i in 0..c.grid.len() {
                if c.values[i] > 0.0 {
                    let q = c.grid.cell(i);
                    if !e.iter().any(|s| s.contains_box(&q.lower(), &q.upper())) {
                        return Err(outside());
                    }
                    pts.push(c.grid.center(i));
                }
            }
            Ok(pts)
        }
        Measure::RadialPower(_) | Measure::Radial(_) => {
            let (center, radius) = match trial {
                Measure::RadialPower(m) => (m.center.clone(), m.radius),
                Measure::Radial(m) => (m.center().to_vec(), m.support_radius()),
                _ => unreachable!(),
            };
            if !radius.is_finite() || !e.iter().any(|s| s.contains_ball(&center, radius)) {
                return Err(outside());
            }
            Ok((0..RAY_SAMPLES)
                .map(|k| {
                    let mut x = center.clone();
                    x[0] += radius * k as f64 / (RAY_SAMPLES - 1) as f64;
                    x
                })
                .collect())
        }
    }
}

/// Truncated Riesz energy `∫ [I^{2R}_{alpha p} mu]^{q/(p-1)} dx`, the stand-in
/// for the Bessel energy, by cell quadrature.
///
/// The integration domain is the union of dyadic cubes of generation
/// `top_generation` meeting the `2R`-neighborhood of the support, split into
/// cells of generation `cell_generation`. Atoms give `+inf` exactly when
/// `(n - alpha p) q/(p-1) >= n`.
pub fn bessel_energy(mu: &Measure, params: &Params, r: f64, cell_generation: i32, top_generation: i32) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("R must be positive and finite"));
    }
    if cell_generation > top_generation {
        return Err(Error::invalid("cell generation above the top generation"));
    }
    let n = params.n();
    let order = params.alpha() * params.p();
    if !(order < n as f64) {
        return Err(Error::regime("alpha·p ≥ n: the Riesz kernel of this order is not defined"));
    }
    let s = params.homogeneity();
    if mu.is_zero() {
        return Ok(0.0);
    }
    if let Measure::Points(_) = mu {
        if (n as f64 - order) * s >= n as f64 {
            return Ok(f64::INFINITY);
        }
    }
    let (lo, hi) = support_box(mu)?;
    let side = side_of(top_generation);
    let kmin: Vec<i64> = lo.iter().map(|v| ((v - 2.0 * r) / side).floor() as i64).collect();
    let kmax: Vec<i64> = hi.iter().map(|v| ((v + 2.0 * r) / side).ceil() as i64).collect();
    let mut tops = vec![Vec::new()];
    for j in 0..n {
        let mut next = Vec::new();
        for t in &tops {
            for k in kmin[j]..kmax[j] {
                let mut idx: Vec<i64> = t.clone();
                idx.push(k);
                next.push(idx);
            }
        }
        tops = next;
    }
    let mut cells = Vec::new();
    for idx in tops {
        let grid = CellGrid::new(DyadicCube::new(top_generation, idx), cell_generation)?;
        cells.extend(grid.centers());
    }
    let vol = side_of(cell_generation).powi(n as i32);
    let parts = cells
        .par_iter()
        .map(|x| Ok(riesz_truncated(mu, x, order, 2.0 * r)?.value().powf(s)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum::<f64>() * vol)
}

/// Bounding box of the support.
fn support_box(mu: &Measure) -> Result<(Vec<f64>, Vec<f64>)> {
    match mu {
        Measure::Points(m) => {
            let n = mu.dim();
            let mut lo = vec![f64::INFINITY; n];
            let mut hi = vec![f64::NEG_INFINITY; n];
            for a in m.support() {
                for j in 0..n {
                    lo[j] = lo[j].min(a.x[j]);
                    hi[j] = hi[j].max(a.x[j]);
                }
            }
            Ok((lo, hi))
        }
        Measure::Cells(c) => Ok((c.grid.bbox.lower(), c.grid.bbox.upper())),
        Measure::RadialPower(m) if m.radius.is_finite() => Ok((
            m.center.iter().map(|v| v - m.radius).collect(),
            m.center.iter().map(|v| v + m.radius).collect(),
        )),
        Measure::Radial(m) if m.support_radius().is_finite() => Ok((
            m.center().iter().map(|v| v - m.support_radius()).collect(),
            m.center().iter().map(|v| v + m.support_radius()).collect(),
        )),
        _ => Err(Error::Unsupported("energy of a measure with unbounded support".into())),
    }
}

/// Log-log slope of [`riesz_capacity_lower`] over the balls `B_lambda(0)`
/// carrying the uniform density, with `R = lambda`.
///
/// The best constant is the largest `bound/lambda^{n - alpha p q/(q-p+1)}`;
/// metrics hold the fitted slope, the exponent and their difference.
pub fn capacity_scaling_check(params: &Params, lambdas: &[f64]) -> Result<VerifierReport> {
    let kappa = params.growth_exponent();
    if !(kappa > 0.0) || params.is_critical() {
        return Err(Error::regime(format!(
            "not supercritical: n - alpha·p·q/(q-p+1) = {kappa} ≤ 0"
        )));
    }
    if lambdas.len() < 3 {
        return Err(Error::invalid("need ≥ 3 scales"));
    }
    if lambdas.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::invalid("scales must be positive and finite"));
    }
    let n = params.n();
    let bounds = lambdas
        .iter()
        .map(|&lam| {
            let trial: Measure = RadialPowerMeasure::new(1.0, 0.0, lam, vec![0.0; n])?.into();
            let e = [CapacitySet::Ball {
                center: vec![0.0; n],
                radius: lam,
            }];
            Ok(riesz_capacity_lower(&e, &trial, params, lam)?.lower_bound)
        })
        .collect::<Result<Vec<f64>>>()?;
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = bounds.iter().map(|b| b.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("scales must not all coincide"));
    }
    let slope = sxy / sxx;
    let mut rep = VerifierReport::reduce(
        "capacity_scaling",
        lambdas
            .iter()
            .zip(&bounds)
            .map(|(l, b)| {
                (
                    b / l.powf(kappa),
                    Witness::Ball {
                        center: vec![0.0; n],
                        radius: *l,
                    },
                )
            })
            .collect(),
    );
    rep.metrics.insert("slope".into(), slope);
    rep.metrics.insert("exponent".into(), kappa);
    rep.metrics.insert("deviation".into(), slope - kappa);
    rep.notes.push("lower bounds only; trial = uniform density on B_lambda, R = lambda".into());
    Ok(rep)
}

impl From<&Ball> for CapacitySet {
    fn from(b: &Ball) -> Self {
        CapacitySet::Ball {
            center: b.center.clone(),
            radius: b.radius,
        }
    }
}
