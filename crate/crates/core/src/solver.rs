//! The operator `N f = W(f^q)` on a dyadic grid and the Picard iteration
//! `u_{n+1} = N u_n + eps f`, `u_0 = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::side_of;
use crate::error::{Error, Result};
use crate::measures::{CellDensityMeasure, CellGrid, MassPyramid};
use crate::params::{certified_constants, iteration_constants, IterationConstants, Params, Recursion};
use crate::potentials::{wolff_term, GenerationWindow};

/// Relative slack on the two-sided bound, which is attained with equality
/// at the second iterate.
pub const BOUND_RTOL: f64 = 1e-12;

/// Nonnegative piecewise-constant function on the cells of a dyadic box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    #[serde(flatten)]
    pub grid: CellGrid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: CellGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("value {i} is negative or not finite")));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: CellGrid) -> Self {
        let n = grid.len();
        GridFunction { grid, values: vec![0.0; n] }
    }

    /// Indicator of cell `i`.
    pub fn indicator(grid: CellGrid, i: usize) -> Result<Self> {
        if i >= grid.len() {
            return Err(Error::invalid(format!("cell {i} outside a grid of {}", grid.len())));
        }
        let mut f = Self::zeros(grid);
        f.values[i] = 1.0;
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * lambda).collect(),
        }
    }

    /// `self + lambda g`.
    pub fn add_scaled(&self, g: &GridFunction, lambda: f64) -> Result<Self> {
        self.same_shape(g)?;
        Ok(GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&g.values).map(|(a, b)| a + lambda * b).collect(),
        })
    }

    pub fn sup_distance(&self, g: &GridFunction) -> Result<f64> {
        self.same_shape(g)?;
        Ok(self
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// The same function on the grid of half-size cells.
    pub fn refined(&self) -> GridFunction {
        let fine = self.grid.refined();
        let values = (0..fine.len())
            .map(|i| {
                let local: Vec<usize> = fine.local_index(i).iter().map(|k| k / 2).collect();
                self.values[self.grid.linear_index(&local)]
            })
            .collect();
        GridFunction { grid: fine, values }
    }

    /// The measure `f^q dx`.
    pub fn power_measure(&self, q: f64) -> CellDensityMeasure {
        CellDensityMeasure {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.powf(q)).collect(),
        }
    }

    pub(crate) fn same_shape(&self, g: &GridFunction) -> Result<()> {
        if self.grid != g.grid || self.values.len() != g.values.len() {
            return Err(Error::invalid("grid functions live on different grids"));
        }
        Ok(())
    }
}

/// `N f = W_{alpha,p}(f^q dx)` evaluated at the cell centers.
///
/// Cubes of the window finer than a cell carry `f^q |Q|`; cubes coarser than
/// the box carry the total mass of the grid.
pub fn apply_n(f: &GridFunction, params: &Params, w: &GenerationWindow) -> Result<GridFunction> {
    let grid = &f.grid;
    let n = grid.dim();
    let cell_vol = grid.cell_volume();
    let dens: Vec<f64> = f.values.iter().map(|v| v.powf(params.q())).collect();
    let pyramid = MassPyramid::build(grid, dens.iter().map(|d| d * cell_vol).collect());
    let total: f64 = pyramid.levels.last().map_or(0.0, |l| l[0]);
    let e = params.exponents().deficit();
    let pw = 1.0 / (params.p() - 1.0);
    let cell_gen = grid.generation;
    let box_gen = grid.bbox.generation;
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let local = grid.local_index(i);
            let mut acc = 0.0;
            for g in w.generations() {
                let side = side_of(g);
                let mass = if g <= cell_gen {
                    dens[i] * side.powi(n as i32)
                } else if g <= box_gen {
                    pyramid.mass((g - cell_gen) as usize, &local)
                } else {
                    total
                };
                acc += wolff_term(mass, side, e, pw);
            }
            acc
        })
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Divergence {
            iteration: 0,
            reason: format!("overflow evaluating N f at cell {i}"),
        });
    }
    Ok(GridFunction { grid: grid.clone(), values })
}

/// `sup |u - N u - eps f|`.
pub fn residual(u: &GridFunction, f: &GridFunction, eps: f64, params: &Params, w: &GenerationWindow) -> Result<f64> {
    u.same_shape(f)?;
    let nu = apply_n(u, params, w)?;
    Ok(u.values
        .iter()
        .zip(&nu.values)
        .zip(&f.values)
        .map(|((a, b), c)| (a - b - if *c == 0.0 { 0.0 } else { eps * c }).abs())
        .fold(0.0, f64::max))
}

/// Best constant of the dyadic pointwise condition `N(N f) <= C N f` over the
/// cells of the grid, with the cell attaining it. Cells where both sides
/// vanish are skipped.
pub fn pointwise_constant(f: &GridFunction, params: &Params, w: &GenerationWindow) -> Result<(f64, Option<usize>)> {
    let nf = apply_n(f, params, w)?;
    let nnf = apply_n(&nf, params, w)?;
    let mut best = 0.0;
    let mut at = None;
    for (i, (a, b)) in nnf.values.iter().zip(&nf.values).enumerate() {
        if *b == 0.0 {
            if *a > 0.0 {
                return Ok((f64::INFINITY, Some(i)));
            }
            continue;
        }
        let r = a / b;
        if r > best || at.is_none() {
            best = r;
            at = Some(i);
        }
    }
    Ok((best, at))
}

/// Safety factor applied to an estimated pointwise constant.
pub const C_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Pointwise constant; estimated from `f` when absent.
    #[serde(rename = "C")]
    pub c: Option<f64>,
    /// Replaces the `eps` of the scheme.
    pub eps_override: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// Which constants fix `eps` and the majorant.
    pub recursion: Recursion,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            c: None,
            eps_override: None,
            recursion: Recursion::ClosedForm,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCertificate {
    pub iterations: usize,
    pub sup_residual: f64,
    /// `u_{n+1} >= u_n` held cellwise at every step, without tolerance.
    pub monotone: bool,
    /// `eps f + eps^{q/(p-1)} N f <= u_n` from the second iterate on.
    pub lower_ok: bool,
    /// `u_n <= c_n N f + eps f` at every step.
    pub upper_ok: bool,
    /// The last `c_n` checked.
    pub majorant_coefficient: f64,
    pub eps: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub c_estimated: bool,
    pub x0: f64,
    pub recursion: Recursion,
    pub window: GenerationWindow,
    pub residual_history: Vec<f64>,
}

/// Run the Picard iteration until `sup |u_{n+1} - u_n| <= tol`.
///
/// Errors with [`Error::NonConvergence`] after `max_iter` steps or on
/// stagnation, and with [`Error::Divergence`] when an iterate leaves the
/// envelope `eps f + x0 N f`.
pub fn picard_solve(
    f: &GridFunction,
    params: &Params,
    w: &GenerationWindow,
    opts: &SolveOptions,
) -> Result<(GridFunction, ConvergenceCertificate)> {
    if !(opts.tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut cert = ConvergenceCertificate {
        iterations: 0,
        sup_residual: 0.0,
        monotone: true,
        lower_ok: true,
        upper_ok: true,
        majorant_coefficient: 0.0,
        eps: opts.eps_override.unwrap_or(0.0),
        c: opts.c.unwrap_or(0.0),
        c_estimated: opts.c.is_none(),
        x0: 0.0,
        recursion: opts.recursion,
        window: *w,
        residual_history: Vec::new(),
    };
    if f.is_zero() || opts.eps_override == Some(0.0) {
        cert.iterations = 1;
        return Ok((GridFunction::zeros(f.grid.clone()), cert));
    }
    let c = match opts.c {
        Some(c) => c,
        None => C_SAFETY * pointwise_constant(f, params, w)?.0,
    };
    if !c.is_finite() {
        return Err(Error::Divergence {
            iteration: 0,
            reason: "the pointwise condition fails: N(N f) is positive where N f vanishes".into(),
        });
    }
    let mut constants: IterationConstants = match opts.recursion {
        Recursion::ClosedForm => iteration_constants(params, c)?,
        Recursion::Certified => certified_constants(params, c)?,
    };
    if let Some(eps) = opts.eps_override {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps override must be positive and finite"));
        }
        constants = constants.with_eps(eps);
    }
    if constants.is_unconstrained() {
        return Err(Error::Config("C = 0 leaves eps unconstrained; supply an eps override".into()));
    }
    let eps = constants.eps;
    cert.eps = eps;
    cert.c = c;
    cert.x0 = constants.x0;

    let nf = apply_n(f, params, w)?;
    let lower_coef = eps.powf(params.q() / (params.p() - 1.0));
    let eps_f = f.scaled(eps);
    let mut coeffs = constants.majorant_sequence();
    let mut u = GridFunction::zeros(f.grid.clone());
    let mut best_residual = f64::INFINITY;
    let mut since_progress = 0usize;
    for step in 1..=opts.max_iter {
        // u is u_{step-1}; next is u_step
        let next = apply_n(&u, params, w)?.add_scaled(&eps_f, 1.0)?;
        let cn = coeffs.next().unwrap_or(f64::INFINITY);
        cert.majorant_coefficient = cn;
        for i in 0..next.len() {
            let v = next.values[i];
            if v < u.values[i] {
                cert.monotone = false;
            }
            let base = eps_f.values[i];
            let upper = cn * nf.values[i] + base;
            if v > upper * (1.0 + BOUND_RTOL) {
                cert.upper_ok = false;
            }
            if step >= 2 && v < (lower_coef * nf.values[i] + base) * (1.0 - BOUND_RTOL) {
                cert.lower_ok = false;
            }
            let envelope = constants.x0 * nf.values[i] + base;
            if !v.is_finite() || v > envelope * (1.0 + BOUND_RTOL) + opts.tol {
                return Err(Error::Divergence {
                    iteration: step,
                    reason: format!(
                        "u = {v:e} exceeds eps f + x0 N f = {envelope:e} at cell {i}; C was underestimated"
                    ),
                });
            }
        }
        let res = next.sup_distance(&u)?;
        cert.residual_history.push(res);
        cert.iterations = step;
        u = next;
        if res <= opts.tol {
            cert.sup_residual = residual(&u, f, eps, params, w)?;
            return Ok((u, cert));
        }
        if res < best_residual * (1.0 - 1e-15) - 1e-15 {
            best_residual = res;
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress >= 10 {
                return Err(Error::NonConvergence {
                    iterations: step,
                    residual: res,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: best_residual,
    })
}
