//! Dyadic and continuous Wolff and Riesz potentials.
//!
//! Every continuous potential reduces to
//! `∫_lo^hi [mu(B_t(x)) / t^e]^w dt/t` with `e = n - order` and `w` the
//! outer power (`1/(p-1)` for Wolff, `1` for Riesz). Point masses make
//! `mu(B_t(x))` a step function, integrated exactly. Densities use a
//! geometric grid with closed-form kernel integrals per subinterval, an
//! analytic small-ball piece and an analytic tail.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{cube_containing, side_of, ShiftedLattice};
use crate::error::{Error, Result};
use crate::geometry::{distance, unit_ball_volume, Aabb};
use crate::measures::{Measure, RadialDensityMeasure};
use crate::params::{Exponents, Params};

/// Grid density of the composite scheme for density measures.
pub const NODES_PER_DECADE: usize = 64;

/// Range of dyadic generations `g_min..=g_max` kept in a dyadic sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationWindow {
    pub g_min: i32,
    pub g_max: i32,
}

impl GenerationWindow {
    pub fn new(g_min: i32, g_max: i32) -> Result<Self> {
        if g_min > g_max {
            return Err(Error::invalid(format!("window g_min = {g_min} > g_max = {g_max}")));
        }
        Ok(GenerationWindow { g_min, g_max })
    }

    pub fn single(g: i32) -> Self {
        GenerationWindow { g_min: g, g_max: g }
    }

    pub fn generations(&self) -> impl Iterator<Item = i32> {
        self.g_min..=self.g_max
    }

    pub fn len(&self) -> usize {
        (self.g_max - self.g_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Value of a continuous potential; divergence is a result, not an error.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialValue {
    Finite(f64),
    Infinite { reason: String },
}

impl PotentialValue {
    pub fn infinite(reason: impl Into<String>) -> Self {
        PotentialValue::Infinite { reason: reason.into() }
    }

    /// The value as a float, `+inf` for the sentinel.
    pub fn value(&self) -> f64 {
        match self {
            PotentialValue::Finite(v) => *v,
            PotentialValue::Infinite { .. } => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, PotentialValue::Finite(_))
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            PotentialValue::Finite(_) => None,
            PotentialValue::Infinite { reason } => Some(reason),
        }
    }

    fn from_value(v: f64, reason: &str) -> Self {
        if v.is_finite() {
            PotentialValue::Finite(v)
        } else {
            PotentialValue::infinite(reason)
        }
    }
}

fn check_point(mu: &Measure, x: &[f64]) -> Result<()> {
    if x.len() != mu.dim() {
        return Err(Error::invalid(format!(
            "point has dimension {} but the measure lives in R^{}",
            x.len(),
            mu.dim()
        )));
    }
    Ok(())
}

/// Dyadic Riesz potential of the given order:
/// `sum_Q mu(Q) / |Q|^{1 - order/n}` over cubes `Q ∋ x` in the window.
pub fn dyadic_riesz(mu: &Measure, x: &[f64], order: f64, w: &GenerationWindow) -> Result<f64> {
    check_point(mu, x)?;
    let n = x.len() as f64;
    let mut total = 0.0;
    for g in w.generations() {
        let q = cube_containing(x, g)?;
        let m = mu.mass_cube(&q);
        if m > 0.0 {
            total += m / side_of(g).powf(n - order);
        }
    }
    Ok(total)
}

/// Dyadic Wolff potential: `sum_Q [mu(Q) / l(Q)^{n - alpha p}]^{1/(p-1)}`.
pub fn dyadic_wolff(mu: &Measure, x: &[f64], ex: &impl AsRef<Exponents>, w: &GenerationWindow) -> Result<f64> {
    check_point(mu, x)?;
    let ex = ex.as_ref();
    let pw = 1.0 / (ex.p - 1.0);
    let e = ex.deficit();
    let mut total = 0.0;
    for g in w.generations() {
        let q = cube_containing(x, g)?;
        total += wolff_term(mu.mass_cube(&q), side_of(g), e, pw);
    }
    Ok(total)
}

/// Dyadic Wolff potential over the lattice translated by `shift`.
pub fn dyadic_wolff_shifted(
    mu: &Measure,
    x: &[f64],
    ex: &impl AsRef<Exponents>,
    w: &GenerationWindow,
    shift: &[f64],
) -> Result<f64> {
    check_point(mu, x)?;
    let ex = ex.as_ref();
    let lattice = ShiftedLattice::new(shift.to_vec());
    let pw = 1.0 / (ex.p - 1.0);
    let e = ex.deficit();
    let mut total = 0.0;
    for g in w.generations() {
        let q = lattice.cube_containing(x, g)?;
        total += wolff_term(mu.mass_box(&q.aabb()), side_of(g), e, pw);
    }
    Ok(total)
}

/// Average of [`dyadic_wolff_shifted`] over `count` shifts drawn uniformly
/// from `[0, 2^{g_max})^n` with a seeded generator.
pub fn shift_averaged_dyadic_wolff(
    mu: &Measure,
    x: &[f64],
    ex: &impl AsRef<Exponents>,
    w: &GenerationWindow,
    count: usize,
    seed: u64,
) -> Result<f64> {
    if count == 0 {
        return Err(Error::invalid("need at least one shift"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = side_of(w.g_max);
    let mut acc = 0.0;
    for _ in 0..count {
        let shift: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(0.0..top)).collect();
        acc += dyadic_wolff_shifted(mu, x, ex, w, &shift)?;
    }
    Ok(acc / count as f64)
}

#[inline]
pub(crate) fn wolff_term(mass: f64, side: f64, e: f64, pw: f64) -> f64 {
    if mass <= 0.0 {
        return 0.0;
    }
    (mass / side.powf(e)).powf(pw)
}

/// Truncated Wolff potential `W^r_{alpha,p} mu(x)`; `r = inf` allowed.
pub fn wolff_truncated(mu: &Measure, x: &[f64], ex: &impl AsRef<Exponents>, r: f64) -> Result<PotentialValue> {
    let ex = ex.as_ref();
    check_radius(r)?;
    if r.is_infinite() && !ex.is_global() {
        return Err(Error::regime(format!(
            "alpha·p = {} ≥ n = {}: the untruncated potential is local-only",
            ex.alpha * ex.p,
            ex.n
        )));
    }
    kernel_integral(mu, x, ex.deficit(), 1.0 / (ex.p - 1.0), 0.0, r)
}

/// Truncated Riesz potential `I^r_order mu(x)`.
pub fn riesz_truncated(mu: &Measure, x: &[f64], order: f64, r: f64) -> Result<PotentialValue> {
    check_radius(r)?;
    let n = mu.dim() as f64;
    if !(order > 0.0 && order < n) {
        return Err(Error::regime(format!("Riesz order {order} outside (0, n = {n})")));
    }
    kernel_integral(mu, x, n - order, 1.0, 0.0, r)
}

/// Upper part `U_r = ∫_0^r` and lower part `L_r = ∫_r^inf` of the Wolff
/// potential.
pub fn wolff_split(
    mu: &Measure,
    x: &[f64],
    ex: &impl AsRef<Exponents>,
    r: f64,
) -> Result<(PotentialValue, PotentialValue)> {
    let ex = ex.as_ref();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("split radius must be positive and finite"));
    }
    ex_global(ex)?;
    let e = ex.deficit();
    let pw = 1.0 / (ex.p - 1.0);
    Ok((
        kernel_integral(mu, x, e, pw, 0.0, r)?,
        kernel_integral(mu, x, e, pw, r, f64::INFINITY)?,
    ))
}

fn ex_global(ex: &Exponents) -> Result<()> {
    if ex.is_global() {
        Ok(())
    } else {
        Err(Error::regime("alpha·p ≥ n: only truncated potentials are defined"))
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("truncation radius must be positive, got {r}")))
    }
}

/// `c ∫_a^b t^{kappa - 1} dt`, possibly infinite; `c = 0` gives 0.
pub(crate) fn power_integral(c: f64, kappa: f64, a: f64, b: f64) -> f64 {
    if c == 0.0 || b <= a {
        return 0.0;
    }
    if kappa == 0.0 {
        if a == 0.0 || b.is_infinite() {
            return f64::INFINITY;
        }
        return c * ((b - a) / a).ln_1p();
    }
    if a == 0.0 && kappa < 0.0 {
        return f64::INFINITY;
    }
    if b.is_infinite() && kappa > 0.0 {
        return f64::INFINITY;
    }
    if a > 0.0 && b.is_finite() {
        // b^k - a^k without cancellation on short intervals
        let lr = ((b - a) / a).ln_1p();
        return c * a.powf(kappa) * (kappa * lr).exp_m1() / kappa;
    }
    let fb = if b.is_infinite() { 0.0 } else { b.powf(kappa) };
    let fa = if a == 0.0 { 0.0 } else { a.powf(kappa) };
    c * (fb - fa) / kappa
}

/// `∫_lo^hi [mu(B_t(x)) / t^e]^pw dt/t`.
pub(crate) fn kernel_integral(mu: &Measure, x: &[f64], e: f64, pw: f64, lo: f64, hi: f64) -> Result<PotentialValue> {
    check_point(mu, x)?;
    if hi <= lo {
        return Ok(PotentialValue::Finite(0.0));
    }
    match mu {
        Measure::Points(m) => {
            let mut jumps: Vec<(f64, f64)> = m
                .support()
                .map(|a| (distance(&a.x, x), a.m))
                .collect();
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
            Ok(step_integral(&jumps, e, pw, lo, hi))
        }
        Measure::Cells(c) => {
            if c.values.iter().all(|v| *v == 0.0) {
                return Ok(PotentialValue::Finite(0.0));
            }
            let bx = c.grid.bbox.aabb();
            let n = x.len();
            let (t0, m0) = match c.local_density(x) {
                Some((t0, f0)) => (t0, f0 * unit_ball_volume(n) * t0.powi(n as i32)),
                None => (nearest_support(c, x), 0.0),
            };
            let far = bx.farthest_distance(x);
            Ok(density_integral(mu, x, e, pw, lo, hi, (t0, m0, n as f64), far, 0.0))
        }
        Measure::RadialPower(m) => radial_integral(mu, &m.as_radial(), x, e, pw, lo, hi),
        Measure::Radial(m) => radial_integral(mu, m, x, e, pw, lo, hi),
    }
}

fn nearest_support(c: &crate::measures::CellDensityMeasure, x: &[f64]) -> f64 {
    (0..c.grid.len())
        .filter(|&i| c.values[i] > 0.0)
        .map(|i| c.grid.cell_aabb(i).nearest_distance(x))
        .fold(f64::INFINITY, f64::min)
}

fn radial_integral(
    mu: &Measure,
    m: &RadialDensityMeasure,
    x: &[f64],
    e: f64,
    pw: f64,
    lo: f64,
    hi: f64,
) -> Result<PotentialValue> {
    if m.pieces.iter().all(|p| p.coef == 0.0) {
        return Ok(PotentialValue::Finite(0.0));
    }
    let n = x.len() as f64;
    let d = distance(x, m.center());
    let support = m.support_radius();
    let (t0, lambda) = if d == 0.0 {
        let (_, gamma) = m.inner_power().unwrap_or((0.0, 0.0));
        (m.pieces[0].end.min(support), n - gamma)
    } else if d < support {
        (1e-3 * d.min(support - d), n)
    } else {
        (d - support, n)
    };
    let m0 = if t0 > 0.0 { m.mass_ball(x, t0) } else { 0.0 };
    let far = d + support;
    let mut tail_lambda = 0.0;
    if far.is_infinite() {
        // Unbounded support: mass grows like t^{n - gamma_out}.
        let (_, gamma_out) = m.outer_power().unwrap_or((0.0, n));
        tail_lambda = (n - gamma_out).max(0.0);
        if hi.is_infinite() && tail_lambda * pw - e * pw >= 0.0 {
            return Ok(PotentialValue::infinite(
                "divergent at t→∞: mass growth outpaces the kernel decay",
            ));
        }
        if !hi.is_infinite() {
            return Ok(density_integral(mu, x, e, pw, lo, hi, (t0, m0, lambda), hi, 0.0));
        }
        let cut = 1e6 * (d + m.pieces.last().map_or(1.0, |p| p.start).max(1.0));
        return Ok(density_integral(mu, x, e, pw, lo, hi, (t0, m0, lambda), cut, tail_lambda));
    }
    Ok(density_integral(mu, x, e, pw, lo, hi, (t0, m0, lambda), far, tail_lambda))
}

/// Exact integral for a step profile `mu(B_t) = sum_{d_i <= t} m_i`.
fn step_integral(jumps: &[(f64, f64)], e: f64, pw: f64, lo: f64, hi: f64) -> PotentialValue {
    let beta = e * pw;
    let mut total = 0.0;
    let mut mass = 0.0;
    for (i, &(d, m)) in jumps.iter().enumerate() {
        mass += m;
        if i + 1 < jumps.len() && jumps[i + 1].0 == d {
            continue;
        }
        let next = jumps.get(i + 1).map_or(f64::INFINITY, |j| j.0);
        let a = d.max(lo);
        let b = next.min(hi);
        if b > a {
            total += power_integral(mass.powf(pw), -beta, a, b);
        }
    }
    if total.is_finite() {
        return PotentialValue::Finite(total);
    }
    if jumps.first().is_some_and(|j| j.0 == 0.0) && lo == 0.0 && beta >= 0.0 {
        PotentialValue::infinite("divergent at t→0: the point carries an atom")
    } else {
        PotentialValue::infinite("divergent at t→∞: the mass does not decay against the kernel")
    }
}

/// Composite scheme on `[lo, hi]`, with `small = (t0, mu(B_t0), lambda)`:
/// * `t <= t0`: `mu(B_t) = mu(B_t0) (t/t0)^lambda`
/// * `t0 < t < far`: geometric grid, `mu` at the geometric midpoint
/// * `t >= far`: `mu(B_t) = mu(B_far) (t/far)^tail_lambda`
#[allow(clippy::too_many_arguments)]
fn density_integral(
    mu: &Measure,
    x: &[f64],
    e: f64,
    pw: f64,
    lo: f64,
    hi: f64,
    small: (f64, f64, f64),
    far: f64,
    tail_lambda: f64,
) -> PotentialValue {
    let beta = e * pw;
    let mut total = 0.0;
    let (t0, m0, lambda) = small;
    let t0 = t0.min(far);
    if lo < t0 && t0 > 0.0 {
        if m0 > 0.0 {
            // (m0 (t/t0)^lambda)^pw t^{-beta-1}
            let c = m0.powf(pw) * t0.powf(-lambda * pw);
            total += power_integral(c, lambda * pw - beta, lo, hi.min(t0));
            if !total.is_finite() {
                return PotentialValue::infinite("divergent at t→0: density too singular at the point");
            }
        }
    }
    let a = lo.max(t0);
    let b = hi.min(far);
    if b > a {
        let start = if a > 0.0 { a } else { b * 1e-12 };
        let decades = (b / start).log10();
        let steps = ((decades * NODES_PER_DECADE as f64).ceil() as usize).max(1);
        let ratio = (b / start).powf(1.0 / steps as f64);
        let mut left = start;
        for k in 0..steps {
            let right = if k + 1 == steps { b } else { left * ratio };
            let mid = (left * right).sqrt();
            let m = mu.mass_ball(x, mid);
            if m > 0.0 {
                total += power_integral(m.powf(pw), -beta, left, right);
            }
            left = right;
        }
        if !total.is_finite() {
            return PotentialValue::infinite("divergent: infinite ball mass");
        }
    }
    if hi > far {
        let mf = mu.mass_ball(x, far);
        if mf > 0.0 {
            let c = mf.powf(pw) * far.powf(-tail_lambda * pw);
            total += power_integral(c, tail_lambda * pw - beta, lo.max(far), hi);
        }
    }
    PotentialValue::from_value(total, "divergent at t→∞: the mass does not decay against the kernel")
}

/// Values of a potential along `points`, evaluated in parallel.
pub fn evaluate_many<F>(points: &[Vec<f64>], f: F) -> Result<Vec<PotentialValue>>
where
    F: Fn(&[f64]) -> Result<PotentialValue> + Sync,
{
    use rayon::prelude::*;
    points.par_iter().map(|x| f(x)).collect()
}

/// Box `B` of side `2 t` around `x`, used by the Riesz/Wolff cross-checks.
#[allow(dead_code)]
pub(crate) fn cube_around(x: &[f64], t: f64) -> Aabb {
    Aabb {
        lower: x.iter().map(|v| v - t).collect(),
        upper: x.iter().map(|v| v + t).collect(),
    }
}

/// Check that the parameter set admits global potentials.
pub fn require_global(params: &Params) -> Result<()> {
    params.require_global()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Atom, CellDensityMeasure, CellGrid, PointMassMeasure, RadialPowerMeasure};
    use crate::dyadic::DyadicCube;
    use crate::params::make_params;
    use approx::assert_relative_eq;

    fn dirac(n: usize) -> Measure {
        PointMassMeasure::dirac(vec![0.0; n]).into()
    }

    #[test]
    fn dyadic_dirac_chain() {
        let d = dirac(2);
        let w = GenerationWindow::new(0, 3).unwrap();
        assert_eq!(dyadic_riesz(&d, &[0.3, 0.3], 2.0, &w).unwrap(), 4.0);
        let pr = make_params(2, 1.0, 2.0, 3.0).unwrap();
        assert_eq!(dyadic_wolff(&d, &[0.3, 0.3], &pr, &w).unwrap(), 4.0);
        let heavy = d.scaled(4.0);
        let p3 = make_params(2, 1.0, 3.0, 3.0).unwrap();
        let base = dyadic_wolff(&d, &[0.3, 0.3], &p3, &w).unwrap();
        assert_relative_eq!(dyadic_wolff(&heavy, &[0.3, 0.3], &p3, &w).unwrap(), 2.0 * base, max_relative = 1e-15);
        assert_eq!(dyadic_wolff(&Measure::zero(2), &[0.3, 0.3], &pr, &w).unwrap(), 0.0);
    }

    #[test]
    fn single_generation_window() {
        let m = Measure::from(PointMassMeasure::new(2, vec![Atom { x: vec![0.1, 0.1], m: 3.0 }]).unwrap());
        let w = GenerationWindow::single(-1);
        let v = dyadic_riesz(&m, &[0.2, 0.4], 1.0, &w).unwrap();
        assert_relative_eq!(v, 3.0 / 0.25f64.powf(0.5), max_relative = 1e-15);
    }

    #[test]
    fn dirac_wolff_values() {
        let d = dirac(3);
        let p = make_params(3, 1.0, 2.0, 5.0).unwrap();
        let x = [0.5, 0.0, 0.0];
        assert_relative_eq!(wolff_truncated(&d, &x, &p, f64::INFINITY).unwrap().value(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(wolff_truncated(&d, &x, &p, 1.0).unwrap().value(), 1.0, max_relative = 1e-15);
        assert!(!wolff_truncated(&d, &[0.0; 3], &p, 1.0).unwrap().is_finite());
        assert_relative_eq!(riesz_truncated(&d, &x, 1.0, 1.0).unwrap().value(), 1.5, max_relative = 1e-14);
        let (u, l) = wolff_split(&d, &x, &p, 1.0).unwrap();
        assert_relative_eq!(u.value(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(l.value(), 1.0, max_relative = 1e-15);
        let (u, _) = wolff_split(&d, &[3.0, 0.0, 0.0], &p, 1.0).unwrap();
        assert_eq!(u.value(), 0.0);
    }

    #[test]
    fn local_only_refuses_infinite_radius() {
        let d = dirac(2);
        let p = make_params(2, 1.0, 2.0, 3.0).unwrap();
        assert!(wolff_truncated(&d, &[0.5, 0.0], &p, f64::INFINITY).is_err());
        assert!(wolff_truncated(&d, &[0.5, 0.0], &p, 2.0).unwrap().is_finite());
    }

    #[test]
    fn shifted_zero_matches_dyadic() {
        let m = Measure::from(
            PointMassMeasure::new(
                2,
                vec![Atom { x: vec![0.2, 0.7], m: 1.0 }, Atom { x: vec![-0.4, 0.1], m: 2.0 }],
            )
            .unwrap(),
        );
        let p = make_params(2, 0.5, 2.5, 3.0).unwrap();
        let w = GenerationWindow::new(-4, 2).unwrap();
        let x = [0.1, 0.3];
        assert_eq!(
            dyadic_wolff_shifted(&m, &x, &p, &w, &[0.0, 0.0]).unwrap(),
            dyadic_wolff(&m, &x, &p, &w).unwrap()
        );
    }

    #[test]
    fn lebesgue_riesz_centered() {
        // I^r_2 of Lebesgue on B_1 at the center in R^3: ∫_0^1 (4π/3) t^3 / t dt/t = 2π/3
        let leb = Measure::from(RadialPowerMeasure::new(1.0, 0.0, 1.0, vec![0.0; 3]).unwrap());
        let v = riesz_truncated(&leb, &[0.0; 3], 2.0, 1.0).unwrap().value();
        assert_relative_eq!(v, 2.0 * std::f64::consts::PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn lebesgue_newton_potential_off_center() {
        // Newtonian potential of the unit ball: I_2 mu(x) = ∫ dy/|x-y| = 2π(1 - |x|²/3) inside
        let leb = Measure::from(RadialPowerMeasure::new(1.0, 0.0, 1.0, vec![0.0; 3]).unwrap());
        let x = [0.5, 0.0, 0.0];
        let v = riesz_truncated(&leb, &x, 2.0, f64::INFINITY).unwrap().value();
        let exact = 2.0 * std::f64::consts::PI * (1.0 - 0.25 / 3.0);
        assert_relative_eq!(v, exact, max_relative = 1e-4);
    }

    #[test]
    fn cell_density_potential_close_to_radial() {
        // f ≡ 1 on [0,1)^2, Riesz order 1 at the center, r = 0.25: ball stays inside
        let grid = CellGrid::new(DyadicCube::new(0, vec![0, 0]), -3).unwrap();
        let f = Measure::from(CellDensityMeasure::constant(grid, 1.0).unwrap());
        let v = riesz_truncated(&f, &[0.5, 0.5], 1.0, 0.25).unwrap().value();
        // ∫_0^r π t^2 / t dt/t = π r
        assert_relative_eq!(v, std::f64::consts::PI * 0.25, max_relative = 5e-3);
    }
}
