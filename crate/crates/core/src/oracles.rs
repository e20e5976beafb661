//! Ground truth: closed-form radial solutions of the quasilinear and k-Hessian
//! Lane-Emden equations, finite-difference residuals, the Wolff potential of a
//! point mass, and a brute-force quadrature double of the potential integral.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::json::real;
use crate::measures::Measure;
use crate::params::{critical_exponents, Exponents, OperatorKind, Params};
use crate::potentials::power_integral;

/// Singular radial solution `u = c |x|^{exponent}` of `-Δ_p u = u^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialSolution {
    pub c: f64,
    pub exponent: f64,
}

impl RadialSolution {
    pub fn eval(&self, r: f64) -> f64 {
        self.c * r.powf(self.exponent)
    }

    /// Samples of the profile on `mesh`.
    pub fn profile(&self, mesh: &[f64]) -> Vec<f64> {
        mesh.iter().map(|&r| self.eval(r)).collect()
    }
}

/// `u(x) = c |x|^{-p/(q-p+1)}` with
/// `c = [p^{p-1}/(q-p+1)^p]^{1/(q-p+1)} [q(n-p) - n(p-1)]^{1/(q-p+1)}`,
/// for `1 < p < n`, `alpha = 1` and `q > q_*`.
pub fn radial_plap_solution(params: &Params) -> Result<RadialSolution> {
    if params.kind() != OperatorKind::Quasilinear || (params.alpha() - 1.0).abs() > 1e-15 {
        return Err(Error::regime("the radial p-Laplace solution needs alpha = 1"));
    }
    let n = params.n() as f64;
    let p = params.p();
    let q = params.q();
    if !(p < n) {
        return Err(Error::regime(format!("p = {p} ≥ n = {n}: no singular solution in regime")));
    }
    let (q_star, _) = critical_exponents(params)?;
    let bracket = q * (n - p) - n * (p - 1.0);
    if !(q > q_star) || bracket <= 0.0 {
        return Err(Error::regime(format!(
            "q = {q} ≤ q_* = {q_star}: no singular solution in regime"
        )));
    }
    let d = q - p + 1.0;
    let c = (p.powf(p - 1.0) / d.powf(p)).powf(1.0 / d) * bracket.powf(1.0 / d);
    Ok(RadialSolution { c, exponent: -p / d })
}

/// Binomial coefficient as a real.
fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `u(x) = c' |x|^{-2k/(q-k)}` solving `F_k[-u] = u^q`, with
/// `c' = [(n-1)!/(k!(n-k)!)]^{1/(q-k)} [(2k)^k/(q-k)^{k+1}]^{1/(q-k)} [q(n-2k) - nk]^{1/(q-k)}`,
/// for `1 <= k < n/2` and `q > nk/(n-2k)`.
pub fn radial_hessian_solution(n: usize, k: u32, q: f64) -> Result<RadialSolution> {
    let nf = n as f64;
    let kf = k as f64;
    if k < 1 || 2.0 * kf >= nf {
        return Err(Error::regime(format!("need 1 ≤ k < n/2, got k = {k}, n = {n}")));
    }
    let q_star = nf * kf / (nf - 2.0 * kf);
    let bracket = q * (nf - 2.0 * kf) - nf * kf;
    if !(q > q_star) || bracket <= 0.0 {
        return Err(Error::regime(format!(
            "q = {q} ≤ nk/(n-2k) = {q_star}: no singular solution in regime"
        )));
    }
    let d = q - kf;
    // (n-1)!/(k!(n-k)!) = C(n-1, k)/(n-k)
    let comb = binomial(n as u32 - 1, k) / (nf - kf);
    let c = comb.powf(1.0 / d) * ((2.0 * kf).powf(kf) / d.powf(kf + 1.0)).powf(1.0 / d) * bracket.powf(1.0 / d);
    Ok(RadialSolution {
        c,
        exponent: -2.0 * kf / d,
    })
}

/// `S_k` of the Hessian of a radial function: eigenvalues `v''` (once) and
/// `v'/r` (`n-1` times), combined by the elementary symmetric polynomial.
pub fn radial_k_hessian(dv: f64, d2v: f64, r: f64, n: usize, k: u32) -> f64 {
    let mut eig = vec![dv / r; n];
    eig[0] = d2v;
    elementary_symmetric(&eig, k as usize)
}

/// `e_k(x_1, ..., x_m)`.
pub fn elementary_symmetric(x: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in x {
        for j in (1..=k.min(x.len())).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[k]
}

/// Uniform log spacing of `mesh`.
fn log_step(mesh: &[f64]) -> Result<f64> {
    if mesh.len() < 5 {
        return Err(Error::invalid("mesh too coarse: need at least 5 points"));
    }
    if mesh.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::invalid("mesh radii must be positive and finite"));
    }
    let h = (mesh[1] / mesh[0]).ln();
    if !(h > 0.0) {
        return Err(Error::invalid("mesh must be increasing"));
    }
    for w in mesh.windows(2) {
        let hi = (w[1] / w[0]).ln();
        if (hi - h).abs() > 1e-9 * h {
            return Err(Error::invalid("mesh must be log-spaced"));
        }
    }
    Ok(h)
}

/// `n` log-spaced radii from `r_min` to `r_max`.
pub fn log_mesh(r_min: f64, r_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && n >= 2) {
        return Err(Error::invalid("need 0 < r_min < r_max and at least 2 points"));
    }
    let h = (r_max / r_min).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i + 1 == n { r_max } else { r_min * (h * i as f64).exp() })
        .collect())
}

fn check_profile(u: &[f64], mesh: &[f64]) -> Result<f64> {
    if u.len() != mesh.len() {
        return Err(Error::invalid("profile and mesh lengths differ"));
    }
    let h = log_step(mesh)?;
    if u.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("profile must be finite and nonnegative"));
    }
    if u.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("profile must be nonincreasing"));
    }
    Ok(h)
}

/// Sup over interior mesh points of `|-Δ_p u - u^q|` for a radial profile,
/// with `-Δ_p u = -r^{-n} d/ds (r^{n-1} |u'|^{p-2} u')` in `s = ln r`
/// discretized in flux form (second order).
pub fn plap_radial_residual(u: &[f64], params: &Params, mesh: &[f64]) -> Result<f64> {
    let h = check_profile(u, mesh)?;
    let n = params.n() as i32;
    let p = params.p();
    let q = params.q();
    let flux = |i: usize| -> f64 {
        let rm = (mesh[i] * mesh[i + 1]).sqrt();
        let du = (u[i + 1] - u[i]) / h / rm;
        if du == 0.0 {
            return 0.0;
        }
        rm.powi(n - 1) * du.abs().powf(p - 2.0) * du
    };
    Ok(sup_residual(mesh.len(), |i| {
        let op = -(flux(i) - flux(i - 1)) / h / mesh[i].powi(n);
        op - u[i].powf(q)
    }))
}

/// Sup over interior mesh points of `|F_k[-u] - u^q|` for a radial profile,
/// with `F_k[v] = C(n-1,k-1)/k r^{-n} d/ds (r^{n-k} (v')^k)` in `s = ln r`.
pub fn hessian_radial_residual(u: &[f64], n: usize, k: u32, q: f64, mesh: &[f64]) -> Result<f64> {
    let h = check_profile(u, mesh)?;
    if k < 1 || k as usize > n {
        return Err(Error::regime(format!("k = {k} outside 1 ≤ k ≤ n = {n}")));
    }
    let ni = n as i32;
    let ki = k as i32;
    let factor = binomial(n as u32 - 1, k - 1) / k as f64;
    let flux = |i: usize| -> f64 {
        let rm = (mesh[i] * mesh[i + 1]).sqrt();
        let dv = -(u[i + 1] - u[i]) / h / rm;
        rm.powi(ni - 1) * dv.powi(ki - 1) * dv / rm.powi(ki - 1)
    };
    Ok(sup_residual(mesh.len(), |i| {
        let op = factor * (flux(i) - flux(i - 1)) / h / mesh[i].powi(ni);
        op - u[i].powf(q)
    }))
}

fn sup_residual(len: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    (1..len - 1).into_par_iter().map(|i| f(i).abs()).reduce(|| 0.0, f64::max)
}

/// Closed form of the truncated Wolff potential of a unit point mass at
/// distance `d`: `((p-1)/(n - alpha p)) (d^{-beta} - r^{-beta})` with
/// `beta = (n - alpha p)/(p-1)`, zero when `r <= d`.
pub fn wolff_dirac_closed_form(ex: &impl AsRef<Exponents>, d: f64, r: f64) -> Result<f64> {
    let ex = ex.as_ref();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::invalid("distance must be positive and finite"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("truncation radius must be positive"));
    }
    if r <= d {
        return Ok(0.0);
    }
    let e = ex.deficit();
    if r.is_infinite() && e <= 0.0 {
        return Err(Error::regime("alpha·p ≥ n: the untruncated potential of a point mass diverges"));
    }
    let pw = 1.0 / (ex.p - 1.0);
    if e == 0.0 {
        return Ok((r / d).ln());
    }
    let beta = e * pw;
    let tail = if r.is_infinite() { 0.0 } else { r.powf(-beta) };
    Ok((d.powf(-beta) - tail) / beta)
}

/// Result of [`brute_wolff`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteEstimate {
    #[serde(serialize_with = "real")]
    pub value: f64,
    /// Number of `mu(B_t)` samples.
    pub nodes: usize,
}

/// Bisection depth (in log t) for intervals across which an atomic
/// `mu(B_t)` jumps.
pub const JUMP_REFINEMENT: u32 = 24;

/// Independent quadrature of `∫_0^r [mu(B_t(x))/t^{n - alpha p}]^{1/(p-1)} dt/t`
/// from samples of `mu(B_t(x))` on the log grid `10^{k/nodes_per_decade}`.
///
/// On each cell the kernel `t^{-beta}` is integrated exactly against the mass
/// at the left node. For point masses, cells where the mass jumps are bisected
/// [`JUMP_REFINEMENT`] times, so the estimate increases to the exact value as
/// `nodes_per_decade` doubles. Other measures use the mean of the two node
/// values. Below the grid `mu(B_t) ~ t^n` is assumed; above it the mass is
/// taken as constant.
pub fn brute_wolff(
    mu: &Measure,
    x: &[f64],
    ex: &impl AsRef<Exponents>,
    r: f64,
    nodes_per_decade: usize,
) -> Result<BruteEstimate> {
    let ex = ex.as_ref();
    if nodes_per_decade < 8 {
        return Err(Error::invalid("nodes_per_decade must be at least 8"));
    }
    if x.len() != mu.dim() {
        return Err(Error::invalid("point and measure dimensions differ"));
    }
    if !(r > 0.0) {
        return Err(Error::invalid("truncation radius must be positive"));
    }
    let e = ex.deficit();
    if r.is_infinite() && e <= 0.0 {
        return Err(Error::regime("alpha·p ≥ n: only truncated potentials are defined"));
    }
    if mu.is_zero() {
        return Ok(BruteEstimate { value: 0.0, nodes: 0 });
    }
    let pw = 1.0 / (ex.p - 1.0);
    let n = ex.n as f64;
    let atomic = matches!(mu, Measure::Points(_));
    let reach = support_reach(mu, x);
    if r.is_infinite() && reach.is_infinite() {
        return Err(Error::Unsupported("brute quadrature needs bounded support when r = ∞".into()));
    }
    let scale = if reach.is_finite() { reach } else { r };
    let lo_dec = (scale.log10().floor() as i64) - 12;
    let hi_dec = if r.is_finite() {
        r.log10().ceil() as i64
    } else {
        scale.log10().ceil() as i64 + 6
    };
    let npd = nodes_per_decade as i64;
    let mut ts: Vec<f64> = (lo_dec * npd..=hi_dec * npd)
        .map(|k| 10f64.powf(k as f64 / npd as f64))
        .filter(|t| *t < r)
        .collect();
    if r.is_finite() {
        ts.push(r);
    }
    let masses: Vec<f64> = ts.par_iter().map(|t| mu.mass_ball(x, *t)).collect();
    let mut nodes = ts.len();
    let t0 = ts[0];
    let m0 = masses[0];
    if atomic && m0 > 0.0 {
        return Ok(BruteEstimate {
            value: f64::INFINITY,
            nodes,
        });
    }
    // below the grid: mu(B_t) = m0 (t/t0)^n
    let mut total = power_integral((m0 / t0.powf(n)).powf(pw), (n - e) * pw, 0.0, t0);
    let kernel = |c: f64, a: f64, b: f64| power_integral(c.powf(pw), -e * pw, a, b);
    let parts: Vec<(f64, usize)> = (0..ts.len() - 1)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (ts[i], ts[i + 1]);
            let (ma, mb) = (masses[i], masses[i + 1]);
            if ma == mb {
                (kernel(ma, a, b), 0)
            } else if atomic {
                refine_jump(mu, x, a, b, ma, mb, JUMP_REFINEMENT, &kernel)
            } else {
                (0.5 * (kernel(ma, a, b) + kernel(mb, a, b)), 0)
            }
        })
        .collect();
    for (v, extra) in parts {
        total += v;
        nodes += extra;
    }
    if r.is_infinite() {
        let last = *ts.last().unwrap();
        total += kernel(*masses.last().unwrap(), last, f64::INFINITY);
    }
    Ok(BruteEstimate { value: total, nodes })
}

fn refine_jump(
    mu: &Measure,
    x: &[f64],
    a: f64,
    b: f64,
    ma: f64,
    mb: f64,
    depth: u32,
    kernel: &(impl Fn(f64, f64, f64) -> f64 + Sync),
) -> (f64, usize) {
    if ma == mb || depth == 0 {
        return (kernel(ma, a, b), 0);
    }
    let m = (a * b).sqrt();
    let mm = mu.mass_ball(x, m);
    let (l, nl) = refine_jump(mu, x, a, m, ma, mm, depth - 1, kernel);
    let (h, nh) = refine_jump(mu, x, m, b, mm, mb, depth - 1, kernel);
    (l + h, nl + nh + 1)
}

/// Radius beyond which `mu(B_t(x))` is the total mass.
fn support_reach(mu: &Measure, x: &[f64]) -> f64 {
    use crate::geometry::distance;
    match mu {
        Measure::Points(m) => m.support().map(|a| distance(&a.x, x)).fold(0.0, f64::max),
        Measure::Cells(c) => c.grid.bbox.aabb().farthest_distance(x),
        Measure::RadialPower(m) => distance(&m.center, x) + m.radius,
        Measure::Radial(m) => distance(m.center(), x) + m.support_radius(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{CellDensityMeasure, CellGrid, PointMassMeasure};
    use crate::params::make_params;
    use crate::potentials::wolff_truncated;
    use approx::assert_relative_eq;

    #[test]
    fn plap_solution_constants() {
        let s = radial_plap_solution(&make_params(3, 1.0, 2.0, 5.0).unwrap()).unwrap();
        assert_relative_eq!(s.c, 0.5f64.sqrt(), max_relative = 1e-15);
        assert_eq!(s.exponent, -0.5);
        // [2/3^2]^{1/3} [8 - 4]^{1/3}
        let s = radial_plap_solution(&make_params(4, 1.0, 2.0, 4.0).unwrap()).unwrap();
        assert_relative_eq!(s.c, (8.0f64 / 9.0).powf(1.0 / 3.0), max_relative = 1e-15);
        assert_relative_eq!(s.exponent, -2.0 / 3.0, max_relative = 1e-15);
        assert!(matches!(
            radial_plap_solution(&make_params(3, 1.0, 2.0, 3.0).unwrap()),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn hessian_solution_constants() {
        let s = radial_hessian_solution(5, 1, 5.0).unwrap();
        assert_relative_eq!(s.c, 1.25f64.powf(0.25), max_relative = 1e-15);
        assert_eq!(s.exponent, -0.5);
        // n=7, k=2, q=7: [3]^{1/5} [16/125]^{1/5} [7]^{1/5}
        let s = radial_hessian_solution(7, 2, 7.0).unwrap();
        assert_relative_eq!(s.c, (336.0f64 / 125.0).powf(0.2), max_relative = 1e-14);
        assert_relative_eq!(s.exponent, -0.8, max_relative = 1e-15);
        assert!(radial_hessian_solution(5, 1, 5.0 / 3.0).is_err());
        assert!(radial_hessian_solution(4, 2, 9.0).is_err());
    }

    #[test]
    fn elementary_symmetric_small_cases() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(elementary_symmetric(&x, 0), 1.0);
        assert_eq!(elementary_symmetric(&x, 1), 6.0);
        assert_eq!(elementary_symmetric(&x, 2), 11.0);
        assert_eq!(elementary_symmetric(&x, 3), 6.0);
    }

    #[test]
    fn k_hessian_of_power_profile() {
        // v = -c r^{-a}; F_k from eigenvalues equals u^q for the closed form
        for (n, k, q) in [(5usize, 1u32, 5.0), (7, 2, 7.0), (9, 3, 10.0)] {
            let s = radial_hessian_solution(n, k, q).unwrap();
            let a = -s.exponent;
            for r in [0.3f64, 1.0, 2.5] {
                let dv = a * s.c * r.powf(-a - 1.0);
                let d2v = -a * (a + 1.0) * s.c * r.powf(-a - 2.0);
                let f = radial_k_hessian(dv, d2v, r, n, k);
                assert_relative_eq!(f, s.eval(r).powf(q), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn plap_residual_small_and_second_order() {
        for (n, p, q) in [(3usize, 2.0, 5.0), (4, 2.0, 4.0), (3, 1.5, 4.0)] {
            let params = make_params(n, 1.0, p, q).unwrap();
            let s = radial_plap_solution(&params).unwrap();
            let coarse = log_mesh(0.5, 2.0, 400).unwrap();
            let fine = log_mesh(0.5, 2.0, 799).unwrap();
            let scale = s.eval(0.5).powf(q);
            let r1 = plap_radial_residual(&s.profile(&coarse), &params, &coarse).unwrap();
            let r2 = plap_radial_residual(&s.profile(&fine), &params, &fine).unwrap();
            assert!(r1 <= 1e-4 * scale, "{n} {p} {q}: {r1}");
            let ratio = r1 / r2;
            assert!((3.5..=4.5).contains(&ratio), "{n} {p} {q}: {ratio}");
        }
    }

    #[test]
    fn plap_residual_trivial_profiles() {
        let params = make_params(3, 1.0, 2.0, 5.0).unwrap();
        let mesh = log_mesh(0.5, 2.0, 50).unwrap();
        assert_eq!(plap_radial_residual(&vec![0.0; 50], &params, &mesh).unwrap(), 0.0);
        // harmonic profile r^{-1}: only the source term remains
        let u: Vec<f64> = mesh.iter().map(|r| 1.0 / r).collect();
        let res = plap_radial_residual(&u, &params, &mesh).unwrap();
        let max_uq = u[1].powf(5.0);
        assert_relative_eq!(res, max_uq, max_relative = 1e-3);
        assert!(plap_radial_residual(&u[..4], &params, &mesh[..4]).is_err());
    }

    #[test]
    fn hessian_residual_k1_matches_laplacian() {
        let params = make_params(5, 1.0, 2.0, 5.0).unwrap();
        let s = radial_hessian_solution(5, 1, 5.0).unwrap();
        let mesh = log_mesh(0.5, 2.0, 400).unwrap();
        let u = s.profile(&mesh);
        let a = hessian_radial_residual(&u, 5, 1, 5.0, &mesh).unwrap();
        let b = plap_radial_residual(&u, &params, &mesh).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(a <= 1e-4 * s.eval(0.5).powf(5.0));
        let s = radial_hessian_solution(7, 2, 7.0).unwrap();
        let u = s.profile(&mesh);
        let res = hessian_radial_residual(&u, 7, 2, 7.0, &mesh).unwrap();
        assert!(res <= 1e-4 * s.eval(0.5).powf(7.0), "{res}");
        assert_eq!(hessian_radial_residual(&vec![0.0; 400], 7, 2, 7.0, &mesh).unwrap(), 0.0);
    }

    #[test]
    fn dirac_closed_form_values() {
        let ex = Exponents::new(3, 1.0, 2.0).unwrap();
        assert_eq!(wolff_dirac_closed_form(&ex, 0.5, f64::INFINITY).unwrap(), 2.0);
        assert_eq!(wolff_dirac_closed_form(&ex, 0.5, 0.5).unwrap(), 0.0);
        assert_relative_eq!(wolff_dirac_closed_form(&ex, 0.5, 1.0).unwrap(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn brute_converges_monotonically_on_dirac() {
        let ex = Exponents::new(3, 1.0, 2.0).unwrap();
        let mu: Measure = PointMassMeasure::dirac(vec![0.0; 3]).into();
        let x = [0.5, 0.0, 0.0];
        let exact = wolff_truncated(&mu, &x, &ex, f64::INFINITY).unwrap().value();
        let mut prev = 0.0;
        for npd in [8, 16, 32, 64, 128, 256, 512] {
            let b = brute_wolff(&mu, &x, &ex, f64::INFINITY, npd).unwrap();
            // nondecreasing up to round-off; ties occur when refinement
            // does not move a node below the jump
            assert!(b.value >= prev * (1.0 - 1e-14) && b.value <= exact * (1.0 + 1e-12), "{npd}: {}", b.value);
            prev = b.value;
        }
        assert_relative_eq!(prev, 2.0, max_relative = 1e-3);
        let zero = brute_wolff(&Measure::zero(3), &x, &ex, 1.0, 8).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn brute_matches_cell_density_fast_path() {
        let ex = Exponents::new(2, 1.0, 1.5).unwrap();
        let grid = CellGrid::new(crate::dyadic::DyadicCube::new(0, vec![0, 0]), -4).unwrap();
        let mu: Measure = CellDensityMeasure::constant(grid, 1.0).unwrap().into();
        let x = [0.3, 0.6];
        let fast = wolff_truncated(&mu, &x, &ex, 1.0).unwrap().value();
        let brute = brute_wolff(&mu, &x, &ex, 1.0, 64).unwrap().value;
        assert_relative_eq!(fast, brute, max_relative = 2e-2);
    }
}
