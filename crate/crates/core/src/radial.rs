//! Radially symmetric densities given as piecewise power laws, with exact
//! centered ball masses and radial-angular quadrature for off-center balls.

use crate::geometry::{distance, sphere_fraction_in_ball, unit_sphere_area};

/// One piece `g(s) = coef * s^{-exponent}` on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PowerPiece {
    pub start: f64,
    pub end: f64,
    pub coef: f64,
    pub exponent: f64,
}

impl PowerPiece {
    pub fn eval(&self, s: f64) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else {
            self.coef * s.powf(-self.exponent)
        }
    }

    /// `∫_a^b g(s) s^{n-1} ds` for `[a,b] ⊂ [start, end]`.
    pub fn shell_integral(&self, n: usize, a: f64, b: f64) -> f64 {
        if self.coef == 0.0 || b <= a {
            return 0.0;
        }
        let lam = n as f64 - self.exponent;
        if lam == 0.0 {
            if a == 0.0 {
                return f64::INFINITY;
            }
            return self.coef * (b / a).ln();
        }
        if a == 0.0 {
            if lam < 0.0 {
                return f64::INFINITY;
            }
            return self.coef * b.powf(lam) / lam;
        }
        if b.is_infinite() {
            if lam > 0.0 {
                return f64::INFINITY;
            }
            return -self.coef * a.powf(lam) / lam;
        }
        self.coef * (b.powf(lam) - a.powf(lam)) / lam
    }
}

/// Radial density about `center`, zero beyond the last piece.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensityMeasure {
    pub(crate) center: Vec<f64>,
    pub(crate) pieces: Vec<PowerPiece>,
}

impl RadialDensityMeasure {
    /// Single power law `a |y - c|^{-gamma}` on `B_R(c)`.
    pub(crate) fn power(center: Vec<f64>, a: f64, gamma: f64, radius: f64) -> Self {
        RadialDensityMeasure {
            center,
            pieces: vec![PowerPiece {
                start: 0.0,
                end: radius,
                coef: a,
                exponent: gamma,
            }],
        }
    }

    /// Piecewise power interpolation (log-log linear) of samples
    /// `(s_i, g_i)`, extended by `inner` below the first node and cut off
    /// at `support`. Zero samples end the support.
    pub(crate) fn from_samples(
        center: Vec<f64>,
        samples: &[(f64, f64)],
        inner: Option<(f64, f64)>,
        outer: Option<(f64, f64)>,
        support: f64,
    ) -> Self {
        let mut pieces = Vec::new();
        if let (Some((coef, exponent)), Some(first)) = (inner, samples.first()) {
            pieces.push(PowerPiece {
                start: 0.0,
                end: first.0,
                coef,
                exponent,
            });
        }
        for w in samples.windows(2) {
            let (s0, g0) = w[0];
            let (s1, g1) = w[1];
            if !(g0 > 0.0 && g1 > 0.0) {
                break;
            }
            let exponent = -(g1 / g0).ln() / (s1 / s0).ln();
            let coef = g0 * s0.powf(exponent);
            pieces.push(PowerPiece {
                start: s0,
                end: s1.min(support),
                coef,
                exponent,
            });
        }
        if let (Some((coef, exponent)), Some(last)) = (outer, samples.last()) {
            if last.0 < support {
                pieces.push(PowerPiece {
                    start: last.0,
                    end: support,
                    coef,
                    exponent,
                });
            }
        }
        RadialDensityMeasure { center, pieces }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn support_radius(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.end)
    }

    pub fn density(&self, s: f64) -> f64 {
        self.pieces
            .iter()
            .find(|p| s >= p.start && s < p.end)
            .map_or(0.0, |p| p.eval(s))
    }

    /// Power law valid near the center, `(coef, exponent)`.
    pub(crate) fn inner_power(&self) -> Option<(f64, f64)> {
        self.pieces.first().filter(|p| p.start == 0.0).map(|p| (p.coef, p.exponent))
    }

    /// Power law of an unbounded last piece.
    pub(crate) fn outer_power(&self) -> Option<(f64, f64)> {
        self.pieces.last().filter(|p| p.end.is_infinite()).map(|p| (p.coef, p.exponent))
    }

    /// `∫_{a<|y-c|<b} g dy`.
    pub(crate) fn shell_mass(&self, a: f64, b: f64) -> f64 {
        let n = self.dim();
        let sigma = unit_sphere_area(n);
        let mut total = 0.0;
        for p in &self.pieces {
            let lo = a.max(p.start);
            let hi = b.min(p.end);
            if hi > lo {
                total += p.shell_integral(n, lo, hi);
            }
        }
        sigma * total
    }

    pub fn total_mass(&self) -> f64 {
        self.shell_mass(0.0, f64::INFINITY)
    }

    /// `mu(B_t(x))` for the closed ball.
    pub fn mass_ball(&self, x: &[f64], t: f64) -> f64 {
        let n = self.dim();
        let d = distance(x, &self.center);
        let support = self.support_radius();
        if t <= 0.0 {
            return 0.0;
        }
        if d == 0.0 {
            return self.shell_mass(0.0, t);
        }
        let mut total = 0.0;
        let full_end = (t - d).max(0.0);
        if full_end > 0.0 {
            total += self.shell_mass(0.0, full_end);
            if total.is_infinite() {
                return total;
            }
        }
        let lo = (d - t).abs();
        let hi = (d + t).min(support);
        if hi <= lo {
            return total;
        }
        let sigma = unit_sphere_area(n);
        for p in &self.pieces {
            let a = lo.max(p.start);
            let b = hi.min(p.end);
            if b <= a || p.coef == 0.0 {
                continue;
            }
            let f = |s: f64| p.eval(s) * s.powi(n as i32 - 1) * sphere_fraction_in_ball(n, s, d, t);
            let scale = p.eval(0.5 * (a + b)) * (0.5 * (a + b)).powi(n as i32 - 1) * (b - a);
            let tol = (1e-10 * scale.abs()).max(1e-300);
            let out = quadrature::double_exponential::integrate(f, a, b, tol);
            total += sigma * out.integral;
        }
        total
    }

    /// Same density scaled by `lambda`.
    pub(crate) fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.pieces {
            p.coef *= lambda;
        }
        out
    }
}
