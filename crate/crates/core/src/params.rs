//! Exponent bundles and the closed-form constants of the iteration scheme.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used for the exactness invariants of derived reals.
pub const EXACT_RTOL: f64 = 1e-10;

/// The triple `(n, alpha, p)` that fixes a Wolff potential `W_{alpha,p}`.
///
/// Potentials only need these three numbers; the source exponent `q` lives in
/// [`Params`]. Capacity estimates build exponents that differ from the ones
/// of the equation (order `alpha p`, index `q/(q-p+1)`), which is why this is
/// a separate type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub n: usize,
    pub alpha: f64,
    pub p: f64,
}

impl AsRef<Exponents> for Exponents {
    fn as_ref(&self) -> &Exponents {
        self
    }
}

impl Exponents {
    pub fn new(n: usize, alpha: f64, p: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("dimension n must be at least 1"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::regime(format!("alpha must be positive, got {alpha}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::regime(format!("p ≤ 1 (p = {p})")));
        }
        Ok(Exponents { n, alpha, p })
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `n - alpha p`, the homogeneity deficit of the kernel.
    pub fn deficit(&self) -> f64 {
        self.nf() - self.alpha * self.p
    }

    /// Decay rate of the Wolff potential of a point mass:
    /// `W delta(x) ~ |x|^{-(n - alpha p)/(p - 1)}`.
    pub fn dirac_decay(&self) -> f64 {
        self.deficit() / (self.p - 1.0)
    }

    pub fn is_global(&self) -> bool {
        self.deficit() > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorKind {
    Quasilinear,
    Hessian { k: u32 },
}

/// Exponent bundle `(n, alpha, p, q)` with derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    exponents: Exponents,
    q: f64,
    p_prime: f64,
    kind: OperatorKind,
}

impl AsRef<Exponents> for Params {
    fn as_ref(&self) -> &Exponents {
        &self.exponents
    }
}

/// Validate a quasilinear parameter set.
///
/// Parameters with `alpha p >= n` are accepted but flagged local-only; global
/// operations refuse them through [`Params::require_global`].
pub fn make_params(n: usize, alpha: f64, p: f64, q: f64) -> Result<Params> {
    Params::build(n, alpha, p, q, OperatorKind::Quasilinear)
}

/// Parameters of the k-Hessian equation: `alpha = 2k/(k+1)`, `p = k+1`.
pub fn hessian_params(n: usize, k: u32, q: f64) -> Result<Params> {
    if k < 1 || k as usize > n {
        return Err(Error::regime(format!("k = {k} outside 1 ≤ k ≤ n = {n}")));
    }
    let kf = k as f64;
    if !(q > kf) {
        return Err(Error::regime(format!("q ≤ k (q = {q}, k = {k})")));
    }
    Params::build(n, 2.0 * kf / (kf + 1.0), kf + 1.0, q, OperatorKind::Hessian { k })
}

impl Params {
    fn build(n: usize, alpha: f64, p: f64, q: f64, kind: OperatorKind) -> Result<Self> {
        if n < 2 && kind != OperatorKind::Quasilinear {
            return Err(Error::invalid("dimension n must be at least 2"));
        }
        let exponents = Exponents::new(n, alpha, p)?;
        if !(q.is_finite() && q > p - 1.0) {
            return Err(Error::regime(format!("q ≤ p−1 (q = {q}, p−1 = {})", p - 1.0)));
        }
        Ok(Params {
            exponents,
            q,
            p_prime: p / (p - 1.0),
            kind,
        })
    }

    pub fn n(&self) -> usize {
        self.exponents.n
    }

    pub fn alpha(&self) -> f64 {
        self.exponents.alpha
    }

    pub fn p(&self) -> f64 {
        self.exponents.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p_prime(&self) -> f64 {
        self.p_prime
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn exponents(&self) -> Exponents {
        self.exponents
    }

    /// True when `alpha p >= n`: the global theory on R^n is empty there.
    pub fn is_local_only(&self) -> bool {
        !self.exponents.is_global()
    }

    pub fn require_global(&self) -> Result<()> {
        if self.is_local_only() {
            Err(Error::regime(format!(
                "alpha·p = {} ≥ n = {}: parameters are local-only",
                self.alpha() * self.p(),
                self.n()
            )))
        } else {
            Ok(())
        }
    }

    /// `q/(p-1)`, the homogeneity degree of `N f = W(f^q)`.
    pub fn homogeneity(&self) -> f64 {
        self.q / (self.p() - 1.0)
    }

    /// `alpha p q/(q-p+1)`; the solvability theory is supercritical when this is
    /// below `n` and critical when equal.
    pub fn scaling_order(&self) -> f64 {
        self.alpha() * self.p() * self.q / (self.q - self.p() + 1.0)
    }

    /// `n - alpha p q/(q-p+1)`: the growth exponent of Frostman-type bounds
    /// `omega(B_t) <= C t^{...}`.
    pub fn growth_exponent(&self) -> f64 {
        self.exponents.nf() - self.scaling_order()
    }

    pub fn is_critical(&self) -> bool {
        (self.scaling_order() - self.exponents.nf()).abs() <= 1e-12 * self.exponents.nf()
    }

    /// Capacity indices `(alpha p, q/(q-p+1))` of the condition
    /// `omega(E) <= C Cap_{I_{alpha p}, q/(q-p+1)}(E)`.
    pub fn capacity_exponents(&self) -> Exponents {
        Exponents {
            n: self.n(),
            alpha: self.alpha() * self.p(),
            p: self.q / (self.q - self.p() + 1.0),
        }
    }
}

/// `c(p) = max{1, 2^{p'-2}}`, the constant in `(a+b)^{p'-1} <= c(p)(a^{p'-1} + b^{p'-1})`.
pub fn cp(p: f64) -> f64 {
    let p_prime = p / (p - 1.0);
    (2f64).powf(p_prime - 2.0).max(1.0)
}

/// Critical exponents `(q_*, q_**)`.
///
/// With the deficit `n - alpha p` the quasilinear pair is
/// `q_* = n(p-1)/(n - alpha p)` and `q_** = (n(p-1) + alpha p)/(n - alpha p)`,
/// which is `n(p-1)/(n-p)` and `(n(p-1)+p)/(n-p)` for `alpha = 1`. For the
/// k-Hessian mapping `q_* = nk/(n-2k)` and there is no second exponent.
pub fn critical_exponents(params: &Params) -> Result<(f64, Option<f64>)> {
    let n = params.n() as f64;
    let deficit = params.exponents.deficit();
    match params.kind {
        OperatorKind::Quasilinear => {
            if deficit <= 0.0 {
                return Err(Error::regime("no critical exponent; Liouville regime (alpha·p ≥ n)"));
            }
            let p = params.p();
            let ap = params.alpha() * p;
            Ok((n * (p - 1.0) / deficit, Some((n * (p - 1.0) + ap) / deficit)))
        }
        OperatorKind::Hessian { k } => {
            let k = k as f64;
            if 2.0 * k >= n {
                return Err(Error::regime("no critical exponent; Liouville regime (k ≥ n/2)"));
            }
            Ok((n * k / (n - 2.0 * k), None))
        }
    }
}

/// Constants of the Picard scheme for a pointwise-condition constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConstants {
    /// The `eps` multiplying `f`; `+inf` when `C = 0` (unconstrained).
    pub eps: f64,
    /// Limit of the majorant coefficients `c_n`.
    pub x0: f64,
    /// `c(p)`.
    pub cp: f64,
    /// The pointwise-condition constant the scheme was built for.
    #[serde(rename = "C")]
    pub c: f64,
    /// `eps^{1/(p-1)} c(p)`.
    pub scale: f64,
    /// Which majorant recursion the constants belong to.
    pub recursion: Recursion,
    p: f64,
    q: f64,
}

/// Majorant recursions for `u_n <= c_n N f + eps f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recursion {
    /// `c_n = [eps^{1/(p-1)} c(p) (1 + C^{1/q} c_{n-1}^{p'-1})]^q` with the
    /// closed-form `eps`.
    ClosedForm,
    /// `c_n = [c(p) (eps^{1/(p-1)} + C^{1/q} c_{n-1}^{p'-1})]^q`, the bound
    /// implied by subadditivity, with `eps` at its tangency.
    Certified,
}

/// Closed-form `eps` and `x0` for the pointwise constant `c`.
///
/// `eps` is chosen so that `x = [a (1 + C^{1/q} x^{p'-1})]^q`, with
/// `a = eps^{1/(p-1)} c(p)`, has a double root, which is `x0`.
pub fn iteration_constants(params: &Params, c: f64) -> Result<IterationConstants> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("pointwise constant C must be finite and ≥ 0, got {c}")));
    }
    let p = params.p();
    let q = params.q();
    let cp = cp(p);
    if c == 0.0 {
        return Ok(IterationConstants {
            eps: f64::INFINITY,
            x0: f64::INFINITY,
            cp,
            c,
            scale: f64::INFINITY,
            recursion: Recursion::ClosedForm,
            p,
            q,
        });
    }
    let s = q - p + 1.0;
    let scale = (s / q).powf(s / q) * ((p - 1.0) / q).powf((p - 1.0) / q) * c.powf((1.0 - p) / (q * q));
    let eps = (scale / cp).powf(p - 1.0);
    let x0 = (q / (p - 1.0) * scale * c.powf(1.0 / q)).powf(q * (p - 1.0) / (p - 1.0 - q));
    Ok(IterationConstants {
        eps,
        x0,
        cp,
        c,
        scale,
        recursion: Recursion::ClosedForm,
        p,
        q,
    })
}

/// Largest `eps` for which the certified recursion stays bounded.
///
/// With `y = x^{1/q}`, `s = q/(p-1)` and `K = C^{1/q}` the fixed-point
/// equation is `y = c(p)(eps^{1/(p-1)} + K y^s)`; tangency gives
/// `y* = (c(p) K s)^{-1/(s-1)}`, `eps^{1/(p-1)} = y* (1 - 1/s) / c(p)` and
/// `x0 = y*^q`.
pub fn certified_constants(params: &Params, c: f64) -> Result<IterationConstants> {
    let mut out = iteration_constants(params, c)?;
    out.recursion = Recursion::Certified;
    if c == 0.0 {
        return Ok(out);
    }
    let p = params.p();
    let q = params.q();
    let s = q / (p - 1.0);
    let k = c.powf(1.0 / q);
    let y = (out.cp * k * s).powf(-1.0 / (s - 1.0));
    let e = y * (1.0 - 1.0 / s) / out.cp;
    out.eps = e.powf(p - 1.0);
    out.scale = e * out.cp;
    out.x0 = y.powf(q);
    Ok(out)
}

impl IterationConstants {
    pub fn is_unconstrained(&self) -> bool {
        self.eps.is_infinite()
    }

    /// The same scheme run with a different `eps`; `x0` is kept as the bound.
    pub fn with_eps(&self, eps: f64) -> IterationConstants {
        IterationConstants {
            eps,
            scale: eps.powf(1.0 / (self.p - 1.0)) * self.cp,
            ..*self
        }
    }

    /// Right-hand side of the majorant recursion.
    pub fn majorant_map(&self, x: f64) -> f64 {
        let gamma = 1.0 / (self.p - 1.0);
        let k = self.c.powf(1.0 / self.q);
        match self.recursion {
            Recursion::ClosedForm => (self.scale * (1.0 + k * x.powf(gamma))).powf(self.q),
            Recursion::Certified => (self.scale + self.cp * k * x.powf(gamma)).powf(self.q),
        }
    }

    /// Relative residual of `x0` in its defining equation.
    pub fn fixed_point_residual(&self) -> f64 {
        ((self.x0 - self.majorant_map(self.x0)) / self.x0).abs()
    }

    /// The nondecreasing coefficients `c_1 = 0, c_2 = a^q, c_n = map(c_{n-1})`.
    pub fn majorant_sequence(&self) -> MajorantSequence {
        MajorantSequence {
            constants: *self,
            next: Some(0.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MajorantSequence {
    constants: IterationConstants,
    next: Option<f64>,
}

impl Iterator for MajorantSequence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let current = self.next?;
        self.next = Some(self.constants.majorant_map(current));
        Some(current)
    }
}
