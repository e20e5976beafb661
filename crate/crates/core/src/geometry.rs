use std::f64::consts::PI;

use statrs::function::gamma::gamma;

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Volume of the unit ball in R^n.
pub(crate) fn unit_ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    PI.powf(h) / gamma(h + 1.0)
}

/// Surface area of the unit sphere S^{n-1}.
pub(crate) fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

/// Axis-aligned box `[lower, upper)`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Aabb {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Aabb {
    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| (u - l).max(0.0)).product()
    }

    pub fn intersection_volume(&self, other: &Aabb) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .zip(other.lower.iter().zip(&other.upper))
            .map(|((l1, u1), (l2, u2))| (u1.min(*u2) - l1.max(*l2)).max(0.0))
            .product()
    }

    /// Distance from `x` to the closest point of the closed box.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(xi, (l, u))| {
                let d = if *xi < *l {
                    l - xi
                } else if *xi > *u {
                    xi - u
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from `x` to the farthest corner of the box.
    pub fn farthest_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(xi, (l, u))| {
                let d = (xi - l).abs().max((u - xi).abs());
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from an interior point to the box boundary.
    pub fn inner_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(xi, (l, u))| (xi - l).min(u - xi))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains_half_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(xi, (l, u))| *l <= *xi && *xi < *u)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect()
    }

    /// The `2^n` halves of the box.
    pub fn split(&self) -> Vec<Aabb> {
        let n = self.lower.len();
        let mid = self.center();
        (0..1usize << n)
            .map(|mask| {
                let mut lower = Vec::with_capacity(n);
                let mut upper = Vec::with_capacity(n);
                for j in 0..n {
                    if mask >> j & 1 == 1 {
                        lower.push(mid[j]);
                        upper.push(self.upper[j]);
                    } else {
                        lower.push(self.lower[j]);
                        upper.push(mid[j]);
                    }
                }
                Aabb { lower, upper }
            })
            .collect()
    }
}

/// Approximate `|box ∩ B_t(x)|` by recursive bisection of partially covered
/// boxes. Bisection continues `depth` levels below the scale of the ball;
/// leaves are decided by their centers. A box wholly containing the ball
/// contributes the exact ball volume.
pub(crate) fn ball_box_volume(bx: &Aabb, x: &[f64], t: f64, depth: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let near = bx.nearest_distance(x);
    if near > t {
        return 0.0;
    }
    if bx.farthest_distance(x) <= t {
        return bx.volume();
    }
    if bx.contains_half_open(x) && bx.inner_distance(x) >= t {
        return unit_ball_volume(x.len()) * t.powi(x.len() as i32);
    }
    let side = bx
        .lower
        .iter()
        .zip(&bx.upper)
        .map(|(l, u)| u - l)
        .fold(0.0, f64::max);
    let level = if side <= 2.0 * t { depth } else { depth + 1 };
    if level == 0 {
        return if distance(&bx.center(), x) <= t { bx.volume() } else { 0.0 };
    }
    bx.split().iter().map(|b| ball_box_volume(b, x, t, level - 1)).sum()
}

/// Fraction of the sphere `|z - c| = s` lying inside the closed ball
/// `B_t(x)`, where `d = |x - c|`.
pub(crate) fn sphere_fraction_in_ball(n: usize, s: f64, d: f64, t: f64) -> f64 {
    if d == 0.0 || s == 0.0 {
        return if s.max(d) <= t { 1.0 } else { 0.0 };
    }
    if s + d <= t {
        return 1.0;
    }
    if s >= d + t || d >= s + t {
        return 0.0;
    }
    // points with cos(angle to x - c) >= c0 are inside
    let c0 = ((s * s + d * d - t * t) / (2.0 * s * d)).clamp(-1.0, 1.0);
    cap_fraction(n, c0)
}

/// Normalized area of the spherical cap `{cos θ >= c}` on S^{n-1}.
pub(crate) fn cap_fraction(n: usize, c: f64) -> f64 {
    if c >= 1.0 {
        return 0.0;
    }
    if c <= -1.0 {
        return 1.0;
    }
    if n == 1 {
        return if c <= 0.0 { 1.0 } else { 0.5 };
    }
    let x = (1.0 - c * c).max(0.0);
    let half = 0.5 * statrs::function::beta::beta_reg((n as f64 - 1.0) / 2.0, 0.5, x);
    if c >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(unit_ball_volume(1), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn caps() {
        // n = 3: Archimedes, fraction (1 - c)/2
        for c in [-0.9, -0.3, 0.0, 0.4, 0.95] {
            assert_relative_eq!(cap_fraction(3, c), (1.0 - c) / 2.0, epsilon = 1e-12);
        }
        // n = 2: arccos(c)/pi
        for c in [-0.9, -0.3, 0.0, 0.4, 0.95] {
            assert_relative_eq!(cap_fraction(2, c), c.acos() / PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn bisection_volume_close() {
        let bx = Aabb { lower: vec![-2.0, -2.0], upper: vec![2.0, 2.0] };
        let v = ball_box_volume(&bx, &[0.1, 0.2], 1.0, 8);
        assert_relative_eq!(v, PI, max_relative = 5e-3);
    }
}
