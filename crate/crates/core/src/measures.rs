//! Nonnegative measures with ball and cube mass queries.
//!
//! Balls are closed; dyadic cubes are half-open. Point masses answer every
//! query exactly. Cell densities are exact on axis-aligned boxes and use a
//! bisection rule on balls. Radial densities are exact on centered balls and
//! use radial-angular quadrature elsewhere.

use serde::Serialize;

use crate::dyadic::{side_of, DyadicCube};
use crate::error::{Error, Result};
use crate::geometry::{ball_box_volume, distance, Aabb};
pub use crate::radial::RadialDensityMeasure;

/// Bisection depth used for cells cut by a sphere.
pub const CELL_BALL_DEPTH: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Atom {
    pub x: Vec<f64>,
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointMassMeasure {
    dim: usize,
    atoms: Vec<Atom>,
}

impl PointMassMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if a.x.len() != dim {
                return Err(Error::invalid(format!("atom {i} has dimension {} ≠ {dim}", a.x.len())));
            }
            if !(a.m >= 0.0 && a.m.is_finite()) {
                return Err(Error::invalid(format!("atom {i} has invalid mass {}", a.m)));
            }
            if a.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("atom {i} has a non-finite coordinate")));
            }
        }
        Ok(PointMassMeasure { dim, atoms })
    }

    /// Unit point mass at `x`.
    pub fn dirac(x: Vec<f64>) -> Self {
        PointMassMeasure {
            dim: x.len(),
            atoms: vec![Atom { x, m: 1.0 }],
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Atoms with positive mass.
    pub fn support(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| a.m > 0.0)
    }
}

/// Uniform grid of dyadic cells of `generation` tiling the dyadic cube `bbox`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellGrid {
    #[serde(rename = "box")]
    pub bbox: DyadicCube,
    pub generation: i32,
}

impl CellGrid {
    pub fn new(bbox: DyadicCube, generation: i32) -> Result<Self> {
        if generation > bbox.generation {
            return Err(Error::invalid("cell generation above the box generation"));
        }
        let depth = (bbox.generation - generation) as u32;
        let cells = (depth as usize).checked_mul(bbox.dim()).filter(|&b| b < 40);
        if cells.is_none() {
            return Err(Error::invalid("grid too large"));
        }
        Ok(CellGrid { bbox, generation })
    }

    pub fn dim(&self) -> usize {
        self.bbox.dim()
    }

    pub fn per_side(&self) -> usize {
        1usize << (self.bbox.generation - self.generation)
    }

    pub fn len(&self) -> usize {
        self.per_side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_side(&self) -> f64 {
        side_of(self.generation)
    }

    pub fn cell_volume(&self) -> f64 {
        side_of(self.generation * self.dim() as i32)
    }

    /// Multi-index of cell `i` relative to the box corner (axis 0 fastest).
    pub fn local_index(&self, mut i: usize) -> Vec<usize> {
        let m = self.per_side();
        (0..self.dim())
            .map(|_| {
                let k = i % m;
                i /= m;
                k
            })
            .collect()
    }

    pub fn linear_index(&self, local: &[usize]) -> usize {
        let m = self.per_side();
        local.iter().rev().fold(0, |acc, &k| acc * m + k)
    }

    pub fn cell(&self, i: usize) -> DyadicCube {
        let m = self.per_side() as i64;
        let index = self
            .local_index(i)
            .iter()
            .zip(&self.bbox.index)
            .map(|(&k, &b)| b * m + k as i64)
            .collect();
        DyadicCube::new(self.generation, index)
    }

    pub fn center(&self, i: usize) -> Vec<f64> {
        self.cell(i).center()
    }

    pub fn centers(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.center(i)).collect()
    }

    /// Cell holding `x`, if inside the box.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        if !self.bbox.contains(x) {
            return None;
        }
        let h = self.cell_side();
        let lower = self.bbox.lower();
        let m = self.per_side();
        let local: Vec<usize> = x
            .iter()
            .zip(&lower)
            .map(|(xi, l)| (((xi - l) / h).floor() as usize).min(m - 1))
            .collect();
        Some(self.linear_index(&local))
    }

    /// The same box at a finer cell generation.
    pub fn refined(&self) -> CellGrid {
        CellGrid {
            bbox: self.bbox.clone(),
            generation: self.generation - 1,
        }
    }

    pub(crate) fn cell_aabb(&self, i: usize) -> Aabb {
        self.cell(i).aabb()
    }

    /// Linear indices of the cells meeting the half-open box.
    pub(crate) fn cells_overlapping(&self, bx: &Aabb) -> Vec<usize> {
        let h = self.cell_side();
        let lower = self.bbox.lower();
        let m = self.per_side() as i64;
        let mut ranges = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            let lo = ((bx.lower[j] - lower[j]) / h).floor().max(0.0) as i64;
            let hi = (((bx.upper[j] - lower[j]) / h).ceil() as i64).min(m);
            if hi <= lo {
                return Vec::new();
            }
            ranges.push((lo as usize, hi as usize));
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            out.push(self.linear_index(&idx));
            for j in 0..idx.len() {
                idx[j] += 1;
                if idx[j] < ranges[j].1 {
                    continue 'outer;
                }
                idx[j] = ranges[j].0;
            }
            break;
        }
        out
    }
}

/// Piecewise-constant density on a cell grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDensityMeasure {
    #[serde(flatten)]
    pub grid: CellGrid,
    pub values: Vec<f64>,
}

impl CellDensityMeasure {
    pub fn new(grid: CellGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("cell value {i} is negative or not finite")));
        }
        Ok(CellDensityMeasure { grid, values })
    }

    pub fn constant(grid: CellGrid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub fn density_at(&self, x: &[f64]) -> f64 {
        self.grid.locate(x).map_or(0.0, |i| self.values[i])
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Radius below which the density seen from `x` is locally the average
    /// of the cells meeting at `x`, with that average. `None` outside the
    /// closed box.
    pub(crate) fn local_density(&self, x: &[f64]) -> Option<(f64, f64)> {
        let h = self.grid.cell_side();
        let lower = self.grid.bbox.lower();
        let m = self.grid.per_side() as i64;
        let mut t0 = f64::INFINITY;
        let mut choices: Vec<Vec<i64>> = Vec::with_capacity(x.len());
        for (xi, l) in x.iter().zip(&lower) {
            let o = (xi - l) / h;
            if !(0.0..=m as f64).contains(&o) {
                return None;
            }
            let fl = o.floor();
            let frac = o - fl;
            if frac == 0.0 {
                choices.push(vec![fl as i64 - 1, fl as i64]);
                t0 = t0.min(h);
            } else {
                choices.push(vec![fl as i64]);
                t0 = t0.min(frac.min(1.0 - frac) * h);
            }
        }
        let count: usize = choices.iter().map(Vec::len).product();
        let mut sum = 0.0;
        for mut c in 0..count {
            let mut local = Vec::with_capacity(x.len());
            let mut inside = true;
            for ch in &choices {
                let k = ch[c % ch.len()];
                c /= ch.len();
                inside &= (0..m).contains(&k);
                local.push(k.max(0) as usize);
            }
            if inside {
                sum += self.values[self.grid.linear_index(&local)];
            }
        }
        Some((t0, sum / count as f64))
    }

    pub(crate) fn mass_box(&self, bx: &Aabb) -> f64 {
        self.grid
            .cells_overlapping(bx)
            .into_iter()
            .filter(|&i| self.values[i] > 0.0)
            .map(|i| self.values[i] * self.grid.cell_aabb(i).intersection_volume(bx))
            .sum()
    }

    pub(crate) fn mass_ball(&self, x: &[f64], t: f64) -> f64 {
        let lower: Vec<f64> = x.iter().map(|v| v - t).collect();
        let upper: Vec<f64> = x.iter().map(|v| v + t).collect();
        let bx = Aabb { lower, upper };
        self.grid
            .cells_overlapping(&bx)
            .into_iter()
            .filter(|&i| self.values[i] > 0.0)
            .map(|i| self.values[i] * ball_box_volume(&self.grid.cell_aabb(i), x, t, CELL_BALL_DEPTH))
            .sum()
    }
}

/// `a |x - center|^{-gamma} dx` on the ball `B_R(center)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialPowerMeasure {
    pub a: f64,
    pub gamma: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub center: Vec<f64>,
}

impl RadialPowerMeasure {
    pub fn new(a: f64, gamma: f64, radius: f64, center: Vec<f64>) -> Result<Self> {
        let n = center.len() as f64;
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::invalid("amplitude a must be finite and ≥ 0"));
        }
        if !(gamma < n) {
            return Err(Error::invalid(format!("gamma = {gamma} ≥ n: density not locally integrable")));
        }
        if !(radius > 0.0) {
            return Err(Error::invalid("outer radius R must be positive"));
        }
        Ok(RadialPowerMeasure { a, gamma, radius, center })
    }

    pub(crate) fn as_radial(&self) -> RadialDensityMeasure {
        RadialDensityMeasure::power(self.center.clone(), self.a, self.gamma, self.radius)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Points(PointMassMeasure),
    Cells(CellDensityMeasure),
    RadialPower(RadialPowerMeasure),
    Radial(RadialDensityMeasure),
}

/// Region for [`Measure::restrict`].
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Cube(DyadicCube),
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => distance(center, x) <= *radius,
            Region::Cube(q) => q.contains(x),
        }
    }
}

impl From<PointMassMeasure> for Measure {
    fn from(m: PointMassMeasure) -> Self {
        Measure::Points(m)
    }
}

impl From<CellDensityMeasure> for Measure {
    fn from(m: CellDensityMeasure) -> Self {
        Measure::Cells(m)
    }
}

impl From<RadialPowerMeasure> for Measure {
    fn from(m: RadialPowerMeasure) -> Self {
        Measure::RadialPower(m)
    }
}

impl From<RadialDensityMeasure> for Measure {
    fn from(m: RadialDensityMeasure) -> Self {
        Measure::Radial(m)
    }
}

/// Cubes finer than this relative depth are not subdivided further when
/// integrating a radial density over a cube.
const CUBE_QUAD_DEPTH: u32 = 10;

impl Measure {
    pub fn zero(dim: usize) -> Measure {
        Measure::Points(PointMassMeasure { dim, atoms: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Points(m) => m.dim,
            Measure::Cells(m) => m.grid.dim(),
            Measure::RadialPower(m) => m.center.len(),
            Measure::Radial(m) => m.dim(),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Points(m) => m.atoms.iter().map(|a| a.m).sum(),
            Measure::Cells(m) => m.total_mass(),
            Measure::RadialPower(m) => m.as_radial().total_mass(),
            Measure::Radial(m) => m.total_mass(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Measure::Points(m) => m.atoms.iter().all(|a| a.m == 0.0),
            Measure::Cells(m) => m.values.iter().all(|v| *v == 0.0),
            Measure::RadialPower(m) => m.a == 0.0,
            Measure::Radial(m) => m.pieces.iter().all(|p| p.coef == 0.0),
        }
    }

    /// `mu(Q)` for a half-open dyadic cube.
    pub fn mass_cube(&self, q: &DyadicCube) -> f64 {
        match self {
            Measure::Points(m) => m.atoms.iter().filter(|a| q.contains(&a.x)).map(|a| a.m).sum(),
            _ => self.mass_box(&q.aabb()),
        }
    }

    /// Mass of an arbitrary half-open axis-aligned box.
    pub(crate) fn mass_box(&self, bx: &Aabb) -> f64 {
        match self {
            Measure::Points(m) => m
                .atoms
                .iter()
                .filter(|a| bx.contains_half_open(&a.x))
                .map(|a| a.m)
                .sum(),
            Measure::Cells(m) => m.mass_box(bx),
            Measure::RadialPower(m) => radial_box_mass(&m.as_radial(), bx, CUBE_QUAD_DEPTH),
            Measure::Radial(m) => radial_box_mass(m, bx, CUBE_QUAD_DEPTH),
        }
    }

    /// `mu(B_t(x))` for the closed ball.
    pub fn mass_ball(&self, x: &[f64], t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            Measure::Points(m) => m
                .atoms
                .iter()
                .filter(|a| distance(&a.x, x) <= t)
                .map(|a| a.m)
                .sum(),
            Measure::Cells(m) => m.mass_ball(x, t),
            Measure::RadialPower(m) => m.as_radial().mass_ball(x, t),
            Measure::Radial(m) => m.mass_ball(x, t),
        }
    }

    /// The measure restricted to `region`.
    pub fn restrict(&self, region: &Region) -> Result<Measure> {
        match self {
            Measure::Points(m) => Ok(Measure::Points(PointMassMeasure {
                dim: m.dim,
                atoms: m.atoms.iter().filter(|a| region.contains(&a.x)).cloned().collect(),
            })),
            Measure::Cells(m) => {
                if let Region::Cube(q) = region {
                    if q.generation < m.grid.generation {
                        return Err(Error::Unsupported(format!(
                            "cube of generation {} is below the cell generation {}",
                            q.generation, m.grid.generation
                        )));
                    }
                }
                let values = (0..m.grid.len())
                    .map(|i| {
                        let c = m.grid.center(i);
                        if region.contains(&c) {
                            m.values[i]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Ok(Measure::Cells(CellDensityMeasure {
                    grid: m.grid.clone(),
                    values,
                }))
            }
            Measure::RadialPower(m) => match region {
                Region::Ball { center, radius } if distance(center, &m.center) == 0.0 => {
                    Ok(Measure::RadialPower(RadialPowerMeasure {
                        radius: m.radius.min(*radius),
                        ..m.clone()
                    }))
                }
                _ => Err(Error::Unsupported(
                    "radial measures restrict only to concentric balls".into(),
                )),
            },
            Measure::Radial(m) => match region {
                Region::Ball { center, radius } if distance(center, &m.center) == 0.0 => {
                    let mut out = m.clone();
                    out.pieces.retain(|p| p.start < *radius);
                    if let Some(last) = out.pieces.last_mut() {
                        last.end = last.end.min(*radius);
                    }
                    Ok(Measure::Radial(out))
                }
                _ => Err(Error::Unsupported(
                    "radial measures restrict only to concentric balls".into(),
                )),
            },
        }
    }

    /// `lambda * mu`.
    pub fn scaled(&self, lambda: f64) -> Measure {
        match self {
            Measure::Points(m) => Measure::Points(PointMassMeasure {
                dim: m.dim,
                atoms: m
                    .atoms
                    .iter()
                    .map(|a| Atom { x: a.x.clone(), m: a.m * lambda })
                    .collect(),
            }),
            Measure::Cells(m) => Measure::Cells(CellDensityMeasure {
                grid: m.grid.clone(),
                values: m.values.iter().map(|v| v * lambda).collect(),
            }),
            Measure::RadialPower(m) => Measure::RadialPower(RadialPowerMeasure {
                a: m.a * lambda,
                ..m.clone()
            }),
            Measure::Radial(m) => Measure::Radial(m.scaled(lambda)),
        }
    }

    /// Push-forward under `x -> x + v`.
    pub fn translated(&self, v: &[f64]) -> Result<Measure> {
        match self {
            Measure::Points(m) => Ok(Measure::Points(PointMassMeasure {
                dim: m.dim,
                atoms: m
                    .atoms
                    .iter()
                    .map(|a| Atom {
                        x: a.x.iter().zip(v).map(|(p, s)| p + s).collect(),
                        m: a.m,
                    })
                    .collect(),
            })),
            Measure::RadialPower(m) => Ok(Measure::RadialPower(RadialPowerMeasure {
                center: m.center.iter().zip(v).map(|(p, s)| p + s).collect(),
                ..m.clone()
            })),
            Measure::Radial(m) => {
                let mut out = m.clone();
                out.center = m.center.iter().zip(v).map(|(p, s)| p + s).collect();
                Ok(Measure::Radial(out))
            }
            Measure::Cells(_) => Err(Error::Unsupported(
                "cell densities live on a fixed dyadic grid".into(),
            )),
        }
    }
}

/// Mass of a radial density in a box: bisection near the center, tensor
/// Gauss-Legendre away from it, ball-volume approximation at the finest level.
fn radial_box_mass(m: &RadialDensityMeasure, bx: &Aabb, depth: u32) -> f64 {
    let n = m.dim();
    let near = bx.nearest_distance(&m.center);
    let support = m.support_radius();
    if near >= support {
        return 0.0;
    }
    let diam = crate::geometry::distance(&bx.lower, &bx.upper);
    let far = bx.farthest_distance(&m.center);
    let cut_by_support = far > support;
    if near > 2.0 * diam && !cut_by_support {
        return gauss_box(bx, |y| m.density(distance(y, &m.center)));
    }
    if depth == 0 {
        if bx.contains_half_open(&m.center) {
            // equal-volume centered ball
            let r = (bx.volume() / crate::geometry::unit_ball_volume(n)).powf(1.0 / n as f64);
            return m.shell_mass(0.0, r.min(support));
        }
        return gauss_box(bx, |y| m.density(distance(y, &m.center)));
    }
    bx.split().iter().map(|b| radial_box_mass(m, b, depth - 1)).sum()
}

fn gauss_box(bx: &Aabb, f: impl Fn(&[f64]) -> f64) -> f64 {
    const ORDER: usize = 4;
    let rule = gauss_quad::GaussLegendre::new(std::num::NonZeroUsize::new(ORDER).unwrap());
    let pairs = rule.as_node_weight_pairs();
    let n = bx.lower.len();
    let mut idx = vec![0usize; n];
    let mut y = vec![0.0; n];
    let mut total = 0.0;
    'outer: loop {
        let mut w = 1.0;
        for j in 0..n {
            let half = 0.5 * (bx.upper[j] - bx.lower[j]);
            let (node, weight) = pairs[idx[j]];
            y[j] = bx.lower[j] + half * (node + 1.0);
            w *= weight * half;
        }
        total += w * f(&y);
        for j in 0..n {
            idx[j] += 1;
            if idx[j] < ORDER {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    total
}

/// Masses on every dyadic cube between the cell and box generations of a
/// grid; level `l` holds the cubes of generation `cell + l`.
pub(crate) struct MassPyramid {
    pub levels: Vec<Vec<f64>>,
    pub per_side: Vec<usize>,
}

impl MassPyramid {
    pub fn build(grid: &CellGrid, cell_masses: Vec<f64>) -> Self {
        let n = grid.dim();
        let mut levels = vec![cell_masses];
        let mut per_side = vec![grid.per_side()];
        while *per_side.last().unwrap() > 1 {
            let m = *per_side.last().unwrap();
            let next = coarsen(levels.last().unwrap(), m, n);
            levels.push(next);
            per_side.push(m / 2);
        }
        MassPyramid { levels, per_side }
    }

    pub fn mass(&self, level: usize, local: &[usize]) -> f64 {
        let m = self.per_side[level];
        let idx = local.iter().rev().fold(0, |acc, &k| acc * m + (k >> level));
        self.levels[level][idx]
    }
}

/// Sum `values` (a grid with `m` cells per side, axis 0 fastest) over the
/// parent cubes, giving a grid with `m/2` cells per side.
pub(crate) fn coarsen(values: &[f64], m: usize, n: usize) -> Vec<f64> {
    let half = m / 2;
    let mut next = vec![0.0; half.pow(n as u32)];
    for (i, v) in values.iter().enumerate() {
        let mut rest = i;
        let mut idx = 0;
        let mut stride = 1;
        for _ in 0..n {
            idx += (rest % m / 2) * stride;
            rest /= m;
            stride *= half;
        }
        next[idx] += v;
    }
    next
}

/// `mu` of every cell of `grid`, in grid order.
pub(crate) fn grid_masses(mu: &Measure, grid: &CellGrid) -> Vec<f64> {
    match mu {
        Measure::Points(m) => {
            let mut out = vec![0.0; grid.len()];
            for a in m.support() {
                if let Some(i) = grid.locate(&a.x) {
                    out[i] += a.m;
                }
            }
            out
        }
        _ => {
            use rayon::prelude::*;
            (0..grid.len())
                .into_par_iter()
                .map(|i| mu.mass_cube(&grid.cell(i)))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_square_grid(g: i32) -> CellGrid {
        CellGrid::new(DyadicCube::new(0, vec![0, 0]), g).unwrap()
    }

    #[test]
    fn dirac_cube_masses() {
        let d = Measure::from(PointMassMeasure::dirac(vec![0.0, 0.0]));
        assert_eq!(d.mass_cube(&DyadicCube::new(0, vec![0, 0])), 1.0);
        assert_eq!(d.mass_cube(&DyadicCube::new(-1, vec![1, 0])), 0.0);
    }

    #[test]
    fn cell_cube_mass() {
        let m = Measure::from(CellDensityMeasure::constant(unit_square_grid(-2), 1.0).unwrap());
        assert_eq!(m.mass_cube(&DyadicCube::new(-1, vec![0, 0])), 0.25);
        assert_eq!(m.total_mass(), 1.0);
    }

    #[test]
    fn dirac_ball_masses() {
        let d = Measure::from(PointMassMeasure::dirac(vec![0.0, 0.0]));
        assert_eq!(d.mass_ball(&[1.0, 0.0], 0.5), 0.0);
        assert_eq!(d.mass_ball(&[1.0, 0.0], 1.5), 1.0);
        // closed ball
        assert_eq!(d.mass_ball(&[1.0, 0.0], 1.0), 1.0);
    }

    #[test]
    fn radial_power_ball_masses() {
        let leb = Measure::from(RadialPowerMeasure::new(1.0, 0.0, f64::INFINITY, vec![0.0; 3]).unwrap());
        for t in [0.3, 1.0, 2.5] {
            assert_relative_eq!(leb.mass_ball(&[0.0; 3], t), 4.0 * PI / 3.0 * t.powi(3), max_relative = 1e-13);
        }
        let m = Measure::from(RadialPowerMeasure::new(1.0, 2.0, f64::INFINITY, vec![0.0; 3]).unwrap());
        assert_relative_eq!(m.mass_ball(&[0.0; 3], 2.0), 8.0 * PI, max_relative = 1e-13);
        assert!(RadialPowerMeasure::new(1.0, 3.0, 1.0, vec![0.0; 3]).is_err());
    }

    #[test]
    fn restrictions() {
        let d = Measure::from(PointMassMeasure::dirac(vec![0.0, 0.0]));
        let r = d
            .restrict(&Region::Ball { center: vec![0.0, 0.0], radius: 1.0 })
            .unwrap();
        assert_eq!(r, d);
        let r = d
            .restrict(&Region::Ball { center: vec![5.0, 0.0], radius: 1.0 })
            .unwrap();
        assert!(r.is_zero());
        let f = Measure::from(CellDensityMeasure::constant(unit_square_grid(-2), 1.0).unwrap());
        // left half: union of two generation -1 cubes; restrict to one then the other
        let left_lower = f.restrict(&Region::Cube(DyadicCube::new(-1, vec![0, 0]))).unwrap();
        let left_upper = f.restrict(&Region::Cube(DyadicCube::new(-1, vec![0, 1]))).unwrap();
        assert_eq!(left_lower.total_mass() + left_upper.total_mass(), 0.5);
        assert!(f.restrict(&Region::Cube(DyadicCube::new(-3, vec![0, 0]))).is_err());
    }

    #[test]
    fn cell_ball_mass_close_to_area() {
        let f = Measure::from(CellDensityMeasure::constant(unit_square_grid(-4), 1.0).unwrap());
        let v = f.mass_ball(&[0.5, 0.5], 0.3);
        assert_relative_eq!(v, PI * 0.09, max_relative = 5e-3);
        // ball inside one cell: exact
        let v = f.mass_ball(&[1.0 / 32.0, 1.0 / 32.0], 0.01);
        assert_relative_eq!(v, PI * 1e-4, max_relative = 1e-12);
    }

    #[test]
    fn radial_cube_mass() {
        // Lebesgue density: cube mass is the volume
        let leb = Measure::from(RadialPowerMeasure::new(1.0, 0.0, f64::INFINITY, vec![0.0; 2]).unwrap());
        assert_relative_eq!(leb.mass_cube(&DyadicCube::new(-1, vec![1, 0])), 0.25, max_relative = 1e-10);
        // |x|^{-1} on R^2 over [-1,1)^2 = 4 * 2 ∫_0^{π/4} ∫_0^{1/cos θ} dr dθ = 8 asinh(1)
        let m = Measure::from(RadialPowerMeasure::new(1.0, 1.0, f64::INFINITY, vec![0.0; 2]).unwrap());
        let total: f64 = (0..4)
            .map(|j| m.mass_cube(&DyadicCube::new(0, vec![-(j & 1), -((j >> 1) & 1)])))
            .sum();
        assert_relative_eq!(total, 8.0 * 1f64.asinh(), max_relative = 1e-3);
    }
}
