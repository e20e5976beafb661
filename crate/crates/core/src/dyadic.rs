//! Dyadic cubes `Q = 2^i (k + [0,1)^n)`, shifted lattices and Whitney
//! decompositions of boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;

/// Indices must stay below this bound so that `floor` on doubles is exact.
pub const INDEX_LIMIT: f64 = 9_007_199_254_740_992.0; // 2^53

/// Half-open dyadic cube of side `2^generation`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub generation: i32,
    pub index: Vec<i64>,
}

pub(crate) fn side_of(generation: i32) -> f64 {
    2f64.powi(generation)
}

impl DyadicCube {
    pub fn new(generation: i32, index: Vec<i64>) -> Self {
        DyadicCube { generation, index }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        side_of(self.generation)
    }

    /// Lebesgue measure `|Q| = 2^{n i}`.
    pub fn volume(&self) -> f64 {
        side_of(self.generation * self.dim() as i32)
    }

    pub fn diameter(&self) -> f64 {
        self.side() * (self.dim() as f64).sqrt()
    }

    pub fn lower(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&k| k as f64 * s).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&k| (k + 1) as f64 * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.index.iter().map(|&k| (k as f64 + 0.5) * s).collect()
    }

    pub(crate) fn aabb(&self) -> Aabb {
        Aabb {
            lower: self.lower(),
            upper: self.upper(),
        }
    }

    /// Half-open membership test.
    pub fn contains(&self, x: &[f64]) -> bool {
        let s = self.side();
        x.iter()
            .zip(&self.index)
            .all(|(xi, &k)| (xi / s).floor() == k as f64)
    }

    pub fn contains_cube(&self, other: &DyadicCube) -> bool {
        other.generation <= self.generation
            && other.ancestor_at(self.generation).as_ref() == Some(self)
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube {
            generation: self.generation + 1,
            index: self.index.iter().map(|k| k.div_euclid(2)).collect(),
        }
    }

    /// The ancestor of this cube at generation `g >= self.generation`.
    pub fn ancestor_at(&self, g: i32) -> Option<DyadicCube> {
        if g < self.generation {
            return None;
        }
        let shift = (g - self.generation) as u32;
        let index = if shift >= 63 {
            self.index.iter().map(|&k| if k < 0 { -1 } else { 0 }).collect()
        } else {
            self.index.iter().map(|&k| k >> shift).collect()
        };
        Some(DyadicCube { generation: g, index })
    }

    /// Child number `j` in `0..2^n`; bit `d` of `j` selects the upper half
    /// along axis `d`.
    pub fn child(&self, j: usize) -> DyadicCube {
        DyadicCube {
            generation: self.generation - 1,
            index: self
                .index
                .iter()
                .enumerate()
                .map(|(d, &k)| 2 * k + ((j >> d) & 1) as i64)
                .collect(),
        }
    }

    pub fn children(&self) -> Vec<DyadicCube> {
        (0..1usize << self.dim()).map(|j| self.child(j)).collect()
    }

    /// All dyadic subcubes of generation `g <= self.generation`, in the
    /// row-major order used by cell grids (axis 0 fastest).
    pub fn descendants_at(&self, g: i32) -> Vec<DyadicCube> {
        let depth = (self.generation - g) as u32;
        let m = 1i64 << depth;
        let n = self.dim();
        let count = (m as usize).pow(n as u32);
        (0..count)
            .map(|lin| {
                let mut rem = lin as i64;
                let index = self
                    .index
                    .iter()
                    .map(|&k| {
                        let i = rem % m;
                        rem /= m;
                        k * m + i
                    })
                    .collect();
                DyadicCube { generation: g, index }
            })
            .collect()
    }
}

/// The unique cube of `generation` containing `x`.
pub fn cube_containing(x: &[f64], generation: i32) -> Result<DyadicCube> {
    let s = side_of(generation);
    let mut index = Vec::with_capacity(x.len());
    for &xi in x {
        if !xi.is_finite() {
            return Err(Error::invalid("non-finite coordinate"));
        }
        let k = (xi / s).floor();
        if k.abs() >= INDEX_LIMIT {
            return Err(Error::invalid(format!(
                "dyadic index {k} exceeds 2^53 at generation {generation}"
            )));
        }
        index.push(k as i64);
    }
    Ok(DyadicCube { generation, index })
}

/// The chain `Q ⊂ parent(Q) ⊂ ...` up to `up_to_generation`, by increasing
/// generation.
pub fn ancestors(q: &DyadicCube, up_to_generation: i32) -> Result<Vec<DyadicCube>> {
    if up_to_generation < q.generation {
        return Err(Error::invalid(format!(
            "up_to_generation {up_to_generation} below cube generation {}",
            q.generation
        )));
    }
    let mut chain = vec![q.clone()];
    for _ in q.generation..up_to_generation {
        let next = chain.last().unwrap().parent();
        chain.push(next);
    }
    Ok(chain)
}

/// Dyadic lattice translated by `shift`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedLattice {
    pub shift: Vec<f64>,
}

/// A cube of a shifted lattice: `shift + cube`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedCube {
    pub cube: DyadicCube,
    pub shift: Vec<f64>,
}

impl ShiftedCube {
    pub fn lower(&self) -> Vec<f64> {
        self.cube.lower().iter().zip(&self.shift).map(|(a, t)| a + t).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.cube.upper().iter().zip(&self.shift).map(|(a, t)| a + t).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let y: Vec<f64> = x.iter().zip(&self.shift).map(|(a, t)| a - t).collect();
        self.cube.contains(&y)
    }

    pub(crate) fn aabb(&self) -> Aabb {
        Aabb {
            lower: self.lower(),
            upper: self.upper(),
        }
    }
}

impl ShiftedLattice {
    pub fn new(shift: Vec<f64>) -> Self {
        ShiftedLattice { shift }
    }

    pub fn cube_containing(&self, x: &[f64], generation: i32) -> Result<ShiftedCube> {
        if x.len() != self.shift.len() {
            return Err(Error::invalid("shift dimension mismatch"));
        }
        let y: Vec<f64> = x.iter().zip(&self.shift).map(|(a, t)| a - t).collect();
        Ok(ShiftedCube {
            cube: cube_containing(&y, generation)?,
            shift: self.shift.clone(),
        })
    }
}

/// Axis-aligned box domain `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("box corners must have equal nonzero length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(u > l)) {
            return Err(Error::invalid("empty domain"));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Distance from a closed cube inside the box to the box boundary;
    /// `None` when the cube is not contained in the open box.
    pub fn boundary_distance(&self, q: &DyadicCube) -> Option<f64> {
        let lo = q.lower();
        let hi = q.upper();
        let mut d = f64::INFINITY;
        for j in 0..lo.len() {
            let a = lo[j] - self.lower[j];
            let b = self.upper[j] - hi[j];
            if a <= 0.0 || b <= 0.0 {
                return None;
            }
            d = d.min(a).min(b);
        }
        Some(d)
    }

    fn intersects(&self, q: &DyadicCube) -> bool {
        let lo = q.lower();
        let hi = q.upper();
        (0..lo.len()).all(|j| lo[j] < self.upper[j] && hi[j] > self.lower[j])
    }
}

/// Lower and upper Whitney ratios: `2^5 diam(Q) <= dist(Q, ∂Ω) <= 2^7 diam(Q)`.
pub const WHITNEY_LOWER: f64 = 32.0;
pub const WHITNEY_UPPER: f64 = 128.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<DyadicCube>,
    pub finest_generation: i32,
    /// Volume of the part of the domain left uncovered by the cutoff.
    pub uncovered_volume: f64,
}

/// Whitney decomposition of a box into maximal dyadic cubes `Q` with
/// `2^5 diam(Q) <= dist(Q, ∂Ω)`; every accepted cube also satisfies the upper
/// bound `dist(Q, ∂Ω) <= 2^7 diam(Q)`. Cubes finer than `finest_generation`
/// are not generated; the region they would cover is reported as uncovered.
pub fn whitney_decompose(domain: &BoxDomain, finest_generation: i32) -> Result<WhitneyDecomposition> {
    let n = domain.lower.len();
    let extent = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(l, u)| u - l)
        .fold(0.0, f64::max);
    if !(extent > 0.0) {
        return Err(Error::invalid("empty domain"));
    }
    let top = extent.log2().ceil() as i32;
    if top < finest_generation {
        return Ok(WhitneyDecomposition {
            cubes: Vec::new(),
            finest_generation,
            uncovered_volume: domain.volume(),
        });
    }
    // seed with all top-generation cubes meeting the box
    let s = side_of(top);
    let ranges: Vec<(i64, i64)> = (0..n)
        .map(|j| ((domain.lower[j] / s).floor() as i64, (domain.upper[j] / s).ceil() as i64))
        .collect();
    let mut stack = Vec::new();
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    'outer: loop {
        stack.push(DyadicCube::new(top, idx.clone()));
        for j in 0..n {
            idx[j] += 1;
            if idx[j] < ranges[j].1 {
                continue 'outer;
            }
            idx[j] = ranges[j].0;
        }
        break;
    }

    let mut cubes = Vec::new();
    while let Some(q) = stack.pop() {
        if !domain.intersects(&q) {
            continue;
        }
        if let Some(d) = domain.boundary_distance(&q) {
            if WHITNEY_LOWER * q.diameter() <= d {
                cubes.push(q);
                continue;
            }
        }
        if q.generation > finest_generation {
            stack.extend(q.children());
        }
    }
    cubes.sort();
    let covered: f64 = cubes.iter().map(|q| q.volume()).sum();
    Ok(WhitneyDecomposition {
        cubes,
        finest_generation,
        uncovered_volume: (domain.volume() - covered).max(0.0),
    })
}
