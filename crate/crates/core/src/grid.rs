//! Uniform grids on the supported domains and nodal functions on them.
//!
//! Balls and annuli are stored by their radial cross-section (one node per
//! radius); intervals are cross-sections of slabs with the remaining
//! directions suppressed; rectangles and slabs carry a full planar grid.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, HoroError, Result};

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Interval {
        a: f64,
        b: f64,
    },
    Ball {
        radius: f64,
    },
    Annulus {
        r_in: f64,
        r_out: f64,
    },
    /// Centered at the origin.
    Rectangle {
        wx: f64,
        wy: f64,
    },
    /// `|x₁| < width/2`, truncated to `|x₂| ≤ length/2`.
    Slab {
        width: f64,
        length: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    /// Nodes per axis.
    pub resolution: usize,
}

/// Side labels used by per-side boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
    /// `x₂ = −length/2` (planar grids only).
    Bottom,
    /// `x₂ = +length/2` (planar grids only).
    Top,
}

impl DomainSpec {
    pub fn new(shape: Shape, resolution: usize) -> Result<Self> {
        let d = DomainSpec { shape, resolution };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self.shape {
            Shape::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && b > a) {
                    return Err(invalid(format!("interval [{a}, {b}] is empty")));
                }
            }
            Shape::Ball { radius } => pos(radius, "radius")?,
            Shape::Annulus { r_in, r_out } => {
                pos(r_in, "inner radius")?;
                pos(r_out, "outer radius")?;
                if r_in >= r_out {
                    return Err(invalid(format!("annulus needs r_in < r_out, got {r_in} ≥ {r_out}")));
                }
            }
            Shape::Rectangle { wx, wy } => {
                pos(wx, "width")?;
                pos(wy, "height")?;
            }
            Shape::Slab { width, length } => {
                pos(width, "slab width")?;
                pos(length, "truncation length")?;
            }
        }
        if self.resolution < MIN_RESOLUTION {
            return Err(HoroError::DegenerateGrid(format!(
                "{} nodes per axis, need at least {MIN_RESOLUTION}",
                self.resolution
            )));
        }
        Ok(())
    }

    /// Number of grid axes (1 for radial and interval domains).
    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } | Shape::Ball { .. } | Shape::Annulus { .. } => 1,
            Shape::Rectangle { .. } | Shape::Slab { .. } => 2,
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.shape, Shape::Ball { .. } | Shape::Annulus { .. })
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinate range along each axis.
    pub fn extent(&self) -> Vec<(f64, f64)> {
        match self.shape {
            Shape::Interval { a, b } => vec![(a, b)],
            Shape::Ball { radius } => vec![(0.0, radius)],
            Shape::Annulus { r_in, r_out } => vec![(r_in, r_out)],
            Shape::Rectangle { wx, wy } => vec![(-0.5 * wx, 0.5 * wx), (-0.5 * wy, 0.5 * wy)],
            Shape::Slab { width, length } => vec![(-0.5 * width, 0.5 * width), (-0.5 * length, 0.5 * length)],
        }
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.extent().iter().map(|(lo, hi)| (hi - lo) / (self.resolution - 1) as f64).collect()
    }

    /// Axis coordinates of every grid line.
    pub fn axis(&self, d: usize) -> Vec<f64> {
        let (lo, hi) = self.extent()[d];
        let m = self.resolution - 1;
        (0..self.resolution).map(|i| if i == m { hi } else { lo + (hi - lo) * i as f64 / m as f64 }).collect()
    }

    /// Multi-index of a flat index (x₁ runs fastest).
    pub fn unflatten(&self, idx: usize) -> (usize, usize) {
        (idx % self.resolution, idx / self.resolution)
    }

    pub fn flatten(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let (lo, hi) = self.extent()[0];
        let m = (self.resolution - 1) as f64;
        let at = |lo: f64, hi: f64, i: usize| if i == self.resolution - 1 { hi } else { lo + (hi - lo) * i as f64 / m };
        if self.dim() == 1 {
            vec![at(lo, hi, idx)]
        } else {
            let (i, j) = self.unflatten(idx);
            let (lo2, hi2) = self.extent()[1];
            vec![at(lo, hi, i), at(lo2, hi2, j)]
        }
    }

    /// Whether a node carries Dirichlet data. The center of a ball is an
    /// ordinary unknown.
    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.resolution - 1;
        match self.shape {
            Shape::Ball { .. } => idx == last,
            Shape::Interval { .. } | Shape::Annulus { .. } => idx == 0 || idx == last,
            Shape::Rectangle { .. } | Shape::Slab { .. } => {
                let (i, j) = self.unflatten(idx);
                i == 0 || i == last || j == 0 || j == last
            }
        }
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_boundary(i)).collect()
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_boundary(i)).collect()
    }

    /// Side a boundary node belongs to; planar corners count as lower/upper.
    pub fn side(&self, idx: usize) -> Option<Side> {
        if !self.is_boundary(idx) {
            return None;
        }
        let last = self.resolution - 1;
        match self.shape {
            Shape::Ball { .. } => Some(Side::Upper),
            Shape::Interval { .. } | Shape::Annulus { .. } => Some(if idx == 0 { Side::Lower } else { Side::Upper }),
            Shape::Rectangle { .. } | Shape::Slab { .. } => {
                let (i, j) = self.unflatten(idx);
                Some(if i == 0 {
                    Side::Lower
                } else if i == last {
                    Side::Upper
                } else if j == 0 {
                    Side::Bottom
                } else {
                    Side::Top
                })
            }
        }
    }

    /// Number of sides that per-side data must cover.
    pub fn side_count(&self) -> usize {
        match self.shape {
            Shape::Ball { .. } => 1,
            Shape::Interval { .. } | Shape::Annulus { .. } | Shape::Slab { .. } => 2,
            Shape::Rectangle { .. } => 4,
        }
    }

    /// Euclidean diameter of the (truncated) domain.
    pub fn diameter(&self) -> f64 {
        match self.shape {
            Shape::Interval { a, b } => b - a,
            Shape::Ball { radius } => 2.0 * radius,
            Shape::Annulus { r_out, .. } => 2.0 * r_out,
            Shape::Rectangle { wx, wy } => wx.hypot(wy),
            Shape::Slab { width, length } => width.hypot(length),
        }
    }

    /// Same shape with a different resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<Self> {
        DomainSpec::new(self.shape, resolution)
    }
}

/// Strictly positive nodal values on a domain grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub domain: DomainSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: DomainSpec, values: Vec<f64>) -> Result<Self> {
        domain.validate()?;
        if values.len() != domain.len() {
            return Err(invalid(format!("expected {} nodal values, got {}", domain.len(), values.len())));
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(HoroError::NonpositiveHeight(bad));
        }
        Ok(GridFunction { domain, values })
    }

    /// Samples `f` at every node (argument: node coordinates).
    pub fn from_fn<F: Fn(&[f64]) -> f64>(domain: DomainSpec, f: F) -> Result<Self> {
        let values = (0..domain.len()).map(|i| f(&domain.coords(i))).collect();
        GridFunction::new(domain, values)
    }

    pub fn boundary_values(&self) -> Vec<f64> {
        self.domain.boundary_indices().into_iter().map(|i| self.values[i]).collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_domains() {
        assert!(DomainSpec::new(Shape::Interval { a: 1.0, b: 1.0 }, 10).is_err());
        assert!(DomainSpec::new(Shape::Annulus { r_in: 2.0, r_out: 1.0 }, 10).is_err());
        assert!(matches!(DomainSpec::new(Shape::Ball { radius: 1.0 }, 4), Err(HoroError::DegenerateGrid(_))));
    }

    #[test]
    fn boundary_sets() {
        let d = DomainSpec::new(Shape::Ball { radius: 1.0 }, 9).unwrap();
        assert_eq!(d.boundary_indices(), vec![8]);
        let d = DomainSpec::new(Shape::Annulus { r_in: 1.0, r_out: 2.0 }, 9).unwrap();
        assert_eq!(d.boundary_indices(), vec![0, 8]);
        let d = DomainSpec::new(Shape::Rectangle { wx: 1.0, wy: 2.0 }, 8).unwrap();
        assert_eq!(d.boundary_indices().len(), 4 * 7);
        assert_eq!(d.coords(d.flatten(7, 7)), vec![0.5, 1.0]);
        assert_eq!(d.side(d.flatten(0, 3)), Some(Side::Lower));
        assert_eq!(d.side(d.flatten(3, 0)), Some(Side::Bottom));
        assert_eq!(d.side(d.flatten(3, 3)), None);
    }

    #[test]
    fn nodal_values_must_be_positive() {
        let d = DomainSpec::new(Shape::Interval { a: 0.0, b: 1.0 }, 8).unwrap();
        assert!(GridFunction::new(d, vec![1.0; 8]).is_ok());
        let mut v = vec![1.0; 8];
        v[3] = 0.0;
        assert!(matches!(GridFunction::new(d, v), Err(HoroError::NonpositiveHeight(_))));
        assert!(GridFunction::new(d, vec![1.0; 7]).is_err());
    }
}
