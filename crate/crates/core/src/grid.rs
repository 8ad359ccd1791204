//! Uniform 1-d grids, density fields sampled on them, and the affine map
//! between computational and physical coordinates.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainMode {
    /// Standard domain `(-1, 1)` with absorption outside. Nodes `x_j = j h`
    /// for `-2J <= j <= 2J`, `h = 1/J`, so jump targets up to distance 2 are
    /// representable.
    BoundedAbsorbing,
    /// Truncation `[-L, L]` of the whole line, nodes `-J..=J`, `h = L/J`.
    TruncatedInfinite { half_width: f64 },
}

impl DomainMode {
    pub fn label(&self) -> &'static str {
        match self {
            DomainMode::BoundedAbsorbing => "bounded-absorbing",
            DomainMode::TruncatedInfinite { .. } => "truncated-infinite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    j_half_span: usize,
    h: f64,
    mode: DomainMode,
}

impl Grid1D {
    pub fn bounded(j_half_span: usize) -> Result<Self> {
        Self::check_span(j_half_span)?;
        Ok(Self {
            j_half_span,
            h: 1.0 / j_half_span as f64,
            mode: DomainMode::BoundedAbsorbing,
        })
    }

    pub fn truncated(j_half_span: usize, half_width: f64) -> Result<Self> {
        Self::check_span(j_half_span)?;
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Config(vec![format!(
                "half-width must be > 0 (got {half_width})"
            )]));
        }
        Ok(Self {
            j_half_span,
            h: half_width / j_half_span as f64,
            mode: DomainMode::TruncatedInfinite { half_width },
        })
    }

    fn check_span(j: usize) -> Result<()> {
        if j < 2 {
            return Err(Error::Config(vec![format!("grid J must be >= 2 (got {j})")]));
        }
        Ok(())
    }

    pub fn j_half_span(&self) -> usize {
        self.j_half_span
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn mode(&self) -> DomainMode {
        self.mode
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.mode, DomainMode::BoundedAbsorbing)
    }

    /// Largest node index `j` (nodes run from `-max_index` to `max_index`).
    pub fn max_index(&self) -> usize {
        match self.mode {
            DomainMode::BoundedAbsorbing => 2 * self.j_half_span,
            DomainMode::TruncatedInfinite { .. } => self.j_half_span,
        }
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        2 * self.max_index() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Storage position of node `j`.
    pub fn position(&self, j: i64) -> usize {
        (j + self.max_index() as i64) as usize
    }

    /// Node index `j` at storage position `pos`.
    pub fn index(&self, pos: usize) -> i64 {
        pos as i64 - self.max_index() as i64
    }

    pub fn x(&self, pos: usize) -> f64 {
        self.index(pos) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|p| self.x(p)).collect()
    }

    /// Storage positions of nodes `-J` and `J`, the ends of the region that
    /// carries density. Nodes strictly between them are evolved.
    pub fn active_range(&self) -> (usize, usize) {
        let j = self.j_half_span as i64;
        (self.position(-j), self.position(j))
    }
}

/// Affine map `x = scale * x_comp + shift` from computational to physical
/// coordinates. Density values are shared: `u(x_comp) = p(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainMap {
    pub scale: f64,
    pub shift: f64,
}

impl DomainMap {
    pub const IDENTITY: DomainMap = DomainMap {
        scale: 1.0,
        shift: 0.0,
    };

    /// Map of `(a, b)` onto `(-1, 1)`.
    pub fn from_interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(
                "transform_to_standard",
                format!("interval ({a}, {b}) must satisfy a < b"),
            ));
        }
        Ok(Self {
            scale: 0.5 * (b - a),
            shift: 0.5 * (a + b),
        })
    }

    pub fn to_physical(&self, x_comp: f64) -> f64 {
        self.scale * x_comp + self.shift
    }

    pub fn to_computational(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }
}

/// Grid-sampled density `P_j` at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub values: Vec<f64>,
    pub time: f64,
}

impl DensityField {
    pub fn zeros(grid: &Grid1D) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            time: 0.0,
        }
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        let mut field = Self {
            values: (0..grid.len()).map(|p| f(grid.x(p))).collect(),
            time: 0.0,
        };
        if grid.is_bounded() {
            field.zero_exterior(grid);
        }
        field
    }

    /// Samples `p(x) = sqrt(a/pi) exp(-a (x - b)^2)` given in physical
    /// coordinates through `map`.
    pub fn gaussian(grid: &Grid1D, map: &DomainMap, a: f64, b: f64) -> Self {
        let norm = (a / PI).sqrt();
        Self::from_fn(grid, |xc| {
            let x = map.to_physical(xc) - b;
            norm * (-a * x * x).exp()
        })
    }

    /// Unit-mass discrete delta at node 0.
    pub fn delta(grid: &Grid1D) -> Self {
        let mut field = Self::zeros(grid);
        field.values[grid.position(0)] = 1.0 / grid.h();
        field
    }

    /// Zeroes every node with `|j| >= J` (absorbing mode).
    pub fn zero_exterior(&mut self, grid: &Grid1D) {
        let (lo, hi) = grid.active_range();
        for (pos, v) in self.values.iter_mut().enumerate() {
            if pos <= lo || pos >= hi {
                *v = 0.0;
            }
        }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_aligned(&self, grid: &Grid1D) -> Result<()> {
        if self.values.len() != grid.len() {
            return Err(Error::Config(vec![format!(
                "density field has {} values but the grid has {} nodes",
                self.values.len(),
                grid.len()
            )]));
        }
        Ok(())
    }
}

/// Trapezoidal mass `h * sum'' P_j` over nodes `-J..=J`, in computational
/// units. On bounded grids this is the mass inside the domain.
pub fn total_mass(grid: &Grid1D, field: &DensityField) -> f64 {
    let (lo, hi) = grid.active_range();
    let v = &field.values[lo..=hi];
    let n = v.len();
    let inner: f64 = v[1..n - 1].iter().sum();
    grid.h() * (inner + 0.5 * (v[0] + v[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_layout() {
        let g = Grid1D::bounded(4).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(16), 2.0);
        assert_eq!(g.active_range(), (4, 12));
        assert_eq!(g.x(4), -1.0);
        let nodes = g.nodes();
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        for p in 0..g.len() {
            assert_eq!(nodes[p], -nodes[g.len() - 1 - p]);
        }
    }

    #[test]
    fn truncated_layout() {
        let g = Grid1D::truncated(400, 4.0).unwrap();
        assert_eq!(g.len(), 801);
        assert!((g.h() - 0.01).abs() < 1e-16);
        assert_eq!(g.active_range(), (0, 800));
        assert!(Grid1D::truncated(1, 4.0).is_err());
        assert!(Grid1D::truncated(10, 0.0).is_err());
    }

    #[test]
    fn mass_examples() {
        let g = Grid1D::truncated(50, 2.0).unwrap();
        assert_eq!(total_mass(&g, &DensityField::zeros(&g)), 0.0);
        assert!((total_mass(&g, &DensityField::delta(&g)) - 1.0).abs() < 1e-15);

        let g = Grid1D::truncated(400, 4.0).unwrap();
        let p0 = DensityField::gaussian(&g, &DomainMap::IDENTITY, 40.0, 0.0);
        assert!((total_mass(&g, &p0) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_through_map_keeps_values() {
        let g = Grid1D::bounded(100).unwrap();
        let map = DomainMap::from_interval(-4.0, 4.0).unwrap();
        let p0 = DensityField::gaussian(&g, &map, 40.0, 0.0);
        // physical mass = scale * computational mass
        assert!((map.scale * total_mass(&g, &p0) - 1.0).abs() < 1e-9);
        assert_eq!(p0.values[g.position(0)], (40.0 / PI).sqrt());
        assert_eq!(p0.values[g.position(100)], 0.0);
    }

    #[test]
    fn interval_map() {
        let m = DomainMap::from_interval(-4.0, 4.0).unwrap();
        assert_eq!(m.scale, 4.0);
        assert_eq!(m.to_physical(0.25), 1.0);
        assert_eq!(m.to_computational(1.0), 0.25);
        assert!(DomainMap::from_interval(1.0, 1.0).is_err());
    }
}
