//! Functions sampled on the `(x, p)` product grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, PhysicsConfig};

/// Real function on the `n × n` phase-space grid, stored row-major with
/// the position index outermost: `values[j * n + k] = f(x_j, p_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceFunction {
    pub(crate) grid: Grid,
    pub(crate) values: Vec<f64>,
    pub(crate) config: PhysicsConfig,
}

/// Complex-valued counterpart, used for star products of real symbols
/// whose result carries an imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPhaseSpaceFunction {
    pub(crate) grid: Grid,
    pub(crate) values: Vec<Complex64>,
    pub(crate) config: PhysicsConfig,
}

/// Rectangular window `|x − x_c| ≤ half_x`, `|p| ≤ half_p` used when
/// comparing grid results against exact references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub half_x: f64,
    pub half_p: f64,
}

impl Region {
    /// The middle quarter of each axis: `|x − x_c| ≤ L/8`, `|p| ≤ p_max/4`.
    pub fn central_quarter(grid: &Grid) -> Self {
        Self {
            half_x: grid.length() / 8.0,
            half_p: grid.p_max() / 4.0,
        }
    }

    pub fn contains(&self, grid: &Grid, j: usize, k: usize) -> bool {
        (grid.x(j) - grid.center()).abs() <= self.half_x + 1e-12
            && grid.p(k).abs() <= self.half_p + 1e-12
    }
}

impl PhaseSpaceFunction {
    pub fn new(grid: Grid, values: Vec<f64>, config: PhysicsConfig) -> Result<Self> {
        if values.len() != grid.n() * grid.n() || grid.hbar() != config.hbar {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            values,
            config,
        })
    }

    pub fn from_fn(grid: Grid, config: PhysicsConfig, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            let x = grid.x(j);
            for k in 0..n {
                values.push(f(x, grid.p(k)));
            }
        }
        Self {
            grid,
            values,
            config,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.grid.n() + k]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∬ f dx dp` (rectangle rule, which is the trapezoid rule on a
    /// periodic grid).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx() * self.grid.dp()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PhaseSpaceFunction {
        PhaseSpaceFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            config: self.config,
        }
    }

    pub fn to_complex(&self) -> ComplexPhaseSpaceFunction {
        ComplexPhaseSpaceFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .map(|v| Complex64::new(*v, 0.0))
                .collect(),
            config: self.config,
        }
    }

    /// Largest `|f − g|` over `region`.
    pub fn max_abs_diff_on(&self, other: &PhaseSpaceFunction, region: &Region) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                if region.contains(&self.grid, j, k) {
                    worst = worst.max((self.at(j, k) - other.at(j, k)).abs());
                }
            }
        }
        Ok(worst)
    }
}

impl ComplexPhaseSpaceFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>, config: PhysicsConfig) -> Result<Self> {
        if values.len() != grid.n() * grid.n() || grid.hbar() != config.hbar {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid,
            values,
            config,
        })
    }

    pub fn from_fn(grid: Grid, config: PhysicsConfig, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            let x = grid.x(j);
            for k in 0..n {
                values.push(f(x, grid.p(k)));
            }
        }
        Self {
            grid,
            values,
            config,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn config(&self) -> &PhysicsConfig {
        &self.config
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.values[j * self.grid.n() + k]
    }

    pub(crate) fn map_values(&self, values: Vec<Complex64>) -> ComplexPhaseSpaceFunction {
        ComplexPhaseSpaceFunction {
            grid: self.grid,
            values,
            config: self.config,
        }
    }

    pub fn real_part(&self) -> PhaseSpaceFunction {
        PhaseSpaceFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v.re).collect(),
            config: self.config,
        }
    }

    pub fn imag_part(&self) -> PhaseSpaceFunction {
        PhaseSpaceFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| v.im).collect(),
            config: self.config,
        }
    }

    pub fn zip_with(
        &self,
        other: &ComplexPhaseSpaceFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexPhaseSpaceFunction> {
        self.grid.check_same(&other.grid)?;
        Ok(ComplexPhaseSpaceFunction {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
            config: self.config,
        })
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexPhaseSpaceFunction {
        ComplexPhaseSpaceFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            config: self.config,
        }
    }

    /// Largest `|f − g|` over `region`.
    pub fn max_abs_diff_on(
        &self,
        other: &ComplexPhaseSpaceFunction,
        region: &Region,
    ) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                if region.contains(&self.grid, j, k) {
                    worst = worst.max((self.at(j, k) - other.at(j, k)).norm());
                }
            }
        }
        Ok(worst)
    }
}
