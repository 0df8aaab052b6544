//! Piecewise-linear look-up tables over an equally spaced grid.
//!
//! A table of `r_res` values spans `[i_min, i_max]`; value `j` sits at grid
//! point `i_min + j / (r_res - 1) * (i_max - i_min)`. Evaluating, adapting and
//! differentiating the table touches at most two neighbouring entries.

use serde::{Deserialize, Serialize};

use crate::hyper::Hyperparameters;

/// Returns the argument of grid point `j`.
///
/// Panics if `j` is outside `0..r_res`.
pub fn grid_point(j: usize, hp: &Hyperparameters) -> f64 {
    assert!(j < hp.r_res, "grid index {j} out of range for r_res {}", hp.r_res);
    hp.i_min + j as f64 / (hp.r_res - 1) as f64 * (hp.i_max - hp.i_min)
}

/// Clamps `x` into the table domain.
#[inline]
pub fn clamp_input(x: f64, hp: &Hyperparameters) -> f64 {
    x.clamp(hp.i_min, hp.i_max)
}

/// Location of an argument on the grid: the lower index and the fractional
/// distance to the next grid point, in index units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPos {
    pub index: usize,
    pub frac: f64,
}

impl GridPos {
    /// Locates `x` (clamped into the domain) on the grid.
    ///
    /// At the upper domain edge the position is `(r_res - 1, 0)`, so the
    /// missing entry `r_res` is never addressed.
    #[inline]
    pub fn locate(x: f64, hp: &Hyperparameters) -> Self {
        let x = clamp_input(x, hp);
        let top = hp.r_res - 1;
        let s = (x - hp.i_min) / (hp.i_max - hp.i_min) * top as f64;
        let floor = s.floor();
        let index = floor as usize;
        if index >= top {
            GridPos { index: top, frac: 0.0 }
        } else {
            GridPos {
                index,
                frac: s - floor,
            }
        }
    }

    #[inline]
    pub fn on_grid(&self) -> bool {
        self.frac == 0.0
    }
}

/// Interpolates through an arbitrary table accessor. Reads one entry on a
/// grid point and two entries otherwise.
#[inline]
pub fn interpolate_with(pos: GridPos, mut read: impl FnMut(usize) -> f64) -> f64 {
    if pos.on_grid() {
        read(pos.index)
    } else {
        (1.0 - pos.frac) * read(pos.index) + pos.frac * read(pos.index + 1)
    }
}

/// The LUT component of a weight function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LutTable {
    values: Vec<f64>,
}

impl LutTable {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "a LUT needs at least two entries");
        Self { values }
    }

    pub fn zeros(r_res: usize) -> Self {
        Self::new(vec![0.0; r_res])
    }

    /// Samples `offset + slope * I` at every grid point.
    pub fn ramp(offset: f64, slope: f64, hp: &Hyperparameters) -> Self {
        Self::new(
            (0..hp.r_res)
                .map(|j| offset + slope * grid_point(j, hp))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, pos: GridPos) -> f64 {
        interpolate_with(pos, |j| self.values[j])
    }

    /// Evaluates the table at `x`; arguments outside the domain are clamped.
    #[inline]
    pub fn interpolate(&self, x: f64, hp: &Hyperparameters) -> f64 {
        self.at(GridPos::locate(x, hp))
    }

    /// Adds `delta` to the interpolated value at `pos`.
    ///
    /// On a grid point only that entry moves. Between grid points `j` and
    /// `j + 1`, with `r_h = frac` and `r_l = 1 - frac`, the entries move by
    /// `delta * r / (2r^2 - 2r + 1)` for their respective `r`, so the nearer
    /// entry moves more and the interpolant at `pos` changes by exactly
    /// `delta`. Returns the touched entries.
    #[inline]
    pub fn add_at(&mut self, pos: GridPos, delta: f64) -> Touched {
        if pos.on_grid() {
            self.values[pos.index] += delta;
            Touched::One(pos.index)
        } else {
            let r_h = pos.frac;
            let r_l = 1.0 - r_h;
            self.values[pos.index] += delta * split_share(r_l);
            self.values[pos.index + 1] += delta * split_share(r_h);
            Touched::Two(pos.index)
        }
    }

    /// Multiplies the touched entries by `factor`.
    #[inline]
    pub fn scale_touched(&mut self, touched: Touched, factor: f64) {
        match touched {
            Touched::One(j) => self.values[j] *= factor,
            Touched::Two(j) => {
                self.values[j] *= factor;
                self.values[j + 1] *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `r / (2r^2 - 2r + 1)`; the denominator equals `r^2 + (1 - r)^2`.
#[inline]
fn split_share(r: f64) -> f64 {
    r / (2.0 * r * r - 2.0 * r + 1.0)
}

/// Entries modified by one LUT adaptation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Touched {
    One(usize),
    /// Entries `j` and `j + 1`.
    Two(usize),
}
