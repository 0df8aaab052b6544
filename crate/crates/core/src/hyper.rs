//! Training and regularization coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All coefficients that drive propagation, training and regularization.
///
/// Field names follow their role; the diffusion group is `r_a` (smoothing
/// level), `r_b` (diffusion speed) and `r_c` (visit decay), the absolute
/// value group is `s_a` (gain decay level) and `s_b` (weight decay rate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparameters {
    pub mu: f64,
    pub nu: f64,
    pub r_res: usize,
    pub i_min: f64,
    pub i_max: f64,
    pub a_l: f64,
    pub a_h: f64,
    pub a_m: f64,
    pub zeta: f64,
    pub r_a: f64,
    pub r_b: f64,
    pub r_c: f64,
    pub s_a: f64,
    pub s_b: f64,
    pub v_p: f64,
    pub v_min: f64,
}

impl Hyperparameters {
    /// Defaults for networks with look-up-table weights.
    pub const fn nlw() -> Self {
        Self {
            mu: 0.02,
            nu: 2.5,
            r_res: 64,
            i_min: -1.0,
            i_max: 1.0,
            a_l: 0.15,
            a_h: 0.35,
            a_m: 1.1,
            zeta: 0.05,
            r_a: 1e-4,
            r_b: 1e-4,
            r_c: 0.001,
            s_a: 1.0,
            s_b: 1e-9,
            v_p: 0.1,
            v_min: 1e-16,
        }
    }

    /// Defaults for classic linear-weight networks: linear gain function and
    /// a stronger plain weight decay.
    pub const fn lw() -> Self {
        Self {
            s_a: 0.0,
            s_b: 2e-7,
            ..Self::nlw()
        }
    }

    pub fn for_kind(kind: crate::NetKind) -> Self {
        match kind {
            crate::NetKind::Lw => Self::lw(),
            crate::NetKind::Nlw => Self::nlw(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidHyperparameters(m.to_owned()));
        let all = [
            self.mu, self.nu, self.i_min, self.i_max, self.a_l, self.a_h, self.a_m, self.zeta,
            self.r_a, self.r_b, self.r_c, self.s_a, self.s_b, self.v_p, self.v_min,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("all coefficients must be finite");
        }
        if self.r_res < 2 {
            return fail("r_res must be at least 2");
        }
        if self.i_min >= self.i_max {
            return fail("i_min must be below i_max");
        }
        if !(self.a_l > 0.0 && self.a_l <= self.a_h) {
            return fail("need 0 < a_l <= a_h");
        }
        if self.a_m <= 1.0 {
            return fail("a_m must exceed 1");
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return fail("zeta must lie in [0, 1]");
        }
        if self.v_min <= 0.0 {
            return fail("v_min must be positive");
        }
        if !(0.0..1.0).contains(&self.s_b) {
            return fail("s_b must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.r_c) {
            return fail("r_c must lie in [0, 1)");
        }
        if self.r_a < 0.0 || self.r_b < 0.0 || self.s_a < 0.0 {
            return fail("r_a, r_b and s_a must be non-negative");
        }
        if !(self.v_p >= self.v_min && self.v_p <= 1.0) {
            return fail("v_p must lie in [v_min, 1]");
        }
        Ok(())
    }
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self::nlw()
    }
}
