//! Visit tables with lazily applied decay.
//!
//! Every training iteration decays the whole table by `1 - r_c` (floored at
//! `v_min`) and bumps at most two entries. Applying the decay eagerly would
//! cost `O(r_res)` per connection per iteration, so a table instead keeps a
//! running product `scale` of the decay factors and stores every entry
//! divided by the scale at the time it was written. The current value of an
//! entry is `max(stored * scale, v_min)`, which equals the repeatedly floored
//! product because the floor is absorbing.

use serde::{Deserialize, Serialize};

use crate::hyper::Hyperparameters;
use crate::lut::GridPos;
use crate::reg;

/// Below this scale the stored values are folded back to `scale = 1` so that
/// they stay far from overflow.
const RESCALE_BELOW: f64 = 1e-100;

/// The per-iteration decay factor `1 - r_c` and the floor `v_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisitDecay {
    factor: f64,
    v_min: f64,
}

impl VisitDecay {
    pub fn new(hp: &Hyperparameters) -> Self {
        Self {
            factor: 1.0 - hp.r_c,
            v_min: hp.v_min,
        }
    }

    #[inline]
    fn current(&self, stored: f64, scale: f64) -> f64 {
        reg::floor_at(stored * scale, self.v_min)
    }
}

/// `max - min` of a slice; NaN if any value is NaN.
fn spread(values: &[f64]) -> f64 {
    let (mut lo, mut hi) = (values[0], values[0]);
    let mut nan = false;
    for &v in values {
        lo = if v < lo { v } else { lo };
        hi = if v > hi { v } else { hi };
        nan |= v.is_nan();
    }
    if nan {
        f64::NAN
    } else {
        hi - lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitTable {
    values: Vec<f64>,
    scale: f64,
}

impl VisitTable {
    pub fn new(r_res: usize, v_p: f64) -> Self {
        Self {
            values: vec![v_p; r_res],
            scale: 1.0,
        }
    }

    /// Rebuilds a table from its stored parts, as written by serialization.
    pub fn from_parts(values: Vec<f64>, scale: f64) -> Option<Self> {
        let valid = values.len() >= 2
            && scale > 0.0
            && scale <= 1.0
            && values.iter().all(|v| v.is_finite() && *v > 0.0);
        valid.then_some(Self { values, scale })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Stored values and the scale they are multiplied by.
    pub fn stored(&self) -> (&[f64], f64) {
        (&self.values, self.scale)
    }

    #[inline]
    pub fn get(&self, j: usize, decay: &VisitDecay) -> f64 {
        decay.current(self.values[j], self.scale)
    }

    /// Current values of every entry.
    pub fn snapshot(&self, decay: &VisitDecay) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.get(j, decay)).collect()
    }

    /// Brings every entry up to date and exposes the values.
    pub fn materialize(&mut self, decay: &VisitDecay) -> &mut [f64] {
        if self.scale != 1.0 {
            for v in &mut self.values {
                *v = decay.current(*v, self.scale);
            }
            self.scale = 1.0;
        }
        &mut self.values
    }

    /// Records one visit at `pos`; see [`reg::update_visits`] for the rule.
    #[inline]
    pub fn update(&mut self, pos: GridPos, decay: &VisitDecay, hp: &Hyperparameters) {
        if self.scale < RESCALE_BELOW {
            self.materialize(decay);
        }
        let previous = self.scale;
        self.scale *= decay.factor;
        self.bump(pos.index, 1.0 - pos.frac, previous, decay, hp);
        if !pos.on_grid() {
            self.bump(pos.index + 1, pos.frac, previous, decay, hp);
        }
    }

    #[inline]
    fn bump(&mut self, j: usize, weight: f64, previous: f64, decay: &VisitDecay, hp: &Hyperparameters) {
        let before = decay.current(self.values[j], previous);
        let decayed = reg::floor_at(decay.factor * before, decay.v_min);
        self.values[j] = decayed * (1.0 + hp.r_c * weight * (1.0 - before)) / self.scale;
    }

    /// Diffuses the table with its own ratios, see [`reg::diffuse_visits`].
    pub fn diffuse(&mut self, decay: &VisitDecay, hp: &Hyperparameters) {
        reg::diffuse_visits_unchecked(self.materialize(decay), hp);
    }

    /// Diffuses `lut` with the current visit values and then the table
    /// itself, in a single pass. Both sweeps share their pair ratios, so the
    /// result equals [`reg::diffuse_lut`] followed by [`reg::diffuse_visits`].
    pub fn diffuse_with_lut(&mut self, lut: &mut [f64], decay: &VisitDecay, hp: &Hyperparameters) {
        assert_eq!(lut.len(), self.values.len(), "LUT and visit table lengths differ");
        let r_a = hp.r_a;
        if r_a == 0.0 {
            self.sweep(lut, decay, hp.r_b, |d| d);
        } else if reg::series_covers(spread(lut), r_a) {
            // no pair can leave the series range, so skip the per-pair test
            self.sweep(lut, decay, hp.r_b, move |d| reg::smoothed_series(d, r_a));
        } else {
            self.sweep(lut, decay, hp.r_b, move |d| reg::smoothed_difference_nonzero(d, r_a));
        }
        self.scale = 1.0;
    }

    #[inline(always)]
    fn sweep(&mut self, lut: &mut [f64], decay: &VisitDecay, r_b: f64, gap_of: impl Fn(f64) -> f64) {
        let n = self.values.len();
        let (scale, v_min) = (self.scale, decay.v_min);
        let values = &mut self.values[..n];
        let lut = &mut lut[..n];
        let current = |stored: f64| reg::floor_at(stored * scale, v_min);

        // pair j reads entries j and j + 1 before entry j is rewritten
        let pair = |low: f64, high: f64, v_low: f64, v_high: f64| {
            let (q_low, q_high) = reg::pair_ratios(v_low, v_high, r_b);
            let (l, h) = reg::pair_with_ratios(low, high, gap_of(high - low), q_low, q_high);
            let (vl, vh) = reg::pair_with_ratios(v_low, v_high, v_high - v_low, q_low, q_high);
            (l, h, vl, vh)
        };
        let mut v_low = current(values[0]);
        let mut v_high = current(values[1]);
        let (l, mut lut_pending, vl, mut visit_pending) = pair(lut[0], lut[1], v_low, v_high);
        lut[0] = l;
        values[0] = reg::floor_at(vl, v_min);
        for j in 1..n - 1 {
            v_low = v_high;
            v_high = current(values[j + 1]);
            let (l, h, vl, vh) = pair(lut[j], lut[j + 1], v_low, v_high);
            lut[j] = 0.5 * (l + lut_pending);
            values[j] = reg::floor_at(0.5 * (vl + visit_pending), v_min);
            lut_pending = h;
            visit_pending = vh;
        }
        lut[n - 1] = lut_pending;
        values[n - 1] = reg::floor_at(visit_pending, v_min);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite()) && self.scale.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
    }

    #[test]
    fn lazy_table_tracks_eager_reference() {
        let hp = Hyperparameters { r_res: 16, r_c: 0.01, v_min: 1e-6, ..Default::default() };
        let decay = VisitDecay::new(&hp);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut lazy = VisitTable::new(hp.r_res, hp.v_p);
        let mut eager = vec![hp.v_p; hp.r_res];
        for step in 0..20_000 {
            // concentrate visits so that most entries decay to the floor
            let x: f64 = if step % 7 == 0 { rng.random_range(-1.0..=1.0) } else { rng.random_range(0.2..0.4) };
            lazy.update(GridPos::locate(x, &hp), &decay, &hp);
            reg::update_visits(&mut eager, x, &hp);
            if step % 97 == 0 {
                lazy.diffuse(&decay, &hp);
                reg::diffuse_visits(&mut eager, &hp, reg::RegGate(true));
            }
            if step % 1000 == 0 {
                for j in 0..hp.r_res {
                    assert!(close(lazy.get(j, &decay), eager[j]), "step {step} entry {j}");
                }
            }
        }
        let snap = lazy.snapshot(&decay);
        for (a, b) in snap.iter().zip(&eager) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn rescaling_keeps_values() {
        let hp = Hyperparameters { r_res: 4, r_c: 0.2, v_min: 1e-300, ..Default::default() };
        let decay = VisitDecay::new(&hp);
        let mut lazy = VisitTable::new(4, hp.v_p);
        let mut eager = vec![hp.v_p; 4];
        // 0.8^1100 is far below the rescale threshold
        for step in 0..1100 {
            let x = if step % 2 == 0 { -1.0 } else { 1.0 };
            lazy.update(GridPos::locate(x, &hp), &decay, &hp);
            reg::update_visits(&mut eager, x, &hp);
        }
        assert!(lazy.stored().1 >= RESCALE_BELOW * decay.factor);
        for (a, b) in lazy.snapshot(&decay).iter().zip(&eager) {
            assert!(close(*a, *b), "{a} {b}");
        }
    }

    #[test]
    fn long_idle_entries_reach_the_floor() {
        let hp = Hyperparameters { r_res: 4, ..Default::default() };
        let decay = VisitDecay::new(&hp);
        let mut t = VisitTable::new(4, hp.v_p);
        for _ in 0..100_000 {
            t.update(GridPos::locate(1.0, &hp), &decay, &hp);
        }
        assert_eq!(t.get(0, &decay), hp.v_min);
        // the bump only slows the decay of the visited entry
        assert!(t.get(3, &decay) > 1e3 * hp.v_min, "{:?}", t.snapshot(&decay));
    }

    #[test]
    fn fused_diffusion_matches_separate_sweeps() {
        // r_a = 1e-3 keeps every pair on the series, 0.3 mixes series and tanh
        for r_a in [0.0, 1e-3, 0.3] {
            check_fused_diffusion(Hyperparameters { r_res: 24, r_a, r_b: 0.7, r_c: 0.05, ..Default::default() });
        }
    }

    fn check_fused_diffusion(hp: Hyperparameters) {
        let decay = VisitDecay::new(&hp);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut table = VisitTable::new(24, hp.v_p);
        let mut lut: Vec<f64> = (0..24).map(|_| rng.random_range(-0.9..0.9)).collect();
        for step in 0..3000 {
            let x = rng.random_range(-1.0..=1.0);
            table.update(GridPos::locate(x, &hp), &decay, &hp);
            if step % 7 == 0 {
                let mut reference_lut = lut.clone();
                let mut reference = table.snapshot(&decay);
                reg::diffuse_lut(&mut reference_lut, &reference, &hp, reg::RegGate(true));
                reg::diffuse_visits(&mut reference, &hp, reg::RegGate(true));
                table.diffuse_with_lut(&mut lut, &decay, &hp);
                assert_eq!(lut, reference_lut);
                assert_eq!(table.snapshot(&decay), reference);
            }
        }
    }

    #[test]
    fn spread_of_values() {
        assert_eq!(spread(&[0.5, -1.0, 2.0]), 3.0);
        assert!(spread(&[0.5, f64::NAN, 2.0]).is_nan());
    }

    #[test]
    fn from_parts_validates() {
        assert!(VisitTable::from_parts(vec![0.1, 0.1], 0.5).is_some());
        assert!(VisitTable::from_parts(vec![0.1, 0.1], 0.0).is_none());
        assert!(VisitTable::from_parts(vec![0.1, 0.1], 1.5).is_none());
        assert!(VisitTable::from_parts(vec![0.1, 0.0], 1.0).is_none());
        assert!(VisitTable::from_parts(vec![0.1], 1.0).is_none());
    }
}
