//! Regularization operators: weight decay, gain decay, the visit-table
//! update and the diffusion of LUT and visit tables.

use rand::Rng;

use crate::hyper::Hyperparameters;
use crate::lut::GridPos;

/// Bound on the exponent inside [`gain_decay`].
const GAIN_EXP_LIMIT: f64 = 50.0;

/// Below this `|r_a * d|` the smoothing term uses its Taylor series.
const SMOOTH_SERIES_LIMIT: f64 = 2e-3;

/// Plain weight decay: `(1 - s_b) * w`.
#[inline]
pub fn decay(w: f64, hp: &Hyperparameters) -> f64 {
    (1.0 - hp.s_b) * w
}

/// Gain decay, acting on an increment `dw` of weight `w`:
/// `(exp(s_a * w * dw) - 1) / (s_a * w)`, or `dw` when `w` or `s_a` is zero.
///
/// Large positive weights see their growth damped and their shrinking
/// accelerated; the converse holds for negative weights.
#[inline]
pub fn gain_decay(w: f64, dw: f64, hp: &Hyperparameters) -> f64 {
    if w == 0.0 || hp.s_a == 0.0 {
        return dw;
    }
    let scale = hp.s_a * w;
    (scale * dw).clamp(-GAIN_EXP_LIMIT, GAIN_EXP_LIMIT).exp_m1() / scale
}

/// Whether the LUT regularization of one connection runs this iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegGate(pub bool);

impl RegGate {
    #[inline]
    pub fn is_open(self) -> bool {
        self.0
    }
}

/// Draws `u` uniformly from `[0, 1)` and opens the gate when `zeta > u`.
#[inline]
pub fn should_regularize<R: Rng + ?Sized>(rng: &mut R, hp: &Hyperparameters) -> RegGate {
    let u: f64 = rng.random();
    RegGate(hp.zeta > u)
}

/// Visit-table update on plain values.
///
/// Every entry decays to `max((1 - r_c) V, v_min)`; the entries around the
/// argument position are then bumped by `1 + r_c * w * (1 - V)`, where `w` is
/// the interpolation weight of the entry and `V` its value before the decay.
/// An argument on a grid point bumps a single entry with weight 1.
///
/// Training uses the equivalent lazy form in [`crate::visits::VisitTable`].
pub fn update_visits(values: &mut [f64], x: f64, hp: &Hyperparameters) {
    let pos = GridPos::locate(x, hp);
    let lower = values[pos.index];
    let upper = (!pos.on_grid()).then(|| values[pos.index + 1]);
    for v in values.iter_mut() {
        *v = ((1.0 - hp.r_c) * *v).max(hp.v_min);
    }
    values[pos.index] *= 1.0 + hp.r_c * (1.0 - pos.frac) * (1.0 - lower);
    if let Some(upper) = upper {
        values[pos.index + 1] *= 1.0 + hp.r_c * pos.frac * (1.0 - upper);
    }
}

/// `tanh(r_a * d) / r_a`, with the limit `d` at `r_a = 0`.
#[inline]
pub fn smoothed_difference(d: f64, r_a: f64) -> f64 {
    if r_a == 0.0 {
        d
    } else {
        smoothed_difference_nonzero(d, r_a)
    }
}

/// [`smoothed_difference`] for `r_a != 0`.
#[inline]
pub(crate) fn smoothed_difference_nonzero(d: f64, r_a: f64) -> f64 {
    let x = r_a * d;
    if x.abs() < SMOOTH_SERIES_LIMIT {
        smoothed_series(d, r_a)
    } else {
        tanh_ratio(x, r_a)
    }
}

/// Whether every difference of values spanning `spread` stays in the range
/// where [`smoothed_difference`] uses its series.
#[inline]
pub(crate) fn series_covers(spread: f64, r_a: f64) -> bool {
    r_a * spread < SMOOTH_SERIES_LIMIT
}

/// Series form of `tanh(r_a d) / r_a`, accurate for `|r_a d| < 2e-3`.
#[inline]
pub(crate) fn smoothed_series(d: f64, r_a: f64) -> f64 {
    const THIRD: f64 = 1.0 / 3.0;
    const TWO_FIFTEENTHS: f64 = 2.0 / 15.0;
    let x = r_a * d;
    let x2 = x * x;
    d * (1.0 - x2 * THIRD + x2 * x2 * TWO_FIFTEENTHS)
}

#[cold]
#[inline(never)]
fn tanh_ratio(x: f64, r_a: f64) -> f64 {
    x.tanh() / r_a
}

/// `max(x, v_min)`.
#[inline]
pub(crate) fn floor_at(x: f64, v_min: f64) -> f64 {
    if x > v_min {
        x
    } else {
        v_min
    }
}

/// Pair-local diffusion values `(L_j, H_{j+1})` for a pair of table values
/// `(low, high)` with visits `(v_low, v_high)` and contracted gap `gap`.
#[inline]
pub fn pair_values(low: f64, high: f64, gap: f64, v_low: f64, v_high: f64, r_b: f64) -> (f64, f64) {
    let (q_low, q_high) = pair_ratios(v_low, v_high, r_b);
    pair_with_ratios(low, high, gap, q_low, q_high)
}

/// Shares `(1 / (1 + r_b p), 1 / (1 + r_b / p))` of a pair with visit ratio
/// `p = v_high / v_low`. They are evaluated as `v_low / (v_low + r_b v_high)`
/// and `v_high / (v_high + r_b v_low)`, so no reciprocal of an extreme ratio
/// is ever formed.
#[inline]
pub fn pair_ratios(v_low: f64, v_high: f64, r_b: f64) -> (f64, f64) {
    (v_low / (v_low + r_b * v_high), v_high / (v_high + r_b * v_low))
}

/// `(L_j, H_{j+1})` from precomputed pair ratios.
#[inline]
pub fn pair_with_ratios(low: f64, high: f64, gap: f64, q_low: f64, q_high: f64) -> (f64, f64) {
    let mean = 0.5 * (low + high);
    let half = 0.5 * gap;
    (mean - half * q_low, mean + half * q_high)
}

/// Runs one diffusion sweep in place. `gap_of` maps a raw difference to the
/// contracted difference; `visit_of` reads the visit value of an entry from
/// the state before the sweep.
#[inline]
fn diffuse_in_place(
    values: &mut [f64],
    r_b: f64,
    gap_of: impl Fn(f64) -> f64,
    visit_of: impl Fn(&[f64], usize) -> f64,
) {
    let n = values.len();
    // `values[j]` is rewritten only after pair j has read it.
    let mut pending_high = 0.0;
    for j in 0..n - 1 {
        let (low, high) = (values[j], values[j + 1]);
        let v_low = visit_of(values, j);
        let v_high = visit_of(values, j + 1);
        let (l, h) = pair_values(low, high, gap_of(high - low), v_low, v_high, r_b);
        values[j] = if j == 0 { l } else { 0.5 * (l + pending_high) };
        pending_high = h;
    }
    values[n - 1] = pending_high;
}

/// Diffuses a LUT towards its less visited regions while shrinking the
/// differences between neighbours. A closed gate leaves the table untouched.
pub fn diffuse_lut(lut: &mut [f64], visits: &[f64], hp: &Hyperparameters, gate: RegGate) {
    debug_assert_eq!(lut.len(), visits.len());
    if !gate.is_open() {
        return;
    }
    let r_a = hp.r_a;
    diffuse_in_place(lut, hp.r_b, |d| smoothed_difference(d, r_a), |_, j| visits[j]);
}

/// Diffuses a visit table with its own ratios and no smoothing, then floors
/// every entry at `v_min`.
pub fn diffuse_visits(visits: &mut [f64], hp: &Hyperparameters, gate: RegGate) {
    if !gate.is_open() {
        return;
    }
    diffuse_visits_unchecked(visits, hp);
}

pub(crate) fn diffuse_visits_unchecked(visits: &mut [f64], hp: &Hyperparameters) {
    // Pair j reads the untouched entries j and j + 1 before entry j is
    // rewritten, so reading the table itself is safe.
    diffuse_in_place(visits, hp.r_b, |d| d, |v, j| v[j]);
    for v in visits.iter_mut() {
        *v = floor_at(*v, hp.v_min);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const OPEN: RegGate = RegGate(true);

    fn hp() -> Hyperparameters {
        Hyperparameters::default()
    }

    #[test]
    fn decay_examples() {
        assert_eq!(decay(0.0, &hp()), 0.0);
        let off = Hyperparameters { s_b: 0.0, ..hp() };
        assert_eq!(decay(0.37, &off), 0.37);
        let h = Hyperparameters { s_b: 2e-7, ..hp() };
        assert!((decay(1.0, &h) - 0.9999998).abs() < 1e-16);
    }

    #[test]
    fn gain_decay_examples() {
        let off = Hyperparameters { s_a: 0.0, ..hp() };
        assert_eq!(gain_decay(0.8, 0.3, &off), 0.3);
        assert_eq!(gain_decay(0.0, 0.3, &hp()), 0.3);
        let on = Hyperparameters { s_a: 1.0, ..hp() };
        // e^0.1 - 1 and (e^-0.1 - 1) / 2, 40-digit reference values
        assert!((gain_decay(1.0, 0.1, &on) - 0.105_170_918_075_647_62).abs() < 1e-15);
        assert!((gain_decay(2.0, -0.05, &on) + 0.047_581_290_982_020_21).abs() < 1e-15);
    }

    #[test]
    fn gain_decay_limit_and_sign() {
        let tiny = Hyperparameters { s_a: 1e-8, ..hp() };
        let on = Hyperparameters { s_a: 1.0, ..hp() };
        for &(w, dw) in &[(0.5, 0.2), (-3.0, 0.7), (10.0, -1.0), (-0.1, -0.01)] {
            assert!((gain_decay(w, dw, &tiny) - dw).abs() < 1e-6);
            assert_eq!(gain_decay(w, dw, &on).signum(), f64::signum(dw));
        }
        // exponent clamp keeps extreme products finite
        assert!(gain_decay(1e6, 1e6, &on).is_finite());
    }

    #[test]
    fn gate_extremes_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let always = Hyperparameters { zeta: 1.0, ..hp() };
        let never = Hyperparameters { zeta: 0.0, ..hp() };
        for _ in 0..10_000 {
            assert!(should_regularize(&mut rng, &always).is_open());
            assert!(!should_regularize(&mut rng, &never).is_open());
        }
        let h = Hyperparameters { zeta: 0.05, ..hp() };
        let n = 1_000_000;
        let hits = (0..n).filter(|_| should_regularize(&mut rng, &h).is_open()).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.05).abs() < 0.001, "rate {rate}");
    }

    #[test]
    fn visit_update_examples() {
        let h = Hyperparameters { r_res: 5, r_c: 0.001, ..hp() };
        let mut v = vec![0.1; 5];
        // x = 0 sits exactly on grid point 2
        update_visits(&mut v, 0.0, &h);
        assert!((v[0] - 0.0999).abs() < 1e-15);
        assert!((v[2] - 0.099_989_91).abs() < 1e-15);

        let mut floor = vec![h.v_min; 5];
        update_visits(&mut floor, -1.0, &h);
        assert_eq!(floor[3], h.v_min);
    }

    #[test]
    fn visit_update_splits_bump_between_neighbours() {
        let h = Hyperparameters { r_res: 5, r_c: 0.01, ..hp() };
        let mut v = vec![0.2; 5];
        // S = 1.25
        update_visits(&mut v, -0.375, &h);
        let base = 0.99 * 0.2;
        assert!((v[1] - base * (1.0 + 0.01 * 0.75 * 0.8)).abs() < 1e-15);
        assert!((v[2] - base * (1.0 + 0.01 * 0.25 * 0.8)).abs() < 1e-15);
        assert_eq!(v[0], base);
    }

    #[test]
    fn diffuse_lut_examples() {
        let h0 = Hyperparameters { r_res: 2, r_a: 0.0, r_b: 0.0, ..hp() };
        let mut flat = vec![0.3; 6];
        diffuse_lut(&mut flat, &[0.1; 6], &h0, OPEN);
        assert!(flat.iter().all(|&w| w == 0.3));

        let mut lut = vec![0.0, 1.0];
        diffuse_lut(&mut lut, &[0.2, 0.2], &h0, OPEN);
        assert_eq!(lut, vec![0.0, 1.0]);

        let h1 = Hyperparameters { r_b: 1.0, ..h0 };
        let mut lut = vec![0.0, 1.0];
        diffuse_lut(&mut lut, &[0.4, 0.4], &h1, OPEN);
        assert_eq!(lut, vec![0.25, 0.75]);

        let mut shut = vec![0.0, 1.0];
        diffuse_lut(&mut shut, &[0.4, 0.4], &h1, RegGate(false));
        assert_eq!(shut, vec![0.0, 1.0]);
    }

    #[test]
    fn diffuse_visits_examples() {
        let h = Hyperparameters { r_b: 0.5, ..hp() };
        let mut uniform = vec![0.2; 8];
        diffuse_visits(&mut uniform, &h, OPEN);
        assert!(uniform.iter().all(|&v| (v - 0.2).abs() < 1e-17));

        let off = Hyperparameters { r_b: 0.0, ..hp() };
        let mut pair = vec![0.1, 0.7];
        diffuse_visits(&mut pair, &off, OPEN);
        assert!((pair[0] - 0.1).abs() < 1e-16 && (pair[1] - 0.7).abs() < 1e-16);

        // with a huge diffusion speed the barely visited entry is pulled
        // almost to the pair mean while the visited one hardly moves
        let fast = Hyperparameters { r_b: 1e6, ..hp() };
        let mut pair = vec![hp().v_min, 0.5];
        diffuse_visits(&mut pair, &fast, OPEN);
        assert!((pair[0] - 0.25).abs() < 1e-12, "{pair:?}");
        assert!((pair[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn smoothing_series_matches_tanh() {
        for &r_a in &[1e-4, 1e-2, 1.0] {
            for k in -200..=200 {
                let d = k as f64 / 100.0;
                let exact = (r_a * d).tanh() / r_a;
                let got = smoothed_difference(d, r_a);
                assert!((got - exact).abs() <= 1e-15 * exact.abs().max(1e-300) + 1e-300);
                assert!(got.abs() <= d.abs());
            }
        }
    }
}
