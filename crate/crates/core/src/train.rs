//! On-line backpropagation with approximated LUT derivatives and the
//! per-connection update rules.
//!
//! One iteration runs, in order: forward pass, backpropagation, the scalar
//! updates (`w_s`, `w_l`, biases), the LUT updates, the visit updates and,
//! behind one random gate per LUT connection, weight decay of the touched LUT
//! entries followed by diffusion of the LUT and of its visit table. The
//! updates of different connections are independent, so they are applied
//! connection by connection; gates are drawn in connection order.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::lut::{GridPos, LutTable, Touched};
use crate::network::{ConnectionId, ForwardTrace, LutWeight, Network, Weight};
use crate::reg::{self, RegGate};

/// Half-widths of the difference quotients averaged by the approximated LUT
/// derivative: `a_l, a_m a_l, a_m^2 a_l, ...` up to and including the last
/// value not above `a_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeOffsets(Vec<f64>);

impl DerivativeOffsets {
    pub fn new(hp: &Hyperparameters) -> Result<Self> {
        if !(hp.a_l > 0.0 && hp.a_l <= hp.a_h && hp.a_m > 1.0) {
            return Err(Error::InvalidHyperparameters(
                "derivative offsets need 0 < a_l <= a_h and a_m > 1".into(),
            ));
        }
        let mut offsets = Vec::new();
        let mut a = hp.a_l;
        while a <= hp.a_h {
            offsets.push(a);
            a *= hp.a_m;
        }
        Ok(Self(offsets))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Approximated derivative `dO/dI` of a LUT connection: `w_l` plus the mean
/// of the LUT difference quotients over `[c(I - a), c(I + a)]`, where `c`
/// clamps into the domain. Quotients whose clamped ends coincide are left
/// out; if all of them are, the LUT part counts as flat.
pub fn approx_lut_derivative(w: &LutWeight, x: f64, hp: &Hyperparameters, offsets: &DerivativeOffsets) -> f64 {
    let mut sum = 0.0;
    let mut terms = 0usize;
    for &a in offsets.as_slice() {
        let hi = (x + a).clamp(hp.i_min, hp.i_max);
        let lo = (x - a).clamp(hp.i_min, hp.i_max);
        if hi == lo {
            continue;
        }
        sum += (w.lut.interpolate(hi, hp) - w.lut.interpolate(lo, hp)) / (hi - lo);
        terms += 1;
    }
    if terms == 0 {
        w.w_l
    } else {
        w.w_l + sum / terms as f64
    }
}

/// Pre-located end points of one difference quotient.
#[derive(Debug, Clone, Copy)]
struct Probe {
    hi: GridPos,
    lo: GridPos,
    inv_width: f64,
}

/// Probes for every offset around `x`, degenerate ones dropped.
fn probes_for(x: f64, hp: &Hyperparameters, offsets: &DerivativeOffsets, out: &mut Vec<Probe>) {
    out.clear();
    for &a in offsets.as_slice() {
        let hi = (x + a).clamp(hp.i_min, hp.i_max);
        let lo = (x - a).clamp(hp.i_min, hp.i_max);
        if hi != lo {
            out.push(Probe {
                hi: GridPos::locate(hi, hp),
                lo: GridPos::locate(lo, hp),
                inv_width: 1.0 / (hi - lo),
            });
        }
    }
}

#[inline]
fn probed_slope(lut: &LutTable, probes: &[Probe]) -> f64 {
    if probes.is_empty() {
        return 0.0;
    }
    let sum: f64 = probes.iter().map(|p| (lut.at(p.hi) - lut.at(p.lo)) * p.inv_width).sum();
    sum / probes.len() as f64
}

/// Error derivatives `dE/du` of every node for one sample, with
/// `E = 1/2 sum (y - d)^2`. The error of a connection is the value of its
/// destination node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConnectionErrors {
    deltas: Vec<Vec<f64>>,
}

impl ConnectionErrors {
    pub fn node_delta(&self, layer: usize, node: usize) -> f64 {
        self.deltas[layer][node]
    }

    pub fn connection_error(&self, id: ConnectionId) -> f64 {
        self.deltas[id.layer][id.dest]
    }

    pub fn layer(&self, layer: usize) -> &[f64] {
        &self.deltas[layer]
    }
}

/// Scratch buffers for backpropagation.
#[derive(Debug, Clone)]
struct Backprop {
    offsets: DerivativeOffsets,
    probes: Vec<Vec<Probe>>,
    upstream: Vec<f64>,
}

impl Backprop {
    fn new(hp: &Hyperparameters) -> Result<Self> {
        Ok(Self {
            offsets: DerivativeOffsets::new(hp)?,
            probes: Vec::new(),
            upstream: Vec::new(),
        })
    }

    fn run(&mut self, net: &Network, trace: &ForwardTrace, target: &[f64], errors: &mut ConnectionErrors) -> Result<()> {
        let arch = net.architecture().sizes();
        let last = arch.len() - 1;
        if target.len() != arch[last] {
            return Err(Error::DimensionMismatch {
                expected: arch[last],
                actual: target.len(),
            });
        }
        if errors.deltas.len() != arch.len() {
            errors.deltas = arch.iter().map(|&n| vec![0.0; n]).collect();
        }
        for ((delta, &y), &d) in errors.deltas[last].iter_mut().zip(&trace.activations[last]).zip(target) {
            *delta = (y - d) * (1.0 - y * y);
        }
        let hp = net.hyperparameters();
        // the input layer has no parameters, so stop at layer 1
        for l in (2..=last).rev() {
            let layer = net.layer(l);
            let inputs = &trace.activations[l - 1];
            self.upstream.clear();
            self.upstream.resize(layer.inputs(), 0.0);
            if net.lut_connection_count() > 0 {
                self.probes.resize_with(layer.inputs(), Vec::new);
                for (s, &x) in inputs.iter().enumerate() {
                    probes_for(x, hp, &self.offsets, &mut self.probes[s]);
                }
            }
            let (lower, upper) = errors.deltas.split_at_mut(l);
            for (d, &delta) in upper[0].iter().enumerate() {
                if delta == 0.0 {
                    continue;
                }
                for s in 0..layer.inputs() {
                    let slope = match layer.weight(d, s) {
                        Weight::Linear { w_s } => *w_s,
                        Weight::Lut(w) => w.w_l + probed_slope(&w.lut, &self.probes[s]),
                    };
                    self.upstream[s] += delta * slope;
                }
            }
            for ((delta, &g), &y) in lower[l - 1].iter_mut().zip(&self.upstream).zip(inputs) {
                *delta = g * (1.0 - y * y);
            }
        }
        Ok(())
    }
}

/// Backpropagates the error of one sample through a network. `trace` must
/// come from a forward pass of the same network.
pub fn backprop(net: &Network, trace: &ForwardTrace, target: &[f64]) -> Result<ConnectionErrors> {
    let mut errors = ConnectionErrors::default();
    Backprop::new(net.hyperparameters())?.run(net, trace, target, &mut errors)?;
    Ok(errors)
}

/// New weight of a linear connection: `R_d(w_s - R_s(w_s, mu e I))`.
#[inline]
pub fn update_linear(w_s: f64, e: f64, input: f64, hp: &Hyperparameters) -> f64 {
    let dw = -reg::gain_decay(w_s, hp.mu * e * input, hp);
    reg::decay(w_s + dw, hp)
}

/// New linear component of a LUT connection: `R_d(w_l - nu R_s(w_l, mu e I))`.
#[inline]
pub fn update_linear_component(w_l: f64, e: f64, input: f64, hp: &Hyperparameters) -> f64 {
    let dw = -reg::gain_decay(w_l, hp.mu * e * input, hp);
    reg::decay(w_l + hp.nu * dw, hp)
}

/// Moves the interpolated LUT value at `pos` by `-R_s(r(w_r, I), mu e)`; with
/// an open gate the touched entries are then decayed by `1 - s_b`.
#[inline]
pub fn update_lut_component(lut: &mut LutTable, e: f64, pos: GridPos, hp: &Hyperparameters, gate: RegGate) -> Touched {
    let dw = -reg::gain_decay(lut.at(pos), hp.mu * e, hp);
    let touched = lut.add_at(pos, dw);
    if gate.is_open() {
        lut.scale_touched(touched, 1.0 - hp.s_b);
    }
    touched
}

/// Reusable state for single training iterations on one network.
#[derive(Debug, Clone)]
pub struct Stepper {
    backprop: Backprop,
    trace: ForwardTrace,
    errors: ConnectionErrors,
}

impl Stepper {
    pub fn new(net: &Network) -> Result<Self> {
        Ok(Self {
            backprop: Backprop::new(net.hyperparameters())?,
            trace: net.new_trace(),
            errors: ConnectionErrors::default(),
        })
    }

    pub fn trace(&self) -> &ForwardTrace {
        &self.trace
    }

    pub fn errors(&self) -> &ConnectionErrors {
        &self.errors
    }

    /// Runs one on-line training iteration and returns the squared error
    /// `sum (y - d)^2` of the sample before the update.
    pub fn train_iteration<R: Rng + ?Sized>(&mut self, net: &mut Network, args: &[f64], target: &[f64], rng: &mut R) -> Result<f64> {
        net.forward_into(args, &mut self.trace)?;
        self.backprop.run(net, &self.trace, target, &mut self.errors)?;
        let squared: f64 = self.trace.output().iter().zip(target).map(|(y, d)| (y - d) * (y - d)).sum();

        let (hp, decay, layers) = net.split_mut();
        for (idx, layer) in layers.iter_mut().enumerate() {
            let l = idx + 1;
            let inputs = &self.trace.activations[l - 1];
            let positions = &self.trace.positions[idx];
            let deltas = &self.errors.deltas[l];
            let n_in = layer.inputs();
            let (weights, bias) = layer.parts_mut();
            for (d, &e) in deltas.iter().enumerate() {
                let row = &mut weights[d * n_in..(d + 1) * n_in];
                for (s, weight) in row.iter_mut().enumerate() {
                    let x = inputs[s];
                    match weight {
                        Weight::Linear { w_s } => *w_s = update_linear(*w_s, e, x, hp),
                        Weight::Lut(LutWeight { w_l, lut, visits }) => {
                            let pos = positions[s];
                            let gate = reg::should_regularize(rng, hp);
                            *w_l = update_linear_component(*w_l, e, x, hp);
                            update_lut_component(lut, e, pos, hp, gate);
                            visits.update(pos, decay, hp);
                            if gate.is_open() {
                                visits.diffuse_with_lut(lut.values_mut(), decay, hp);
                            }
                        }
                    }
                }
                bias[d] = update_linear(bias[d], e, crate::network::BIAS_OUTPUT, hp);
            }
        }
        Ok(squared)
    }
}
