//! Per-iteration timing and linear cost fits.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hyper::Hyperparameters;
use crate::network::{Architecture, NetKind, Network};
use crate::rng::{SeededRng, STREAM_DATA, STREAM_GATES};
use crate::session::init_network;
use crate::train::Stepper;

/// Random samples cycled through while timing.
const POOL: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Forward pass only.
    Forward,
    /// Full training iteration.
    Train,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Forward => "forward",
            Phase::Train => "train",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    /// Iterations per timed repetition.
    pub iterations: usize,
    /// Timed repetitions; the median is reported.
    pub reps: usize,
    /// Untimed iterations run before the first repetition.
    pub warmup: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { iterations: 2000, reps: 7, warmup: 500, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub kind: NetKind,
    pub arch: Architecture,
    pub connections: usize,
    pub r_res: usize,
    pub phase: Phase,
    pub ms_per_iter: f64,
}

/// Least-squares line `a + b n` of time in milliseconds against connection count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchFit {
    pub a: f64,
    pub b: f64,
}

impl BenchFit {
    /// Fits `(n, ms)` points; needs at least four distinct `n`.
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 4 {
            return Err(Error::InvalidData("a cost fit needs at least four distinct connection counts".into()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let b = sxy / sxx;
        Ok(Self { a: my - b * mx, b })
    }

    pub fn eval(&self, n: f64) -> f64 {
        self.a + self.b * n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub forward: BenchFit,
    pub train: BenchFit,
}

/// A network under measurement with its sample pool and gate stream.
struct Subject {
    net: Network,
    stepper: Stepper,
    pool: Vec<(Vec<f64>, Vec<f64>)>,
    gates: SeededRng,
    next: usize,
}

impl Subject {
    fn new(arch: &Architecture, kind: NetKind, hp: Hyperparameters, seed: u64) -> Result<Self> {
        let net = init_network(arch.clone(), kind, hp, seed)?;
        let mut rng = SeededRng::new(seed, STREAM_DATA);
        let pool = (0..POOL)
            .map(|_| {
                let x = (0..arch.inputs()).map(|_| rng.random_range(-0.5..0.5)).collect();
                let d = (0..arch.outputs()).map(|_| rng.random_range(-0.5..0.5)).collect();
                (x, d)
            })
            .collect();
        Ok(Self {
            stepper: Stepper::new(&net)?,
            net,
            pool,
            gates: SeededRng::new(seed, STREAM_GATES),
            next: 0,
        })
    }

    fn run(&mut self, phase: Phase, iterations: usize) -> Result<()> {
        let mut trace = self.net.new_trace();
        for _ in 0..iterations {
            let (x, d) = &self.pool[self.next];
            self.next = (self.next + 1) % self.pool.len();
            match phase {
                Phase::Forward => {
                    self.net.forward_into(black_box(x), &mut trace)?;
                    black_box(trace.output());
                }
                Phase::Train => {
                    black_box(self.stepper.train_iteration(&mut self.net, x, d, &mut self.gates)?);
                }
            }
        }
        Ok(())
    }

    /// Milliseconds per iteration of one timed repetition.
    fn time(&mut self, phase: Phase, iterations: usize) -> Result<f64> {
        let start = Instant::now();
        self.run(phase, iterations)?;
        Ok(start.elapsed().as_secs_f64() * 1e3 / iterations as f64)
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median time per iteration of every subject, measuring the subjects in
/// turn within each repetition so that drift affects all of them alike.
fn measure(subjects: &mut [Subject], phase: Phase, cfg: &BenchConfig) -> Result<Vec<f64>> {
    if cfg.iterations == 0 || cfg.reps == 0 {
        return Err(Error::InvalidData("benchmarks need at least one iteration and one repetition".into()));
    }
    for s in subjects.iter_mut() {
        s.run(phase, cfg.warmup)?;
    }
    let mut samples = vec![Vec::with_capacity(cfg.reps); subjects.len()];
    for _ in 0..cfg.reps {
        for (s, times) in subjects.iter_mut().zip(&mut samples) {
            times.push(s.time(phase, cfg.iterations)?);
        }
    }
    Ok(samples.into_iter().map(median).collect())
}

fn rows_for(subjects: &[Subject], phase: Phase, times: &[f64]) -> Vec<BenchRow> {
    subjects
        .iter()
        .zip(times)
        .map(|(s, &ms)| BenchRow {
            kind: s.net.kind(),
            arch: s.net.architecture().clone(),
            connections: s.net.connection_count(),
            r_res: s.net.hyperparameters().r_res,
            phase,
            ms_per_iter: ms,
        })
        .collect()
}

/// Times forward and training iterations of each architecture and fits the
/// cost against connection count.
pub fn bench_iterations(archs: &[Architecture], kind: NetKind, hp: Hyperparameters, cfg: &BenchConfig) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for phase in [Phase::Forward, Phase::Train] {
        let mut subjects = archs
            .iter()
            .map(|a| Subject::new(a, kind, hp, cfg.seed))
            .collect::<Result<Vec<_>>>()?;
        let times = measure(&mut subjects, phase, cfg)?;
        let phase_rows = rows_for(&subjects, phase, &times);
        let points: Vec<(f64, f64)> = phase_rows.iter().map(|r| (r.connections as f64, r.ms_per_iter)).collect();
        fits.push(BenchFit::fit(&points)?);
        rows.extend(phase_rows);
    }
    Ok(BenchReport { rows, forward: fits[0], train: fits[1] })
}

/// Times one architecture at several LUT resolutions.
pub fn bench_r_res(arch: &Architecture, hp: Hyperparameters, resolutions: &[usize], phase: Phase, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut subjects = resolutions
        .iter()
        .map(|&r_res| Subject::new(arch, NetKind::Nlw, Hyperparameters { r_res, ..hp }, cfg.seed))
        .collect::<Result<Vec<_>>>()?;
    let times = measure(&mut subjects, phase, cfg)?;
    Ok(rows_for(&subjects, phase, &times))
}

/// Writes rows as CSV with columns `kind,arch,connections,r_res,phase,ms_per_iter`.
pub fn write_csv(rows: &[BenchRow], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "kind,arch,connections,r_res,phase,ms_per_iter").expect("writing to a vector");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.kind, r.arch, r.connections, r.r_res, r.phase, r.ms_per_iter)
            .expect("writing to a vector");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = [3.0, 10.0, 40.0, 100.0].iter().map(|&n| (n, 0.2 + 0.05 * n)).collect();
        let fit = BenchFit::fit(&pts).unwrap();
        assert!((fit.a - 0.2).abs() < 1e-12 && (fit.b - 0.05).abs() < 1e-12);
        assert!((fit.eval(20.0) - 1.2).abs() < 1e-12);
        assert!(BenchFit::fit(&pts[..3]).is_err());
        let repeated = [(1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (3.0, 3.0)];
        assert!(BenchFit::fit(&repeated).is_err());
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn small_bench_produces_one_row_per_arch_and_phase() {
        let archs: Vec<Architecture> = ["2-1", "2-4-1", "2-8-8-1", "2-16-16-1"]
            .iter()
            .map(|s| Architecture::parse(s, None).unwrap())
            .collect();
        let cfg = BenchConfig { iterations: 50, reps: 3, warmup: 10, seed: 1 };
        let report = bench_iterations(&archs, NetKind::Lw, Hyperparameters::lw(), &cfg).unwrap();
        assert_eq!(report.rows.len(), 8);
        assert!(report.rows.iter().all(|r| r.ms_per_iter > 0.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.csv");
        write_csv(&report.rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().nth(1).unwrap().starts_with("LW,2-1,3,64,forward,"));
    }
}
