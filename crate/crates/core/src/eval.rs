//! Metrics and rendering of two-argument networks to grayscale images.

use std::io::Write;
use std::path::Path;

use crate::data::{Dataset, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::network::Network;

fn check_dims(net: &Network, ds: &Dataset) -> Result<()> {
    let arch = net.architecture();
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if ds.arg_dim != arch.inputs() {
        return Err(Error::DimensionMismatch { expected: arch.inputs(), actual: ds.arg_dim });
    }
    if ds.val_dim != arch.outputs() {
        return Err(Error::DimensionMismatch { expected: arch.outputs(), actual: ds.val_dim });
    }
    Ok(())
}

/// Mean over samples of the mean squared output error.
pub fn mse(net: &Network, ds: &Dataset) -> Result<f64> {
    check_dims(net, ds)?;
    let mut trace = net.new_trace();
    let mut total = 0.0;
    for s in &ds.samples {
        net.forward_into(&s.args, &mut trace)?;
        let sq: f64 = trace.output().iter().zip(&s.vals).map(|(y, d)| (y - d) * (y - d)).sum();
        total += sq / s.vals.len() as f64;
    }
    Ok(total / ds.len() as f64)
}

/// Fraction of samples whose decoded output class equals the label.
pub fn accuracy(net: &Network, ds: &Dataset) -> Result<f64> {
    check_dims(net, ds)?;
    let classes = ds.classes.as_ref().ok_or(Error::NotClassification)?;
    let k = classes.names.len();
    let mut trace = net.new_trace();
    let mut correct = 0usize;
    for (s, &label) in ds.samples.iter().zip(&classes.labels) {
        net.forward_into(&s.args, &mut trace)?;
        if classes.encoding.decode(trace.output(), k) == Some(label) {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Row-major grid of values; pixel `(row, col)` is `values[row * width + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SurfaceImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    /// Gray levels: `-0.5` is black, `+0.5` white, clamped outside.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().map(|&v| gray(v)).collect()
    }
}

/// Gray level of a value, `round(clamp(v + 0.5, 0, 1) * 255)`.
pub fn gray(v: f64) -> u8 {
    ((v - NEGATIVE).clamp(0.0, POSITIVE - NEGATIVE) * 255.0).round() as u8
}

/// Grid coordinate of pixel `k` of `resolution`.
pub fn grid_coordinate(k: usize, resolution: usize) -> f64 {
    NEGATIVE + k as f64 / (resolution - 1) as f64
}

/// Evaluates a two-input, one-output network on a square grid over
/// `[-0.5, 0.5]^2`. Columns follow the first argument and rows the second,
/// with the upper-left pixel at `(-0.5, -0.5)`.
pub fn render_surface(net: &Network, resolution: usize) -> Result<SurfaceImage> {
    let arch = net.architecture();
    if arch.inputs() != 2 || arch.outputs() != 1 {
        return Err(Error::InvalidArchitecture(format!(
            "rendering needs 2 inputs and 1 output, the network is {arch}"
        )));
    }
    if resolution < 2 {
        return Err(Error::InvalidData(format!("resolution {resolution} is below 2")));
    }
    let mut trace = net.new_trace();
    let mut values = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        let y = grid_coordinate(row, resolution);
        for col in 0..resolution {
            net.forward_into(&[grid_coordinate(col, resolution), y], &mut trace)?;
            values.push(trace.output()[0]);
        }
    }
    Ok(SurfaceImage { width: resolution, height: resolution, values })
}

/// Writes a binary PGM (`P5`, maxval 255).
pub fn write_pgm(img: &SurfaceImage, path: &Path) -> Result<()> {
    if let Some(v) = img.values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("cannot render non-finite value {v}")));
    }
    let mut out = Vec::with_capacity(img.values.len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width, img.height).expect("writing to a vector");
    out.extend(img.to_bytes());
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a binary PGM written by [`write_pgm`]: `(width, height, bytes)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::InvalidData(format!("{}: {m}", path.display()));
    // the header is four whitespace-separated tokens followed by one whitespace byte
    let mut tokens = Vec::new();
    let mut pos = 0;
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        tokens.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("bad header"))?.to_string());
    }
    if tokens[0] != "P5" || tokens[3] != "255" {
        return Err(bad("not an 8-bit binary PGM"));
    }
    let width: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let height: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing pixel data"))?;
    if data.len() != width * height {
        return Err(bad("pixel count does not match the header"));
    }
    Ok((width, height, data.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ClassEncoding, Classes, Sample};
    use crate::network::{Architecture, NetKind, Weight};
    use crate::Hyperparameters;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// LW 2-1 computing `tanh(w0 x0 + w1 x1 + b)`.
    fn linear_net(w0: f64, w1: f64, b: f64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Network::init(Architecture::new(vec![2, 1]).unwrap(), NetKind::Lw, Hyperparameters::lw(), &mut rng).unwrap();
        *net.layer_mut(1).weight_mut(0, 0) = Weight::Linear { w_s: w0 };
        *net.layer_mut(1).weight_mut(0, 1) = Weight::Linear { w_s: w1 };
        net.layer_mut(1).bias_mut()[0] = b;
        net
    }

    fn binary(points: &[([f64; 2], f64)]) -> Dataset {
        let samples: Vec<Sample> = points.iter().map(|(x, v)| Sample { args: x.to_vec(), vals: vec![*v] }).collect();
        let labels = samples.iter().map(|s| usize::from(s.vals[0] > 0.0)).collect();
        Dataset::new(samples, 2, 1, "t")
            .unwrap()
            .with_classes(Classes { names: vec!["n".into(), "p".into()], encoding: ClassEncoding::Sign, labels })
            .unwrap()
    }

    #[test]
    fn mse_examples() {
        let zero = linear_net(0.0, 0.0, 0.0);
        let ds = binary(&[([0.1, 0.2], 0.5), ([0.3, -0.2], -0.5)]);
        assert_eq!(mse(&zero, &ds).unwrap(), 0.25);
        let y = 0.1f64;
        let net = linear_net(0.0, 0.0, y.atanh());
        let one = binary(&[([0.0, 0.0], 0.5)]);
        assert!((mse(&net, &one).unwrap() - 0.16).abs() < 1e-15);
        let empty = Dataset::new(vec![], 2, 1, "t").unwrap();
        assert!(matches!(mse(&net, &empty), Err(Error::EmptyDataset)));
    }

    #[test]
    fn accuracy_examples() {
        let ds = binary(&[([0.1, 0.0], 0.5), ([-0.1, 0.0], -0.5), ([0.2, 0.0], 0.5), ([0.3, 0.0], -0.5)]);
        assert_eq!(accuracy(&linear_net(0.0, 0.0, 1.0), &ds).unwrap(), 0.5);
        assert_eq!(accuracy(&linear_net(0.0, 0.0, 0.0), &ds).unwrap(), 0.0);
        let perfect = binary(&[([0.1, 0.0], 0.5), ([-0.1, 0.0], -0.5)]);
        assert_eq!(accuracy(&linear_net(3.0, 0.0, 0.0), &perfect).unwrap(), 1.0);
        let plain = Dataset::new(vec![Sample { args: vec![0.0, 0.0], vals: vec![0.0] }], 2, 1, "t").unwrap();
        assert!(matches!(accuracy(&linear_net(0.0, 0.0, 0.0), &plain), Err(Error::NotClassification)));
    }

    #[test]
    fn gray_levels() {
        assert_eq!(gray(-0.5), 0);
        assert_eq!(gray(-3.0), 0);
        assert_eq!(gray(0.5), 255);
        assert_eq!(gray(0.0), 128);
    }

    #[test]
    fn render_layout() {
        let constant = render_surface(&linear_net(0.0, 0.0, 0.2), 8).unwrap();
        assert!(constant.values.iter().all(|&v| v == constant.values[0]));
        let ramp = render_surface(&linear_net(0.0, 1.0, 0.0), 16).unwrap();
        for col in 0..16 {
            for row in 1..16 {
                assert!(ramp.get(row, col) > ramp.get(row - 1, col));
            }
            assert_eq!(ramp.get(0, col), (-0.5f64).tanh());
        }
        let across = render_surface(&linear_net(1.0, 0.0, 0.0), 16).unwrap();
        assert!(across.get(3, 15) > across.get(3, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let wide = Network::init(Architecture::new(vec![3, 1]).unwrap(), NetKind::Lw, Hyperparameters::lw(), &mut rng).unwrap();
        assert!(render_surface(&wide, 8).is_err());
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = SurfaceImage { width: 3, height: 2, values: vec![-0.5, 0.0, 0.5, 9.0, -9.0, 0.25] };
        write_pgm(&img, &path).unwrap();
        let (w, h, bytes) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(bytes, vec![0, 128, 255, 255, 0, 191]);
        assert_eq!(bytes, img.to_bytes());
        let nan = SurfaceImage { width: 1, height: 1, values: vec![f64::NAN] };
        assert!(write_pgm(&nan, &path).is_err());
    }
}
