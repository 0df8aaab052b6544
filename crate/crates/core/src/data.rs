//! Samples, datasets, benchmark generators and CSV ingestion.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SeededRng, STREAM_DATA};

/// Target value of the positive class in the binary and one-hot encodings.
pub const POSITIVE: f64 = 0.5;
/// Target value of the negative class.
pub const NEGATIVE: f64 = -0.5;

/// First token of the comment line that marks a native dataset file.
const NATIVE_MARKER: &str = "# nlw-dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub args: Vec<f64>,
    pub vals: Vec<f64>,
}

/// How class labels map to value attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassEncoding {
    /// Two classes on one output: class 0 is `-0.5`, class 1 is `+0.5`.
    Sign,
    /// One output per class, `+0.5` for the true class and `-0.5` elsewhere.
    OneHot,
    /// One output holding `-0.5 + c / (k - 1)` for class `c` of `k`.
    Levels,
}

impl ClassEncoding {
    pub fn value_dim(self, classes: usize) -> usize {
        match self {
            ClassEncoding::OneHot => classes,
            ClassEncoding::Sign | ClassEncoding::Levels => 1,
        }
    }

    pub fn encode(self, class: usize, classes: usize) -> Vec<f64> {
        match self {
            ClassEncoding::Sign => vec![if class == 1 { POSITIVE } else { NEGATIVE }],
            ClassEncoding::OneHot => (0..classes).map(|c| if c == class { POSITIVE } else { NEGATIVE }).collect(),
            ClassEncoding::Levels => vec![level(class, classes)],
        }
    }

    /// Predicted class of a network output, or `None` when the output does
    /// not pick a class (a zero output under the sign rule).
    pub fn decode(self, outputs: &[f64], classes: usize) -> Option<usize> {
        match self {
            ClassEncoding::Sign => {
                let y = outputs[0];
                if y > 0.0 {
                    Some(1)
                } else if y < 0.0 {
                    Some(0)
                } else {
                    None
                }
            }
            ClassEncoding::OneHot => {
                let mut best = 0;
                for (c, &y) in outputs.iter().enumerate() {
                    if y > outputs[best] {
                        best = c;
                    }
                }
                Some(best)
            }
            ClassEncoding::Levels => {
                let y = outputs[0];
                let mut best = 0;
                for c in 1..classes {
                    if (y - level(c, classes)).abs() < (y - level(best, classes)).abs() {
                        best = c;
                    }
                }
                Some(best)
            }
        }
    }
}

fn level(class: usize, classes: usize) -> f64 {
    if classes < 2 {
        0.0
    } else {
        NEGATIVE + class as f64 / (classes - 1) as f64
    }
}

impl fmt::Display for ClassEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassEncoding::Sign => "sign",
            ClassEncoding::OneHot => "one-hot",
            ClassEncoding::Levels => "levels",
        })
    }
}

impl FromStr for ClassEncoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sign" => Ok(ClassEncoding::Sign),
            "one-hot" | "onehot" => Ok(ClassEncoding::OneHot),
            "levels" => Ok(ClassEncoding::Levels),
            other => Err(Error::InvalidData(format!(
                "unknown class encoding {other:?} (expected sign, one-hot or levels)"
            ))),
        }
    }
}

/// Class labels of a classification dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classes {
    pub names: Vec<String>,
    pub encoding: ClassEncoding,
    /// Class index of every sample.
    pub labels: Vec<usize>,
}

/// Per-attribute min-max scaling into `[-0.5, 0.5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Scaling {
    pub fn fit(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut min = vec![f64::INFINITY; ds.arg_dim];
        let mut max = vec![f64::NEG_INFINITY; ds.arg_dim];
        for s in &ds.samples {
            for (k, &x) in s.args.iter().enumerate() {
                min[k] = min[k].min(x);
                max[k] = max[k].max(x);
            }
        }
        Ok(Self { min, max })
    }

    /// Scaled value of attribute `k`; constant attributes map to 0.
    pub fn scale(&self, k: usize, x: f64) -> f64 {
        let (lo, hi) = (self.min[k], self.max[k]);
        if hi > lo {
            NEGATIVE + (x - lo) / (hi - lo)
        } else {
            0.0
        }
    }

    /// Scales `ds` in place and records the parameters on it.
    pub fn apply(&self, ds: &mut Dataset) -> Result<()> {
        if self.min.len() != ds.arg_dim {
            return Err(Error::DimensionMismatch {
                expected: self.min.len(),
                actual: ds.arg_dim,
            });
        }
        for s in &mut ds.samples {
            for (k, x) in s.args.iter_mut().enumerate() {
                *x = self.scale(k, *x);
            }
        }
        ds.scaling = Some(self.clone());
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub arg_dim: usize,
    pub val_dim: usize,
    pub classes: Option<Classes>,
    /// Generator name and parameters, or the source file.
    pub provenance: String,
    pub scaling: Option<Scaling>,
}

impl Dataset {
    /// Builds a dataset, checking that all samples share the given dimensions.
    pub fn new(samples: Vec<Sample>, arg_dim: usize, val_dim: usize, provenance: impl Into<String>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.args.len() != arg_dim || s.vals.len() != val_dim {
                return Err(Error::InvalidData(format!(
                    "sample {i} has {} args and {} values, expected {arg_dim} and {val_dim}",
                    s.args.len(),
                    s.vals.len()
                )));
            }
        }
        Ok(Self {
            samples,
            arg_dim,
            val_dim,
            classes: None,
            provenance: provenance.into(),
            scaling: None,
        })
    }

    /// Attaches class labels; the label count must match the sample count.
    pub fn with_classes(mut self, classes: Classes) -> Result<Self> {
        if classes.labels.len() != self.samples.len() {
            return Err(Error::InvalidData("one class label per sample is required".into()));
        }
        if classes.encoding.value_dim(classes.names.len()) != self.val_dim {
            return Err(Error::InvalidData("class encoding does not match the value dimension".into()));
        }
        self.classes = Some(classes);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples at `indices`, in that order, with labels and scaling carried over.
    pub fn subset(&self, indices: &[usize], provenance: impl Into<String>) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            arg_dim: self.arg_dim,
            val_dim: self.val_dim,
            classes: self.classes.as_ref().map(|c| Classes {
                names: c.names.clone(),
                encoding: c.encoding,
                labels: indices.iter().map(|&i| c.labels[i]).collect(),
            }),
            provenance: provenance.into(),
            scaling: self.scaling.clone(),
        }
    }

    /// Writes the dataset as CSV with a one-line provenance comment that
    /// [`load_dataset`] reads back.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        let encoding = self.classes.as_ref().map_or("none".to_string(), |c| c.encoding.to_string());
        let class_names = self.classes.as_ref().map_or(String::new(), |c| format!(" classes={}", c.names.join(";")));
        writeln!(
            out,
            "{NATIVE_MARKER} args={} vals={} encoding={encoding}{class_names} source={}",
            self.arg_dim,
            self.val_dim,
            self.provenance.replace(char::is_whitespace, "_")
        )
        .expect("writing to a vector");
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = (0..self.arg_dim)
            .map(|k| format!("x{k}"))
            .chain((0..self.val_dim).map(|k| format!("y{k}")))
            .collect();
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for s in &self.samples {
            let row: Vec<String> = s.args.iter().chain(&s.vals).map(|v| v.to_string()).collect();
            w.write_record(&row).map_err(|e| csv_error(path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

/// Which column holds the target and how it is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Target {
    /// A class label column, encoded with the given rule.
    Class(ClassEncoding),
    /// A numeric value column.
    Value,
}

/// Layout of an external CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub has_header: bool,
    /// Zero-based target column; `None` selects the last column.
    pub target_column: Option<usize>,
    pub target: Target,
    /// Zero-based argument columns holding categories, one-hot encoded.
    pub categorical: Vec<usize>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            has_header: true,
            target_column: None,
            target: Target::Class(ClassEncoding::OneHot),
            categorical: Vec::new(),
        }
    }
}

/// Reads `path` as a native dataset if it starts with the provenance comment
/// written by [`Dataset::write_csv`], and as an external CSV described by
/// `schema` otherwise.
pub fn load_dataset(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.starts_with(NATIVE_MARKER) {
        parse_native(path, &text)
    } else {
        parse_csv(path, &text, schema)
    }
}

/// Reads an external CSV file described by `schema`.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(path, &text, schema)
}

/// Rows of a CSV text as `(line, fields)`, skipping `#` comments.
fn read_rows(path: &Path, text: &str, has_header: bool) -> Result<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn parse_number(path: &Path, line: u64, column: usize, cell: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("column {}: {cell:?} is not a finite number", column + 1),
        }),
    }
}

fn parse_csv(path: &Path, text: &str, schema: &CsvSchema) -> Result<Dataset> {
    let rows = read_rows(path, text, schema.has_header)?;
    let Some((_, first)) = rows.first() else {
        return Err(Error::EmptyDataset);
    };
    let width = first.len();
    if width < 2 {
        return Err(Error::InvalidData(format!("{}: need at least two columns", path.display())));
    }
    for (line, row) in &rows {
        if row.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: *line,
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
    }
    let target = schema.target_column.unwrap_or(width - 1);
    if target >= width {
        return Err(Error::InvalidData(format!("target column {} out of range", target + 1)));
    }
    if let Some(&c) = schema.categorical.iter().find(|&&c| c >= width || c == target) {
        return Err(Error::InvalidData(format!("categorical column {} is not an argument column", c + 1)));
    }
    let arg_columns: Vec<usize> = (0..width).filter(|&c| c != target).collect();

    // sorted category lists keep the encoding independent of row order
    let categories: Vec<Option<Vec<String>>> = arg_columns
        .iter()
        .map(|c| {
            schema.categorical.contains(c).then(|| {
                let set: BTreeSet<&str> = rows.iter().map(|(_, r)| r[*c].as_str()).collect();
                set.into_iter().map(str::to_string).collect()
            })
        })
        .collect();
    let arg_dim: usize = categories.iter().map(|c| c.as_ref().map_or(1, Vec::len)).sum();

    let mut samples = Vec::with_capacity(rows.len());
    let mut labels = Vec::new();
    let class_names: Vec<String> = match schema.target {
        Target::Class(_) => {
            let set: BTreeSet<&str> = rows.iter().map(|(_, r)| r[target].as_str()).collect();
            set.into_iter().map(str::to_string).collect()
        }
        Target::Value => Vec::new(),
    };
    if let Target::Class(encoding) = schema.target {
        if class_names.len() < 2 {
            return Err(Error::InvalidData("a class column needs at least two classes".into()));
        }
        if encoding == ClassEncoding::Sign && class_names.len() != 2 {
            return Err(Error::InvalidData(format!(
                "sign encoding needs exactly two classes, found {}",
                class_names.len()
            )));
        }
    }
    for (line, row) in &rows {
        let mut args = Vec::with_capacity(arg_dim);
        for (&c, cats) in arg_columns.iter().zip(&categories) {
            match cats {
                Some(names) => args.extend(names.iter().map(|n| if *n == row[c] { POSITIVE } else { NEGATIVE })),
                None => args.push(parse_number(path, *line, c, &row[c])?),
            }
        }
        let vals = match schema.target {
            Target::Class(encoding) => {
                let class = class_names.iter().position(|n| *n == row[target]).expect("collected above");
                labels.push(class);
                encoding.encode(class, class_names.len())
            }
            Target::Value => vec![parse_number(path, *line, target, &row[target])?],
        };
        samples.push(Sample { args, vals });
    }
    let val_dim = samples[0].vals.len();
    let ds = Dataset::new(samples, arg_dim, val_dim, path.display().to_string())?;
    match schema.target {
        Target::Class(encoding) => ds.with_classes(Classes {
            names: class_names,
            encoding,
            labels,
        }),
        Target::Value => Ok(ds),
    }
}

fn parse_native(path: &Path, text: &str) -> Result<Dataset> {
    let header = text.lines().next().unwrap_or_default();
    let bad = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message,
    };
    let mut args = None;
    let mut vals = None;
    let mut encoding = None;
    let mut names = None;
    let mut source = String::new();
    for field in header[NATIVE_MARKER.len()..].split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("malformed field {field:?}")))?;
        match key {
            "args" => args = Some(value.parse::<usize>().map_err(|_| bad(format!("bad args {value:?}")))?),
            "vals" => vals = Some(value.parse::<usize>().map_err(|_| bad(format!("bad vals {value:?}")))?),
            "encoding" if value == "none" => {}
            "encoding" => encoding = Some(value.parse::<ClassEncoding>().map_err(|e| bad(e.to_string()))?),
            "classes" => names = Some(value.split(';').map(str::to_string).collect::<Vec<_>>()),
            "source" => source = value.to_string(),
            _ => {}
        }
    }
    let (Some(arg_dim), Some(val_dim)) = (args, vals) else {
        return Err(bad("missing args or vals".into()));
    };
    let mut samples = Vec::new();
    for (line, row) in read_rows(path, text, true)? {
        if row.len() != arg_dim + val_dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", arg_dim + val_dim, row.len()),
            });
        }
        let mut numbers = Vec::with_capacity(row.len());
        for (c, cell) in row.iter().enumerate() {
            numbers.push(parse_number(path, line, c, cell)?);
        }
        let vals = numbers.split_off(arg_dim);
        samples.push(Sample { args: numbers, vals });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ds = Dataset::new(samples, arg_dim, val_dim, source)?;
    match encoding {
        None => Ok(ds),
        Some(encoding) => {
            let names = names.unwrap_or_else(|| match encoding {
                ClassEncoding::Sign => vec!["negative".into(), "positive".into()],
                _ => (0..val_dim).map(|c| c.to_string()).collect(),
            });
            let k = names.len();
            let labels = ds
                .samples
                .iter()
                .map(|s| encoding.decode(&s.vals, k).unwrap_or(0))
                .collect();
            ds.with_classes(Classes { names, encoding, labels })
        }
    }
}

/// Min-max scales every argument attribute into `[-0.5, 0.5]` and records
/// the parameters for reuse on test data.
pub fn scale_args(mut ds: Dataset) -> Result<Dataset> {
    Scaling::fit(&ds)?.apply(&mut ds)?;
    Ok(ds)
}

/// Seeded shuffle followed by a split into `ceil(fraction * n)` training
/// samples and the rest.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidData(format!("train fraction {train_fraction} not in (0, 1)")));
    }
    let n = ds.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeededRng::new(seed, STREAM_DATA));
    // the slack keeps products such as 0.8 * 150 from rounding up past the integer
    let n_train = ((train_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let (train, test) = order.split_at(n_train.min(n));
    Ok((
        ds.subset(train, format!("{} train split seed={seed}", ds.provenance)),
        ds.subset(test, format!("{} test split seed={seed}", ds.provenance)),
    ))
}

fn binary_classes(samples: &[Sample]) -> Classes {
    Classes {
        names: vec!["negative".into(), "positive".into()],
        encoding: ClassEncoding::Sign,
        labels: samples.iter().map(|s| usize::from(s.vals[0] > 0.0)).collect(),
    }
}

fn binary_dataset(samples: Vec<Sample>, provenance: String) -> Dataset {
    let classes = binary_classes(&samples);
    Dataset::new(samples, 2, 1, provenance)
        .and_then(|d| d.with_classes(classes))
        .expect("generated samples are consistent")
}

/// Radius of the disk drawn by [`gen_circle`].
pub const CIRCLE_RADIUS: f64 = 0.3;

/// Image sets produced by [`gen_circle`].
#[derive(Debug, Clone)]
pub struct CircleSets {
    /// The seeded sample of pixels used for training.
    pub train: Dataset,
    /// Every pixel, row by row.
    pub full: Dataset,
    /// The pixels not in `train`.
    pub held_out: Dataset,
}

/// A `resolution x resolution` image of a centred disk of radius 0.3 over
/// `[-0.5, 0.5]^2` (`+0.5` inside, `-0.5` outside), with a seeded random
/// subset of `fraction` of the pixels kept for training.
pub fn gen_circle(resolution: usize, seed: u64, fraction: f64) -> Result<CircleSets> {
    if resolution < 8 {
        return Err(Error::InvalidData(format!("circle resolution {resolution} is below 8")));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidData(format!("sampling fraction {fraction} not in (0, 1]")));
    }
    let step = 1.0 / (resolution - 1) as f64;
    let mut samples = Vec::with_capacity(resolution * resolution);
    for row in 0..resolution {
        for col in 0..resolution {
            let x = -0.5 + col as f64 * step;
            let y = -0.5 + row as f64 * step;
            let inside = x * x + y * y < CIRCLE_RADIUS * CIRCLE_RADIUS;
            samples.push(Sample {
                args: vec![x, y],
                vals: vec![if inside { POSITIVE } else { NEGATIVE }],
            });
        }
    }
    let n = samples.len();
    let full = binary_dataset(samples, format!("circle resolution={resolution}"));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut SeededRng::new(seed, STREAM_DATA));
    let keep = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut train_idx = order[..keep].to_vec();
    let mut held_idx = order[keep..].to_vec();
    train_idx.sort_unstable();
    held_idx.sort_unstable();
    let tag = format!("circle resolution={resolution} seed={seed} fraction={fraction}");
    Ok(CircleSets {
        train: full.subset(&train_idx, format!("{tag} part=train")),
        held_out: full.subset(&held_idx, format!("{tag} part=held-out")),
        full,
    })
}

/// Points per spiral arm.
pub const SPIRAL_POINTS: usize = 97;

/// Point `i` of spiral arm A, before scaling.
fn spiral_point(i: usize) -> (f64, f64) {
    let phi = i as f64 * std::f64::consts::PI / 16.0;
    let rho = 6.5 * (104 - i) as f64 / 104.0;
    (rho * phi.sin(), rho * phi.cos())
}

/// The two-spirals set: 97 points per arm, arm B the point reflection of arm
/// A, scaled by 1/13 into `[-0.5, 0.5]^2`. Samples alternate A0, B0, A1, ...
pub fn gen_two_spirals() -> Dataset {
    spirals(|_, _| true, "spirals")
}

/// Two spirals with every odd point of arm A and every even point of arm B
/// removed, counting from the inner end.
pub fn gen_two_spirals_sparse() -> Dataset {
    spirals(|arm_a, i| (i % 2 == 0) == arm_a, "spirals-sparse")
}

fn spirals(keep: impl Fn(bool, usize) -> bool, name: &str) -> Dataset {
    let mut samples = Vec::new();
    for i in 0..SPIRAL_POINTS {
        let (x, y) = spiral_point(i);
        let (x, y) = (x / 13.0, y / 13.0);
        if keep(true, i) {
            samples.push(Sample { args: vec![x, y], vals: vec![POSITIVE] });
        }
        if keep(false, i) {
            samples.push(Sample { args: vec![-x, -y], vals: vec![NEGATIVE] });
        }
    }
    binary_dataset(samples, name.to_string())
}

/// The five-argument md-2 generating function.
pub fn md2(x: &[f64; 5]) -> f64 {
    let bump = |t: f64| ((t.sin() + 1.0) / 2.0).sqrt() - 0.5;
    (4.0 * x[0]).sin()
        * (2.0 * x[1] + 3.0 * x[2]).cos()
        * bump(10.0 * x[2] + 10.0 * x[3])
        * (x[3] - 4.0 * x[1] * x[4]).sin()
        * bump(10.0 * x[0] - 10.0 * x[2] + 10.0 * x[3])
        * (5.0 * x[1] * x[2] * x[4]).cos()
}

/// `n` md-2 samples with arguments uniform in `[-0.5, 0.5)`.
pub fn gen_md2(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = SeededRng::new(seed, STREAM_DATA);
    let samples = (0..n)
        .map(|_| {
            let x: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>() - 0.5);
            Sample { args: x.to_vec(), vals: vec![md2(&x)] }
        })
        .collect();
    Dataset::new(samples, 5, 1, format!("md2 n={n} seed={seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_examples() {
        let sets = gen_circle(64, 3, 0.15).unwrap();
        assert_eq!(sets.full.len(), 4096);
        assert_eq!(sets.train.len() + sets.held_out.len(), 4096);
        assert_eq!(sets.train.len(), 614);
        let corner = &sets.full.samples[0];
        assert_eq!(corner.args, vec![-0.5, -0.5]);
        assert_eq!(corner.vals, vec![NEGATIVE]);
        let last = &sets.full.samples[4095];
        assert_eq!(last.args, vec![0.5, 0.5]);
        // resolution 65 puts a pixel exactly on the centre
        let odd = gen_circle(65, 3, 0.15).unwrap();
        let centre = &odd.full.samples[32 * 65 + 32];
        assert_eq!(centre.args, vec![0.0, 0.0]);
        assert_eq!(centre.vals, vec![POSITIVE]);
        assert!(gen_circle(7, 3, 0.15).is_err());
    }

    #[test]
    fn circle_mask_is_seeded() {
        let a = gen_circle(16, 1, 0.3).unwrap();
        let b = gen_circle(16, 1, 0.3).unwrap();
        let c = gen_circle(16, 2, 0.3).unwrap();
        assert_eq!(a.train, b.train);
        assert_ne!(a.train.samples, c.train.samples);
    }

    #[test]
    fn spirals_examples() {
        let ds = gen_two_spirals();
        assert_eq!(ds.len(), 194);
        assert_eq!(ds.samples[0].args, vec![0.0, 0.5]);
        for pair in ds.samples.chunks(2) {
            assert_eq!(pair[1].args, vec![-pair[0].args[0], -pair[0].args[1]]);
            assert_eq!((pair[0].vals[0], pair[1].vals[0]), (POSITIVE, NEGATIVE));
        }
        let labels = &ds.classes.as_ref().unwrap().labels;
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 97);
    }

    #[test]
    fn sparse_spirals_examples() {
        let ds = gen_two_spirals_sparse();
        assert_eq!(ds.len(), 97);
        let full = gen_two_spirals();
        let a: Vec<_> = ds.samples.iter().filter(|s| s.vals[0] > 0.0).collect();
        let b: Vec<_> = ds.samples.iter().filter(|s| s.vals[0] < 0.0).collect();
        assert_eq!((a.len(), b.len()), (49, 48));
        for (k, s) in a.iter().enumerate() {
            assert_eq!(s.args, full.samples[2 * (2 * k)].args);
        }
        for (k, s) in b.iter().enumerate() {
            assert_eq!(s.args, full.samples[2 * (2 * k + 1) + 1].args);
        }
    }

    #[test]
    fn md2_examples() {
        assert_eq!(md2(&[0.0; 5]), 0.0);
        assert_eq!(md2(&[0.0, 0.3, -0.1, 0.2, 0.4]), 0.0);
        // high-precision reference value
        let y = md2(&[0.25, 0.1, -0.2, 0.3, 0.0]);
        assert!((y - 0.050_983_720_168_712_39).abs() < 1e-15, "{y}");
        let a = gen_md2(100, 7).unwrap();
        assert_eq!(a, gen_md2(100, 7).unwrap());
        assert!(a.samples.iter().all(|s| s.args.iter().all(|x| (-0.5..0.5).contains(x))));
        assert!(gen_md2(0, 7).is_err());
    }

    #[test]
    fn scaling_examples() {
        let samples = vec![
            Sample { args: vec![-0.5, 7.0, 0.0], vals: vec![0.0] },
            Sample { args: vec![0.5, 7.0, 10.0], vals: vec![0.0] },
            Sample { args: vec![0.25, 7.0, 5.0], vals: vec![0.0] },
        ];
        let ds = scale_args(Dataset::new(samples, 3, 1, "t").unwrap()).unwrap();
        let cols: Vec<Vec<f64>> = (0..3).map(|k| ds.samples.iter().map(|s| s.args[k]).collect()).collect();
        assert_eq!(cols[0], vec![-0.5, 0.5, 0.25]);
        assert_eq!(cols[1], vec![0.0, 0.0, 0.0]);
        assert_eq!(cols[2], vec![-0.5, 0.5, 0.0]);
        let scaling = ds.scaling.unwrap();
        assert_eq!(scaling.scale(2, 20.0), 1.5);
    }

    #[test]
    fn split_examples() {
        let samples = (0..150).map(|i| Sample { args: vec![i as f64], vals: vec![0.0] }).collect();
        let ds = Dataset::new(samples, 1, 1, "t").unwrap();
        let (train, test) = split(&ds, 0.8, 4).unwrap();
        assert_eq!((train.len(), test.len()), (120, 30));
        assert_eq!(split(&ds, 0.8, 4).unwrap().0, train);
        let mut all: Vec<f64> = train.samples.iter().chain(&test.samples).map(|s| s.args[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..150).map(f64::from).collect::<Vec<_>>());
        assert!(split(&ds, 1.0, 4).is_err());
        let (t, _) = split(&ds, 0.333, 4).unwrap();
        assert_eq!(t.len(), 50);
    }

    #[test]
    fn encodings_round_trip() {
        for enc in [ClassEncoding::OneHot, ClassEncoding::Levels] {
            for c in 0..3 {
                assert_eq!(enc.decode(&enc.encode(c, 3), 3), Some(c));
            }
        }
        assert_eq!(ClassEncoding::Levels.encode(1, 3), vec![0.0]);
        assert_eq!(ClassEncoding::Sign.decode(&[0.0], 2), None);
        assert_eq!(ClassEncoding::Sign.decode(&[0.1], 2), Some(1));
        assert_eq!("one-hot".parse::<ClassEncoding>().unwrap(), ClassEncoding::OneHot);
    }
}
