//! Run configuration: built-in defaults, then a TOML file, then flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use nlw::data::{ClassEncoding, CsvSchema, Target};
use nlw::{Hyperparameters, NetKind};

use crate::CliError;

/// Optional value for every hyperparameter. Unset fields keep the defaults of
/// the network kind.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct HyperOverrides {
    /// Learning step
    #[arg(long)]
    pub mu: Option<f64>,
    /// Speed ratio of the linear components
    #[arg(long)]
    pub nu: Option<f64>,
    /// LUT resolution
    #[arg(long)]
    pub r_res: Option<usize>,
    #[arg(long)]
    pub i_min: Option<f64>,
    #[arg(long)]
    pub i_max: Option<f64>,
    #[arg(long)]
    pub a_l: Option<f64>,
    #[arg(long)]
    pub a_h: Option<f64>,
    #[arg(long)]
    pub a_m: Option<f64>,
    /// Probability of regularizing a LUT in an iteration
    #[arg(long)]
    pub zeta: Option<f64>,
    /// Smoothing level of the diffusion
    #[arg(long)]
    pub r_a: Option<f64>,
    /// Diffusion speed
    #[arg(long)]
    pub r_b: Option<f64>,
    /// Visit decay
    #[arg(long)]
    pub r_c: Option<f64>,
    /// Gain decay level
    #[arg(long)]
    pub s_a: Option<f64>,
    /// Weight decay rate
    #[arg(long)]
    pub s_b: Option<f64>,
    #[arg(long)]
    pub v_p: Option<f64>,
    #[arg(long)]
    pub v_min: Option<f64>,
}

impl HyperOverrides {
    /// Fields set in `other` win over fields set in `self`.
    pub fn merged(&self, other: &HyperOverrides) -> HyperOverrides {
        macro_rules! pick {
            ($($f:ident),*) => { HyperOverrides { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(mu, nu, r_res, i_min, i_max, a_l, a_h, a_m, zeta, r_a, r_b, r_c, s_a, s_b, v_p, v_min)
    }

    pub fn apply(&self, mut hp: Hyperparameters) -> Hyperparameters {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { hp.$f = v; } )* };
        }
        set!(mu, nu, r_res, i_min, i_max, a_l, a_h, a_m, zeta, r_a, r_b, r_c, s_a, s_b, v_p, v_min);
        hp
    }
}

/// Where a dataset comes from: a CSV file or a named generator.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    /// Dataset CSV file
    #[arg(long = "data", value_name = "PATH")]
    pub path: Option<PathBuf>,
    /// Generated dataset: circle, spirals, spirals-sparse or md2
    #[arg(long, value_name = "NAME", conflicts_with = "path")]
    pub generator: Option<String>,
    /// Sample count of the md2 generator
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the md2 generator or of the circle pixel sample
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// Image resolution of the circle generator
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Fraction of circle pixels kept for training
    #[arg(long)]
    pub fraction: Option<f64>,
    /// Circle part: train, held-out or full
    #[arg(long)]
    pub part: Option<String>,
    /// Class encoding of an external CSV: sign, one-hot or levels
    #[arg(long)]
    pub encoding: Option<String>,
    /// Treat the last column of an external CSV as a numeric value
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub regression: Option<bool>,
    /// External CSV has no header row
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_header: Option<bool>,
    /// Zero-based target column of an external CSV (default: last)
    #[arg(long)]
    pub target_column: Option<usize>,
    /// Zero-based categorical argument columns of an external CSV
    #[arg(long, value_delimiter = ',')]
    pub categorical: Option<Vec<usize>>,
}

impl DataSpec {
    pub fn merged(&self, other: &DataSpec) -> DataSpec {
        // a source named on one level replaces the source of the other
        let (path, generator) = if other.path.is_some() || other.generator.is_some() {
            (other.path.clone(), other.generator.clone())
        } else {
            (self.path.clone(), self.generator.clone())
        };
        DataSpec {
            path,
            generator,
            n: other.n.or(self.n),
            data_seed: other.data_seed.or(self.data_seed),
            resolution: other.resolution.or(self.resolution),
            fraction: other.fraction.or(self.fraction),
            part: other.part.clone().or_else(|| self.part.clone()),
            encoding: other.encoding.clone().or_else(|| self.encoding.clone()),
            regression: other.regression.or(self.regression),
            no_header: other.no_header.or(self.no_header),
            target_column: other.target_column.or(self.target_column),
            categorical: other.categorical.clone().or_else(|| self.categorical.clone()),
        }
    }

    pub fn is_set(&self) -> bool {
        self.path.is_some() || self.generator.is_some()
    }

    /// Resolves relative paths against `base`.
    pub fn relative_to(mut self, base: &Path) -> DataSpec {
        if let Some(p) = &self.path {
            if p.is_relative() {
                self.path = Some(base.join(p));
            }
        }
        self
    }

    pub fn schema(&self) -> Result<CsvSchema, CliError> {
        let target = if self.regression.unwrap_or(false) {
            Target::Value
        } else {
            let enc = match &self.encoding {
                Some(e) => e.parse::<ClassEncoding>().map_err(|e| CliError::Usage(e.to_string()))?,
                None => ClassEncoding::OneHot,
            };
            Target::Class(enc)
        };
        Ok(CsvSchema {
            has_header: !self.no_header.unwrap_or(false),
            target_column: self.target_column,
            target,
            categorical: self.categorical.clone().unwrap_or_default(),
        })
    }
}

/// Contents of a configuration file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub arch: Option<String>,
    pub kind: Option<String>,
    pub iterations: Option<u64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub log_every: Option<u64>,
    pub checkpoint_every: Option<u64>,
    pub split: Option<f64>,
    pub split_seed: Option<u64>,
    pub scale: Option<bool>,
    #[serde(default)]
    pub data: DataSpec,
    #[serde(default)]
    pub test: DataSpec,
    #[serde(default)]
    pub hyperparameters: HyperOverrides,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Run(nlw::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data = cfg.data.relative_to(base);
        cfg.test = cfg.test.relative_to(base);
        if let Some(dir) = &cfg.out_dir {
            if dir.is_relative() {
                cfg.out_dir = Some(base.join(dir));
            }
        }
        Ok(cfg)
    }
}

/// A fully resolved training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub arch: String,
    pub kind: NetKind,
    pub hyper: Hyperparameters,
    pub iterations: u64,
    pub seeds: Vec<u64>,
    pub data: DataSpec,
    pub test: Option<DataSpec>,
    pub split: Option<f64>,
    pub split_seed: u64,
    pub scale: bool,
    pub log_every: u64,
    pub checkpoint_every: Option<u64>,
    pub out_dir: PathBuf,
}

pub const DEFAULT_LOG_EVERY: u64 = 1000;

/// Flags of `train` that mirror configuration keys.
#[derive(Debug, Clone, Default)]
pub struct FlagConfig {
    pub arch: Option<String>,
    pub kind: Option<String>,
    pub iterations: Option<u64>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub log_every: Option<u64>,
    pub checkpoint_every: Option<u64>,
    pub split: Option<f64>,
    pub split_seed: Option<u64>,
    pub scale: bool,
    pub data: DataSpec,
    pub test: Option<PathBuf>,
    pub hyper: HyperOverrides,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: FlagConfig) -> Result<Self, CliError> {
        let arch = flags.arch.or(file.arch).ok_or_else(|| CliError::Usage("no architecture given (--arch)".into()))?;
        let kind: NetKind = flags
            .kind
            .or(file.kind)
            .unwrap_or_else(|| "NLW".into())
            .parse()
            .map_err(|e: nlw::Error| CliError::Usage(e.to_string()))?;
        let hyper = file.hyperparameters.merged(&flags.hyper).apply(Hyperparameters::for_kind(kind));
        hyper.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        let iterations = flags
            .iterations
            .or(file.iterations)
            .ok_or_else(|| CliError::Usage("no iteration budget given (--iterations)".into()))?;
        let seeds = match (flags.seeds, flags.seed, file.seeds, file.seed) {
            (Some(s), _, _, _) => s,
            (None, Some(s), _, _) => vec![s],
            (None, None, Some(s), _) => s,
            (None, None, None, s) => vec![s.unwrap_or(0)],
        };
        if seeds.is_empty() {
            return Err(CliError::Usage("empty seed list".into()));
        }
        let data = file.data.merged(&flags.data);
        if !data.is_set() {
            return Err(CliError::Usage("no training data given (--data or --generator)".into()));
        }
        let test = match flags.test {
            Some(path) => Some(DataSpec { path: Some(path), ..data.clone() }),
            None if file.test.is_set() => Some(data.merged(&file.test)),
            None => None,
        };
        let split = flags.split.or(file.split);
        if let Some(f) = split {
            if !(f > 0.0 && f < 1.0) {
                return Err(CliError::Usage(format!("split fraction {f} not in (0, 1)")));
            }
            if test.is_some() {
                return Err(CliError::Usage("--split and a test set exclude each other".into()));
            }
        }
        let log_every = flags.log_every.or(file.log_every).unwrap_or(DEFAULT_LOG_EVERY);
        if log_every == 0 {
            return Err(CliError::Usage("log interval must be positive".into()));
        }
        let checkpoint_every = flags.checkpoint_every.or(file.checkpoint_every);
        if checkpoint_every == Some(0) {
            return Err(CliError::Usage("checkpoint interval must be positive".into()));
        }
        Ok(RunConfig {
            arch,
            kind,
            hyper,
            iterations,
            seeds,
            data,
            test,
            split,
            split_seed: flags.split_seed.or(file.split_seed).unwrap_or(0),
            scale: flags.scale || file.scale.unwrap_or(false),
            log_every,
            checkpoint_every,
            out_dir: flags.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from(".")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> FlagConfig {
        FlagConfig {
            arch: Some("2-4-1".into()),
            iterations: Some(10),
            data: DataSpec { generator: Some("spirals".into()), ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let file: FileConfig = toml::from_str(
            "arch = \"2-8-1\"\nkind = \"lw\"\n[hyperparameters]\nmu = 0.1\nr_res = 16\n",
        )
        .unwrap();
        let mut f = flags();
        f.hyper.mu = Some(0.3);
        let cfg = RunConfig::resolve(file, f).unwrap();
        assert_eq!(cfg.arch, "2-4-1");
        assert_eq!(cfg.kind, NetKind::Lw);
        assert_eq!(cfg.hyper.mu, 0.3);
        assert_eq!(cfg.hyper.r_res, 16);
        assert_eq!(cfg.hyper.s_b, Hyperparameters::lw().s_b);
        assert_eq!(cfg.log_every, DEFAULT_LOG_EVERY);
        assert_eq!(cfg.seeds, vec![0]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("archh = \"2-1\"").is_err());
        assert!(toml::from_str::<FileConfig>("[hyperparameters]\nmuu = 1.0").is_err());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let mut f = flags();
        f.hyper.zeta = Some(2.0);
        assert!(matches!(RunConfig::resolve(FileConfig::default(), f), Err(CliError::Usage(_))));
        let mut f = flags();
        f.data = DataSpec::default();
        assert!(matches!(RunConfig::resolve(FileConfig::default(), f), Err(CliError::Usage(_))));
    }
}
