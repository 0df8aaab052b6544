use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use nlw::bench::{self, BenchConfig, Phase};
use nlw::data::{self, Dataset, Scaling};
use nlw::eval::{self, render_surface, write_pgm};
use nlw::{init_network, Architecture, Error, Hyperparameters, ModelFile, NetKind, Trainer};

use crate::config::{DataSpec, FileConfig, FlagConfig, RunConfig};
use crate::{BenchArgs, CliError, EvalArgs, GenDataArgs, RenderArgs, TrainArgs};

pub const GENERATORS: [&str; 4] = ["circle", "spirals", "spirals-sparse", "md2"];

const DEFAULT_CIRCLE_RESOLUTION: usize = 64;
const DEFAULT_CIRCLE_FRACTION: f64 = 0.15;
const DEFAULT_MD2_SAMPLES: usize = 100_000;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Run(Error::Io { path: path.to_path_buf(), source: e })
}

/// Builds the dataset described by `spec`.
pub fn load_data(spec: &DataSpec) -> Result<Dataset, CliError> {
    if let Some(path) = &spec.path {
        return Ok(data::load_dataset(path, &spec.schema()?)?);
    }
    let name = spec
        .generator
        .as_deref()
        .ok_or_else(|| CliError::Usage("no dataset given (--data or --generator)".into()))?;
    generate(name, spec)
}

fn generate(name: &str, spec: &DataSpec) -> Result<Dataset, CliError> {
    let seed = spec.data_seed.unwrap_or(0);
    match name {
        "circle" => {
            let sets = data::gen_circle(
                spec.resolution.unwrap_or(DEFAULT_CIRCLE_RESOLUTION),
                seed,
                spec.fraction.unwrap_or(DEFAULT_CIRCLE_FRACTION),
            )?;
            match spec.part.as_deref().unwrap_or("train") {
                "train" => Ok(sets.train),
                "held-out" => Ok(sets.held_out),
                "full" => Ok(sets.full),
                other => Err(CliError::Usage(format!(
                    "unknown circle part {other:?} (expected train, held-out or full)"
                ))),
            }
        }
        "spirals" => Ok(data::gen_two_spirals()),
        "spirals-sparse" => Ok(data::gen_two_spirals_sparse()),
        "md2" => Ok(data::gen_md2(spec.n.unwrap_or(DEFAULT_MD2_SAMPLES), seed)?),
        other => Err(CliError::Usage(format!(
            "unknown dataset {other:?}; valid names: {}",
            GENERATORS.join(", ")
        ))),
    }
}

pub fn gen_data(args: &GenDataArgs) -> Result<(), CliError> {
    let spec = DataSpec {
        generator: Some(args.name.clone()),
        n: args.n,
        data_seed: args.seed,
        resolution: args.resolution,
        fraction: args.fraction,
        part: args.part.clone(),
        ..Default::default()
    };
    let ds = load_data(&spec)?;
    ds.write_csv(&args.out)?;
    println!("wrote {} samples to {}", ds.len(), args.out.display());
    Ok(())
}

/// Training and test sets of a run, scaled if requested.
struct RunData {
    train: Dataset,
    test: Option<Dataset>,
    scaling: Option<Scaling>,
}

fn run_data(cfg: &RunConfig) -> Result<RunData, CliError> {
    let all = load_data(&cfg.data)?;
    let (mut train, mut test) = match (cfg.split, &cfg.test) {
        (Some(f), _) => {
            let (a, b) = data::split(&all, f, cfg.split_seed)?;
            (a, Some(b))
        }
        (None, Some(spec)) => (all, Some(load_data(spec)?)),
        (None, None) => (all, None),
    };
    if let Some(t) = &test {
        if t.arg_dim != train.arg_dim || t.val_dim != train.val_dim {
            return Err(CliError::Usage(format!(
                "test set has {} arguments and {} values, training set {} and {}",
                t.arg_dim, t.val_dim, train.arg_dim, train.val_dim
            )));
        }
    }
    let scaling = if cfg.scale {
        let s = Scaling::fit(&train)?;
        s.apply(&mut train)?;
        if let Some(t) = &mut test {
            s.apply(t)?;
        }
        Some(s)
    } else {
        None
    };
    Ok(RunData { train, test, scaling })
}

/// Outcome of one finished run.
struct RunSummary {
    seed: u64,
    iterations: u64,
    train_mse: f64,
    test_mse: Option<f64>,
    test_accuracy: Option<f64>,
    dir: PathBuf,
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let flags = FlagConfig {
        arch: args.arch.clone(),
        kind: args.kind.clone(),
        iterations: args.iterations,
        seed: args.seed,
        seeds: args.seeds.clone(),
        out_dir: args.out_dir.clone(),
        log_every: args.log_every,
        checkpoint_every: args.checkpoint_every,
        split: args.split,
        split_seed: args.split_seed,
        scale: args.scale,
        data: args.data.clone(),
        test: args.test.clone(),
        hyper: args.hyper.clone(),
    };
    let cfg = RunConfig::resolve(file, flags)?;
    if args.resume.is_some() && cfg.seeds.len() > 1 {
        return Err(CliError::Usage("--resume continues a single run".into()));
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let data = run_data(&cfg)?;
    let arch = Architecture::parse(&cfg.arch, Some(data.train.arg_dim)).map_err(|e| CliError::Usage(e.to_string()))?;
    if arch.inputs() != data.train.arg_dim || arch.outputs() != data.train.val_dim {
        return Err(CliError::Usage(format!(
            "architecture {arch} does not fit data with {} arguments and {} values",
            data.train.arg_dim, data.train.val_dim
        )));
    }

    let single = cfg.seeds.len() == 1;
    let dir_of = |seed: u64| if single { cfg.out_dir.clone() } else { cfg.out_dir.join(format!("seed-{seed}")) };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Result<RunSummary, CliError>>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.min(cfg.seeds.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = cfg.seeds.get(i) else { break };
                let r = run_one(&cfg, &arch, &data, seed, &dir_of(seed), args.resume.as_deref());
                results.lock().expect("no worker panicked").push(r);
            });
        }
    });
    let mut results = results.into_inner().expect("no worker panicked");
    results.sort_by_key(|r| r.as_ref().map(|s| s.seed).unwrap_or(u64::MAX));
    let mut first_err = None;
    for r in results {
        match r {
            Ok(s) => {
                let mut line = format!(
                    "seed {}: {} iterations, train mse {:.6e}",
                    s.seed, s.iterations, s.train_mse
                );
                if let Some(m) = s.test_mse {
                    line += &format!(", test mse {m:.6e}");
                }
                if let Some(a) = s.test_accuracy {
                    line += &format!(", test accuracy {a:.4}");
                }
                println!("{line} -> {}", s.dir.display());
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn run_one(
    cfg: &RunConfig,
    arch: &Architecture,
    data: &RunData,
    seed: u64,
    dir: &Path,
    resume: Option<&Path>,
) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    if let Some(s) = &data.scaling {
        let path = dir.join("scaling.json");
        let text = serde_json::to_string_pretty(s).map_err(Error::from)? + "\n";
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    let mut trainer = match resume {
        Some(path) => {
            let model = ModelFile::load(path)?;
            let state = model
                .training
                .ok_or_else(|| CliError::Usage(format!("{} holds no training state", path.display())))?;
            let net_arch = model.network.architecture();
            if net_arch.inputs() != data.train.arg_dim || net_arch.outputs() != data.train.val_dim {
                return Err(CliError::Usage(format!("checkpoint network {net_arch} does not fit the data")));
            }
            Trainer::resume(model.network, &state, data.train.len())?
        }
        None => Trainer::new(init_network(arch.clone(), cfg.kind, cfg.hyper, seed)?, seed, data.train.len())?,
    };

    let log_path = dir.join("log.csv");
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| io_err(&log_path, e))?);
    let mut log_row = |line: String| -> Result<(), CliError> {
        writeln!(log, "{line}").and_then(|_| log.flush()).map_err(|e| io_err(&log_path, e))
    };
    log_row("iteration,train_mse,test_mse".into())?;

    let val_dim = data.train.val_dim as f64;
    let mut window_sum = 0.0;
    let mut window_len = 0u64;
    let mut last_train_mse = f64::NAN;
    while trainer.iteration() < cfg.iterations {
        window_sum += trainer.step(&data.train)? / val_dim;
        window_len += 1;
        let it = trainer.iteration();
        if it % cfg.log_every == 0 || it == cfg.iterations {
            last_train_mse = window_sum / window_len as f64;
            let test = match &data.test {
                Some(t) => format!("{}", eval::mse(trainer.network(), t)?),
                None => String::new(),
            };
            log_row(format!("{it},{last_train_mse},{test}"))?;
            window_sum = 0.0;
            window_len = 0;
        }
        if cfg.checkpoint_every.is_some_and(|c| it % c == 0) {
            ModelFile::new(trainer.network().clone(), Some(trainer.state()))
                .save(&dir.join(format!("checkpoint-{it:010}.json")))?;
        }
    }
    trainer.check_finite()?;
    ModelFile::new(trainer.network().clone(), Some(trainer.state())).save(&dir.join("model.json"))?;

    let (test_mse, test_accuracy) = match &data.test {
        Some(t) => (
            Some(eval::mse(trainer.network(), t)?),
            t.classes.as_ref().map(|_| eval::accuracy(trainer.network(), t)).transpose()?,
        ),
        None => (None, None),
    };
    Ok(RunSummary {
        seed,
        iterations: trainer.iteration(),
        train_mse: last_train_mse,
        test_mse,
        test_accuracy,
        dir: dir.to_path_buf(),
    })
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    let mut ds = load_data(&args.data)?;
    if let Some(path) = &args.scaling {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let s: Scaling = serde_json::from_str(&text).map_err(Error::from)?;
        s.apply(&mut ds)?;
    }
    let net = &model.network;
    println!("samples = {}", ds.len());
    println!("mse = {}", eval::mse(net, &ds)?);
    if ds.classes.is_some() {
        println!("accuracy = {}", eval::accuracy(net, &ds)?);
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> Result<(), CliError> {
    let model = ModelFile::load(&args.model)?;
    let img = render_surface(&model.network, args.resolution)?;
    write_pgm(&img, &args.out)?;
    println!("wrote {}x{} image to {}", img.width, img.height, args.out.display());
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let cfg = BenchConfig { iterations: args.iterations, reps: args.reps, warmup: args.warmup, seed: args.seed };
    let archs = args
        .archs
        .iter()
        .map(|a| Architecture::parse(a, None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let kinds = args
        .kinds
        .iter()
        .map(|k| k.parse::<NetKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let hp_for = |kind| {
        let hp = args.hyper.apply(Hyperparameters::for_kind(kind));
        hp.validate().map(|_| hp).map_err(|e| CliError::Usage(e.to_string()))
    };

    let mut rows = Vec::new();
    let mut train_slopes = Vec::new();
    for &kind in &kinds {
        let report = bench::bench_iterations(&archs, kind, hp_for(kind)?, &cfg)?;
        println!("{kind} forward: {:.4} + {:.6} n ms", report.forward.a, report.forward.b);
        println!("{kind} train:   {:.4} + {:.6} n ms", report.train.a, report.train.b);
        train_slopes.push((kind, report.train.b));
        rows.extend(report.rows);
    }
    let slope = |k| train_slopes.iter().find(|(kind, _)| *kind == k).map(|p| p.1);
    if let (Some(lw), Some(nlw)) = (slope(NetKind::Lw), slope(NetKind::Nlw)) {
        println!("NLW/LW training slope ratio: {:.2}", nlw / lw);
    }
    if let Some(res) = &args.r_res_sweep {
        let arch = Architecture::parse(&args.r_res_arch, None).map_err(|e| CliError::Usage(e.to_string()))?;
        let hp = hp_for(NetKind::Nlw)?;
        for phase in [Phase::Forward, Phase::Train] {
            let sweep = bench::bench_r_res(&arch, hp, res, phase, &cfg)?;
            for r in &sweep {
                println!("NLW {arch} r_res {} {phase}: {:.5} ms", r.r_res, r.ms_per_iter);
            }
            rows.extend(sweep);
        }
    }
    bench::write_csv(&rows, &args.out)?;
    println!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}
