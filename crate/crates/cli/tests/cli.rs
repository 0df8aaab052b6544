use std::path::Path;
use std::process::{Command, Output};

use nlw::{init_network, Architecture, Hyperparameters, ModelFile, NetKind};

fn nlw(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlw")).args(args).current_dir(dir).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = nlw(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn gen_data_writes_generated_sets() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["gen-data", "spirals", "-o", "s.csv"]);
    let text = std::fs::read_to_string(dir.join("s.csv")).unwrap();
    // provenance comment and header precede the rows
    assert_eq!(text.lines().count(), 2 + 194);
    assert!(text.starts_with("# nlw-dataset"));
    ok(dir, &["gen-data", "spirals-sparse", "-o", "sp.csv"]);
    assert_eq!(std::fs::read_to_string(dir.join("sp.csv")).unwrap().lines().count(), 2 + 97);

    ok(dir, &["gen-data", "md2", "--n", "1000", "--seed", "7", "-o", "a.csv"]);
    ok(dir, &["gen-data", "md2", "--n", "1000", "--seed", "7", "-o", "b.csv"]);
    assert_eq!(std::fs::read(dir.join("a.csv")).unwrap(), std::fs::read(dir.join("b.csv")).unwrap());

    ok(dir, &["gen-data", "circle", "--seed", "1", "--part", "held-out", "-o", "c.csv"]);
    assert_eq!(std::fs::read_to_string(dir.join("c.csv")).unwrap().lines().count(), 2 + 4096 - 614);
}

#[test]
fn unknown_generator_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nlw(tmp.path(), &["gen-data", "mnist", "-o", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["circle", "spirals", "spirals-sparse", "md2"] {
        assert!(err.contains(name), "{err}");
    }
    assert_eq!(nlw(tmp.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(nlw(tmp.path(), &["train", "--iterations", "x"]).status.code(), Some(1));
}

#[test]
fn zero_budget_saves_the_initial_network() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["train", "--arch", "2-3-1", "--generator", "spirals", "--iterations", "0", "--seed", "4", "--out-dir", "r"]);
    let model = ModelFile::load(&dir.join("r/model.json")).unwrap();
    let init = init_network(Architecture::parse("2-3-1", None).unwrap(), NetKind::Nlw, Hyperparameters::nlw(), 4).unwrap();
    assert_eq!(model.network, init);
    assert_eq!(model.training.unwrap().iteration, 0);
}

#[test]
fn training_logs_and_checkpoints_on_schedule() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ok(
        dir,
        &[
            "train", "--arch", "X-4-1", "--kind", "lw", "--generator", "md2", "--n", "500", "--iterations", "2500",
            "--log-every", "1000", "--checkpoint-every", "1000", "--split", "0.8", "--out-dir", "r",
        ],
    );
    assert!(out.contains("test mse"), "{out}");
    let log = std::fs::read_to_string(dir.join("r/log.csv")).unwrap();
    let rows: Vec<&str> = log.lines().collect();
    assert_eq!(rows[0], "iteration,train_mse,test_mse");
    let iterations: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(iterations, ["1000", "2000", "2500"]);
    assert!(rows[1..].iter().all(|r| r.split(',').all(|c| !c.is_empty())));
    for it in [1000, 2000] {
        let cp = ModelFile::load(&dir.join(format!("r/checkpoint-{it:010}.json"))).unwrap();
        assert_eq!(cp.training.unwrap().iteration, it);
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(
        dir.join("run.toml"),
        "arch = \"2-5-1\"\nkind = \"LW\"\niterations = 10\nout_dir = \"from-file\"\n\
         [data]\ngenerator = \"spirals\"\n[hyperparameters]\nmu = 0.05\n",
    )
    .unwrap();
    ok(dir, &["train", "-c", "run.toml", "--mu", "0.01", "--arch", "2-3-1"]);
    let model = ModelFile::load(&dir.join("from-file/model.json")).unwrap();
    assert_eq!(model.network.kind(), NetKind::Lw);
    assert_eq!(model.network.architecture().sizes(), [2, 3, 1]);
    assert_eq!(model.network.hyperparameters().mu, 0.01);

    std::fs::write(dir.join("bad.toml"), "arch = \"2-5-1\"\nlearning_rate = 1\n").unwrap();
    assert_eq!(nlw(dir, &["train", "-c", "bad.toml"]).status.code(), Some(1));
    assert_eq!(nlw(dir, &["train", "-c", "missing.toml"]).status.code(), Some(2));
}

#[test]
fn diverging_training_stops_with_the_offending_connection() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nlw(
        tmp.path(),
        &[
            "train", "--arch", "2-4-1", "--generator", "spirals", "--iterations", "5000", "--mu", "1e308", "--s-a", "0",
            "--nu", "100",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("non-finite parameter in connection s(0, 0) -> s(1, 0) at iteration 2"), "{err}");
}

#[test]
fn eval_and_render_read_models_without_changing_them() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["train", "--arch", "2-6-1", "--generator", "spirals", "--iterations", "3000", "--out-dir", "r"]);
    let before = std::fs::read(dir.join("r/model.json")).unwrap();
    let report = ok(dir, &["eval", "-m", "r/model.json", "--generator", "spirals"]);
    assert!(report.contains("mse = ") && report.contains("accuracy = "), "{report}");
    assert_eq!(std::fs::read(dir.join("r/model.json")).unwrap(), before);

    ok(dir, &["render", "-m", "r/model.json", "-o", "a.pgm"]);
    let img = std::fs::read(dir.join("a.pgm")).unwrap();
    assert!(img.starts_with(b"P5\n64 64\n255\n"));
    assert_eq!(img.len(), b"P5\n64 64\n255\n".len() + 64 * 64);

    // a five-input model has no image
    ok(dir, &["train", "--arch", "5-3-1", "--generator", "md2", "--n", "100", "--iterations", "10", "--out-dir", "m"]);
    assert_eq!(nlw(dir, &["render", "-m", "m/model.json", "-o", "b.pgm"]).status.code(), Some(2));
    // nor does it fit two-argument data
    assert_eq!(nlw(dir, &["eval", "-m", "m/model.json", "--generator", "spirals"]).status.code(), Some(2));
}

#[test]
fn bench_writes_one_row_per_kind_arch_and_phase() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = ok(
        dir,
        &[
            "bench", "--archs", "2-2-1,2-4-1,2-8-1,2-8-8-1", "--iterations", "50", "--reps", "3", "--warmup", "10",
            "-o", "b.csv",
        ],
    );
    assert!(out.contains("NLW/LW training slope ratio"), "{out}");
    let csv = std::fs::read_to_string(dir.join("b.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kind,arch,connections,r_res,phase,ms_per_iter");
    assert_eq!(lines.len(), 1 + 2 * 4 * 2);
}

#[test]
fn parallel_seeds_match_single_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let base = ["train", "--arch", "2-4-1", "--generator", "spirals", "--iterations", "2000"];
    let mut multi = base.to_vec();
    multi.extend(["--seeds", "1,2,3", "--jobs", "3", "--out-dir", "multi"]);
    ok(dir, &multi);
    let mut single = base.to_vec();
    single.extend(["--seed", "2", "--out-dir", "single"]);
    ok(dir, &single);
    assert_eq!(
        std::fs::read(dir.join("multi/seed-2/model.json")).unwrap(),
        std::fs::read(dir.join("single/model.json")).unwrap()
    );
}
