use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use geopeg::env::Image;
use geopeg::eval::parse_csv;
use geopeg::expert::Dataset;
use geopeg::shapes::ShapeName;
use geopeg_cli::cli::command;
use geopeg_cli::config::{clearance_keys, flag_name, HeadKind, RunConfig, KEYS};
use sha2::{Digest, Sha256};

fn geopeg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geopeg"))
        .args(args)
        .current_dir(dir)
        .env_remove("GEOPEG_SEED")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = geopeg(dir, args);
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn resolve(args: &[&str]) -> Result<RunConfig, geopeg_cli::CliError> {
    let mut full = vec!["geopeg", "config"];
    full.extend_from_slice(args);
    let m = command().try_get_matches_from(full).unwrap();
    geopeg_cli::cli::resolve(m.subcommand().unwrap().1)
}

#[test]
fn gen_demos_writes_successful_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "gen-demos",
            "--variation",
            "ZR",
            "--demos",
            "100",
            "--seed",
            "0",
        ],
    );
    assert!(out.contains("mixture: order-1"));
    let ds = Dataset::load(&dir.path().join("demos.gpih")).unwrap();
    assert_eq!(ds.episodes.len(), 100);
    for e in &ds.episodes {
        assert!(e.success);
        assert!((10..=40).contains(&e.frames.len()));
    }
}

#[test]
fn gen_demos_order4_uses_circle_and_plus() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "gen-demos",
            "--object-set",
            "order4",
            "--variation",
            "ZR",
            "--demos",
            "30",
        ],
    );
    let ds = Dataset::load(&dir.path().join("demos.gpih")).unwrap();
    let shapes: BTreeSet<ShapeName> = ds.episodes.iter().map(|e| e.object.shape).collect();
    assert_eq!(shapes, BTreeSet::from([ShapeName::Circle, ShapeName::Plus]));
}

#[test]
fn gen_demos_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "gen-demos",
        "--variation",
        "XZTYZR",
        "--demos",
        "12",
        "--views",
        "top+wrists",
        "--resolution",
        "24",
    ];
    ok(dir.path(), &args);
    let first = sha(&dir.path().join("demos.gpih"));
    ok(dir.path(), &args);
    assert_eq!(first, sha(&dir.path().join("demos.gpih")));
}

#[test]
fn train_memorizes_one_episode() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-demos", "--demos", "1"]);
    let out = ok(
        dir.path(),
        &["train", "--steps", "5000", "--hidden", "32,32"],
    );
    let loss: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("final loss "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(loss < 1e-4, "loss {loss}");
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert!(curve.starts_with("step,loss\n"));
    assert_eq!(curve.lines().count(), 51);
}

#[test]
fn rotation_specs_give_distinct_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen-demos", "--demos", "3", "--variation", "ZR"],
    );
    let common = ["train", "--steps", "50", "--hidden", "16"];
    let mut a = common.to_vec();
    a.extend(["--rotation", "quat-mse", "--checkpoint", "q.gpol"]);
    let mut b = common.to_vec();
    b.extend(["--rotation", "6d-mse", "--checkpoint", "s.gpol"]);
    ok(dir.path(), &a);
    ok(dir.path(), &b);
    assert_ne!(
        sha(&dir.path().join("q.gpol")),
        sha(&dir.path().join("s.gpol"))
    );
    let info = ok(dir.path(), &["inspect", "q.gpol"]);
    assert!(
        info.contains("quat-mse") || info.contains("quaternion"),
        "{info}"
    );
}

#[test]
fn missing_dataset_is_a_clean_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = geopeg(dir.path(), &["train", "--dataset", "absent.gpih"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("absent.gpih"), "{err}");
    assert!(!err.contains("panicked"));
}

#[test]
fn exploding_training_exits_with_numeric_code() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-demos", "--demos", "1"]);
    let o = geopeg(dir.path(), &["train", "--steps", "200", "--lr", "1e200"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("non-finite loss"));
}

#[test]
fn eval_expert_reports_perfect_success() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "eval",
            "--policy",
            "expert",
            "--variation",
            "XZTYZR",
            "--rollouts",
            "9",
            "--runs",
            "2",
        ],
    );
    let rows = parse_csv(std::fs::File::open(dir.path().join("out/report.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].n, rows[0].successes, rows[0].rate), (18, 18, 1.0));
    let runs = parse_csv(std::fs::File::open(dir.path().join("out/runs.csv")).unwrap()).unwrap();
    assert_eq!(runs.len(), 2);
    let objects =
        parse_csv(std::fs::File::open(dir.path().join("out/objects.csv")).unwrap()).unwrap();
    assert_eq!(objects.len(), 9);
    assert!(objects.iter().all(|r| r.rate == 1.0));
    let text = std::fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(text.contains("1.000  0.000"));
}

#[test]
fn eval_grid_gives_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "eval",
            "--policy",
            "zero",
            "--grid",
            "variations=XT,ZT",
            "objects=order-all",
            "--rollouts",
            "2",
        ],
    );
    let rows = parse_csv(std::fs::File::open(dir.path().join("out/report.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].variation, "XT");
    assert_eq!(rows[1].variation, "ZT");
    assert!(rows
        .iter()
        .all(|r| r.object_set == "order-all" && r.rate == 0.0));
}

#[test]
fn eval_trained_policy_and_reject_corrupt_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-demos", "--demos", "2"]);
    ok(
        dir.path(),
        &[
            "train",
            "--steps",
            "20",
            "--hidden",
            "8",
            "--head",
            "rnn",
            "--history",
            "3",
        ],
    );
    ok(
        dir.path(),
        &[
            "eval",
            "--policy",
            "policy.gpol",
            "--rollouts",
            "2",
            "--runs",
            "1",
        ],
    );
    let rows = parse_csv(std::fs::File::open(dir.path().join("out/report.csv")).unwrap()).unwrap();
    assert_eq!(rows[0].policy, "policy");
    let bytes = std::fs::read(dir.path().join("policy.gpol")).unwrap();
    std::fs::write(dir.path().join("cut.gpol"), &bytes[..bytes.len() / 2]).unwrap();
    let o = geopeg(
        dir.path(),
        &["eval", "--policy", "cut.gpol", "--rollouts", "1"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("format error"));
}

#[test]
fn render_writes_81_deterministic_images() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["render", "--out", "a", "--resolution", "48"]);
    ok(dir.path(), &["render", "--out", "b", "--resolution", "48"]);
    ok(
        dir.path(),
        &[
            "render",
            "--out",
            "c",
            "--resolution",
            "48",
            "--color",
            "colored",
        ],
    );
    let names: Vec<_> = std::fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 81);
    for n in &names {
        let a = dir.path().join("a").join(n);
        assert_eq!(sha(&a), sha(&dir.path().join("b").join(n)));
    }
    let load = |d: &str| {
        let bytes = std::fs::read(dir.path().join(d).join("circle_show_top.pgm")).unwrap();
        let header = b"P5\n48 48\n255\n";
        assert!(bytes.starts_with(header));
        Image::from_u8(48, &bytes[header.len()..]).unwrap()
    };
    assert_ne!(load("a").histogram(), load("c").histogram());
}

#[test]
fn inspect_prints_manifest_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["gen-demos", "--demos", "4", "--object-set", "order2"],
    );
    let info = ok(dir.path(), &["inspect"]);
    assert!(info.contains("\"object_set\": \"order2\""), "{info}");
    assert!(info.contains("episodes 4"));
    let bytes = std::fs::read(dir.path().join("demos.gpih")).unwrap();
    std::fs::write(dir.path().join("cut.gpih"), &bytes[..bytes.len() - 3]).unwrap();
    std::fs::write(dir.path().join("junk.bin"), b"hello").unwrap();
    for f in ["cut.gpih", "junk.bin"] {
        let o = geopeg(dir.path(), &["inspect", f]);
        assert_eq!(o.status.code(), Some(3), "{f}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("format error"));
    }
}

#[test]
fn precedence_is_flag_then_file_then_default() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# desk run\ndemos = 7\nseed=3 # trailing comment\n\nclearance.circle = 0.003\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let c = resolve(&[]).unwrap();
    assert_eq!((c.demos, c.seed), (100, 0));
    let c = resolve(&["--config", cfg]).unwrap();
    assert_eq!((c.demos, c.seed), (7, 3));
    assert_eq!(c.clearance.get(ShapeName::Circle), 0.003);
    assert_eq!(c.clearance.get(ShapeName::Plus), 0.002);
    let c = resolve(&["--config", cfg, "--demos", "5"]).unwrap();
    assert_eq!((c.demos, c.seed), (5, 3));

    let printed = ok(dir.path(), &["config", "--config", cfg, "--demos", "5"]);
    assert!(printed.contains("demos = 5\n"));
    assert!(printed.contains("clearance.circle = 0.003\n"));
    // The printed form is itself a valid config file.
    std::fs::write(dir.path().join("round.cfg"), &printed).unwrap();
    let back = resolve(&["--config", dir.path().join("round.cfg").to_str().unwrap()]).unwrap();
    assert_eq!(back, resolve(&["--config", cfg, "--demos", "5"]).unwrap());
}

#[test]
fn seed_env_sets_the_default_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_geopeg"));
        cmd.arg("config").args(args).current_dir(dir.path());
        match env {
            Some(v) => cmd.env("GEOPEG_SEED", v),
            None => cmd.env_remove("GEOPEG_SEED"),
        };
        cmd.output().unwrap()
    };
    let out = |o: Output| String::from_utf8(o.stdout).unwrap();
    assert!(out(run(None, &[])).contains("seed = 0\n"));
    assert!(out(run(Some("42"), &[])).contains("seed = 42\n"));
    assert!(out(run(Some("42"), &["--seed", "7"])).contains("seed = 7\n"));
    assert_eq!(run(Some("x"), &[]).status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "demos = 3\nwhatever = 1\n").unwrap();
    std::fs::write(dir.path().join("nokv.cfg"), "demos\n").unwrap();
    let cases: &[&[&str]] = &[
        &["gen-demos", "--config", "bad.cfg"],
        &["gen-demos", "--config", "nokv.cfg"],
        &["gen-demos", "--config", "missing.cfg"],
        &["gen-demos", "--variation", "QQ"],
        &["gen-demos", "--demos", "0"],
        &["train", "--batch", "-1"],
        &["train", "--lr", "0"],
        &["eval", "--grid", "colors=red"],
        &["eval", "--unknown-flag", "1"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = geopeg(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let o = geopeg(dir.path(), &["gen-demos", "--config", "bad.cfg"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("whatever"));
}

#[test]
fn help_documents_every_flag_with_default() {
    let cmd = command();
    let keys: Vec<String> = KEYS
        .iter()
        .map(|k| k.name.to_string())
        .chain(clearance_keys())
        .collect();
    for arg in cmd.get_arguments() {
        let help = arg.get_help().map(|h| h.to_string()).unwrap_or_default();
        assert!(help.contains("[default: "), "{:?}", arg.get_id());
    }
    for sub in cmd.get_subcommands() {
        for arg in sub.get_arguments() {
            let help = arg.get_help().map(|h| h.to_string()).unwrap_or_default();
            assert!(
                help.contains("[default: "),
                "{} {:?}",
                sub.get_name(),
                arg.get_id()
            );
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let text = ok(dir.path(), &["eval", "--help"]);
    for k in &keys {
        assert!(text.contains(&format!("--{}", flag_name(k))), "{k}");
    }
    assert!(text.contains("--grid"));
    for k in KEYS {
        if !k.default.is_empty() {
            assert!(
                text.contains(&format!("[default: {}", k.default)),
                "{}",
                k.name
            );
        }
    }
}

#[test]
fn defaults_match_the_key_table() {
    let c = RunConfig::default();
    for k in KEYS {
        assert_eq!(c.get(k.name).unwrap(), k.default, "{}", k.name);
    }
    assert!(c.validate().is_ok());
}

#[test]
fn every_experiment_axis_is_a_flag() {
    let c = resolve(&[
        "--variation",
        "XTZR",
        "--object-set",
        "rotated45",
        "--views",
        "top+wrists",
        "--proprio",
        "false",
        "--color",
        "colored",
        "--head",
        "rnn",
        "--history",
        "10",
        "--hidden",
        "1024,1024",
        "--control",
        "delta",
        "--demos",
        "10000",
        "--rotation",
        "quat-frob",
        "--encoder",
        "image:4",
        "--resolution",
        "32",
    ])
    .unwrap();
    assert_eq!(c.variation.to_string(), "XTZR");
    assert_eq!(c.object_set.to_string(), "rotated45");
    assert_eq!(c.views.to_string(), "top+wrists");
    assert!(!c.proprio);
    assert_eq!(c.color.to_string(), "colored");
    assert_eq!(c.head, HeadKind::Rnn);
    assert_eq!(c.hidden, vec![1024, 1024]);
    assert_eq!(c.control.to_string(), "delta");
    assert_eq!(c.demos, 10000);
    assert_eq!(c.rotation.to_string(), "quat-frob");
    assert_eq!(c.encoder.to_string(), "image:4");
    let p = c.policy_config();
    assert!(!p.use_proprio);
    assert_eq!(p.head.history(), 10);
}

#[test]
fn image_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let common = [
        "--views",
        "top+wrists",
        "--resolution",
        "16",
        "--encoder",
        "image:2",
        "--proprio",
        "false",
    ];
    let mut g = vec!["gen-demos", "--demos", "2"];
    g.extend(common);
    ok(dir.path(), &g);
    let mut t = vec!["train", "--steps", "10", "--hidden", "8"];
    t.extend(common);
    ok(dir.path(), &t);
    ok(
        dir.path(),
        &[
            "eval",
            "--policy",
            "policy.gpol",
            "--rollouts",
            "1",
            "--runs",
            "1",
        ],
    );
}

#[test]
fn success_curve_per_object_set() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-demos", "--demos", "2"]);
    ok(
        dir.path(),
        &[
            "train",
            "--steps",
            "20",
            "--hidden",
            "8",
            "--snapshot-every",
            "10",
            "--success-curve",
            "succ.csv",
            "--rollouts",
            "2",
        ],
    );
    let text = std::fs::read_to_string(dir.path().join("succ.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,object_set,rate");
    // Two snapshots times order1, order2, order4, order-all.
    assert_eq!(lines.len(), 1 + 2 * 4);
    assert!(lines[1].starts_with("10,order1,"));
}
