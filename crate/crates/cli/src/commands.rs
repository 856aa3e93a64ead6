//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ArgMatches;
use geopeg::env::{render, Env, EnvConfig, View};
use geopeg::eval::{
    evaluate, Agent, CurveRow, EvalReport, EvalSpec, ExpertAgent, PolicyAgent, ZeroAgent,
};
use geopeg::expert::{generate, waypoints, Dataset, MAGIC as DATASET_MAGIC};
use geopeg::learn::{train, Policy, CHECKPOINT_MAGIC};
use geopeg::shapes::{ObjectKey, ObjectSet, ShapeName};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Report file names written by `eval` inside `out`.
pub const REPORT_CSV: &str = "report.csv";
pub const RUNS_CSV: &str = "runs.csv";
pub const OBJECTS_CSV: &str = "objects.csv";
pub const REPORT_TXT: &str = "report.txt";

/// Prefixes I/O errors with the path involved.
fn at(path: &Path) -> impl Fn(geopeg::Error) -> geopeg::Error + '_ {
    move |e| match e {
        geopeg::Error::Io(io) => geopeg::Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(geopeg::Error::from)?
    };
}

pub fn dispatch(name: &str, sub: &ArgMatches, c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    match name {
        "gen-demos" => gen_demos(c, out),
        "train" => train_cmd(c, out),
        "eval" => eval_cmd(c, out),
        "render" => render_cmd(c, out),
        "inspect" => {
            let path = sub
                .get_one::<String>("path")
                .map(PathBuf::from)
                .unwrap_or_else(|| c.dataset.clone());
            inspect(&path, out)
        }
        "config" => {
            out.write_all(c.to_text().as_bytes())
                .map_err(geopeg::Error::from)?;
            Ok(())
        }
        other => Err(CliError::config(format!("unknown command `{other}`"))),
    }
}

fn env_for(c: &RunConfig) -> Env {
    Env::new(EnvConfig {
        obs: c.obs_config(),
        horizon: c.horizon,
        ..EnvConfig::default()
    })
}

fn write_mixture(ds: &Dataset, out: &mut dyn Write) -> Result<()> {
    let m = ds.mixture();
    let total = m.total().max(1) as f64;
    say!(
        out,
        "mixture: order-1 {} ({:.3}), order-2 {} ({:.3}), order-4 {} ({:.3})",
        m.order1,
        m.order1 as f64 / total,
        m.order2,
        m.order2 as f64 / total,
        m.order4,
        m.order4 as f64 / total
    );
    let lens: Vec<usize> = ds.episodes.iter().map(|e| e.frames.len()).collect();
    let ok = ds.episodes.iter().filter(|e| e.success).count();
    say!(
        out,
        "success {ok}/{}, frames per episode min {} max {} mean {:.2}",
        ds.episodes.len(),
        lens.iter().min().copied().unwrap_or(0),
        lens.iter().max().copied().unwrap_or(0),
        lens.iter().sum::<usize>() as f64 / lens.len().max(1) as f64
    );
    Ok(())
}

pub fn gen_demos(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let ds = generate(
        &env_for(c),
        c.demos,
        c.variation,
        c.object_set,
        c.seed,
        &c.clearance,
    )?;
    ds.save(&c.dataset).map_err(at(&c.dataset))?;
    say!(
        out,
        "wrote {} episodes ({} frames) to {}",
        ds.episodes.len(),
        ds.n_frames(),
        c.dataset.display()
    );
    say!(
        out,
        "variation {}, object set {}, seed {}",
        c.variation,
        c.object_set,
        c.seed
    );
    write_mixture(&ds, out)
}

pub fn train_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let ds = Dataset::load(&c.dataset).map_err(at(&c.dataset))?;
    let tc = c.train_config();
    let result = train(&ds, &c.policy_config(), &tc)?;
    result
        .policy
        .save(&c.checkpoint)
        .map_err(at(&c.checkpoint))?;
    geopeg::learn::write_curve_csv(&c.curve, &result.curve).map_err(at(&c.curve))?;
    say!(
        out,
        "trained {} parameters for {} steps on {} frames, seed {}",
        result.policy.n_params(),
        tc.steps,
        ds.n_frames(),
        tc.seed
    );
    say!(out, "final loss {:.6e}", result.final_loss);
    say!(
        out,
        "wrote {} and {}",
        c.checkpoint.display(),
        c.curve.display()
    );
    if let Some(path) = &c.success_curve {
        let mut sets = vec![ObjectSet::Order1, ObjectSet::Order2, ObjectSet::Order4];
        if !sets.contains(&ds.manifest.object_set) {
            sets.push(ds.manifest.object_set);
        }
        let mut rows = Vec::new();
        for (step, policy) in &result.snapshots {
            let mut agent = PolicyAgent::new(policy.clone(), format!("step{step}"));
            for &set in &sets {
                let spec = EvalSpec {
                    runs: 1,
                    ..c.eval_spec(ds.manifest.variation, set)
                };
                let cell = evaluate(&mut agent, &spec)?;
                rows.push(CurveRow {
                    step: *step,
                    object_set: set.to_string(),
                    rate: cell.mean_std().0,
                });
            }
        }
        geopeg::eval::write_curve_csv(path, &rows).map_err(at(path))?;
        say!(
            out,
            "wrote success curve ({} points) to {}",
            rows.len(),
            path.display()
        );
    }
    Ok(())
}

fn agent_for(c: &RunConfig) -> Result<Box<dyn Agent>> {
    Ok(match c.policy.as_str() {
        "expert" => Box::new(ExpertAgent::default()),
        "zero" => Box::new(ZeroAgent),
        path => {
            let p = Path::new(path);
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.to_string());
            Box::new(PolicyAgent::new(Policy::load(p).map_err(at(p))?, name))
        }
    })
}

pub fn eval_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let mut agent = agent_for(c)?;
    let (variations, sets) = c.grid();
    let mut cells = Vec::new();
    for &v in &variations {
        for &s in &sets {
            cells.push(evaluate(agent.as_mut(), &c.eval_spec(v, s))?);
        }
    }
    let report = EvalReport {
        cells,
        horizon: c.horizon,
        base_seed: c.eval_seed,
    };
    std::fs::create_dir_all(&c.out).map_err(geopeg::Error::from)?;
    report.write_csv(&c.out.join(REPORT_CSV))?;
    report.write_runs_csv(&c.out.join(RUNS_CSV))?;
    report.write_objects_csv(&c.out.join(OBJECTS_CSV))?;
    report.write_text(&c.out.join(REPORT_TXT))?;
    out.write_all(report.text_table().as_bytes())
        .map_err(geopeg::Error::from)?;
    say!(out, "wrote reports to {}", c.out.display());
    Ok(())
}

/// File name of one rendered image.
pub fn render_name(shape: ShapeName, waypoint: &str, view: View) -> String {
    format!("{shape}_{waypoint}_{}.pgm", view.as_str())
}

pub fn render_cmd(c: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let env = env_for(c);
    std::fs::create_dir_all(&c.out).map_err(geopeg::Error::from)?;
    let mut count = 0;
    for shape in ShapeName::ALL {
        let pair = ObjectKey::new(shape, false).pair(&c.clearance)?;
        let (state, _) = env.reset(c.variation, &pair, c.seed);
        let w = waypoints(&state);
        for (name, wp) in [("show", w.show), ("align", w.align), ("insert", w.insert)] {
            let mut s = state.clone();
            s.left_gripper = wp.left;
            s.right_gripper = wp.right;
            for view in View::ALL {
                let img = render(&s, view, c.resolution, c.color);
                img.save_pgm(&c.out.join(render_name(shape, name, view)))?;
                count += 1;
            }
        }
    }
    say!(
        out,
        "wrote {count} images ({}x{}, {}) to {}",
        c.resolution,
        c.resolution,
        c.color,
        c.out.display()
    );
    Ok(())
}

pub fn inspect(path: &Path, out: &mut dyn Write) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| at(path)(e.into()))?;
    if bytes.starts_with(DATASET_MAGIC) {
        let ds = Dataset::from_bytes(&bytes)?;
        let mut m = ds.manifest.clone();
        m.episodes.clear();
        let json =
            serde_json::to_string_pretty(&m).map_err(|e| geopeg::Error::Format(e.to_string()))?;
        say!(out, "dataset {}", path.display());
        say!(out, "{json}");
        say!(
            out,
            "episodes {}, frames {}",
            ds.episodes.len(),
            ds.n_frames()
        );
        write_mixture(&ds, out)
    } else if bytes.starts_with(CHECKPOINT_MAGIC) {
        let p = Policy::from_bytes(&bytes)?;
        let json = serde_json::to_string_pretty(&p.config)
            .map_err(|e| geopeg::Error::Format(e.to_string()))?;
        say!(out, "checkpoint {}", path.display());
        say!(out, "{json}");
        say!(
            out,
            "encoder {}, rotation {}, control {}, proprio {}, history {}",
            p.config.encoder,
            p.config.rotation,
            p.config.control,
            p.config.use_proprio,
            p.history()
        );
        say!(
            out,
            "input dim {}, parameters {}, views {}, resolution {}",
            p.input_dim,
            p.n_params(),
            p.obs.views,
            p.obs.resolution
        );
        Ok(())
    } else {
        Err(geopeg::Error::Format(format!(
            "{}: neither a dataset nor a checkpoint",
            path.display()
        ))
        .into())
    }
}
