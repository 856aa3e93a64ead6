use super::*;
use crate::env::{insertion_target, layout, EnvConfig, GraspOffset, ObsConfig, ViewSet};
use crate::geom::{success_check, symmetric_target};
use crate::shapes::ShapeName;
use crate::Quat;

fn pair_state(name: ShapeName, hole_q: u8, peg_q: u8) -> crate::env::EnvState {
    let pair = ObjectKey::new(name, false)
        .pair(&ClearanceTable::default())
        .unwrap();
    let (mut s, _) = Env::default().reset(TaskVariation::NONE, &pair, 0);
    s.right_offset.rz_quarters = hole_q;
    s.left_offset.rz_quarters = peg_q;
    s
}

/// Smallest |δ| over all equivalent corrections, by enumeration in degrees.
fn brute_min_correction(order: u32, hole_q: u8, peg_q: u8) -> i32 {
    let required = 90 * (hole_q as i32 + peg_q as i32);
    let mut best = i32::MAX;
    for j in 0..order as i32 {
        for wrap in -3..=3 {
            let d = required - j * 360 / order as i32 + 360 * wrap;
            best = best.min(d.abs());
        }
    }
    best
}

#[test]
fn correction_examples() {
    assert_eq!(symmetry_correction(4, 1, 0).degrees, 0);
    assert_eq!(symmetry_correction(1, 1, 0).degrees, 90);
    assert_eq!(symmetry_correction(2, 3, 0).degrees.abs(), 90);
}

#[test]
fn correction_is_minimal() {
    for order in [1, 2, 4] {
        for h in 0..4 {
            for p in 0..4 {
                let c = symmetry_correction(order, h, p);
                assert!(c.degrees.abs() as u32 <= 180 / order);
                assert_eq!(c.degrees.abs(), brute_min_correction(order, h, p));
            }
        }
    }
}

#[test]
fn insert_waypoint_hits_target() {
    let env = Env::default();
    for name in ShapeName::ALL {
        for seed in 0..20 {
            let pair = ObjectKey::new(name, false)
                .pair(&ClearanceTable::default())
                .unwrap();
            let (mut s, _) = env.reset(TaskVariation::XZTYZR, &pair, seed);
            let w = waypoints(&s);
            s.left_gripper = w.insert.left;
            s.right_gripper = w.insert.right;
            let rel = s.relative();
            let order = pair.symmetry_order();
            let exact = symmetric_target(&insertion_target(&pair), order, w.correction.j);
            let (dt, dr) = rel.distance(&exact);
            assert!(dt < 1e-12 && dr < 1e-7, "{name} {dt} {dr}");
            assert!(success_check(&rel, &insertion_target(&pair), order));
            // Align is backed off by the gap along the insertion axis.
            s.left_gripper = w.align.left;
            let gap = s.relative().t - exact.t;
            assert!((gap.norm() - ALIGN_GAP).abs() < 1e-12);
        }
    }
}

#[test]
fn circle_needs_no_spin() {
    let s = pair_state(ShapeName::Circle, 1, 0);
    let w = waypoints(&s);
    assert_eq!(w.correction.degrees, 0);
    // Peg arm orientation at align equals the unperturbed one.
    let plain = waypoints(&pair_state(ShapeName::Circle, 0, 0));
    assert!(
        w.align
            .left
            .rotation()
            .max_abs_diff(&plain.align.left.rotation())
            < 1e-12
    );
}

#[test]
fn key_spin_is_quarter_turn_about_approach() {
    let s = pair_state(ShapeName::Key, 1, 0);
    let plain = waypoints(&pair_state(ShapeName::Key, 0, 0));
    let w = waypoints(&s);
    let d = plain.align.left.inverse().compose(&w.align.left);
    assert!((d.q.angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    // Rotation axis is the gripper x axis, which carries the object's insertion axis.
    let axis = Quat::new(0.0, d.q.x, d.q.y, d.q.z).normalized();
    assert!(axis.x.abs() > 1.0 - 1e-9);
}

#[test]
fn unperturbed_layout_is_consistent() {
    let s = pair_state(ShapeName::Plus, 0, 0);
    let w = waypoints(&s);
    assert!((w.align.right.t - crate::Vec3::new(0.04, 0.0, 0.40)).norm() < 1e-12);
    assert!((w.align.left.t - crate::Vec3::new(-0.10, 0.0, 0.40)).norm() < 1e-12);
    assert!((w.insert.left.t - crate::Vec3::new(-0.04, 0.0, 0.40)).norm() < 1e-12);
    assert_eq!(w.show.left, layout::show_left());
}

#[test]
fn plan_respects_step_limits() {
    let env = Env::default();
    for name in ShapeName::ALL {
        for seed in 0..10 {
            let pair = ObjectKey::new(name, true)
                .pair(&ClearanceTable::default())
                .unwrap();
            let (s, _) = env.reset(TaskVariation::XZTYZR, &pair, seed);
            let actions = plan(&s);
            assert!((MIN_FRAMES..=MAX_FRAMES).contains(&actions.len()));
            let mut prev = (s.left_gripper, s.right_gripper);
            for a in &actions {
                let next = a.decode().unwrap();
                for (p, q) in [(prev.0, next.0), (prev.1, next.1)] {
                    let (dt, dr) = p.distance(&q);
                    assert!(dt <= 0.05 && dr <= 30f64.to_radians());
                    assert!(dt <= FRAME_TRANSLATION + 1e-6 && dr <= FRAME_ROTATION + 1e-6);
                }
                prev = next;
            }
        }
    }
}

#[test]
fn generate_small_dataset() {
    let env = Env::default();
    let ds = generate(
        &env,
        100,
        TaskVariation::XT,
        ObjectSet::OrderAll,
        0,
        &ClearanceTable::default(),
    )
    .unwrap();
    assert_eq!(ds.episodes.len(), 100);
    assert_eq!(ds.manifest.n_episodes, 100);
    for e in &ds.episodes {
        assert!(e.success);
        assert!((MIN_FRAMES..=MAX_FRAMES).contains(&e.frames.len()));
        assert!(e
            .frames
            .iter()
            .all(|f| f.state.len() == ds.manifest.obs_dim));
    }
}

#[test]
fn every_variation_and_set_succeeds() {
    let env = Env::default();
    for (_, v) in TaskVariation::NAMED {
        for set in ObjectSet::ALL {
            let ds = generate(&env, 12, v, set, 7, &ClearanceTable::default()).unwrap();
            assert!(ds.episodes.iter().all(|e| e.success));
            let allowed = set.objects();
            assert!(ds.episodes.iter().all(|e| allowed.contains(&e.object)));
        }
    }
}

#[test]
fn replay_reproduces_success() {
    let env = Env::default();
    let ds = generate(
        &env,
        20,
        TaskVariation::XZTYZR,
        ObjectSet::OrderAll,
        3,
        &ClearanceTable::default(),
    )
    .unwrap();
    for e in &ds.episodes {
        let pair = e.object.pair(&ds.manifest.clearance).unwrap();
        let (mut s, obs) = env.reset(ds.manifest.variation, &pair, e.seed);
        assert_eq!(
            obs.state_vector()
                .iter()
                .map(|&x| x as f32)
                .collect::<Vec<_>>(),
            e.frames[0].state
        );
        let mut done = false;
        for f in &e.frames {
            assert!(!done);
            done = env
                .step(&mut s, &f.action_vec(), ControlMode::Absolute)
                .unwrap()
                .done;
        }
        assert!(done && s.success);
    }
}

#[test]
fn object_mixture() {
    let objects = ObjectSet::OrderAll.objects();
    let n = 9000;
    let mut counts = [0usize; 9];
    let mut orders = [0usize; 3];
    for i in 0..n {
        let o = pick_object(&objects, episode_seed(11, i));
        counts[o.shape.index()] += 1;
        orders[match o.shape.symmetry_order() {
            1 => 0,
            2 => 1,
            _ => 2,
        }] += 1;
    }
    // 1000 expected per shape, binomial sd ≈ 30.
    for c in counts {
        assert!((c as i64 - 1000).abs() < 150, "{counts:?}");
    }
    for (o, want) in orders.iter().zip([4.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0]) {
        assert!((*o as f64 / n as f64 - want).abs() < 0.03);
    }
}

#[test]
fn generation_is_deterministic() {
    let env = Env::default();
    let a = generate(
        &env,
        10,
        TaskVariation::ZR,
        ObjectSet::OrderAll,
        5,
        &ClearanceTable::default(),
    )
    .unwrap();
    let b = generate(
        &env,
        10,
        TaskVariation::ZR,
        ObjectSet::OrderAll,
        5,
        &ClearanceTable::default(),
    )
    .unwrap();
    assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    let c = generate(
        &env,
        10,
        TaskVariation::ZR,
        ObjectSet::OrderAll,
        6,
        &ClearanceTable::default(),
    )
    .unwrap();
    assert_ne!(a.to_bytes().unwrap(), c.to_bytes().unwrap());
}

#[test]
fn zero_episodes_rejected() {
    let r = generate(
        &Env::default(),
        0,
        TaskVariation::ZR,
        ObjectSet::OrderAll,
        5,
        &ClearanceTable::default(),
    );
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn empty_dataset_round_trips() {
    let mut ds = Dataset::empty(Manifest::new(
        &ObsConfig::default(),
        TaskVariation::XT,
        ObjectSet::Order2,
        9,
        ClearanceTable::default(),
    ));
    ds.sync_manifest();
    let bytes = ds.to_bytes().unwrap();
    let back = Dataset::from_bytes(&bytes).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.to_bytes().unwrap(), bytes);
}

#[test]
fn dataset_with_views_round_trips() {
    let env = Env::new(EnvConfig {
        obs: ObsConfig {
            views: ViewSet::TopWrists,
            resolution: 16,
            ..ObsConfig::default()
        },
        ..EnvConfig::default()
    });
    let ds = generate(
        &env,
        3,
        TaskVariation::XTZR,
        ObjectSet::OrderAll,
        1,
        &ClearanceTable::default(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.gpih");
    ds.save(&path).unwrap();
    let back = Dataset::load(&path).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.to_bytes().unwrap(), std::fs::read(&path).unwrap());
    assert_eq!(back.episodes[0].frames[0].views.len(), 3);
}

#[test]
fn corrupt_files_are_format_errors() {
    let env = Env::default();
    let ds = generate(
        &env,
        4,
        TaskVariation::XT,
        ObjectSet::OrderAll,
        2,
        &ClearanceTable::default(),
    )
    .unwrap();
    let bytes = ds.to_bytes().unwrap();
    for cut in [0, 3, 7, 11, 20, bytes.len() / 2, bytes.len() - 1] {
        let r = Dataset::from_bytes(&bytes[..cut]);
        assert!(matches!(r, Err(Error::Format(_))), "cut at {cut}");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::Format(_))));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(matches!(Dataset::from_bytes(&extra), Err(Error::Format(_))));
    let mut bad = bytes.clone();
    bad[12] = b'!';
    assert!(matches!(Dataset::from_bytes(&bad), Err(Error::Format(_))));
}

#[test]
fn offsets_zero_without_variation() {
    let g = GraspOffset::sample(TaskVariation::NONE, 1, 0);
    assert_eq!(g, GraspOffset::ZERO);
}
