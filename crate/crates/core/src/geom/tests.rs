use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::error::Error;

fn gaussian3(rng: &mut ChaCha8Rng) -> Vec3<f64> {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

fn random_quat(rng: &mut ChaCha8Rng) -> Quat<f64> {
    Quat::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
    .normalized()
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose<f64> {
    Pose::new(gaussian3(rng).scale(0.3), random_quat(rng))
}

fn rz(deg: f64) -> Mat3<f64> {
    Mat3::rot_z(deg.to_radians())
}

#[test]
fn gram_schmidt_of_orthonormal_columns_is_identity() {
    let r = gram_schmidt(&Rot6D::<f64>::new(Vec3::unit_x(), Vec3::unit_y())).unwrap();
    assert!(r.max_abs_diff(&Mat3::identity()) < 1e-15);
}

#[test]
fn gram_schmidt_removes_scale_and_shear() {
    let r = gram_schmidt(&Rot6D::new(
        Vec3::new(2.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
    ))
    .unwrap();
    assert!(r.max_abs_diff(&Mat3::identity()) < 1e-15);
}

#[test]
fn gram_schmidt_random_inputs_are_rotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let r = gram_schmidt(&Rot6D::new(gaussian3(&mut rng), gaussian3(&mut rng))).unwrap();
        assert!(r.orthonormality_error() <= 1e-9);
        assert!((r.det() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn gram_schmidt_rejects_degenerate_columns() {
    let zero = Rot6D::<f64>::new(Vec3::zeros(), Vec3::unit_y());
    assert!(matches!(
        gram_schmidt(&zero),
        Err(Error::DegenerateInput(_))
    ));
    let parallel = Rot6D::new(Vec3::unit_x(), Vec3::new(3.0, 0.0, 0.0));
    assert!(matches!(
        gram_schmidt(&parallel),
        Err(Error::DegenerateInput(_))
    ));
}

#[test]
fn sixd_of_known_matrices() {
    let id = sixd_from_matrix(&Mat3::<f64>::identity());
    assert_eq!(id.to_array(), [1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let r = sixd_from_matrix(&rz(90.0));
    let expect = [0.0, 1.0, 0.0, -1.0, 0.0, 0.0];
    for (a, b) in r.to_array().iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn sixd_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..1000 {
        let r = random_quat(&mut rng).to_matrix();
        let back = gram_schmidt(&sixd_from_matrix(&r)).unwrap();
        assert!(back.max_abs_diff(&r) <= 1e-12);
    }
}

#[test]
fn geodesic_angle_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let r = random_quat(&mut rng).to_matrix();
    assert!(geodesic_angle(&r, &r) < 1e-7);
    assert_eq!(
        geodesic_angle(&Mat3::<f64>::identity(), &Mat3::identity()),
        0.0
    );
    assert!((geodesic_angle(&Mat3::identity(), &rz(90.0)) - PI / 2.0).abs() < 1e-12);
    for i in 0..100 {
        let theta = PI * i as f64 / 99.0;
        let got = geodesic_angle(&Mat3::identity(), &Mat3::rot_z(theta));
        assert!((got - theta).abs() <= 1e-9, "theta {theta} got {got}");
    }
}

#[test]
fn geodesic_angle_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..500 {
        let a = random_quat(&mut rng).to_matrix();
        let b = random_quat(&mut rng).to_matrix();
        assert_eq!(geodesic_angle(&a, &b), geodesic_angle(&b, &a));
    }
}

#[test]
fn quaternion_matrix_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..500 {
        let q = random_quat(&mut rng);
        let back = Quat::from_matrix(&q.to_matrix());
        let q = align_quat_sign(&back, q);
        assert!((q.dot(back) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn pose_inverse_composes_to_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..1000 {
        let p = random_pose(&mut rng);
        let id = p.compose(&p.inverse());
        assert!(id.t.norm() <= 1e-9);
        assert!(id.q.angle() <= 1e-7);
        assert!((id.q.norm() - 1.0).abs() <= 1e-9);
        let long = (0..20).fold(p, |acc, _| acc.compose(&p));
        assert!((long.q.norm() - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn action_vec_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let (l, r) = (random_pose(&mut rng), random_pose(&mut rng));
        let (dl, dr) = ActionVec::encode(&l, &r).decode().unwrap();
        for (a, b) in [(l, dl), (r, dr)] {
            let (dt, dang) = a.distance(&b);
            assert!(dt <= 1e-9 && dang <= 1e-7);
            assert!(a.rotation().max_abs_diff(&b.rotation()) <= 1e-9);
        }
    }
}

#[test]
fn action_vec_rejects_wrong_length() {
    assert!(ActionVec::<f64>::from_slice(&[0.0; 17]).is_err());
}

#[test]
fn rotation_loss_zero_at_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let targets = [
        random_quat(&mut rng).to_matrix(),
        random_quat(&mut rng).to_matrix(),
    ];
    let sixd: Vec<f64> = targets
        .iter()
        .flat_map(|t| sixd_from_matrix(t).to_array())
        .collect();
    let quat: Vec<f64> = targets
        .iter()
        .flat_map(|t| Quat::from_matrix(t).to_array())
        .collect();
    let neg_quat: Vec<f64> = quat.iter().map(|v| -v).collect();
    for spec in RotationLossSpec::ALL {
        let pred = match spec.repr {
            RotationRepr::SixD => &sixd,
            RotationRepr::Quaternion => &quat,
        };
        assert!(
            rotation_loss(pred, &targets, spec).unwrap() < 1e-20,
            "{spec}"
        );
    }
    // Double cover: −q is the same rotation.
    assert!(rotation_loss(&neg_quat, &targets, RotationLossSpec::QUAT_MSE).unwrap() < 1e-20);
}

#[test]
fn rotation_loss_frobenius_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..200 {
        let target = random_quat(&mut rng).to_matrix();
        let pred: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let got = rotation_loss(&pred, &[target], RotationLossSpec::SIXD_FROBENIUS).unwrap();

        // Independent completion and elementwise subtraction.
        let a1 = [pred[0], pred[1], pred[2]];
        let a2 = [pred[3], pred[4], pred[5]];
        let n1 = (a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]).sqrt();
        let b1 = [a1[0] / n1, a1[1] / n1, a1[2] / n1];
        let d = b1[0] * a2[0] + b1[1] * a2[1] + b1[2] * a2[2];
        let u = [a2[0] - d * b1[0], a2[1] - d * b1[1], a2[2] - d * b1[2]];
        let n2 = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        let b2 = [u[0] / n2, u[1] / n2, u[2] / n2];
        let b3 = [
            b1[1] * b2[2] - b1[2] * b2[1],
            b1[2] * b2[0] - b1[0] * b2[2],
            b1[0] * b2[1] - b1[1] * b2[0],
        ];
        let cols = [b1, b2, b3];
        let mut brute = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let diff = cols[j][i] - target.m[i][j];
                brute += diff * diff;
            }
        }
        assert!((got - brute).abs() < 1e-12);
        // For two rotations, ‖R1 − R2‖²_F = 2(3 − tr(R1ᵀR2)) = 4(1 − cos θ).
        let r = gram_schmidt(&Rot6D::from_slice(&pred)).unwrap();
        let theta = geodesic_angle(&r, &target);
        assert!((got - 4.0 * (1.0 - theta.cos())).abs() < 1e-9);
    }
}

#[test]
fn rotation_loss_rejects_bad_dims() {
    let t = [Mat3::identity()];
    assert!(rotation_loss(&[0.0; 5], &t, RotationLossSpec::SIXD_MSE).is_err());
    assert!(rotation_loss(&[0.0; 6], &t, RotationLossSpec::SIXD_FROBENIUS).is_err());
}

#[test]
fn rotation_spec_parses_all_four() {
    for spec in RotationLossSpec::ALL {
        assert_eq!(spec.to_string().parse::<RotationLossSpec>().unwrap(), spec);
    }
    assert!("euler-mse".parse::<RotationLossSpec>().is_err());
}

fn insertion_like_target() -> Pose<f64> {
    Pose::new(Vec3::new(0.0, 0.0, 0.08), Quat::rot_x(PI))
}

#[test]
fn success_check_symmetry_membership() {
    let target = insertion_like_target();
    for k in [1, 2, 4] {
        assert!(success_check(&target, &target, k));
    }
    let flipped = target.compose(&Pose::from_rotation(Quat::rot_z(PI)));
    assert!(success_check(&flipped, &target, 2));
    assert!(success_check(&flipped, &target, 4));
    assert!(!success_check(&flipped, &target, 1));
    let quarter = target.compose(&Pose::from_rotation(Quat::rot_z(PI / 2.0)));
    assert!(!success_check(&quarter, &target, 2));
    assert!(success_check(&quarter, &target, 4));
}

/// Independent enumeration of the symmetry set with explicit matrices.
fn brute_success(rel: &Pose<f64>, target: &Pose<f64>, k: u32) -> bool {
    let rel_r = rel.rotation();
    let tgt_r = target.rotation();
    (0..k).any(|j| {
        let a = 2.0 * PI * j as f64 / k as f64;
        let (s, c) = a.sin_cos();
        let rzm = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let mut cand = [[0.0; 3]; 3];
        for (i, row) in cand.iter_mut().enumerate() {
            for (jj, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|m| tgt_r.m[i][m] * rzm[m][jj]).sum();
            }
        }
        let mut tr = 0.0;
        for i in 0..3 {
            for m in 0..3 {
                tr += rel_r.m[i][m] * cand[i][m];
            }
        }
        let angle = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos();
        let d = rel.t - target.t;
        d.norm() <= 0.01 && angle <= 5f64.to_radians()
    })
}

#[test]
fn success_check_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let target = insertion_like_target();
    let mut hits = 0;
    for i in 0..10_000 {
        let k = [1, 2, 4][i % 3];
        let j = rng.gen_range(0..4) as f64;
        let axis = gaussian3(&mut rng);
        let ang = rng.gen_range(0.0..10f64.to_radians());
        let dt = gaussian3(&mut rng).scale(rng.gen_range(0.0..0.015));
        let rel = target
            .compose(&Pose::from_rotation(Quat::rot_z(j * PI / 2.0)))
            .compose(&Pose::new(dt, Quat::from_axis_angle(axis, ang)));
        let got = success_check(&rel, &target, k);
        assert_eq!(got, brute_success(&rel, &target, k));
        hits += got as usize;
    }
    assert!(hits > 1000 && hits < 9000);
}

proptest! {
    #[test]
    fn gram_schmidt_is_idempotent(v in prop::array::uniform6(-5.0f64..5.0)) {
        let r6 = Rot6D::from_slice(&v);
        prop_assume!(gram_schmidt(&r6).is_ok());
        let once = gram_schmidt(&r6).unwrap();
        let twice = gram_schmidt(&sixd_from_matrix(&once)).unwrap();
        prop_assert!(once.max_abs_diff(&twice) <= 1e-12);
    }

    #[test]
    fn success_invariant_under_symmetric_target(
        t in prop::array::uniform3(-0.02f64..0.02),
        axis in prop::array::uniform3(-1.0f64..1.0),
        ang in 0.0f64..0.2,
        j in 0u32..4,
        k in prop::sample::select(vec![1u32, 2, 4]),
    ) {
        let target = insertion_like_target();
        let rel = target.compose(&Pose::new(Vec3::new(t[0], t[1], t[2]),
            Quat::from_axis_angle(Vec3::new(axis[0], axis[1], axis[2]), ang)));
        let base = success_check(&rel, &target, k);
        let equiv = symmetric_target(&target, k, j % k);
        prop_assert_eq!(base, success_check(&rel, &equiv, k));
    }

    #[test]
    fn success_monotone_in_error_scale(
        t in prop::array::uniform3(-0.01f64..0.01),
        axis in prop::array::uniform3(-1.0f64..1.0),
        ang in 0.0f64..0.1,
        j in 0u32..4,
        alpha in 0.0f64..1.0,
    ) {
        let target = insertion_like_target();
        let k = 4;
        let base = symmetric_target(&target, k, j);
        let ax = Vec3::new(axis[0], axis[1], axis[2]);
        let dt = Vec3::new(t[0], t[1], t[2]);
        // Translation error applied in the target frame, rotation about a fixed axis.
        let rel = |s: f64| Pose::new(base.t + dt.scale(s), base.q * Quat::from_axis_angle(ax, ang * s));
        if success_check(&rel(1.0), &target, k) {
            prop_assert!(success_check(&rel(alpha), &target, k));
        }
    }

    #[test]
    fn rotation_losses_non_negative(v in prop::collection::vec(-2.0f64..2.0, 12), q in prop::array::uniform4(-1.0f64..1.0)) {
        let target = [Quat::from_array(q).normalized().to_matrix(), Mat3::identity()];
        for spec in RotationLossSpec::ALL {
            let pred = &v[..spec.repr.dim() * 2];
            if let Ok(l) = rotation_loss(pred, &target, spec) {
                prop_assert!(l >= 0.0);
            }
        }
    }
}

#[test]
fn geometry_is_generic_over_f32() {
    let r = gram_schmidt(&Rot6D::<f32>::new(
        Vec3::new(1.0, 0.2, 0.0),
        Vec3::new(0.1, 1.0, 0.3),
    ))
    .unwrap();
    assert!(r.orthonormality_error() < 1e-5);
    let p = Pose::<f32>::new(Vec3::new(0.1, 0.2, 0.3), Quat::rot_z(0.7));
    let id = p.compose(&p.inverse());
    assert!(id.t.norm() < 1e-6);
}
