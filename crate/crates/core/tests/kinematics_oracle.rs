mod common;

use common::*;
use handover_core::kinematics::{build_model, forward_kinematics, object_pose, RigidTransform};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn close(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol
}

#[test]
fn chain_matches_elementary_transform_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let dims = random_dims(&mut rng);
        let q = random_q(&mut rng);
        let model = build_model(dims).unwrap();
        let frames = model.frames(&q);
        let oracle = oracle_frames(dims.spine.into(), dims.humerus.into(), dims.radius.into(), q.to_array());
        for (f, o) in frames.iter().zip(&oracle) {
            assert!(close(&f.translation, &oracle_position(o), 1e-9));
            for (i, row) in o.iter().take(3).enumerate() {
                for (j, v) in row.iter().take(3).enumerate() {
                    assert!((f.rotation[(i, j)] - v).abs() <= 1e-9);
                }
            }
        }
        let poses = forward_kinematics(&model, &q);
        assert!(close(&poses.elbow.translation, &oracle_position(&oracle[4]), 1e-9));
        assert!(close(&poses.wrist.translation, &oracle_position(&oracle[6]), 1e-9));
        assert!(close(&poses.hand.translation, &oracle_position(&oracle[8]), 1e-9));
        assert!(close(&model.elbow_position(&q), &oracle_position(&oracle[4]), 1e-9));

        let offset = Vector3::new(-0.08, 0.01, 0.02);
        let obj = object_pose(&model, &q, &RigidTransform::from_translation(offset));
        assert!(close(&obj.translation, &oracle_point(&oracle[8], &offset), 1e-9));
    }
}

#[test]
fn link_lengths_are_independent_of_posture() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let dims = random_dims(&mut rng);
        let model = build_model(dims).unwrap();
        let frames = model.frames(&random_q(&mut rng));
        for (i, row) in model.rows().iter().enumerate() {
            let link = (frames[i + 1].translation - frames[i].translation).norm();
            assert!((link - row.a.hypot(row.d)).abs() < 1e-9);
        }
    }
}
