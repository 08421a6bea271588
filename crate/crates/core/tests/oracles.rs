//! Frozen reference values. Every number below was derived by hand from the
//! closed-form expressions of the reference arm (links 0.5 / 0.4 / 0.3 m),
//! not by running this crate:
//!
//!   x = c1 (L2 c2 + L3 c23),  y = s1 (L2 c2 + L3 c23),  z = L1 + L2 s2 + L3 s23
//!
//! If one of these fails, the implementation changed, not the oracle.

// values kept digit-for-digit as they were frozen
#![allow(clippy::excessive_precision)]

use armlab::control::{gravity_torque, joint_step, pid_step, JointSimState, PidGains, PidState};
use armlab::kinematics::{fk, fk_dh, ik_3dof, ik_dls, verify_ik, DlsOptions, IkError, IkTarget};
use armlab::reference::{reference_arm, reference_chain, reference_dh_table, REFERENCE_ARM, JOINT_LIMITS};
use nalgebra::Vector3;

const FK_TABLE: [([f64; 3], [f64; 3]); 7] = [
    ([0.0, 0.0, 0.0], [0.7, 0.0, 0.5]),
    ([0.0, std::f64::consts::FRAC_PI_2, 0.0], [0.0, 0.0, 1.2]),
    ([0.0, 0.0, std::f64::consts::FRAC_PI_2], [0.4, 0.0, 0.8]),
    ([0.3, 0.5, -0.8], [0.60915499967413311, 0.18843372303014758, 0.60311415344327923]),
    ([-1.2, 1.0, 0.7], [0.064306751628296535, -0.1654067155143972, 1.1340878370588992]),
    ([2.5, -0.4, -2.0], [-0.11793337374479948, 0.088098859775945629, 0.14159370891119449]),
    ([3.0, 3.0, 3.0], [0.10686564355730488, -0.015233328062501777, 0.47262335376426917]),
];

#[test]
fn fk_golden_values() {
    let chain = reference_chain();
    let dh = reference_dh_table();
    for (q, tip) in FK_TABLE {
        let expected = Vector3::from(tip);
        let urdf = fk(&chain, &q).unwrap().translation;
        let table = fk_dh(&dh, &q).unwrap().translation;
        assert!((urdf - expected).amax() < 1e-12, "fk {q:?}: {urdf:?}");
        assert!((table - expected).amax() < 1e-12, "fk_dh {q:?}: {table:?}");
    }
}

#[test]
fn ik_golden_solutions() {
    // (0.4, 0, 0.8): upper arm horizontal with the forearm straight up, or the
    // elbow mirrored across the shoulder-target line; plus both reached
    // through the back of the base.
    let sols = ik_3dof(&REFERENCE_ARM, &Vector3::new(0.4, 0.0, 0.8), None).unwrap();
    assert_eq!(sols.len(), 4);
    let has = |q: [f64; 3]| {
        sols.iter()
            .any(|s| s.q.iter().zip(q).all(|(a, b)| (a - b).abs() < 1e-9))
    };
    // elbow angle: cos θ3 = (0.4² + 0.3² − 0.16 − 0.09)/(2·0.4·0.3) = 0
    let upper = 2.0 * 0.3f64.atan2(0.4);
    assert!(has([0.0, 0.0, std::f64::consts::FRAC_PI_2]));
    assert!(has([0.0, upper, -std::f64::consts::FRAC_PI_2]));

    assert_eq!(
        ik_3dof(&REFERENCE_ARM, &Vector3::new(2.0, 0.0, 0.5), None),
        Err(IkError::Unreachable)
    );
    let stretched = ik_3dof(&REFERENCE_ARM, &Vector3::new(0.7, 0.0, 0.5), Some(&[JOINT_LIMITS; 3])).unwrap();
    assert_eq!(stretched.len(), 1);
    assert_eq!(stretched[0].q, vec![0.0, 0.0, 0.0]);
}

#[test]
fn dls_reaches_and_fails_like_the_oracle() {
    let chain = reference_chain();
    let target = IkTarget::Position(Vector3::new(0.4, 0.0, 0.8));
    let sol = ik_dls(&chain, &[0.0; 3], &target, &DlsOptions::default()).unwrap();
    assert!(verify_ik(&chain, &sol.q, &target, 1e-6).unwrap());

    // 2 m away from a 1.2 m arm: the best the solver can do is 1.3 m short.
    let far = IkTarget::Position(Vector3::new(2.0, 0.0, 0.5));
    match ik_dls(&chain, &[0.0; 3], &far, &DlsOptions::default()) {
        Err(IkError::NoConvergence { best }) => assert!((best.residual - 1.3).abs() < 1e-6),
        other => panic!("expected NoConvergence, got {other:?}"),
    }
}

#[test]
fn pid_golden_steps() {
    let gains = PidGains::new(100.0, 0.01, 10.0).unwrap();
    let mut state = PidState::for_effort_limit(&gains, 1000.0);
    // 100·0.5 + 0.01·(0.5·0.01), no derivative on the first call
    assert_eq!(pid_step(&gains, &mut state, 0.5, 0.01), 50.00005);
    // 100·0.4 + 0.01·0.009 + 10·(0.4 − 0.5)/0.01
    let second = pid_step(&gains, &mut state, 0.4, 0.01);
    assert!((second - (40.0 + 0.00009 - 100.0)).abs() < 1e-12);
}

#[test]
fn joint_step_golden() {
    let rest = JointSimState::at_rest(0.0, 1.0, 1.0);
    let s = joint_step(&rest, &JOINT_LIMITS, 1.0, 0.0, 1e-3);
    assert!((s.qd - 1e-3).abs() < 1e-15);
    assert!((s.q - 1e-6).abs() < 1e-18);
    let s = joint_step(&rest, &JOINT_LIMITS, 5000.0, 0.0, 1e-3);
    assert_eq!(s.last_effort, 1000.0);
}

#[test]
fn gravity_golden_torques() {
    let model = reference_arm();
    let chain = reference_chain();
    // shoulder holds link_01 (1.5 kg at 0.2 m), link_02 (1 kg at 0.55 m)
    // and the tool (0.1 kg at 0.7 m): 9.81 · 0.92
    let t = gravity_torque(&model, &chain, &[0.0, 0.0, 0.0], 9.81).unwrap();
    assert!(t[0].abs() < 1e-9);
    assert!((t[1] - 9.0252).abs() < 1e-6, "{t:?}");
    assert!((t[2] - 1.7658).abs() < 1e-6, "{t:?}");
    let t = gravity_torque(&model, &chain, &[0.7, 0.6, -1.1], 9.81).unwrap();
    assert!((t[1] - 7.54107665066134).abs() < 1e-6, "{t:?}");
    assert!((t[2] - 1.5496352877860202).abs() < 1e-6, "{t:?}");
}
