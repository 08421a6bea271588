// ±3.14 is the reference arm's joint limit, not π
#![allow(clippy::approx_constant)]

use armlab::bus::{Bus, MessageKind, ScalarCommand, Subscription};
use armlab::kinematics::{fk, fk_dh, geometric_jacobian, ik_3dof, numeric_jacobian, verify_ik, IkTarget};
use armlab::reference::{reference_chain, reference_dh_table, reference_limits, REFERENCE_ARM};
use armlab::urdf::{
    parse_urdf, write_urdf, Geometry, HardwareInterface, InertiaTensor, Joint, JointKind, JointLimits, Link, Origin,
    RobotModel, Transmission,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn in_limits() -> impl Strategy<Value = [f64; 3]> {
    [-3.14..3.14f64, -3.14..3.14f64, -3.14..3.14f64]
}

proptest! {
    #[test]
    fn urdf_and_dh_agree(q in in_limits()) {
        let a = fk(&reference_chain(), &q).unwrap();
        let b = fk_dh(&reference_dh_table(), &q).unwrap();
        prop_assert!((a.translation - b.translation).norm() < 1e-9);
    }

    #[test]
    fn ik_recovers_every_reachable_target(q in in_limits()) {
        let chain = reference_chain();
        let limits = reference_limits();
        let target = fk(&chain, &q).unwrap().translation;
        let sols = ik_3dof(&REFERENCE_ARM, &target, Some(&limits)).unwrap();
        prop_assert!(!sols.is_empty());
        for s in &sols {
            prop_assert!(s.verified);
            prop_assert!(verify_ik(&chain, &s.q, &IkTarget::Position(target), 1e-6).unwrap());
            prop_assert!(s.q.iter().zip(&limits).all(|(v, l)| l.contains(*v)));
        }
    }

    #[test]
    fn jacobians_agree(q in in_limits()) {
        let chain = reference_chain();
        let exact = geometric_jacobian(&chain, &q).unwrap();
        let approx = numeric_jacobian(&chain, &q, 1e-6).unwrap();
        prop_assert!((exact - approx).amax() < 1e-5);
    }
}

fn finite() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (finite(), finite(), finite()).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn unit() -> impl Strategy<Value = Vector3<f64>> {
    prop_oneof![Just(Vector3::x()), Just(Vector3::y()), Just(Vector3::z()), Just(-Vector3::y())]
}

fn geometry() -> impl Strategy<Value = Option<Geometry>> {
    prop_oneof![
        Just(None),
        vec3().prop_map(|v| Some(Geometry::Box { size: v.abs() })),
        (0.01..1.0f64, 0.01..2.0f64).prop_map(|(radius, length)| Some(Geometry::Cylinder { radius, length })),
        "[a-z/.]{1,12}".prop_map(|p| Some(Geometry::Mesh { path: format!("package://{p}"), scale: Vector3::repeat(0.001) })),
    ]
}

fn link(name: String) -> impl Strategy<Value = Link> {
    (0.01..100.0f64, 0.001..10.0f64, vec3(), vec3(), geometry()).prop_map(move |(mass, i, xyz, rpy, geometry)| {
        let origin = Origin { xyz, rpy };
        Link {
            name: name.clone(),
            mass,
            inertia: InertiaTensor::diagonal(i, i, i),
            inertial_origin: origin,
            // a visual origin only exists alongside visual geometry
            visual_origin: if geometry.is_some() { origin } else { Origin::default() },
            geometry,
        }
    })
}

fn joint(i: usize) -> impl Strategy<Value = Joint> {
    (vec3(), vec3(), unit(), -3.0..0.0f64, 0.0..3.0f64, any::<bool>()).prop_map(
        move |(xyz, rpy, axis, lower, upper, fixed)| Joint {
            name: format!("j{i}"),
            kind: if fixed { JointKind::Fixed } else { JointKind::Revolute },
            parent: format!("l{i}"),
            child: format!("l{}", i + 1),
            origin: Origin { xyz, rpy },
            axis,
            limits: (!fixed).then_some(JointLimits { lower, upper, effort: 50.0, velocity: 1.0 }),
        },
    )
}

fn serial_model() -> impl Strategy<Value = RobotModel> {
    (0usize..6).prop_flat_map(|n| {
        let links: Vec<_> = (0..=n).map(|i| link(format!("l{i}"))).collect();
        let joints: Vec<_> = (0..n).map(joint).collect();
        (links, joints).prop_map(|(links, joints)| {
            let transmissions = joints
                .iter()
                .filter(|j| j.kind == JointKind::Revolute)
                .map(|j| Transmission {
                    name: format!("t_{}", j.name),
                    joint: j.name.clone(),
                    interface: HardwareInterface::EffortJointInterface,
                })
                .collect();
            RobotModel { name: "gen".into(), links, joints, transmissions, root: "l0".into() }
        })
    })
}

proptest! {
    #[test]
    fn urdf_round_trip(model in serial_model()) {
        let parsed = parse_urdf(&write_urdf(&model)).unwrap();
        prop_assert!(parsed.warnings.is_empty());
        prop_assert_eq!(parsed.model, model);
    }
}

#[derive(Debug, Clone)]
enum Op {
    Subscribe(usize),
    Publish(usize),
    Drain(usize),
    Drop(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        1 => (0usize..3).prop_map(Op::Subscribe),
        3 => (0usize..3).prop_map(Op::Publish),
        1 => (0usize..8).prop_map(Op::Drain),
        1 => (0usize..8).prop_map(Op::Drop),
    ]
}

proptest! {
    // Each live subscription must see exactly the messages published on its
    // topic after it was created, once each, in publish order.
    #[test]
    fn bus_matches_queue_model(ops in prop::collection::vec(op(), 0..60)) {
        let topics = ["/t/a", "/t/b", "/u/c"];
        let bus = Bus::new();
        let pubs: Vec<_> = topics.iter().map(|t| bus.advertise(t, MessageKind::ScalarCommand).unwrap()).collect();
        let mut subs: Vec<(usize, Subscription, Vec<f64>)> = Vec::new();
        let mut counter = 0.0;
        for op in ops {
            match op {
                Op::Subscribe(t) => {
                    subs.push((t, bus.subscribe(topics[t], MessageKind::ScalarCommand).unwrap(), Vec::new()));
                }
                Op::Publish(t) => {
                    counter += 1.0;
                    let delivered = pubs[t].publish(ScalarCommand { value: counter }).unwrap();
                    let mut expected = 0;
                    for (_, _, model) in subs.iter_mut().filter(|(topic, ..)| *topic == t) {
                        model.push(counter);
                        expected += 1;
                    }
                    prop_assert_eq!(delivered, expected);
                }
                Op::Drain(i) if i < subs.len() => {
                    let (_, sub, model) = &mut subs[i];
                    let got: Vec<f64> = sub.drain().iter().map(|m| m.as_scalar().unwrap().value).collect();
                    prop_assert_eq!(&got, &*model);
                    model.clear();
                }
                Op::Drop(i) if i < subs.len() => {
                    subs.remove(i);
                }
                _ => {}
            }
        }
        for (_, sub, model) in &subs {
            let got: Vec<f64> = sub.drain().iter().map(|m| m.as_scalar().unwrap().value).collect();
            prop_assert_eq!(&got, model);
        }
    }
}
