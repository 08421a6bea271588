//! Desk-scale serial-manipulator simulator: URDF models, forward and inverse
//! kinematics, PID joint control, and a fixed-step simulation wired through
//! an in-process publish/subscribe bus.
//!
//! ```
//! use armlab::kinematics::fk;
//! use armlab::reference::reference_chain;
//!
//! let tip = fk(&reference_chain(), &[0.0, 0.0, 0.0]).unwrap();
//! assert!((tip.translation.x - 0.7).abs() < 1e-12);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bus;
pub mod control;
pub mod kinematics;
pub mod protocol;
pub mod reference;
pub mod sim;
pub mod urdf;

pub use bus::{Bus, BusError, JointStateMsg, Message, MessageKind, ScalarCommand};
pub use kinematics::{fk, IkError, IkSolution, IkTarget, Transform};
pub use urdf::{parse_urdf, validate_model, Chain, RobotModel};
