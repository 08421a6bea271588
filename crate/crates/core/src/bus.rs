//! In-process publish/subscribe topic graph.
//!
//! Topics are named with slash-separated paths and carry exactly one
//! [`MessageKind`]. Delivery is pull-based: every [`Subscription`] owns a FIFO
//! queue that the consumer drains explicitly, so a single-threaded simulation
//! stays deterministic. There is no latching, no QoS and no queue bound.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard, Weak};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::ModelDescription;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    ScalarCommand,
    JointStateMsg,
    ModelDescription,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MessageKind::ScalarCommand => "ScalarCommand",
            MessageKind::JointStateMsg => "JointStateMsg",
            MessageKind::ModelDescription => "ModelDescription",
        };
        f.write_str(s)
    }
}

/// A single real-valued command; radians for position controllers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarCommand {
    pub value: f64,
}

/// Snapshot of every simulated joint at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStateMsg {
    pub t: f64,
    pub names: Vec<String>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub effort: Vec<f64>,
}

impl JointStateMsg {
    pub fn position_of(&self, joint: &str) -> Option<f64> {
        self.names.iter().position(|n| n == joint).map(|i| self.q[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Scalar(ScalarCommand),
    JointState(JointStateMsg),
    Model(ModelDescription),
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Scalar(_) => MessageKind::ScalarCommand,
            Message::JointState(_) => MessageKind::JointStateMsg,
            Message::Model(_) => MessageKind::ModelDescription,
        }
    }

    pub fn as_scalar(&self) -> Option<ScalarCommand> {
        match self {
            Message::Scalar(c) => Some(*c),
            _ => None,
        }
    }

    pub fn into_joint_state(self) -> Option<JointStateMsg> {
        match self {
            Message::JointState(m) => Some(m),
            _ => None,
        }
    }
}

impl From<ScalarCommand> for Message {
    fn from(c: ScalarCommand) -> Self {
        Message::Scalar(c)
    }
}

impl From<JointStateMsg> for Message {
    fn from(m: JointStateMsg) -> Self {
        Message::JointState(m)
    }
}

impl From<ModelDescription> for Message {
    fn from(m: ModelDescription) -> Self {
        Message::Model(m)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BusError {
    #[error("malformed topic name {0:?}")]
    BadName(String),
    #[error("topic {topic} carries {expected}, not {found}")]
    KindMismatch {
        topic: String,
        expected: MessageKind,
        found: MessageKind,
    },
    #[error("invalid message on {topic}: {reason}")]
    InvalidMessage { topic: String, reason: String },
}

type Queue = Arc<Mutex<VecDeque<Message>>>;

struct TopicEntry {
    kind: MessageKind,
    subscribers: Vec<Weak<Mutex<VecDeque<Message>>>>,
    last_stamp: Option<f64>,
}

#[derive(Default)]
struct BusInner {
    topics: BTreeMap<String, TopicEntry>,
}

/// Shared handle to a topic graph. Clones refer to the same graph.
#[derive(Clone, Default)]
pub struct Bus {
    inner: Arc<Mutex<BusInner>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // A panicking publisher cannot leave a queue half-written, so poisoning is ignored.
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Names look like `/ns/controller/command`: a leading slash, then non-empty
/// segments of ASCII alphanumerics and underscores.
pub fn is_valid_topic_name(name: &str) -> bool {
    let Some(rest) = name.strip_prefix('/') else {
        return false;
    };
    !rest.is_empty()
        && rest.split('/').all(|seg| {
            !seg.is_empty() && seg.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    fn register(&self, name: &str, kind: MessageKind) -> Result<(), BusError> {
        if !is_valid_topic_name(name) {
            return Err(BusError::BadName(name.to_string()));
        }
        let mut inner = lock(&self.inner);
        match inner.topics.get(name) {
            Some(entry) if entry.kind != kind => Err(BusError::KindMismatch {
                topic: name.to_string(),
                expected: entry.kind,
                found: kind,
            }),
            Some(_) => Ok(()),
            None => {
                inner.topics.insert(
                    name.to_string(),
                    TopicEntry {
                        kind,
                        subscribers: Vec::new(),
                        last_stamp: None,
                    },
                );
                Ok(())
            }
        }
    }

    pub fn advertise(&self, name: &str, kind: MessageKind) -> Result<Publisher, BusError> {
        self.register(name, kind)?;
        Ok(Publisher {
            bus: self.clone(),
            topic: name.to_string(),
            kind,
        })
    }

    pub fn subscribe(&self, name: &str, kind: MessageKind) -> Result<Subscription, BusError> {
        self.register(name, kind)?;
        let queue: Queue = Arc::default();
        let mut inner = lock(&self.inner);
        let entry = inner.topics.get_mut(name).expect("registered above");
        entry.subscribers.push(Arc::downgrade(&queue));
        Ok(Subscription {
            topic: name.to_string(),
            kind,
            queue,
        })
    }

    pub fn topic_count(&self) -> usize {
        lock(&self.inner).topics.len()
    }

    /// Topic names with their kinds, sorted by name.
    pub fn topics(&self) -> Vec<(String, MessageKind)> {
        lock(&self.inner)
            .topics
            .iter()
            .map(|(n, e)| (n.clone(), e.kind))
            .collect()
    }

    fn deliver(&self, topic: &str, message: Message) -> Result<usize, BusError> {
        let mut inner = lock(&self.inner);
        let entry = inner
            .topics
            .get_mut(topic)
            .expect("publishers only exist for registered topics");
        if entry.kind != message.kind() {
            return Err(BusError::KindMismatch {
                topic: topic.to_string(),
                expected: entry.kind,
                found: message.kind(),
            });
        }
        let invalid = |reason: &str| BusError::InvalidMessage {
            topic: topic.to_string(),
            reason: reason.to_string(),
        };
        match &message {
            Message::Scalar(c) if !c.value.is_finite() => return Err(invalid("value is not finite")),
            Message::JointState(m) => {
                let n = m.names.len();
                if m.q.len() != n || m.qd.len() != n || m.effort.len() != n {
                    return Err(invalid("joint state lists differ in length"));
                }
                if !m.t.is_finite() {
                    return Err(invalid("timestamp is not finite"));
                }
                if entry.last_stamp.is_some_and(|last| m.t < last) {
                    return Err(invalid("timestamp went backwards"));
                }
                entry.last_stamp = Some(m.t);
            }
            _ => {}
        }

        entry.subscribers.retain(|w| w.strong_count() > 0);
        let mut delivered = 0;
        for queue in entry.subscribers.iter().filter_map(Weak::upgrade) {
            lock(&queue).push_back(message.clone());
            delivered += 1;
        }
        Ok(delivered)
    }
}

/// Publishing end of one topic.
#[derive(Clone)]
pub struct Publisher {
    bus: Bus,
    topic: String,
    kind: MessageKind,
}

impl Publisher {
    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn kind(&self) -> MessageKind {
        self.kind
    }

    /// Appends `message` to every live subscription and returns how many were reached.
    pub fn publish(&self, message: impl Into<Message>) -> Result<usize, BusError> {
        self.bus.deliver(&self.topic, message.into())
    }
}

/// Receiving end of one topic: a FIFO of everything published after creation.
/// Dropping it detaches it from the bus.
pub struct Subscription {
    topic: String,
    kind: MessageKind,
    queue: Queue,
}

impl Subscription {
    pub fn topic(&self) -> &str {
        &self.topic
    }

    pub fn kind(&self) -> MessageKind {
        self.kind
    }

    pub fn try_next(&self) -> Option<Message> {
        lock(&self.queue).pop_front()
    }

    pub fn drain(&self) -> Vec<Message> {
        lock(&self.queue).drain(..).collect()
    }

    pub fn pending(&self) -> usize {
        lock(&self.queue).len()
    }
}
