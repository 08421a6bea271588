//! Websocket bridge between one simulation and any number of panel clients.
//!
//! The calling thread owns the [`Simulation`] and paces it to the wall clock.
//! One thread per client reads `Command` frames and forwards them over a
//! channel; outgoing frames go through a bounded per-client queue that drops
//! its oldest frame when full, so a slow client never stalls the loop.

use std::collections::VecDeque;
use std::io::ErrorKind;
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use armlab::bus::{Bus, MessageKind, Publisher, ScalarCommand};
use armlab::kinematics::{ik_3dof, ik_dls, Arm3Params, DlsOptions, IkTarget};
use armlab::protocol::{Command, ModelDescription, ServeMessage, StateFrame};
use armlab::sim::Simulation;
use nalgebra::Vector3;
use tungstenite::{Message, WebSocket};

const POLL: Duration = Duration::from_millis(5);
/// Falling further behind the wall clock than this resets the pacing origin
/// instead of fast-forwarding.
const MAX_LAG: Duration = Duration::from_millis(250);

#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Frames buffered per client before the oldest is dropped.
    pub client_queue: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self { client_queue: 64 }
    }
}

/// Outgoing frames for one client.
pub struct ClientQueue {
    frames: Mutex<VecDeque<String>>,
    capacity: usize,
    dropped: AtomicU64,
    closed: AtomicBool,
}

impl ClientQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            frames: Mutex::new(VecDeque::new()),
            capacity: capacity.max(1),
            dropped: AtomicU64::new(0),
            closed: AtomicBool::new(false),
        }
    }

    pub fn push(&self, frame: String) {
        let mut frames = self.frames.lock().unwrap_or_else(|p| p.into_inner());
        if frames.len() == self.capacity {
            frames.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        frames.push_back(frame);
    }

    pub fn pop(&self) -> Option<String> {
        self.frames.lock().unwrap_or_else(|p| p.into_inner()).pop_front()
    }

    pub fn len(&self) -> usize {
        self.frames.lock().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed)
    }
}

fn encode(msg: &ServeMessage) -> String {
    serde_json::to_string(msg).expect("protocol types always serialize")
}

enum ToSim {
    Register(Arc<ClientQueue>),
    Command(Arc<ClientQueue>, Command),
}

/// Runs until `shutdown` is set. Returns once every client thread has exited.
pub fn serve(
    listener: TcpListener,
    mut sim: Simulation,
    bus: Bus,
    options: ServeOptions,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<()> {
    let description = ModelDescription::from_model(sim.model(), sim.chain(), &sim.controllers().namespace);
    let (tx, rx) = mpsc::channel();
    listener.set_nonblocking(true)?;
    let acceptor = {
        let shutdown = shutdown.clone();
        let description = description.clone();
        thread::spawn(move || accept_loop(listener, tx, description, options, shutdown))
    };

    let publishers: Vec<Option<Publisher>> = sim
        .joint_names()
        .iter()
        .map(|j| {
            sim.command_topic(j)
                .map(|t| bus.advertise(&t, MessageKind::ScalarCommand).expect("topic exists with this kind"))
        })
        .collect();
    let mut bridge = Bridge {
        description,
        publishers,
        clients: Vec::new(),
    };

    let dt = Duration::from_secs_f64(sim.config().dt);
    let mut origin = Instant::now();
    let mut sim_elapsed = Duration::ZERO;
    while !shutdown.load(Ordering::Relaxed) {
        bridge.handle_incoming(&rx, &sim);
        if let Some(msg) = sim.step() {
            let frame = encode(&ServeMessage::State(StateFrame::new(msg, sim.targets())));
            bridge.clients.retain(|c| !c.closed.load(Ordering::Relaxed));
            for client in &bridge.clients {
                client.push(frame.clone());
            }
        }
        sim_elapsed += dt;
        let now = origin.elapsed();
        if sim_elapsed > now {
            thread::sleep(sim_elapsed - now);
        } else if now - sim_elapsed > MAX_LAG {
            origin = Instant::now();
            sim_elapsed = Duration::ZERO;
        }
    }
    acceptor.join().expect("accept loop does not panic")
}

struct Bridge {
    description: ModelDescription,
    publishers: Vec<Option<Publisher>>,
    clients: Vec<Arc<ClientQueue>>,
}

impl Bridge {
    fn handle_incoming(&mut self, rx: &Receiver<ToSim>, sim: &Simulation) {
        while let Ok(msg) = rx.try_recv() {
            match msg {
                ToSim::Register(client) => self.clients.push(client),
                ToSim::Command(client, command) => {
                    if let Err(message) = self.apply(command, sim) {
                        client.push(encode(&ServeMessage::error(message)));
                    }
                }
            }
        }
    }

    fn publish_target(&self, index: usize, value: f64) -> Result<(), String> {
        match &self.publishers[index] {
            Some(p) => p.publish(ScalarCommand { value }).map(|_| ()).map_err(|e| e.to_string()),
            None => Err(format!("joint {} has no controller", self.description.joints[index].name)),
        }
    }

    fn apply(&self, command: Command, sim: &Simulation) -> Result<(), String> {
        command.validate(&self.description)?;
        match command {
            Command::Joint { joint, target } => {
                let index = sim
                    .joint_names()
                    .iter()
                    .position(|j| *j == joint)
                    .ok_or_else(|| format!("unknown joint {joint:?}"))?;
                self.publish_target(index, target)
            }
            Command::IkTarget { ik_target } => {
                let q = solve_ik(sim, Vector3::from(ik_target))
                    .ok_or_else(|| format!("unreachable: no joint solution reaches {ik_target:?}"))?;
                for (i, v) in q.into_iter().enumerate() {
                    if self.publishers[i].is_some() {
                        self.publish_target(i, v)?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Closed form when the chain is a yaw-pitch-pitch arm (choosing the
/// solution nearest the current pose), damped least squares otherwise.
fn solve_ik(sim: &Simulation, target: Vector3<f64>) -> Option<Vec<f64>> {
    let chain = sim.chain();
    let current = sim.positions();
    if let Some(params) = Arm3Params::from_chain(chain) {
        let limits: Option<Vec<_>> = chain.limits().into_iter().collect();
        let distance = |q: &[f64]| q.iter().zip(&current).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        return ik_3dof(&params, &target, limits.as_deref())
            .ok()?
            .into_iter()
            .min_by(|a, b| distance(&a.q).total_cmp(&distance(&b.q)))
            .map(|s| s.q);
    }
    ik_dls(chain, &current, &IkTarget::Position(target), &DlsOptions::default())
        .ok()
        .map(|s| s.q)
}

fn accept_loop(
    listener: TcpListener,
    tx: Sender<ToSim>,
    description: ModelDescription,
    options: ServeOptions,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<()> {
    let mut workers = Vec::new();
    while !shutdown.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, _)) => {
                let queue = Arc::new(ClientQueue::new(options.client_queue));
                queue.push(encode(&ServeMessage::ModelDescription(description.clone())));
                let (tx, description, shutdown) = (tx.clone(), description.clone(), shutdown.clone());
                workers.push(thread::spawn(move || {
                    // a failed handshake or dropped connection ends only this client
                    let _ = client_loop(stream, queue, tx, description, shutdown);
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => return Err(e),
        }
    }
    for w in workers {
        let _ = w.join();
    }
    Ok(())
}

fn would_block(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn client_loop(
    stream: TcpStream,
    queue: Arc<ClientQueue>,
    tx: Sender<ToSim>,
    description: ModelDescription,
    shutdown: Arc<AtomicBool>,
) -> tungstenite::Result<()> {
    stream.set_nonblocking(false)?;
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    ws.get_mut().set_read_timeout(Some(POLL))?;
    let result = session(&mut ws, &queue, &tx, &description, &shutdown);
    queue.closed.store(true, Ordering::Relaxed);
    if shutdown.load(Ordering::Relaxed) {
        let _ = ws.close(None);
        let _ = ws.flush();
    }
    result
}

fn session(
    ws: &mut WebSocket<TcpStream>,
    queue: &Arc<ClientQueue>,
    tx: &Sender<ToSim>,
    description: &ModelDescription,
    shutdown: &AtomicBool,
) -> tungstenite::Result<()> {
    // the description is already queued, so it is the first frame sent
    if tx.send(ToSim::Register(queue.clone())).is_err() {
        return Ok(());
    }
    while !shutdown.load(Ordering::Relaxed) {
        // drain the queue only as fast as the socket accepts frames
        loop {
            match ws.flush() {
                Ok(()) => {}
                Err(e) if would_block(&e) => break,
                Err(e) => return Err(e),
            }
            let Some(frame) = queue.pop() else { break };
            match ws.write(Message::text(frame)) {
                Ok(()) => {}
                Err(e) if would_block(&e) => break,
                Err(e) => return Err(e),
            }
        }

        match ws.read() {
            Ok(Message::Text(text)) => {
                let reply = match serde_json::from_str::<ServeMessage>(text.as_str()) {
                    Ok(ServeMessage::Command(command)) => match command.validate(description) {
                        Ok(()) => {
                            if tx.send(ToSim::Command(queue.clone(), command)).is_err() {
                                return Ok(());
                            }
                            None
                        }
                        Err(message) => Some(message),
                    },
                    Ok(_) => Some("clients may only send Command frames".to_string()),
                    Err(e) => Some(format!("malformed frame: {e}")),
                };
                if let Some(message) = reply {
                    queue.push(encode(&ServeMessage::error(message)));
                }
            }
            Ok(Message::Binary(_)) => queue.push(encode(&ServeMessage::error("frames must be text"))),
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(e) if would_block(&e) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_drops_oldest() {
        let q = ClientQueue::new(2);
        for f in ["a", "b", "c"] {
            q.push(f.into());
        }
        assert_eq!(q.dropped(), 1);
        assert_eq!(q.pop().as_deref(), Some("b"));
        assert_eq!(q.pop().as_deref(), Some("c"));
        assert!(q.is_empty());
    }
}
