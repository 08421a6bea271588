// ±3.14 is the reference arm's joint limit, not π
#![allow(clippy::approx_constant)]

use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use armlab::bus::Bus;
use armlab::protocol::{Command, ServeMessage, StateFrame};
use armlab::reference::{reference_arm, REFERENCE_CONTROLLERS};
use armlab::sim::{parse_controllers, spawn, SimConfig};
use armlab_cli::serve::{serve, ServeOptions};
use tungstenite::{Message, WebSocket};

struct Server {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<std::io::Result<()>>>,
}

impl Server {
    fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let bus = Bus::new();
        let sim = spawn(
            reference_arm(),
            parse_controllers(REFERENCE_CONTROLLERS).unwrap(),
            SimConfig::default(),
            &bus,
        )
        .unwrap();
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = shutdown.clone();
        let handle = thread::spawn(move || serve(listener, sim, bus, ServeOptions::default(), flag));
        Self {
            addr,
            shutdown,
            handle: Some(handle),
        }
    }

    fn connect(&self) -> Client {
        let stream = TcpStream::connect(self.addr).unwrap();
        stream.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        let (ws, _) = tungstenite::client(format!("ws://{}/", self.addr), stream).unwrap();
        Client { ws }
    }

    fn stop(mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        self.handle.take().unwrap().join().unwrap().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
    }
}

struct Client {
    ws: WebSocket<TcpStream>,
}

impl Client {
    fn next(&mut self) -> ServeMessage {
        loop {
            match self.ws.read().unwrap() {
                Message::Text(t) => return serde_json::from_str(t.as_str()).unwrap(),
                _ => continue,
            }
        }
    }

    fn send(&mut self, msg: &ServeMessage) {
        self.send_raw(&serde_json::to_string(msg).unwrap());
    }

    fn send_raw(&mut self, text: &str) {
        self.ws.send(Message::text(text.to_string())).unwrap();
    }

    fn next_state(&mut self) -> StateFrame {
        loop {
            if let ServeMessage::State(s) = self.next() {
                return s;
            }
        }
    }

    /// Reads frames until an Error frame, returning its message and the
    /// state frames seen before it.
    fn until_error(&mut self) -> (String, Vec<StateFrame>) {
        let mut states = Vec::new();
        loop {
            match self.next() {
                ServeMessage::Error { message } => return (message, states),
                ServeMessage::State(s) => states.push(s),
                other => panic!("unexpected frame {other:?}"),
            }
        }
    }
}

fn joint_command(joint: &str, target: f64) -> ServeMessage {
    ServeMessage::Command(Command::Joint {
        joint: joint.into(),
        target,
    })
}

#[test]
fn first_frame_describes_the_model() {
    let server = Server::start();
    let mut client = server.connect();
    let ServeMessage::ModelDescription(d) = client.next() else {
        panic!("first frame must be the model description");
    };
    let joints: Vec<_> = d.revolute_joints().collect();
    assert_eq!(joints.len(), 3);
    for j in joints {
        assert_eq!((j.lower, j.upper), (Some(-3.14), Some(3.14)));
    }
    assert_eq!(d.namespace, "arm_model");
    let state = client.next_state();
    assert_eq!(state.names, ["base_to_00", "00_to_01", "01_to_02"]);
    server.stop();
}

#[test]
fn joint_command_converges() {
    let server = Server::start();
    let mut client = server.connect();
    client.next();
    client.send(&joint_command("base_to_00", 0.5));
    let start = Instant::now();
    loop {
        let s = client.next_state();
        if s.targets[0] == 0.5 && (s.q[0] - 0.5).abs() < 0.01 {
            break;
        }
        assert!(start.elapsed() < Duration::from_secs(5), "no convergence, last {s:?}");
    }
    server.stop();
}

#[test]
fn unreachable_ik_answers_with_error_and_keeps_streaming() {
    let server = Server::start();
    let mut client = server.connect();
    client.next();
    let before = client.next_state().t;
    client.send(&ServeMessage::Command(Command::IkTarget {
        ik_target: [2.0, 0.0, 0.5],
    }));
    let (message, _) = client.until_error();
    assert!(message.contains("unreachable"), "{message}");
    let after: Vec<f64> = (0..5).map(|_| client.next_state().t).collect();
    assert!(after.windows(2).all(|w| w[1] > w[0]));
    assert!(after[0] > before);
    server.stop();
}

#[test]
fn reachable_ik_sets_all_targets() {
    let server = Server::start();
    let mut client = server.connect();
    client.next();
    client.send(&ServeMessage::Command(Command::IkTarget {
        ik_target: [0.4, 0.0, 0.8],
    }));
    // from the zero pose, the nearest closed-form solution is (0, 0, π/2)
    let start = Instant::now();
    loop {
        let s = client.next_state();
        if (s.targets[2] - std::f64::consts::FRAC_PI_2).abs() < 1e-9 {
            assert!(s.targets[0].abs() < 1e-9 && s.targets[1].abs() < 1e-9, "{s:?}");
            break;
        }
        assert!(start.elapsed() < Duration::from_secs(2));
    }
    server.stop();
}

#[test]
fn malformed_frames_get_errors_not_disconnects() {
    let server = Server::start();
    let mut client = server.connect();
    client.next();
    client.send_raw("{not json");
    assert!(client.until_error().0.starts_with("malformed frame"));
    client.send(&joint_command("wrist", 1.0));
    assert!(client.until_error().0.contains("wrist"));
    client.send(&joint_command("02_to_tool", 1.0));
    assert!(client.until_error().0.contains("02_to_tool"));
    client.send(&ServeMessage::error("hello"));
    assert!(client.until_error().0.contains("Command"));
    client.next_state();
    server.stop();
}

#[test]
fn every_client_gets_the_description_first() {
    let server = Server::start();
    let mut a = server.connect();
    a.next();
    a.next_state();
    let mut b = server.connect();
    assert!(matches!(b.next(), ServeMessage::ModelDescription(_)));
    // a command from one client is visible to the other
    a.send(&joint_command("01_to_02", -0.25));
    let start = Instant::now();
    while b.next_state().targets[2] != -0.25 {
        assert!(start.elapsed() < Duration::from_secs(2));
    }
    drop(a);
    b.next_state();
    server.stop();
}

#[test]
fn serve_paces_to_wall_clock() {
    let server = Server::start();
    let mut client = server.connect();
    client.next();
    let first = client.next_state().t;
    let wall = Instant::now();
    let mut last = first;
    while wall.elapsed() < Duration::from_millis(500) {
        last = client.next_state().t;
    }
    let simulated = last - first;
    let elapsed = wall.elapsed().as_secs_f64();
    assert!((simulated - elapsed).abs() < 0.15, "sim {simulated} s vs wall {elapsed} s");
    server.stop();
}
