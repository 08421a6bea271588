use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use armlab::bus::{Bus, MessageKind, ScalarCommand};
use armlab::kinematics::{
    fk, ik_3dof, ik_dls, Arm3Params, BaseBranch, DlsOptions, ElbowBranch, IkError, IkSolution, IkTarget,
    KinematicsError,
};
use armlab::sim::{parse_controllers, spawn, ControllerSet, CsvTrace, SimConfig, SpawnError, Simulation};
use armlab::urdf::{movable_chain, parse_urdf, validate_model, Chain, RobotModel, Severity};
use nalgebra::Vector3;

/// A failed command, carrying the process exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or dimensions: exit 1.
    Usage(String),
    /// Unreadable or unparsable input: exit 2.
    Input(String),
    /// No inverse kinematics solution: exit 3.
    Ik(String),
    /// The model could not be spawned: exit 4.
    Spawn(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Ik(_) => 3,
            CliError::Spawn(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Ik(m) | CliError::Spawn(m) => f.write_str(m),
        }
    }
}

impl From<KinematicsError> for CliError {
    fn from(e: KinematicsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SpawnError> for CliError {
    fn from(e: SpawnError) -> Self {
        CliError::Spawn(e.to_string())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))
}

/// Reads and parses a URDF file, forwarding parser warnings to `warn`.
pub fn load_model(path: &Path, warn: &mut dyn Write) -> Result<RobotModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let parsed = parse_urdf(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    for w in &parsed.warnings {
        let _ = writeln!(warn, "warning: {w}");
    }
    Ok(parsed.model)
}

pub fn load_controllers(path: &Path) -> Result<ControllerSet, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_controllers(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Comma-separated reals such as `0,1.57,-0.3`.
pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{v:?} is not a finite number")))
        })
        .collect()
}

/// Six-decimal fixed point without a negative zero.
fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

fn chain_to(model: &RobotModel, tip: Option<&str>) -> Result<Chain, CliError> {
    let tip = tip.map_or_else(|| model.default_tip(), str::to_string);
    movable_chain(model, &tip).map_err(|e| CliError::Usage(e.to_string()))
}

/// Prints every diagnostic; fails when any is an error.
pub fn validate(urdf: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(urdf, out)?;
    let diags = validate_model(&model);
    let mut text = String::new();
    for d in &diags {
        writeln!(text, "{d}").unwrap();
    }
    write_out(out, &text)?;
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    if errors > 0 {
        return Err(CliError::Usage(format!("{errors} error(s) in {}", urdf.display())));
    }
    Ok(())
}

/// `x y z roll pitch yaw` of the tip.
pub fn fk_command(urdf: &Path, tip: Option<&str>, q: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    let model = load_model(urdf, &mut std::io::sink())?;
    let chain = chain_to(&model, tip)?;
    let pose = fk(&chain, q)?;
    let rpy = pose.rpy();
    let values: Vec<String> = pose
        .translation
        .iter()
        .chain(rpy.iter())
        .map(|v| fixed(*v, 6))
        .collect();
    write_out(out, &format!("{}\n", values.join(" ")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkMethod {
    Geometric,
    Dls,
}

fn branch_label(s: &IkSolution) -> String {
    match s.branch {
        Some(b) => {
            let base = match b.base {
                BaseBranch::Front => "front",
                BaseBranch::Back => "back",
            };
            let elbow = match b.elbow {
                ElbowBranch::Up => "up",
                ElbowBranch::Down => "down",
            };
            format!("{base}-{elbow}")
        }
        None => format!("dls iterations={}", s.iterations),
    }
}

/// Angles print with nine decimals so that feeding them back to `fk`
/// reproduces the target to well under a micrometre.
fn solution_line(s: &IkSolution) -> String {
    let q: Vec<String> = s.q.iter().map(|v| fixed(*v, 9)).collect();
    let mut line = format!(
        "{} {} {} residual={:.3e}",
        q.join(" "),
        branch_label(s),
        if s.verified { "verified" } else { "unverified" },
        s.residual
    );
    if s.singular {
        line.push_str(" singular");
    }
    line
}

pub fn ik_command(
    urdf: &Path,
    tip: Option<&str>,
    target: &[f64],
    method: IkMethod,
    q0: Option<&[f64]>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let &[x, y, z] = target else {
        return Err(CliError::Usage(format!("--target needs 3 values, got {}", target.len())));
    };
    let target = Vector3::new(x, y, z);
    let model = load_model(urdf, &mut std::io::sink())?;
    let chain = chain_to(&model, tip)?;

    let solved = match method {
        IkMethod::Geometric => {
            let params = Arm3Params::from_chain(&chain).ok_or_else(|| {
                CliError::Usage("the geometric method needs a yaw-pitch-pitch 3-joint arm; try --method dls".into())
            })?;
            let limits: Option<Vec<_>> = chain.limits().into_iter().collect();
            ik_3dof(&params, &target, limits.as_deref())
        }
        IkMethod::Dls => {
            let zeros = vec![0.0; chain.dof()];
            let q0 = q0.unwrap_or(&zeros);
            ik_dls(&chain, q0, &IkTarget::Position(target), &DlsOptions::default()).map(|s| vec![s])
        }
    };
    let solutions = match solved.map_err(ik_error) {
        Ok(s) if s.is_empty() => Err(CliError::Ik("no solution within joint limits".into())),
        other => other,
    };
    let solutions = match solutions {
        Err(e @ CliError::Ik(_)) => {
            write_out(out, "UNREACHABLE\n")?;
            return Err(e);
        }
        other => other?,
    };
    let text: String = solutions.iter().map(|s| solution_line(s) + "\n").collect();
    write_out(out, &text)
}

fn ik_error(e: IkError) -> CliError {
    match e {
        IkError::Kinematics(k) => k.into(),
        IkError::BadOptions(m) => CliError::Usage(m),
        IkError::NonFiniteTarget => CliError::Usage("target is not finite".into()),
        other => CliError::Ik(other.to_string()),
    }
}

/// A scripted command `t,joint,value`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedCommand {
    pub t: f64,
    pub joint: String,
    pub value: f64,
}

impl std::str::FromStr for ScriptedCommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [t, joint, value] = parts[..] else {
            return Err(format!("expected t,joint,value, got {s:?}"));
        };
        let num = |v: &str| v.parse::<f64>().ok().filter(|v| v.is_finite());
        match (num(t), num(value)) {
            (Some(t), Some(value)) if t >= 0.0 && !joint.is_empty() => Ok(Self {
                t,
                joint: joint.to_string(),
                value,
            }),
            _ => Err(format!("bad command {s:?}")),
        }
    }
}

pub struct RunOptions {
    pub duration: f64,
    pub config: SimConfig,
    pub commands: Vec<ScriptedCommand>,
}

/// Spawns the model and plays the script; returns the CSV trace.
pub fn run_simulation(
    model: RobotModel,
    controllers: ControllerSet,
    options: RunOptions,
    warn: &mut dyn Write,
) -> Result<(Simulation, CsvTrace), CliError> {
    if !(options.duration >= 0.0 && options.duration.is_finite()) {
        return Err(CliError::Usage("--duration must be a non-negative number".into()));
    }
    let dt = options.config.dt;
    let bus = Bus::new();
    let mut sim = spawn(model, controllers, options.config, &bus)?;
    for w in sim.warnings() {
        let _ = writeln!(warn, "warning: {w}");
    }

    // commands snap to the nearest step boundary and go out just before it
    let mut script = Vec::new();
    for c in &options.commands {
        let topic = sim
            .command_topic(&c.joint)
            .ok_or_else(|| CliError::Usage(format!("joint {:?} has no controller", c.joint)))?;
        let publisher = bus
            .advertise(&topic, MessageKind::ScalarCommand)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        script.push(((c.t / dt).round() as u64, publisher, c.value));
    }
    script.sort_by_key(|(step, ..)| *step);

    let steps = armlab::sim::steps_for(options.duration, dt);
    let mut trace = CsvTrace::new();
    let mut next = 0;
    for _ in 0..steps {
        while next < script.len() && script[next].0 <= sim.step_count() {
            let (_, publisher, value) = &script[next];
            publisher
                .publish(ScalarCommand { value: *value })
                .map_err(|e| CliError::Usage(e.to_string()))?;
            next += 1;
        }
        if let Some(msg) = sim.step() {
            use armlab::sim::TraceSink;
            trace.record(&msg, &sim.targets());
        }
    }
    Ok((sim, trace))
}

pub fn run_command(
    urdf: &Path,
    controllers: &Path,
    csv: Option<&Path>,
    options: RunOptions,
    out: &mut dyn Write,
    warn: &mut dyn Write,
) -> Result<(), CliError> {
    let model = load_model(urdf, warn)?;
    let set = load_controllers(controllers)?;
    let (_, trace) = run_simulation(model, set, options, warn)?;
    match csv {
        Some(path) => fs::write(path, trace.as_str()).map_err(|e| io_error(path, e)),
        None => write_out(out, trace.as_str()),
    }
}
