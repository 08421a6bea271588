//! Controller configuration in the indented `key: value` layout used by
//! ros_control YAML files:
//!
//! ```text
//! arm_model:
//! joint_state_controller:
//!   type: joint_state_controller/JointStateController
//!   publish_rate: 50
//! joint1_position_controller:
//!   type: effort_controllers/JointPositionController
//!   joint: base_to_00
//!   pid: {p: 100.00, i: 0.01, d: 10.00}
//! ```
//!
//! The first key is the namespace. Controller blocks may sit at the same
//! indentation as the namespace or be nested under it; their fields must be
//! indented deeper than the block header. `pid` may be an inline map or a
//! nested block.

use std::collections::HashSet;

use thiserror::Error;

use crate::control::PidGains;

pub const STATE_CONTROLLER_TYPE: &str = "joint_state_controller/JointStateController";
pub const POSITION_CONTROLLER_TYPE: &str = "effort_controllers/JointPositionController";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("controller {controller:?} has unsupported type {kind:?}")]
    UnknownControllerType { controller: String, kind: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionController {
    pub name: String,
    pub joint: String,
    pub gains: PidGains,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSet {
    pub namespace: String,
    pub state_controller: String,
    /// Joint state publication rate, Hz.
    pub state_publish_rate: f64,
    pub controllers: Vec<PositionController>,
}

impl ControllerSet {
    pub fn for_joint(&self, joint: &str) -> Option<&PositionController> {
        self.controllers.iter().find(|c| c.joint == joint)
    }

    pub fn state_topic(&self) -> String {
        format!("/{}/joint_states", self.namespace)
    }

    pub fn command_topic(&self, controller: &str) -> String {
        format!("/{}/{}/command", self.namespace, controller)
    }
}

#[derive(Debug)]
struct Line<'a> {
    number: usize,
    indent: usize,
    key: &'a str,
    value: &'a str,
}

fn err(line: usize, message: impl Into<String>) -> ControllerConfigError {
    ControllerConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

fn tokenize(text: &str) -> Result<Vec<Line<'_>>, ControllerConfigError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let content = strip_comment(raw).trim_end();
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start_matches(' ').len();
        let body = &content[indent..];
        if body.starts_with('\t') {
            return Err(err(number, "tabs are not allowed for indentation"));
        }
        let Some((key, value)) = body.split_once(':') else {
            return Err(err(number, format!("expected `key: value`, found {body:?}")));
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(err(number, format!("invalid key {key:?}")));
        }
        lines.push(Line {
            number,
            indent,
            key,
            value: value.trim(),
        });
    }
    Ok(lines)
}

fn parse_number(line: usize, key: &str, text: &str) -> Result<f64, ControllerConfigError> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| err(line, format!("{key}: {text:?} is not a number")))
}

/// `{p: 1, i: 2, d: 3}` into key/value pairs.
fn inline_map(line: usize, text: &str) -> Result<Vec<(&str, &str)>, ControllerConfigError> {
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| err(line, format!("expected an inline map, found {text:?}")))?;
    inner
        .split(',')
        .filter(|entry| !entry.trim().is_empty())
        .map(|entry| {
            entry
                .split_once(':')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(line, format!("bad map entry {entry:?}")))
        })
        .collect()
}

fn gains(line: usize, entries: &[(&str, &str)]) -> Result<PidGains, ControllerConfigError> {
    let get = |name: &str| -> Result<f64, ControllerConfigError> {
        let (_, v) = entries
            .iter()
            .find(|(k, _)| *k == name)
            .ok_or_else(|| err(line, format!("pid is missing {name}")))?;
        parse_number(line, name, v)
    };
    let (p, i, d) = (get("p")?, get("i")?, get("d")?);
    PidGains::new(p, i, d).ok_or_else(|| err(line, "pid gains must be non-negative"))
}

#[derive(Default)]
struct Block<'a> {
    header: usize,
    name: &'a str,
    kind: Option<&'a str>,
    joint: Option<&'a str>,
    publish_rate: Option<f64>,
    pid: Option<PidGains>,
}

pub fn parse_controllers(text: &str) -> Result<ControllerSet, ControllerConfigError> {
    let lines = tokenize(text)?;
    let Some((first, rest)) = lines.split_first() else {
        return Err(err(1, "empty controller configuration"));
    };
    if !first.value.is_empty() {
        return Err(err(first.number, "the first key must be the namespace"));
    }
    let namespace = first.key;
    let Some(block_indent) = rest.first().map(|l| l.indent) else {
        return Err(err(first.number, "namespace declares no controllers"));
    };
    if block_indent < first.indent {
        return Err(err(rest[0].number, "controller indented less than the namespace"));
    }

    let mut blocks: Vec<Block> = Vec::new();
    let mut field_indent = None;
    let mut i = 0;
    while i < rest.len() {
        let line = &rest[i];
        i += 1;
        if line.indent == block_indent {
            if !line.value.is_empty() {
                return Err(err(line.number, format!("expected a controller block, found {:?}", line.key)));
            }
            blocks.push(Block {
                header: line.number,
                name: line.key,
                ..Block::default()
            });
            field_indent = None;
            continue;
        }
        if line.indent < block_indent {
            return Err(err(line.number, "unexpected dedent"));
        }
        let Some(block) = blocks.last_mut() else {
            return Err(err(line.number, "field outside a controller block"));
        };
        let indent = *field_indent.get_or_insert(line.indent);
        if line.indent != indent {
            return Err(err(line.number, "inconsistent indentation"));
        }
        match line.key {
            "type" => block.kind = Some(line.value),
            "joint" => block.joint = Some(line.value),
            "publish_rate" => block.publish_rate = Some(parse_number(line.number, "publish_rate", line.value)?),
            "pid" if line.value.is_empty() => {
                // nested block form
                let mut entries = Vec::new();
                while i < rest.len() && rest[i].indent > indent {
                    entries.push((rest[i].key, rest[i].value));
                    i += 1;
                }
                block.pid = Some(gains(line.number, &entries)?);
            }
            "pid" => block.pid = Some(gains(line.number, &inline_map(line.number, line.value)?)?),
            _ if line.value.is_empty() => {
                return Err(err(line.number, format!("unexpected nested block {:?}", line.key)));
            }
            _ => {}
        }
    }

    let mut state: Option<(String, f64)> = None;
    let mut controllers = Vec::new();
    let mut names = HashSet::new();
    let mut joints = HashSet::new();
    for block in blocks {
        if !names.insert(block.name) {
            return Err(err(block.header, format!("duplicate controller {:?}", block.name)));
        }
        let missing = |field: &str| err(block.header, format!("{} is missing {field}", block.name));
        match block.kind.ok_or_else(|| missing("type"))? {
            STATE_CONTROLLER_TYPE => {
                let rate = block.publish_rate.ok_or_else(|| missing("publish_rate"))?;
                if rate <= 0.0 {
                    return Err(err(block.header, "publish_rate must be positive"));
                }
                if state.is_some() {
                    return Err(err(block.header, "more than one joint state controller"));
                }
                state = Some((block.name.to_string(), rate));
            }
            POSITION_CONTROLLER_TYPE => {
                let joint = block.joint.ok_or_else(|| missing("joint"))?;
                if !joints.insert(joint) {
                    return Err(err(block.header, format!("joint {joint:?} has two controllers")));
                }
                controllers.push(PositionController {
                    name: block.name.to_string(),
                    joint: joint.to_string(),
                    gains: block.pid.ok_or_else(|| missing("pid"))?,
                });
            }
            other => {
                return Err(ControllerConfigError::UnknownControllerType {
                    controller: block.name.to_string(),
                    kind: other.to_string(),
                })
            }
        }
    }
    let (state_controller, state_publish_rate) =
        state.ok_or_else(|| err(first.number, "no joint_state_controller declared"))?;

    Ok(ControllerSet {
        namespace: namespace.to_string(),
        state_controller,
        state_publish_rate,
        controllers,
    })
}
