use std::fmt::Write as _;

use crate::bus::JointStateMsg;

/// Receives every published joint state together with the targets in force.
pub trait TraceSink {
    fn record(&mut self, state: &JointStateMsg, targets: &[f64]);
}

impl TraceSink for Vec<(JointStateMsg, Vec<f64>)> {
    fn record(&mut self, state: &JointStateMsg, targets: &[f64]) {
        self.push((state.clone(), targets.to_vec()));
    }
}

/// CSV trace with one row per published state:
/// `t,<j>_q,<j>_qd,<j>_effort,<j>_target` for each joint `j`.
/// Floats use Rust's shortest round-trip formatting, so two identical runs
/// produce identical bytes.
#[derive(Debug, Default, Clone)]
pub struct CsvTrace {
    text: String,
    rows: usize,
}

impl CsvTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

impl TraceSink for CsvTrace {
    fn record(&mut self, state: &JointStateMsg, targets: &[f64]) {
        if self.text.is_empty() {
            self.text.push('t');
            for name in &state.names {
                write!(self.text, ",{name}_q,{name}_qd,{name}_effort,{name}_target").unwrap();
            }
            self.text.push('\n');
        }
        write!(self.text, "{}", state.t).unwrap();
        let columns = state.q.iter().zip(&state.qd).zip(&state.effort).zip(targets);
        for (((q, qd), effort), target) in columns {
            write!(self.text, ",{q},{qd},{effort},{target}").unwrap();
        }
        self.text.push('\n');
        self.rows += 1;
    }
}
