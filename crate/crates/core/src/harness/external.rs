//! Controllers in another process, spoken to with one JSON object per line
//! over standard input and output.
//!
//! Harness to controller:
//!
//! ```text
//! {"type":"reset","seed":7,"t_max":232,"env":{...}}
//! {"type":"step","t":0,"agents":[{"phase":"OffGrid","position":null,...}]}
//! {"type":"close"}
//! ```
//!
//! Controller to harness: any line after `reset` (conventionally
//! `{"type":"ready"}`), then `{"actions":[2,0,4]}` after each `step`.
//! Replies are subject to the same deadlines as in-process controllers.

use crate::error::ExecError;
use crate::exec::Controller;
use crate::sim::{Action, AgentState, Environment, Simulation};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::time::Instant;

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Request<'a> {
    Reset { seed: u64, t_max: u32, env: &'a Environment },
    Step { t: u32, agents: &'a [AgentState] },
    Close,
}

#[derive(Deserialize)]
struct Reply {
    actions: Vec<Action>,
}

pub struct ExternalController {
    command: String,
    child: Option<Child>,
    stdin: Option<ChildStdin>,
    lines: Option<Receiver<String>>,
}

impl ExternalController {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalController { command: command.into(), child: None, stdin: None, lines: None }
    }

    fn spawn(&mut self) -> Result<(), ExecError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ExecError::Controller(format!("spawn `{}`: {e}", self.command)))?;
        let stdout = child.stdout.take().expect("piped");
        let (tx, rx) = channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        self.stdin = child.stdin.take();
        self.child = Some(child);
        self.lines = Some(rx);
        Ok(())
    }

    fn send(&mut self, req: &Request) -> Result<(), ExecError> {
        let stdin = self.stdin.as_mut().ok_or_else(|| ExecError::Controller("not started".into()))?;
        let mut line = serde_json::to_vec(req).map_err(|e| ExecError::Controller(e.to_string()))?;
        line.push(b'\n');
        stdin.write_all(&line).and_then(|_| stdin.flush()).map_err(|e| ExecError::Controller(format!("write: {e}")))
    }

    fn receive(&mut self, deadline: Instant) -> Result<String, ExecError> {
        let rx = self.lines.as_ref().ok_or_else(|| ExecError::Controller("not started".into()))?;
        let wait = deadline.saturating_duration_since(Instant::now());
        match rx.recv_timeout(wait) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => Err(ExecError::Controller("reply deadline passed".into())),
            Err(RecvTimeoutError::Disconnected) => Err(ExecError::Controller("controller exited".into())),
        }
    }
}

impl Controller for ExternalController {
    fn name(&self) -> String {
        format!("external:{}", self.command)
    }

    fn plan(&mut self, sim: &Simulation, deadline: Instant) -> Result<(), ExecError> {
        self.spawn()?;
        self.send(&Request::Reset { seed: sim.seed(), t_max: sim.t_max(), env: sim.env() })?;
        self.receive(deadline).map(|_| ())
    }

    fn act(&mut self, sim: &Simulation, deadline: Instant) -> Result<Vec<Action>, ExecError> {
        self.send(&Request::Step { t: sim.t(), agents: sim.agents() })?;
        let line = self.receive(deadline)?;
        let reply: Reply = serde_json::from_str(&line).map_err(|e| ExecError::Controller(format!("bad reply: {e}")))?;
        Ok(reply.actions)
    }
}

impl Drop for ExternalController {
    fn drop(&mut self) {
        if self.stdin.is_some() {
            let _ = self.send(&Request::Close);
        }
        self.stdin = None;
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}
