//! Black-box maps backed by a child process: one JSON element per line on
//! its stdin, one per line on its stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use loewner::decompose::BlackBoxMap;
use loewner::interchange::to_json_line;
use loewner::{Algebra, Element, Error, IntervalKind, Result, Tolerances};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PluginSpec {
    /// Program followed by its arguments.
    pub command: Vec<String>,
    /// Optional process answering with preimages.
    #[serde(default)]
    pub inverse_command: Option<Vec<String>>,
    pub source: Algebra,
    #[serde(default)]
    pub target: Option<Algebra>,
    pub interval: IntervalKind,
    #[serde(default)]
    pub target_interval: Option<IntervalKind>,
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Pipe {
    fn call(&mut self, a: &Element) -> Result<Element> {
        let line = to_json_line(a)?;
        writeln!(self.stdin, "{line}")?;
        self.stdin.flush()?;
        let mut reply = String::new();
        if self.stdout.read_line(&mut reply)? == 0 {
            return Err(Error::Callback("map process closed its output".into()));
        }
        serde_json::from_str(reply.trim()).map_err(|e| Error::Callback(format!("bad reply from map process: {e}")))
    }
}

impl Drop for Pipe {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn spawn_pipe(command: &[String]) -> Result<Arc<Mutex<Pipe>>> {
    let (program, args) = command
        .split_first()
        .ok_or_else(|| Error::Parameter("plugin command is empty".into()))?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()?;
    let stdin = child.stdin.take().expect("piped");
    let stdout = BufReader::new(child.stdout.take().expect("piped"));
    Ok(Arc::new(Mutex::new(Pipe { child, stdin, stdout })))
}

impl PluginSpec {
    pub fn spawn(&self, tol: &Tolerances) -> Result<BlackBoxMap> {
        let forward = spawn_pipe(&self.command)?;
        let target = self.target.clone().unwrap_or_else(|| self.source.clone());
        let map = BlackBoxMap::new(
            self.source.clone(),
            target,
            self.interval,
            self.target_interval.unwrap_or(self.interval),
            move |a| forward.lock().expect("map process lock").call(a),
            tol,
        )?;
        match &self.inverse_command {
            Some(cmd) => {
                let backward = spawn_pipe(cmd)?;
                map.with_inverse(move |b| backward.lock().expect("map process lock").call(b))
            }
            None => Ok(map),
        }
    }
}
