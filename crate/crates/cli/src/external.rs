//! Line-delimited CSV session with a child process acting as the model.
//!
//! Each request row is written as one headerless CSV line on the child's
//! standard input; the child answers with one number per line on its standard
//! output, in order. An empty line ends the session.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use fairgsa_core::{BlackBox, Error as CoreError};
use ndarray::ArrayView2;
use thiserror::Error;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_BATCH: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExternalError {
    #[error("model process failed: {0}")]
    ChildCrashed(String),
    #[error("model protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("model did not answer within {0:?}")]
    Timeout(Duration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalModelProtocol {
    pub command: String,
    pub batch_size: usize,
    pub timeout: Duration,
}

impl ExternalModelProtocol {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            batch_size: DEFAULT_BATCH,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

pub struct ExternalModel {
    protocol: ExternalModelProtocol,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl ExternalModel {
    pub fn spawn(protocol: ExternalModelProtocol) -> Result<Self, ExternalError> {
        if protocol.batch_size == 0 {
            return Err(ExternalError::ProtocolViolation(
                "batch size must be positive".into(),
            ));
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&protocol.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| {
                ExternalError::ChildCrashed(format!("cannot start '{}': {e}", protocol.command))
            })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            protocol,
            child,
            stdin,
            lines: rx,
        })
    }

    fn exit_problem(&mut self, got: usize, expected: usize) -> ExternalError {
        let status = self.child.wait().ok();
        match status {
            Some(s) if !s.success() => ExternalError::ChildCrashed(format!("exited with {s}")),
            _ => ExternalError::ProtocolViolation(format!(
                "expected {expected} replies, got {got} before end of output"
            )),
        }
    }

    fn batch(&mut self, rows: ArrayView2<f64>) -> Result<Vec<f64>, ExternalError> {
        let mut request = String::new();
        for row in rows.outer_iter() {
            let mut first = true;
            for v in row {
                if !v.is_finite() {
                    return Err(ExternalError::ProtocolViolation(
                        "request contains a non-finite value".into(),
                    ));
                }
                if !first {
                    request.push(',');
                }
                first = false;
                request.push_str(&v.to_string());
            }
            request.push('\n');
        }
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| ExternalError::ChildCrashed("session already closed".into()))?;
        if stdin
            .write_all(request.as_bytes())
            .and_then(|_| stdin.flush())
            .is_err()
        {
            return Err(self.exit_problem(0, rows.nrows()));
        }
        let deadline = Instant::now() + self.protocol.timeout;
        let mut out = Vec::with_capacity(rows.nrows());
        while out.len() < rows.nrows() {
            let left = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(left) {
                Ok(Ok(line)) => {
                    let value: f64 = line.trim().parse().map_err(|_| {
                        ExternalError::ProtocolViolation(format!(
                            "reply '{}' is not a number",
                            line.trim()
                        ))
                    })?;
                    out.push(value);
                }
                Ok(Err(e)) => {
                    return Err(ExternalError::ProtocolViolation(format!(
                        "unreadable reply: {e}"
                    )))
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(ExternalError::Timeout(self.protocol.timeout))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(self.exit_problem(out.len(), rows.nrows()))
                }
            }
        }
        Ok(out)
    }

    /// Predictions for `rows`, sent in batches, in row order.
    pub fn query(&mut self, rows: ArrayView2<f64>) -> Result<Vec<f64>, ExternalError> {
        let mut out = Vec::with_capacity(rows.nrows());
        let mut start = 0;
        while start < rows.nrows() {
            let end = (start + self.protocol.batch_size).min(rows.nrows());
            out.extend(self.batch(rows.slice(ndarray::s![start..end, ..]))?);
            start = end;
        }
        Ok(out)
    }

    /// Send the terminating empty line and wait for the child to exit.
    pub fn close(mut self) -> Result<(), ExternalError> {
        self.finish()
    }

    fn finish(&mut self) -> Result<(), ExternalError> {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = stdin.write_all(b"\n").and_then(|_| stdin.flush());
        }
        let deadline = Instant::now() + self.protocol.timeout;
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => return Ok(()),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => {
                    let _ = self.child.kill();
                    let _ = self.child.wait();
                    return Err(ExternalError::Timeout(self.protocol.timeout));
                }
            }
        }
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if self.stdin.is_some() {
            let _ = self.finish();
        }
    }
}

impl BlackBox for ExternalModel {
    fn predict(&mut self, rows: ArrayView2<f64>) -> fairgsa_core::Result<Vec<f64>> {
        self.query(rows)
            .map_err(|e| CoreError::Model(e.to_string()))
    }
}
