//! External black-box models speaking the line protocol.
//!
//! The tool spawns the command once.  Each evaluation writes one line of N
//! space-separated decimal floats (17 significant digits) to the process
//! stdin and reads back one line holding a single decimal float.  A reader
//! thread feeds lines through a channel so every read carries a timeout.
//! Protocol conformance is checked by a handshake evaluation at the origin
//! when the model is constructed.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use gadd_core::error::{GaddError, Result};
use gadd_core::model::Model;

use crate::config::RestartPolicy;

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Process {
    fn spawn(argv: &[String]) -> Result<Process> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| {
                GaddError::ModelEvaluation(format!("cannot spawn {:?}: {}", argv[0], e))
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(Process {
            child,
            stdin,
            lines,
        })
    }

    fn round_trip(&mut self, x: &[f64], timeout: Duration) -> Result<f64> {
        let mut line = String::with_capacity(x.len() * 26);
        for (i, v) in x.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:.16e}", v));
        }
        line.push('\n');
        self.stdin.write_all(line.as_bytes()).map_err(|e| {
            GaddError::ModelEvaluation(format!("cannot write to external model: {}", e))
        })?;
        self.stdin.flush().map_err(|e| {
            GaddError::ModelEvaluation(format!("cannot flush external model input: {}", e))
        })?;
        let reply = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                return Err(GaddError::ModelEvaluation(format!(
                    "external model read failed: {}",
                    e
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(GaddError::ModelEvaluation(
                    "external model closed its output".into(),
                ))
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(GaddError::ModelEvaluation(format!(
                    "external model timed out after {:?}",
                    timeout
                )))
            }
        };
        let trimmed = reply.trim();
        let value: f64 = trimmed.parse().map_err(|_| {
            GaddError::ModelEvaluation(format!(
                "external model emitted a malformed line: {:?}",
                trimmed
            ))
        })?;
        if !value.is_finite() {
            return Err(GaddError::ModelEvaluation(format!(
                "external model returned a non-finite value: {:?}",
                trimmed
            )));
        }
        Ok(value)
    }

    fn shutdown(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A black-box response served by an external process.
pub struct ExternalModel {
    dimension: usize,
    argv: Vec<String>,
    timeout: Duration,
    restart: RestartPolicy,
    process: Mutex<Process>,
    counter: AtomicU64,
}

impl ExternalModel {
    /// Spawns the process and performs the handshake evaluation at the
    /// origin.
    pub fn spawn(
        dimension: usize,
        argv: Vec<String>,
        timeout: Duration,
        restart: RestartPolicy,
    ) -> Result<ExternalModel> {
        let process = Process::spawn(&argv)?;
        let model = ExternalModel {
            dimension,
            argv,
            timeout,
            restart,
            process: Mutex::new(process),
            counter: AtomicU64::new(0),
        };
        let origin = vec![0.0; dimension];
        model.evaluate(&origin)?;
        Ok(model)
    }
}

impl Model for ExternalModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(GaddError::DimensionMismatch {
                expected: self.dimension,
                actual: x.len(),
            });
        }
        self.counter.fetch_add(1, Ordering::Relaxed);
        let mut process = self.process.lock().expect("external model lock");
        match process.round_trip(x, self.timeout) {
            Ok(v) => Ok(v),
            Err(first_failure) => match self.restart {
                RestartPolicy::Never => Err(first_failure),
                RestartPolicy::OnFailure => {
                    process.shutdown();
                    *process = Process::spawn(&self.argv)?;
                    process.round_trip(x, self.timeout).map_err(|e| {
                        GaddError::ModelEvaluation(format!(
                            "retry after restart failed: {} (first failure: {})",
                            e, first_failure
                        ))
                    })
                }
            },
        }
    }

    fn evaluation_count(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }
}

impl Drop for ExternalModel {
    fn drop(&mut self) {
        if let Ok(mut p) = self.process.lock() {
            p.shutdown();
        }
    }
}
