//! Adaptation managers running as child processes.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::protocol::{parse_response, AdaptationManager, ProtocolError, ResolveRequest, ResolveResponse};
use super::AmError;

/// Stderr kept in memory per process; only the tail is ever reported.
const STDERR_BUFFER_CHARS: usize = 16 * 1024;
const SHUTDOWN_GRACE: Duration = Duration::from_secs(1);
/// How long to wait for a process that closed its output to finish writing
/// stderr and exit.
const EXIT_GRACE: Duration = Duration::from_millis(500);

/// Splits a command template on whitespace and substitutes `{source}`.
pub fn expand_command(template: &str, source: &Path) -> Result<Vec<String>, AmError> {
    let count = template.matches("{source}").count();
    if count != 1 {
        return Err(AmError::InvalidSpec(format!(
            "command template must contain exactly one {{source}} placeholder, found {count}"
        )));
    }
    let argv: Vec<String> = template
        .split_whitespace()
        .map(|part| part.replace("{source}", &source.to_string_lossy()))
        .collect();
    if argv.is_empty() {
        return Err(AmError::InvalidSpec("empty command template".into()));
    }
    Ok(argv)
}

pub struct ExternalAm {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    stderr: Arc<Mutex<String>>,
    stderr_reader: Option<JoinHandle<()>>,
    timeout: Duration,
    dead: bool,
}

impl ExternalAm {
    pub fn spawn(template: &str, source: &Path, timeout: Duration) -> Result<Self, AmError> {
        if !source.is_file() {
            return Err(AmError::SpawnFailed(format!(
                "source file {} does not exist",
                source.display()
            )));
        }
        let argv = expand_command(template, source)?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .env("PYTHONUNBUFFERED", "1")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| AmError::SpawnFailed(format!("{}: {e}", argv[0])))?;

        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let mut err_pipe = child.stderr.take().expect("stderr piped");
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        let stderr_reader = thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().expect("stderr lock");
                s.push_str(&String::from_utf8_lossy(&buf[..n]));
                let excess = s.chars().count().saturating_sub(STDERR_BUFFER_CHARS);
                if excess > 0 {
                    let cut = s.char_indices().nth(excess).map_or(s.len(), |(i, _)| i);
                    s.drain(..cut);
                }
            }
        });

        Ok(Self {
            stdin: child.stdin.take(),
            child,
            lines,
            stderr,
            stderr_reader: Some(stderr_reader),
            timeout,
            dead: false,
        })
    }

    fn captured_stderr(&self) -> String {
        self.stderr.lock().expect("stderr lock").clone()
    }

    /// Waits briefly for the process to exit and its stderr to drain.
    fn collect_exit(&mut self) -> Option<std::process::ExitStatus> {
        let deadline = Instant::now() + EXIT_GRACE;
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(st)) => break Some(st),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break None,
            }
        };
        if status.is_some() {
            if let Some(h) = self.stderr_reader.take() {
                let _ = h.join();
            }
        }
        status
    }

    /// Abandons the process at once; a failed AM gets no shutdown grace so
    /// that `resolve` stays within its time budget.
    fn fail(&mut self, err: ProtocolError) -> ProtocolError {
        self.dead = true;
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
        err.with_stderr(&self.captured_stderr())
    }
}

impl AdaptationManager for ExternalAm {
    fn resolve(&mut self, request: &ResolveRequest) -> Result<ResolveResponse, ProtocolError> {
        if self.dead {
            return Err(ProtocolError::Eof { stderr: String::new() });
        }
        let mut line = request.to_line();
        line.push('\n');
        let written = match self.stdin.as_mut() {
            Some(stdin) => stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()),
            None => Err(std::io::Error::from(std::io::ErrorKind::BrokenPipe)),
        };
        if written.is_err() {
            return Err(self.crashed_or_eof());
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(reply) => parse_response(&reply, request.step).map_err(|e| self.fail(e)),
            Err(RecvTimeoutError::Timeout) => {
                let ms = self.timeout.as_millis() as u64;
                Err(self.fail(ProtocolError::Timeout { ms, stderr: String::new() }))
            }
            Err(RecvTimeoutError::Disconnected) => Err(self.crashed_or_eof()),
        }
    }

    fn shutdown(&mut self) {
        self.dead = true;
        drop(self.stdin.take());
        let deadline = Instant::now() + SHUTDOWN_GRACE;
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ExternalAm {
    fn crashed_or_eof(&mut self) -> ProtocolError {
        let status = self.collect_exit();
        let stderr = self.captured_stderr();
        let failed = status.is_some_and(|st| !st.success());
        let err = if failed || !stderr.trim().is_empty() {
            ProtocolError::Crashed { stderr: String::new() }
        } else {
            ProtocolError::Eof { stderr: String::new() }
        };
        self.fail(err)
    }
}

impl Drop for ExternalAm {
    fn drop(&mut self) {
        if self.child.try_wait().ok().flatten().is_none() {
            self.shutdown();
        }
    }
}
