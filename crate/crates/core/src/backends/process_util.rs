//! Line-oriented JSON child process shared by the adapter backends: one
//! request per line on stdin, one response per line on stdout.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::backends::BackendError;

pub(super) struct LineProcess {
    child: Mutex<ProcessIo>,
}

struct ProcessIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl LineProcess {
    pub(super) fn spawn(command: &[String]) -> Result<Self, BackendError> {
        let (program, args) = command.split_first().ok_or_else(|| {
            BackendError::Config("process backend requires a non-empty command".to_string())
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::Process(format!("failed to spawn {program:?}: {e}")))?;
        let stdin = child
            .stdin
            .take()
            .ok_or_else(|| BackendError::Process("child stdin unavailable".to_string()))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| BackendError::Process("child stdout unavailable".to_string()))?;
        Ok(LineProcess {
            child: Mutex::new(ProcessIo {
                child,
                stdin,
                stdout: BufReader::new(stdout),
            }),
        })
    }

    /// Writes one request line and reads one response line. Calls are
    /// serialized; the pipeline runs adapters single-threaded anyway.
    pub(super) fn round_trip(&self, request_line: &str) -> Result<String, BackendError> {
        let mut io = self.child.lock().expect("process lock");
        io.stdin
            .write_all(request_line.as_bytes())
            .and_then(|_| io.stdin.write_all(b"\n"))
            .and_then(|_| io.stdin.flush())
            .map_err(|e| BackendError::Process(format!("write to child failed: {e}")))?;
        let mut line = String::new();
        let read = io
            .stdout
            .read_line(&mut line)
            .map_err(|e| BackendError::Process(format!("read from child failed: {e}")))?;
        if read == 0 {
            return Err(BackendError::Process(
                "child closed stdout before responding".to_string(),
            ));
        }
        Ok(line)
    }
}

impl Drop for LineProcess {
    fn drop(&mut self) {
        if let Ok(mut io) = self.child.lock() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}
