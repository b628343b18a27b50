use std::io::{self, BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;
use wait_timeout::ChildExt;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot start `{cmd}`: {source}")]
    Spawn { cmd: String, source: io::Error },
    #[error("solver I/O: {0}")]
    Io(#[from] io::Error),
    #[error("timeout")]
    Timeout,
    #[error("solver exited unexpectedly")]
    Closed,
}

fn spawn(argv: &[String]) -> Result<Child, RunError> {
    let (prog, args) = argv.split_first().ok_or_else(|| RunError::Spawn {
        cmd: String::new(),
        source: io::Error::new(io::ErrorKind::InvalidInput, "empty command"),
    })?;
    Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| RunError::Spawn {
            cmd: argv.join(" "),
            source,
        })
}

/// Runs `argv` with `script` on stdin and returns its stdout. The process
/// is killed when `timeout` elapses.
pub fn run_script(argv: &[String], script: &str, timeout: Option<Duration>) -> Result<String, RunError> {
    let mut child = spawn(argv)?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = script.to_owned();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut buf = String::new();
        let _ = stderr.read_to_string(&mut buf);
        buf
    });
    let status = match timeout {
        Some(t) => match child.wait_timeout(t)? {
            Some(s) => Some(s),
            None => {
                let _ = child.kill();
                let _ = child.wait();
                None
            }
        },
        None => Some(child.wait()?),
    };
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    match status {
        None => Err(RunError::Timeout),
        Some(_) if out.trim().is_empty() && !err.trim().is_empty() => {
            Ok(format!("(error \"{}\")", err.trim().replace('"', "'")))
        }
        Some(_) => Ok(out),
    }
}

/// Net parenthesis depth of a response line, ignoring string contents.
fn depth_delta(line: &str, in_string: &mut bool) -> i64 {
    let mut d = 0;
    for c in line.chars() {
        match c {
            '"' => *in_string = !*in_string,
            '(' if !*in_string => d += 1,
            ')' if !*in_string => d -= 1,
            _ => {}
        }
    }
    d
}

/// Long-lived interactive solver process. Commands are appended with
/// [`Session::send`]; responses are read one s-expression at a time.
pub struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Session {
    pub fn start(argv: &[String]) -> Result<Session, RunError> {
        let mut child = spawn(argv)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Session {
            child,
            stdin,
            lines: rx,
        })
    }

    pub fn send(&mut self, cmd: &str) -> Result<(), RunError> {
        self.stdin.write_all(cmd.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        Ok(())
    }

    /// Reads one complete response, waiting until `deadline` at most.
    pub fn read_response(&mut self, deadline: Option<Instant>) -> Result<String, RunError> {
        self.stdin.flush()?;
        let mut out = String::new();
        let mut depth = 0;
        let mut in_string = false;
        loop {
            let line = match deadline {
                Some(d) => {
                    let left = d.saturating_duration_since(Instant::now());
                    match self.lines.recv_timeout(left) {
                        Ok(l) => l,
                        Err(RecvTimeoutError::Timeout) => return Err(RunError::Timeout),
                        Err(RecvTimeoutError::Disconnected) => return Err(RunError::Closed),
                    }
                }
                None => self.lines.recv().map_err(|_| RunError::Closed)?,
            };
            if line.trim().is_empty() && depth == 0 {
                continue;
            }
            depth += depth_delta(&line, &mut in_string);
            out.push_str(&line);
            out.push('\n');
            if depth <= 0 && !in_string {
                return Ok(out);
            }
        }
    }

    /// Sends `cmd` and reads its response.
    pub fn ask(&mut self, cmd: &str, deadline: Option<Instant>) -> Result<String, RunError> {
        self.send(cmd)?;
        self.read_response(deadline)
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn run_script_reads_stdout() {
        let out = run_script(&sh("cat"), "sat\n", Some(Duration::from_secs(10))).unwrap();
        assert_eq!(out, "sat\n");
    }

    #[test]
    fn run_script_times_out() {
        let err = run_script(&sh("sleep 5"), "", Some(Duration::from_millis(100))).unwrap_err();
        assert!(matches!(err, RunError::Timeout));
    }

    #[test]
    fn missing_program_is_a_spawn_error() {
        let err = run_script(&["/nonexistent/solver".to_string()], "", None).unwrap_err();
        assert!(matches!(err, RunError::Spawn { .. }));
    }

    #[test]
    fn session_reads_multiline_responses() {
        let mut s = Session::start(&sh("cat")).unwrap();
        assert_eq!(s.ask("sat", None).unwrap(), "sat\n");
        let r = s
            .ask("((x 1)\n (y (- 2)))", Some(Instant::now() + Duration::from_secs(10)))
            .unwrap();
        assert_eq!(r, "((x 1)\n (y (- 2)))\n");
    }

    #[test]
    fn session_deadline() {
        let mut s = Session::start(&sh("sleep 5")).unwrap();
        let err = s
            .ask("(check-sat)", Some(Instant::now() + Duration::from_millis(100)))
            .unwrap_err();
        assert!(matches!(err, RunError::Timeout));
    }
}
