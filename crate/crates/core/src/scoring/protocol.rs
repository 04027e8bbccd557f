//! Line protocol for external scorers.
//!
//! The scorer runs as a child process. Its first stdout line is a handshake
//! `{"scorer_id": ..., "log_base": "e"}`. Each request is one JSON line
//! `{"id": ..., "text": ...}` on stdin; each response is one line
//! `{"id", "tokens", "logprobs", "total"}` or `{"id", "error"}`, in request
//! order. Log bases `2` and `10` are accepted and converted to natural log.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};

use super::{ScoreError, ScoreRecord, Scorer, TOTAL_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub scorer_id: String,
    pub log_base: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Scored { id: String, tokens: Vec<String>, logprobs: Vec<f64>, total: f64 },
    Failed { id: Option<String>, error: String },
}

fn log_base_factor(base: &str) -> Option<f64> {
    match base {
        "e" => Some(1.0),
        "2" => Some(std::f64::consts::LN_2),
        "10" => Some(std::f64::consts::LN_10),
        _ => None,
    }
}

/// Checks one response line against the request it answers.
pub fn parse_response(line: &str, expected_id: &str, scorer_id: &str, factor: f64) -> Result<ScoreRecord, ScoreError> {
    let violation = |message: String| ScoreError::Protocol { id: expected_id.to_string(), message };
    let resp: Response = serde_json::from_str(line).map_err(|e| violation(format!("malformed response line: {e}")))?;
    match resp {
        Response::Failed { id, error } => {
            if id.as_deref().is_some_and(|i| i != expected_id) {
                return Err(violation(format!("error response for {id:?} out of order")));
            }
            Err(ScoreError::Rejected { id: expected_id.to_string(), message: error })
        }
        Response::Scored { id, tokens, logprobs, total } => {
            if id != expected_id {
                return Err(violation(format!("response id {id:?} out of order")));
            }
            if tokens.len() != logprobs.len() {
                return Err(violation(format!("{} tokens but {} logprobs", tokens.len(), logprobs.len())));
            }
            if tokens.is_empty() {
                return Err(violation("no tokens".into()));
            }
            if logprobs.iter().any(|x| !x.is_finite()) || !total.is_finite() {
                return Err(violation("non-finite log-probability".into()));
            }
            let sum: f64 = logprobs.iter().sum();
            if (sum - total).abs() > TOTAL_TOLERANCE {
                return Err(violation(format!("total {total} differs from sum of logprobs {sum}")));
            }
            let lps: Vec<f64> = logprobs.iter().map(|x| x * factor).collect();
            Ok(ScoreRecord::from_tokens(&id, scorer_id, tokens, lps))
        }
    }
}

/// Client for a scorer child process.
pub struct ExternalScorer {
    id: String,
    factor: f64,
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
    broken: Option<String>,
}

impl ExternalScorer {
    /// Starts `command` (split with shell quoting rules) and reads the handshake.
    pub fn spawn(command: &str) -> Result<Self, ScoreError> {
        let argv = shell_words::split(command).map_err(|e| ScoreError::Process(format!("cannot parse scorer command: {e}")))?;
        let (program, args) = argv.split_first().ok_or_else(|| ScoreError::Process("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScoreError::Process(format!("cannot start {program:?}: {e}")))?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut line = String::new();
        stdout.read_line(&mut line)?;
        if line.is_empty() {
            let status = child.wait()?;
            return Err(ScoreError::Process(format!("scorer exited before handshake ({status})")));
        }
        let hs: Handshake =
            serde_json::from_str(&line).map_err(|e| ScoreError::Process(format!("bad handshake {:?}: {e}", line.trim_end())))?;
        let factor = log_base_factor(&hs.log_base).ok_or_else(|| ScoreError::Process(format!("unsupported log_base {:?}", hs.log_base)))?;
        Ok(ExternalScorer { id: hs.scorer_id, factor, child, stdin: Some(stdin), stdout, broken: None })
    }

    fn read_response(&mut self, expected_id: &str) -> Result<ScoreRecord, ScoreError> {
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            let status = self.child.try_wait()?.map(|s| s.to_string()).unwrap_or_else(|| "still running".into());
            let msg = format!("scorer closed its output ({status})");
            self.broken = Some(msg.clone());
            return Err(ScoreError::Process(msg));
        }
        let r = parse_response(&line, expected_id, &self.id, self.factor);
        if let Err(ScoreError::Protocol { message, .. }) = &r {
            self.broken = Some(format!("stream desynchronised: {message}"));
            // Stop the child so a pipelined writer cannot block on a full pipe.
            let _ = self.child.kill();
        }
        r
    }

    fn check_alive(&self) -> Result<(), ScoreError> {
        match &self.broken {
            Some(m) => Err(ScoreError::Process(m.clone())),
            None => Ok(()),
        }
    }
}

fn write_request<W: Write>(out: &mut W, id: &str, text: &str) -> io::Result<()> {
    serde_json::to_writer(&mut *out, &Request { id: id.into(), text: text.into() })?;
    out.write_all(b"\n")
}

impl Scorer for ExternalScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&mut self, sentence_id: &str, text: &str) -> Result<ScoreRecord, ScoreError> {
        self.check_alive()?;
        if text.trim().is_empty() {
            return Err(ScoreError::EmptySentence(sentence_id.to_string()));
        }
        let stdin = self.stdin.as_mut().ok_or_else(|| ScoreError::Process("scorer input closed".into()))?;
        write_request(stdin, sentence_id, text)?;
        stdin.flush()?;
        self.read_response(sentence_id)
    }

    /// Pipelined: a writer thread streams requests while responses are read.
    fn score_batch(&mut self, items: &[(String, String)]) -> Vec<Result<ScoreRecord, ScoreError>> {
        let sendable: Vec<usize> = (0..items.len()).filter(|&i| !items[i].1.trim().is_empty()).collect();
        let mut results: Vec<Option<Result<ScoreRecord, ScoreError>>> = (0..items.len()).map(|_| None).collect();
        for (i, (id, text)) in items.iter().enumerate() {
            if text.trim().is_empty() {
                results[i] = Some(Err(ScoreError::EmptySentence(id.clone())));
            }
        }
        if let Err(e) = self.check_alive() {
            for &i in &sendable {
                results[i] = Some(Err(ScoreError::Process(e.to_string())));
            }
            return results.into_iter().map(Option::unwrap).collect();
        }
        let Some(mut stdin) = self.stdin.take() else {
            return items.iter().map(|_| Err(ScoreError::Process("scorer input closed".into()))).collect();
        };
        let order = &sendable;
        let (stdin, write_result) = std::thread::scope(|s| {
            let writer = s.spawn(move || {
                let mut sent = || {
                    for &i in order {
                        write_request(&mut stdin, &items[i].0, &items[i].1)?;
                    }
                    stdin.flush()
                };
                let r = sent();
                (stdin, r)
            });
            for &i in &sendable {
                let r = match self.check_alive() {
                    Ok(()) => self.read_response(&items[i].0),
                    Err(e) => Err(e),
                };
                results[i] = Some(r);
            }
            writer.join().expect("request writer panicked")
        });
        self.stdin = Some(stdin);
        if let Err(e) = write_result {
            log::warn!("writing requests to scorer failed: {e}");
        }
        results.into_iter().map(Option::unwrap).collect()
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.wait();
    }
}

/// Serves `scorer` over the protocol until `input` ends.
pub fn serve_protocol<S: Scorer + ?Sized, R: BufRead, W: Write>(scorer: &mut S, input: R, mut output: W) -> io::Result<()> {
    let hs = Handshake { scorer_id: scorer.id().to_string(), log_base: "e".into() };
    serde_json::to_writer(&mut output, &hs)?;
    output.write_all(b"\n")?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let resp = match serde_json::from_str::<Request>(&line) {
            Err(e) => Response::Failed { id: None, error: format!("malformed request: {e}") },
            Ok(req) => match scorer.score(&req.id, &req.text) {
                Ok(r) => Response::Scored { id: req.id, tokens: r.tokens, logprobs: r.token_logprobs, total: r.total },
                Err(e) => Response::Failed { id: Some(req.id), error: e.to_string() },
            },
        };
        serde_json::to_writer(&mut output, &resp)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}
