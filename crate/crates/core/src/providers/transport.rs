use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde_json::Value;
use wait_timeout::ChildExt;

use super::{ProviderSpec, RequestKind};
use crate::error::{Error, Result};

pub(crate) struct Request<'a> {
    pub kind: RequestKind,
    pub id: &'a str,
    pub audio: Option<&'a Path>,
    pub context: Option<&'a str>,
}

fn failed(spec: &ProviderSpec, detail: impl Into<String>) -> Error {
    Error::ProviderFailed {
        provider: spec.name.clone(),
        detail: detail.into(),
    }
}

fn malformed(spec: &ProviderSpec, detail: impl Into<String>) -> Error {
    Error::MalformedPayload {
        provider: spec.name.clone(),
        detail: detail.into(),
    }
}

/// Environment variable carrying a param: `CTXDECODE_PARAM_` plus the key
/// upper-cased with every non-alphanumeric character replaced by `_`.
pub fn param_env_name(key: &str) -> String {
    let k: String = key
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_uppercase()
            } else {
                '_'
            }
        })
        .collect();
    format!("CTXDECODE_PARAM_{k}")
}

/// Runs `location [args..] <request> <id> <audio|->` and returns the first
/// stdout line without its terminator.
pub(crate) fn run_subprocess(spec: &ProviderSpec, req: &Request<'_>) -> Result<String> {
    let mut cmd = Command::new(&spec.location);
    cmd.args(&spec.args)
        .arg(req.kind.as_str())
        .arg(req.id)
        .arg(req.audio.map_or_else(|| "-".into(), |p| p.as_os_str().to_owned()))
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    for (k, v) in &spec.params {
        cmd.env(param_env_name(k), v);
    }
    let mut child = cmd
        .spawn()
        .map_err(|e| failed(spec, format!("cannot start `{}`: {e}", spec.location)))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let context = req.context.unwrap_or("").to_owned();
    let writer = std::thread::spawn(move || {
        // a provider that ignores stdin may close it early
        let _ = stdin.write_all(context.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let status = child
        .wait_timeout(Duration::from_secs(spec.timeout_s))
        .map_err(|e| failed(spec, format!("wait failed: {e}")))?;
    let Some(status) = status else {
        let _ = child.kill();
        let _ = child.wait();
        return Err(Error::ProviderTimeout {
            provider: spec.name.clone(),
            seconds: spec.timeout_s,
        });
    };
    let _ = writer.join();
    let out = out_reader
        .join()
        .expect("stdout reader")
        .map_err(|e| failed(spec, format!("reading stdout: {e}")))?;
    let err = err_reader.join().expect("stderr reader");
    if !status.success() {
        let tail = String::from_utf8_lossy(&err);
        let tail = tail.trim();
        let tail: String = tail
            .chars()
            .rev()
            .take(400)
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect();
        return Err(failed(spec, format!("{status}; stderr: {tail}")));
    }
    let text = String::from_utf8(out).map_err(|_| malformed(spec, "stdout is not UTF-8"))?;
    let line = text.lines().next().unwrap_or("");
    if line.trim().is_empty() {
        return Err(malformed(spec, "empty output line"));
    }
    Ok(line.to_string())
}

fn is_timeout(err: &ureq::Transport) -> bool {
    use std::error::Error as _;
    let mut src = err.source();
    while let Some(e) = src {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            return matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock);
        }
        src = e.source();
    }
    false
}

/// `POST location?request=..&id=..[&context=..]&param.<k>=<v>` with the raw
/// audio file (possibly empty) as body; the reply must be a JSON object.
pub(crate) fn http_post(spec: &ProviderSpec, req: &Request<'_>) -> Result<serde_json::Map<String, Value>> {
    let body = match req.audio {
        Some(p) => std::fs::read(p).map_err(|e| Error::io(p, e))?,
        None => Vec::new(),
    };
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs(spec.timeout_s))
        .build();
    let mut call = agent
        .post(&spec.location)
        .set("Content-Type", "audio/wav")
        .query("request", req.kind.as_str())
        .query("id", req.id);
    if let Some(ctx) = req.context {
        call = call.query("context", ctx);
    }
    for (k, v) in &spec.params {
        call = call.query(&format!("param.{k}"), v);
    }
    let resp = match call.send_bytes(&body) {
        Ok(r) => r,
        Err(ureq::Error::Status(code, r)) => {
            let text = r.into_string().unwrap_or_default();
            return Err(failed(spec, format!("HTTP {code}: {}", text.trim())));
        }
        Err(ureq::Error::Transport(t)) if is_timeout(&t) => {
            return Err(Error::ProviderTimeout {
                provider: spec.name.clone(),
                seconds: spec.timeout_s,
            })
        }
        Err(ureq::Error::Transport(t)) => return Err(failed(spec, t.to_string())),
    };
    let text = resp
        .into_string()
        .map_err(|e| malformed(spec, format!("unreadable body: {e}")))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(malformed(spec, "reply is not a JSON object")),
        Err(e) => Err(malformed(spec, format!("reply is not JSON: {e}"))),
    }
}

pub(crate) fn malformed_payload(spec: &ProviderSpec, detail: impl Into<String>) -> Error {
    malformed(spec, detail)
}
