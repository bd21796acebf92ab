use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

pub fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn reader(input: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match input {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("cannot open {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(io::stdin().lock())),
    })
}

pub fn read_lines(input: Option<&Path>) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for line in reader(input)?.lines() {
        lines.push(line.context("reading input")?);
    }
    Ok(lines)
}

pub fn write_jsonl<T: serde::Serialize>(w: &mut dyn Write, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, &item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn finish(mut w: Box<dyn Write>) -> Result<()> {
    match w.flush() {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing output"),
    }
}

/// `println!` that tolerates a closed stdout.
pub fn print_line(s: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match writeln!(out, "{s}").and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e).context("writing output"),
        _ => Ok(()),
    }
}
