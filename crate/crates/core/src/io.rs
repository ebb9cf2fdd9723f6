//! Text formats for distributions and samples.
//!
//! Distribution files hold one `<bitstring> <probability>` entry per line;
//! sample files hold one sample over `{0,1,?}` per line. Blank lines and
//! everything after `#` are ignored in both.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rational::{format_fraction, parse_rational};
use crate::types::{BitString, LossySample, SparseDistribution};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn at(line: usize) -> impl Fn(Error) -> Error {
    move |e| Error::Parse {
        line,
        msg: e.to_string(),
    }
}

pub fn parse_distribution(text: &str) -> Result<SparseDistribution> {
    let mut support = Vec::new();
    let mut n = None;
    for (line, body) in content_lines(text) {
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [word, prob] = fields[..] else {
            return Err(Error::Parse {
                line,
                msg: "expected `<bitstring> <probability>`".into(),
            });
        };
        let s: BitString = word.parse().map_err(at(line))?;
        let p = parse_rational(prob).map_err(at(line))?;
        let len = *n.get_or_insert(s.len());
        if s.len() != len {
            return Err(Error::Parse {
                line,
                msg: format!("length {} differs from earlier entries ({len})", s.len()),
            });
        }
        support.push((s, p));
    }
    let n = n.ok_or_else(|| Error::InvalidDistribution("no entries".into()))?;
    SparseDistribution::new(n, support)
}

pub fn write_distribution<W: Write>(out: &mut W, dist: &SparseDistribution) -> Result<()> {
    for (s, p) in dist.support() {
        writeln!(out, "{s} {}", format_fraction(p))?;
    }
    Ok(())
}

/// Parses a sample file; every sample must have the same length.
pub fn parse_samples(text: &str) -> Result<(usize, Vec<LossySample>)> {
    let mut samples = Vec::new();
    let mut n = None;
    for (line, body) in content_lines(text) {
        let s: LossySample = body.parse().map_err(at(line))?;
        let len = *n.get_or_insert(s.len());
        if s.len() != len {
            return Err(Error::Parse {
                line,
                msg: format!("sample length {} differs from earlier samples ({len})", s.len()),
            });
        }
        samples.push(s);
    }
    let n = n.ok_or(Error::EmptySamples)?;
    Ok((n, samples))
}

pub fn write_samples<'a, W: Write>(out: &mut W, samples: impl IntoIterator<Item = &'a LossySample>) -> Result<()> {
    for s in samples {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

pub fn read_distribution(path: &Path) -> Result<SparseDistribution> {
    parse_distribution(&read(path)?)
}

pub fn read_samples(path: &Path) -> Result<(usize, Vec<LossySample>)> {
    parse_samples(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
