//! Text dataset of array records.
//!
//! ```text
//! JADE1 M=<M> N=<N> S=<S> delta=<δ>
//! re:im,re:im,...        (N samples; S·M lines, snapshot major, sensor minor)
//! ```
//!
//! Samples are written in shortest round-trip form, so a write/read cycle
//! reproduces the records bit for bit.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::channel::{ArrayConfig, SnapshotSet};
use crate::error::{JadeError, Result};

pub const MAGIC: &str = "JADE1";

pub fn write_dataset<W: Write>(set: &SnapshotSet, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{MAGIC} M={} N={} S={} delta={}",
        set.sensors(),
        set.samples(),
        set.snapshots(),
        set.array.delta
    )?;
    let mut line = String::new();
    for s in 0..set.snapshots() {
        for k in 0..set.sensors() {
            line.clear();
            for (i, v) in set.record(s, k).iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:e}:{:e}", v.re, v.im));
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> JadeError {
    JadeError::Parse {
        line,
        message: message.into(),
    }
}

fn header_field<'a>(fields: &'a [&str], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .ok_or_else(|| parse_err(1, format!("header is missing {key}=")))
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<SnapshotSet> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty dataset"))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.first() != Some(&MAGIC) {
        return Err(parse_err(1, format!("expected {MAGIC} header")));
    }
    let num = |key: &str| -> Result<usize> {
        header_field(&fields, key)?
            .parse()
            .map_err(|_| parse_err(1, format!("bad value for {key}")))
    };
    let (m, n, s) = (num("M")?, num("N")?, num("S")?);
    let delta: f64 = header_field(&fields, "delta")?
        .parse()
        .map_err(|_| parse_err(1, "bad value for delta"))?;

    let mut data = Vec::with_capacity(m * n * s);
    for row in 0..s * m {
        let lineno = row + 2;
        let line = lines
            .next()
            .ok_or_else(|| parse_err(lineno, format!("expected {} record lines", s * m)))??;
        let before = data.len();
        for item in line.trim().split(',') {
            let (re, im) = item
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("sample {item:?} is not re:im")))?;
            let re: f64 = re.trim().parse().map_err(|_| parse_err(lineno, format!("bad number {re:?}")))?;
            let im: f64 = im.trim().parse().map_err(|_| parse_err(lineno, format!("bad number {im:?}")))?;
            data.push(Complex64::new(re, im));
        }
        if data.len() - before != n {
            return Err(parse_err(
                lineno,
                format!("expected {n} samples, found {}", data.len() - before),
            ));
        }
    }
    for (extra, line) in lines.enumerate() {
        if !line?.trim().is_empty() {
            return Err(parse_err(s * m + 2 + extra, "unexpected trailing data"));
        }
    }
    SnapshotSet::from_data(ArrayConfig { sensors: m, delta }, s, n, data)
}
