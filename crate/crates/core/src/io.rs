//! Text formats and serde helpers.
//!
//! - pairs file: preamble `# n=<n> m=<m>`, optional header `x,y`, then one
//!   1-based record `x,y` per line;
//! - count file: first line `<m> <n> <S>`, then `i j count` per nonzero entry
//!   (1-based);
//! - label file: one 1-based label per line;
//! - matrix CSV: one comma-separated row per line.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::model::{ingest_pairs, CountMatrix, PairDataset};
use crate::{Error, Partition, Result};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_index(token: &str, line: usize, what: &str) -> Result<usize> {
    let v: usize = token
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{what} {token:?} is not a nonnegative integer")))?;
    Ok(v)
}

fn parse_preamble(text: &str, line: usize) -> Result<(usize, usize)> {
    let mut n = None;
    let mut m = None;
    for token in text.trim_start_matches('#').split_whitespace() {
        match token.split_once('=') {
            Some(("n", v)) => n = Some(parse_index(v, line, "n")?),
            Some(("m", v)) => m = Some(parse_index(v, line, "m")?),
            _ => {}
        }
    }
    match (n, m) {
        (Some(n), Some(m)) if n > 0 && m > 0 => Ok((n, m)),
        _ => Err(parse_err(line, "preamble must declare positive n=<n> m=<m>")),
    }
}

pub fn parse_pairs(reader: impl BufRead) -> Result<PairDataset> {
    let mut dims = None;
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            if dims.is_none() && text.contains("n=") {
                dims = Some(parse_preamble(text, line_no)?);
            }
            continue;
        }
        if text.eq_ignore_ascii_case("x,y") {
            continue;
        }
        let (n, m) = dims.ok_or_else(|| parse_err(line_no, "record before the '# n=<n> m=<m>' preamble"))?;
        let (xs, ys) = text
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, format!("expected 'x,y', got {text:?}")))?;
        let x = parse_index(xs, line_no, "x")?;
        let y = parse_index(ys, line_no, "y")?;
        if x == 0 || x > n || y == 0 || y > m {
            return Err(Error::RecordOutOfRange {
                index: records.len() + 1,
                x,
                y,
                n,
                m,
            });
        }
        records.push((x - 1, y - 1));
    }
    let (n, m) = dims.ok_or_else(|| parse_err(1, "missing '# n=<n> m=<m>' preamble"))?;
    Ok(PairDataset::new(n, m, records))
}

pub fn write_pairs(dataset: &PairDataset, mut w: impl Write) -> Result<()> {
    writeln!(w, "# n={} m={}", dataset.n, dataset.m)?;
    writeln!(w, "x,y")?;
    let mut buf = String::with_capacity(16 * dataset.len());
    for &(x, y) in &dataset.records {
        let _ = writeln!(buf, "{},{}", x + 1, y + 1);
    }
    w.write_all(buf.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn parse_counts(reader: impl BufRead) -> Result<CountMatrix> {
    let mut lines = reader.lines().enumerate().filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#') => None,
        other => Some((i + 1, other)),
    });
    let (first_no, first) = lines.next().ok_or_else(|| parse_err(1, "empty count file"))?;
    let first = first?;
    let head: Vec<&str> = first.split_whitespace().collect();
    if head.len() != 3 {
        return Err(parse_err(first_no, "first line must be '<m> <n> <S>'"));
    }
    let m = parse_index(head[0], first_no, "m")?;
    let n = parse_index(head[1], first_no, "n")?;
    let declared = parse_index(head[2], first_no, "S")? as u64;
    let mut counts = DMatrix::<u64>::zeros(m, n);
    for (no, line) in lines {
        let line = line?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(no, "expected 'i j count'"));
        }
        let i = parse_index(parts[0], no, "i")?;
        let j = parse_index(parts[1], no, "j")?;
        let c = parse_index(parts[2], no, "count")? as u64;
        if i == 0 || i > m || j == 0 || j > n {
            return Err(parse_err(no, format!("entry ({i}, {j}) outside {m}x{n}")));
        }
        counts[(i - 1, j - 1)] += c;
    }
    let counts = CountMatrix::from_matrix(counts);
    if counts.total() != declared {
        return Err(parse_err(
            first_no,
            format!("declared S={declared} but entries sum to {}", counts.total()),
        ));
    }
    Ok(counts)
}

pub fn write_counts(counts: &CountMatrix, mut w: impl Write) -> Result<()> {
    writeln!(w, "{} {} {}", counts.outputs(), counts.inputs(), counts.total())?;
    for i in 0..counts.outputs() {
        for j in 0..counts.inputs() {
            let c = counts.get(i, j);
            if c > 0 {
                writeln!(w, "{} {} {}", i + 1, j + 1, c)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// What a data file turned out to contain.
#[derive(Debug, Clone)]
pub enum DataFile {
    Pairs(PairDataset),
    Counts(CountMatrix),
}

impl DataFile {
    pub fn counts(&self) -> Result<CountMatrix> {
        match self {
            DataFile::Pairs(ds) => ingest_pairs(ds),
            DataFile::Counts(c) => Ok(c.clone()),
        }
    }
}

/// Read a pairs file or a count file, telling them apart by the first
/// non-empty line (`#` preamble versus three integers).
pub fn read_data(path: &Path) -> Result<DataFile> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    if first.starts_with('#') || first.contains(',') {
        Ok(DataFile::Pairs(parse_pairs(text.as_bytes())?))
    } else {
        Ok(DataFile::Counts(parse_counts(text.as_bytes())?))
    }
}

pub fn read_pairs(path: &Path) -> Result<PairDataset> {
    parse_pairs(BufReader::new(fs::File::open(path)?))
}

pub fn save_pairs(dataset: &PairDataset, path: &Path) -> Result<()> {
    write_pairs(dataset, BufWriter::new(fs::File::create(path)?))
}

pub fn parse_labels(reader: impl BufRead) -> Result<Partition> {
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        labels.push(parse_index(text, idx + 1, "label")?);
    }
    if labels.is_empty() {
        return Err(parse_err(1, "no labels"));
    }
    Partition::from_one_based(&labels)
}

pub fn write_labels(partition: &Partition, mut w: impl Write) -> Result<()> {
    for l in partition.to_one_based() {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_matrix_csv(reader: impl BufRead) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let row = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| parse_err(idx + 1, format!("{t:?} is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(idx + 1, format!("{} columns, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_matrix_csv(a: &DMatrix<f64>, mut w: impl Write) -> Result<()> {
    for i in 0..a.nrows() {
        let row: Vec<String> = a.row(i).iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON cannot hold infinities; extended reals are written as a number when
/// finite and as `"+inf"`, `"-inf"` or `"nan"` otherwise.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn to_repr(v: f64) -> Result<f64, &'static str> {
        if v.is_finite() {
            Ok(v)
        } else if v.is_nan() {
            Err("nan")
        } else if v > 0.0 {
            Err("+inf")
        } else {
            Err("-inf")
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match to_repr(*v) {
            Ok(x) => s.serialize_f64(x),
            Err(t) => s.serialize_str(t),
        }
    }

    pub(super) fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Number(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "+inf" | "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("not an extended real: {other:?}"))),
            },
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

/// [`ext_real`] for vectors.
pub mod ext_real_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::ext_real::{self, Repr};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for &x in v {
            match ext_real::to_repr(x) {
                Ok(x) => seq.serialize_element(&x)?,
                Err(t) => seq.serialize_element(t)?,
            }
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(ext_real::from_repr)
            .collect()
    }
}
