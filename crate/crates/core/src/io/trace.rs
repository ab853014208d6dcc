//! CSI trace CSV.
//!
//! ```text
//! # csi-shield trace schema_version=1.0 n_subcarriers=56 n_rx=3 n_tx=3 sample_rate=70
//! t,k,rx,tx,re,im
//! 0,0,0,0,6.1234567890123456e-4,-2.0000000000000000e-5
//! ...
//! ```
//!
//! One row per `(t, k, rx, tx)` cell, values in 17 significant digits. Every
//! frame must cover the full `k × rx × tx` lattice; the row order inside a
//! frame is free, but all rows of a frame are contiguous and `t` increases
//! strictly from frame to frame.

use std::fs::File;
use std::io::{BufRead, BufReader, Cursor, Read, Write};
use std::path::Path as FsPath;

use num_complex::Complex64;

use super::{check_schema, create, finish, meta_get, meta_parse, parse_meta, SCHEMA_VERSION};
use crate::channel::{CsiFrame, Scenario};
use crate::error::{Error, Result};

const COLUMNS: [&str; 6] = ["t", "k", "rx", "tx", "re", "im"];

/// Dimensions and timing of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceHeader {
    pub n_subcarriers: usize,
    pub n_rx: usize,
    pub n_tx: usize,
    pub sample_rate: f64,
}

impl TraceHeader {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            n_subcarriers: s.n_subcarriers,
            n_rx: s.n_rx,
            n_tx: s.n_tx,
            sample_rate: s.sample_rate,
        }
    }

    fn cells(&self) -> usize {
        self.n_subcarriers * self.n_rx * self.n_tx
    }

    fn meta_line(&self) -> String {
        format!(
            "# csi-shield trace schema_version={SCHEMA_VERSION} n_subcarriers={} n_rx={} n_tx={} sample_rate={}",
            self.n_subcarriers, self.n_rx, self.n_tx, self.sample_rate
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let meta = parse_meta(line);
        let version = meta_get(&meta, "schema_version")
            .ok_or_else(|| Error::Schema("trace header lacks `schema_version`".into()))?;
        check_schema(version)?;
        let h = Self {
            n_subcarriers: meta_parse(&meta, "n_subcarriers", "trace")?,
            n_rx: meta_parse(&meta, "n_rx", "trace")?,
            n_tx: meta_parse(&meta, "n_tx", "trace")?,
            sample_rate: meta_parse(&meta, "sample_rate", "trace")?,
        };
        if h.cells() == 0 || !(h.sample_rate > 0.0) {
            return Err(Error::Schema(format!("trace header has empty dimensions: {line}")));
        }
        Ok(h)
    }
}

/// Streams frames into a trace file.
pub struct TraceWriter<W: Write> {
    out: W,
    header: TraceHeader,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, header: TraceHeader) -> Result<Self> {
        writeln!(out, "{}", header.meta_line())?;
        writeln!(out, "{}", COLUMNS.join(","))?;
        Ok(Self { out, header })
    }

    pub fn write_frame(&mut self, f: &CsiFrame) -> Result<()> {
        let h = &self.header;
        if (f.n_subcarriers, f.n_rx, f.n_tx) != (h.n_subcarriers, h.n_rx, h.n_tx) {
            return Err(Error::contract(format!(
                "frame shape {}x{}x{} does not match trace header {}x{}x{}",
                f.n_subcarriers, f.n_rx, f.n_tx, h.n_subcarriers, h.n_rx, h.n_tx
            )));
        }
        for k in 0..f.n_subcarriers {
            for rx in 0..f.n_rx {
                for tx in 0..f.n_tx {
                    let v = f.get(k, rx, tx);
                    writeln!(self.out, "{},{k},{rx},{tx},{:.16e},{:.16e}", f.t_index, v.re, v.im)?;
                }
            }
        }
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_trace<'a>(
    path: impl AsRef<FsPath>,
    header: TraceHeader,
    frames: impl IntoIterator<Item = &'a CsiFrame>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = TraceWriter::new(create(path)?, header)?;
    for f in frames {
        w.write_frame(f)?;
    }
    finish(w.into_inner(), path)
}

struct Row {
    line: u64,
    t: u64,
    k: usize,
    rx: usize,
    tx: usize,
    value: Complex64,
}

/// Frame-by-frame reader; holds one frame in memory.
pub struct TraceReader {
    rows: csv::Reader<Box<dyn Read>>,
    record: csv::StringRecord,
    header: TraceHeader,
    pending: Option<Row>,
    last_t: Option<u64>,
    failed: bool,
}

impl TraceReader {
    /// Opens a trace. `header` supplies dimensions for files without a
    /// metadata line; when both are present they must agree.
    pub fn open(path: impl AsRef<FsPath>, header: Option<TraceHeader>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::file(path, e))?;
        Self::from_reader(BufReader::new(f), header)
    }

    pub fn from_reader<R: BufRead + 'static>(mut input: R, header: Option<TraceHeader>) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let (found, rest): (Option<TraceHeader>, Box<dyn Read>) = if first.starts_with('#') {
            (Some(TraceHeader::parse(first.trim_end())?), Box::new(input))
        } else {
            (None, Box::new(Cursor::new(first.into_bytes()).chain(input)))
        };
        let header = match (found, header) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Ingest(format!(
                    "trace header {a:?} disagrees with the expected {b:?}"
                )))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Ingest("trace has no dimension header and none was given".into())),
        };
        let mut rows = csv::ReaderBuilder::new().has_headers(true).from_reader(rest);
        let cols = rows.headers()?.clone();
        if cols.iter().map(str::trim).ne(COLUMNS) {
            return Err(Error::Ingest(format!(
                "expected columns `{}`, found `{}`",
                COLUMNS.join(","),
                cols.iter().collect::<Vec<_>>().join(",")
            )));
        }
        Ok(Self {
            rows,
            record: csv::StringRecord::new(),
            header,
            pending: None,
            last_t: None,
            failed: false,
        })
    }

    pub fn header(&self) -> TraceHeader {
        self.header
    }

    fn read_row(&mut self) -> Result<Option<Row>> {
        if !self.rows.read_record(&mut self.record)? {
            return Ok(None);
        }
        let line = self.record.position().map_or(0, |p| p.line());
        let field = |i: usize| self.record.get(i).unwrap_or("").trim();
        let bad = |what: &str| {
            Error::Ingest(format!(
                "line {line}: malformed `{what}` value {:?}",
                field(COLUMNS.iter().position(|c| *c == what).unwrap())
            ))
        };
        let t: u64 = field(0).parse().map_err(|_| bad("t"))?;
        let k: usize = field(1).parse().map_err(|_| bad("k"))?;
        let rx: usize = field(2).parse().map_err(|_| bad("rx"))?;
        let tx: usize = field(3).parse().map_err(|_| bad("tx"))?;
        let re: f64 = field(4).parse().map_err(|_| bad("re"))?;
        let im: f64 = field(5).parse().map_err(|_| bad("im"))?;
        let h = &self.header;
        if k >= h.n_subcarriers || rx >= h.n_rx || tx >= h.n_tx {
            return Err(Error::Ingest(format!(
                "line {line}: cell (k={k}, rx={rx}, tx={tx}) outside the {}x{}x{} lattice",
                h.n_subcarriers, h.n_rx, h.n_tx
            )));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Ingest(format!("line {line}: non-finite value")));
        }
        Ok(Some(Row {
            line,
            t,
            k,
            rx,
            tx,
            value: Complex64::new(re, im),
        }))
    }

    fn read_frame(&mut self) -> Result<Option<CsiFrame>> {
        let first = match self.pending.take() {
            Some(r) => r,
            None => match self.read_row()? {
                Some(r) => r,
                None => return Ok(None),
            },
        };
        let t = first.t;
        if let Some(last) = self.last_t {
            if t <= last {
                return Err(Error::Ingest(format!(
                    "line {}: t={t} after t={last}; frames must appear in increasing t",
                    first.line
                )));
            }
        }
        let h = self.header;
        let mut frame = CsiFrame::zeros(t, h.n_subcarriers, h.n_rx, h.n_tx);
        let mut seen = vec![false; h.cells()];
        let mut row = Some(first);
        while let Some(r) = row {
            if r.t != t {
                self.pending = Some(r);
                break;
            }
            let i = frame.index(r.k, r.rx, r.tx);
            if seen[i] {
                return Err(Error::Ingest(format!(
                    "line {}: duplicate cell t={t}, k={}, rx={}, tx={}",
                    r.line, r.k, r.rx, r.tx
                )));
            }
            seen[i] = true;
            frame.values[i] = r.value;
            row = self.read_row()?;
        }
        if let Some(gap) = seen.iter().position(|s| !s) {
            let s = h.n_rx * h.n_tx;
            let (k, rx, tx) = (gap / s, gap % h.n_rx, gap % s / h.n_rx);
            return Err(Error::Ingest(format!(
                "frame t={t} is missing cell k={k}, rx={rx}, tx={tx}"
            )));
        }
        self.last_t = Some(t);
        Ok(Some(frame))
    }
}

impl Iterator for TraceReader {
    type Item = Result<CsiFrame>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.read_frame().transpose();
        if matches!(r, Some(Err(_))) {
            self.failed = true;
        }
        r
    }
}

/// Reads a whole trace into memory.
pub fn ingest_trace(path: impl AsRef<FsPath>, header: Option<TraceHeader>) -> Result<(TraceHeader, Vec<CsiFrame>)> {
    let reader = TraceReader::open(path, header)?;
    let h = reader.header();
    let frames = reader.collect::<Result<Vec<_>>>()?;
    Ok((h, frames))
}

/// Convenience for writing a frame slice under a scenario's dimensions.
pub fn export_trace(path: impl AsRef<FsPath>, scenario: &Scenario, frames: &[CsiFrame]) -> Result<()> {
    write_trace(path, TraceHeader::from_scenario(scenario), frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, h: Option<TraceHeader>) -> Result<Vec<CsiFrame>> {
        TraceReader::from_reader(Cursor::new(text.as_bytes().to_vec()), h)?.collect()
    }

    const HEAD: &str =
        "# csi-shield trace schema_version=1.0 n_subcarriers=1 n_rx=1 n_tx=1 sample_rate=70\nt,k,rx,tx,re,im\n";

    #[test]
    fn two_tiny_frames() {
        let f = read(&format!("{HEAD}0,0,0,0,1.5,-2\n1,0,0,0,3,4\n"), None).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].values[0], Complex64::new(1.5, -2.0));
        assert_eq!(f[1].values[0], Complex64::new(3.0, 4.0));
        assert_eq!(f[1].t_index, 1);
    }

    #[test]
    fn shuffled_rows_within_frame() {
        let head = "# x schema_version=1.0 n_subcarriers=2 n_rx=1 n_tx=2 sample_rate=10\nt,k,rx,tx,re,im\n";
        let ordered = "5,0,0,0,1,0\n5,0,0,1,2,0\n5,1,0,0,3,0\n5,1,0,1,4,0\n";
        let shuffled = "5,1,0,1,4,0\n5,0,0,0,1,0\n5,1,0,0,3,0\n5,0,0,1,2,0\n";
        assert_eq!(
            read(&format!("{head}{ordered}"), None).unwrap(),
            read(&format!("{head}{shuffled}"), None).unwrap()
        );
    }

    #[test]
    fn lattice_gap_is_named() {
        let head = "# x schema_version=1.0 n_subcarriers=2 n_rx=2 n_tx=1 sample_rate=10\nt,k,rx,tx,re,im\n";
        let body = "0,0,0,0,1,0\n0,0,1,0,1,0\n0,1,1,0,1,0\n";
        let err = read(&format!("{head}{body}"), None).unwrap_err().to_string();
        assert!(err.contains("k=1, rx=0, tx=0"), "{err}");
    }

    #[test]
    fn non_monotone_t() {
        let err = read(&format!("{HEAD}1,0,0,0,1,0\n0,0,0,0,1,0\n"), None).unwrap_err();
        assert!(matches!(err, Error::Ingest(_)), "{err}");
        let err = read(&format!("{HEAD}0,0,0,0,1,0\n1,0,0,0,1,0\n0,0,0,0,1,0\n"), None).unwrap_err();
        assert!(matches!(err, Error::Ingest(_)));
    }

    #[test]
    fn bad_rows() {
        assert!(read(&format!("{HEAD}0,1,0,0,1,0\n"), None).is_err());
        assert!(read(&format!("{HEAD}0,0,0,0,NaN,0\n"), None).is_err());
        assert!(read(&format!("{HEAD}0,0,0,0,1,0\n0,0,0,0,1,0\n"), None).is_err());
        assert!(read(&format!("{HEAD}x,0,0,0,1,0\n"), None).is_err());
        let wrong_cols = HEAD.replace("re,im", "real,imag");
        assert!(read(&wrong_cols, None).is_err());
    }

    #[test]
    fn headerless_needs_dimensions() {
        let body = "t,k,rx,tx,re,im\n0,0,0,0,1,0\n";
        assert!(read(body, None).is_err());
        let h = TraceHeader {
            n_subcarriers: 1,
            n_rx: 1,
            n_tx: 1,
            sample_rate: 70.0,
        };
        assert_eq!(read(body, Some(h)).unwrap().len(), 1);
    }

    #[test]
    fn newer_major_rejected() {
        let text = HEAD.replace("schema_version=1.0", "schema_version=2.1");
        assert!(matches!(read(&text, None), Err(Error::Schema(_))));
    }
}
