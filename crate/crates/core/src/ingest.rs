//! Tick file reading and the surrogate-volume stream.
//!
//! Input is tab-separated text, optionally gzip-compressed. Gzip is detected
//! from the magic bytes, so a `.gz` suffix is not required.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, Result};

/// One transaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tick {
    /// Nanoseconds since midnight.
    pub t: i64,
    pub price: f64,
    /// Shares traded; zero is allowed.
    pub size: f64,
}

impl Tick {
    pub fn new(t: i64, price: f64, size: f64) -> Self {
        Tick { t, price, size }
    }
}

/// Column layout `total:t:p:v[:symbol]`, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColSpec {
    pub total: usize,
    pub t: usize,
    pub p: usize,
    pub v: usize,
    pub symbol: Option<usize>,
}

impl Default for ColSpec {
    fn default() -> Self {
        ColSpec { total: 9, t: 1, p: 2, v: 3, symbol: None }
    }
}

impl FromStr for ColSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(':')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad column spec `{s}`")))?;
        if parts.len() != 4 && parts.len() != 5 {
            return Err(Error::Config(format!("column spec `{s}` needs 4 or 5 fields")));
        }
        let spec = ColSpec {
            total: parts[0],
            t: parts[1],
            p: parts[2],
            v: parts[3],
            symbol: parts.get(4).copied(),
        };
        let max = [spec.t, spec.p, spec.v, spec.symbol.unwrap_or(0)].into_iter().max().unwrap();
        if max >= spec.total {
            return Err(Error::Config(format!("column index {max} out of range in `{s}`")));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    /// Non-blank, non-comment lines seen.
    pub data_rows: u64,
    pub emitted: u64,
    pub skipped_columns: u64,
    pub skipped_malformed: u64,
    /// Rows whose time went backwards and was clamped.
    pub clamped_time: u64,
}

impl IngestStats {
    pub fn skipped(&self) -> u64 {
        self.skipped_columns + self.skipped_malformed
    }
}

/// Opens a file, transparently decompressing gzip.
pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let read_err = |source| Error::Read { path: path.to_path_buf(), source };
    let mut f = File::open(path).map_err(read_err)?;
    let mut magic = [0u8; 2];
    let got = read_up_to(&mut f, &mut magic).map_err(read_err)?;
    drop(f);
    let f = File::open(path).map_err(read_err)?;
    if got == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(f))))
    } else {
        Ok(Box::new(BufReader::new(f)))
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..])? {
            0 => break,
            k => got += k,
        }
    }
    Ok(got)
}

/// Streaming reader yielding `(symbol, Tick)`; the symbol is empty when the
/// column spec has none.
pub struct TickReader<R: BufRead> {
    src: R,
    spec: ColSpec,
    line: String,
    last_t: Option<i64>,
    stats: IngestStats,
}

impl<R: BufRead> TickReader<R> {
    pub fn new(src: R, spec: ColSpec) -> Self {
        TickReader { src, spec, line: String::new(), last_t: None, stats: IngestStats::default() }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn parse_line(&mut self) -> Option<(String, Tick)> {
        let fields: Vec<&str> = self.line.trim_end_matches(['\n', '\r']).split('\t').collect();
        if fields.len() != self.spec.total {
            self.stats.skipped_columns += 1;
            return None;
        }
        let t = fields[self.spec.t].trim().parse::<i64>();
        let p = fields[self.spec.p].trim().parse::<f64>();
        let v = fields[self.spec.v].trim().parse::<f64>();
        let (mut t, p, v) = match (t, p, v) {
            (Ok(t), Ok(p), Ok(v)) if p.is_finite() && p > 0.0 && v.is_finite() && v >= 0.0 => (t, p, v),
            _ => {
                self.stats.skipped_malformed += 1;
                return None;
            }
        };
        if let Some(last) = self.last_t {
            if t < last {
                self.stats.clamped_time += 1;
                t = last;
            }
        }
        self.last_t = Some(t);
        let sym = self.spec.symbol.map(|i| fields[i].trim().to_string()).unwrap_or_default();
        Some((sym, Tick::new(t, p, v)))
    }
}

impl<R: BufRead> Iterator for TickReader<R> {
    type Item = Result<(String, Tick)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.src.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let trimmed = self.line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            self.stats.data_rows += 1;
            if let Some(item) = self.parse_line() {
                self.stats.emitted += 1;
                return Some(Ok(item));
            }
        }
    }
}

/// Reads every tick of a file in order.
pub fn read_ticks(path: &Path, spec: ColSpec) -> Result<(Vec<Tick>, IngestStats)> {
    let mut reader = TickReader::new(open_input(path)?, spec);
    let mut ticks = Vec::new();
    for item in reader.by_ref() {
        ticks.push(item?.1);
    }
    Ok((ticks, reader.stats()))
}

/// Absolute price change since the previous tick; zero for the first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateIncrement {
    pub da: f64,
}

pub struct SurrogateStream<I> {
    inner: I,
    last_price: Option<f64>,
}

impl<I: Iterator<Item = Tick>> Iterator for SurrogateStream<I> {
    type Item = (Tick, SurrogateIncrement);

    fn next(&mut self) -> Option<Self::Item> {
        let tick = self.inner.next()?;
        let da = self.last_price.map_or(0.0, |p| (tick.price - p).abs());
        self.last_price = Some(tick.price);
        Some((tick, SurrogateIncrement { da }))
    }
}

pub fn surrogate_stream<I: IntoIterator<Item = Tick>>(ticks: I) -> SurrogateStream<I::IntoIter> {
    SurrogateStream { inner: ticks.into_iter(), last_price: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Cursor, Write};

    fn row(t: &str, p: &str, v: &str) -> String {
        format!("x\t{t}\t{p}\t{v}\ta\tb\tc\td\te\n")
    }

    #[test]
    fn parses_documented_row() {
        let data = row("34200000000000", "693.10", "100");
        let mut r = TickReader::new(Cursor::new(data), ColSpec::default());
        let (_, tick) = r.next().unwrap().unwrap();
        assert_eq!(tick, Tick::new(34_200_000_000_000, 693.10, 100.0));
        assert!(r.next().is_none());
    }

    #[test]
    fn empty_input_is_empty() {
        let mut r = TickReader::new(Cursor::new(""), ColSpec::default());
        assert!(r.next().is_none());
        assert_eq!(r.stats(), IngestStats::default());
    }

    #[test]
    fn counts_skips_and_clamps() {
        let mut data = String::new();
        data += &row("100", "10.0", "1");
        data += "too\tfew\n";
        data += &row("90", "10.5", "2");
        data += &row("110", "abc", "2");
        data += &row("120", "-1", "2");
        data += "# comment\n\n";
        data += &row("130", "11", "0");
        let mut r = TickReader::new(Cursor::new(data), ColSpec::default());
        let ticks: Vec<Tick> = r.by_ref().map(|x| x.unwrap().1).collect();
        let s = r.stats();
        assert_eq!(ticks.len(), 3);
        assert_eq!(ticks[1].t, 100);
        assert_eq!(s.data_rows, 6);
        assert_eq!(s.skipped_columns, 1);
        assert_eq!(s.skipped_malformed, 2);
        assert_eq!(s.clamped_time, 1);
        assert_eq!(s.skipped() + s.emitted, s.data_rows);
    }

    #[test]
    fn gzip_matches_plain() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = String::new();
        for i in 0..50 {
            data += &row(&(1000 + i * 7).to_string(), &format!("{}", 100.0 + i as f64 * 0.01), "5");
        }
        let plain = dir.path().join("ticks.tsv");
        std::fs::write(&plain, &data).unwrap();
        let packed = dir.path().join("ticks.bin");
        let mut enc = flate2::write::GzEncoder::new(
            File::create(&packed).unwrap(),
            flate2::Compression::default(),
        );
        enc.write_all(data.as_bytes()).unwrap();
        enc.finish().unwrap();
        let a = read_ticks(&plain, ColSpec::default()).unwrap();
        let b = read_ticks(&packed, ColSpec::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 50);
    }

    #[test]
    fn symbol_column() {
        let spec: ColSpec = "4:0:1:2:3".parse().unwrap();
        let mut r = TickReader::new(Cursor::new("5\t10\t3\tAAPL\n"), spec);
        let (sym, tick) = r.next().unwrap().unwrap();
        assert_eq!(sym, "AAPL");
        assert_eq!(tick, Tick::new(5, 10.0, 3.0));
    }

    #[test]
    fn col_spec_validation() {
        assert!("9:1:2:3".parse::<ColSpec>().is_ok());
        assert!("3:1:2:3".parse::<ColSpec>().is_err());
        assert!("9:1:2".parse::<ColSpec>().is_err());
    }

    #[test]
    fn surrogate_increments() {
        let ticks = [100.0, 101.0, 99.5].map(|p| Tick::new(0, p, 1.0));
        let da: Vec<f64> = surrogate_stream(ticks).map(|(_, s)| s.da).collect();
        assert_eq!(da, vec![0.0, 1.0, 1.5]);
        let flat = [100.0; 3].map(|p| Tick::new(0, p, 1.0));
        assert!(surrogate_stream(flat).all(|(_, s)| s.da == 0.0));
    }
}
