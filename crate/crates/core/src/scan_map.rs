//! Scan maps and their file formats.
//!
//! CSV layout (both maps share it, only the value column differs):
//!
//! ```text
//! # step_um=150
//! # nx=14
//! # ny=14
//! # dwell_s=12.2
//! # x0_um=-975
//! # y0_um=-975
//! # seed=20061208
//! x_um,y_um,counts
//! -975,-975,0
//! ...
//! ```
//!
//! Rows run over x fastest. Any further `# key=value` line is carried as
//! free-form metadata. The JSON form mirrors the same fields.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ScanGrid;

/// Header keys that map onto struct fields rather than metadata.
const RESERVED: [&str; 6] = ["step_um", "nx", "ny", "dwell_s", "x0_um", "y0_um"];

/// Integer coincidence counts over a stage grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMap {
    pub grid: ScanGrid,
    #[serde(rename = "dwell_s")]
    pub dwell: f64,
    pub counts: Vec<u64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

/// Real-valued map (expected rates in counts/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateMap {
    pub grid: ScanGrid,
    #[serde(rename = "rates_cps")]
    pub rates: Vec<f64>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl ScanMap {
    pub fn new(grid: ScanGrid, dwell: f64, counts: Vec<u64>) -> Result<Self> {
        let map = Self {
            grid,
            dwell,
            counts,
            metadata: BTreeMap::new(),
        };
        map.validate()?;
        Ok(map)
    }

    /// Expected counts of `rates` over `dwell` seconds, rounded to integers.
    pub fn noiseless(rates: &RateMap, dwell: f64) -> Result<Self> {
        let counts = rates
            .rates
            .iter()
            .map(|r| (r * dwell).max(0.0).round() as u64)
            .collect();
        let mut map = Self::new(rates.grid, dwell, counts)?;
        map.metadata = rates.metadata.clone();
        map.metadata.insert("noiseless".into(), "true".into());
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.dwell.is_finite() && self.dwell > 0.0) {
            return Err(Error::invalid(
                "dwell_s",
                format!("must be > 0, got {}", self.dwell),
            ));
        }
        if self.counts.len() != self.grid.len() {
            return Err(Error::invalid(
                "counts",
                format!(
                    "expected {} values for a {}×{} grid, got {}",
                    self.grid.len(),
                    self.grid.nx,
                    self.grid.ny,
                    self.counts.len()
                ),
            ));
        }
        check_metadata(&self.metadata)
    }

    pub fn at(&self, ix: usize, iy: usize) -> u64 {
        self.counts[self.grid.index(ix, iy)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.validate()?;
        let header = Header::for_map(&self.grid, Some(self.dwell), &self.metadata);
        write_table(
            out,
            &header,
            &self.grid,
            "counts",
            self.counts.iter().map(|c| c.to_string()),
        )
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (header, rows) = read_table(input, "counts")?;
        let grid = header.grid(&rows)?;
        let dwell = header.require("dwell_s")?;
        let counts = rows
            .iter()
            .map(|(line, _, value)| {
                value.parse::<u64>().map_err(|_| Error::Parse {
                    line: *line,
                    reason: format!("count {value:?} is not a non-negative integer"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = Self {
            grid,
            dwell,
            counts,
            metadata: header.metadata,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self).expect("scan map serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(text).map_err(json_error)?;
        map.validate()?;
        Ok(map)
    }
}

impl RateMap {
    pub fn new(grid: ScanGrid, rates: Vec<f64>) -> Result<Self> {
        let map = Self {
            grid,
            rates,
            metadata: BTreeMap::new(),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.rates.len() != self.grid.len() {
            return Err(Error::invalid(
                "rates",
                format!(
                    "expected {} values, got {}",
                    self.grid.len(),
                    self.rates.len()
                ),
            ));
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid("rates", "rates must be finite and ≥ 0"));
        }
        check_metadata(&self.metadata)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        self.validate()?;
        let header = Header::for_map(&self.grid, None, &self.metadata);
        write_table(
            out,
            &header,
            &self.grid,
            "rate_cps",
            self.rates.iter().map(|r| r.to_string()),
        )
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let (header, rows) = read_table(input, "rate_cps")?;
        let grid = header.grid(&rows)?;
        let rates = rows
            .iter()
            .map(|(line, _, value)| {
                value.parse::<f64>().map_err(|_| Error::Parse {
                    line: *line,
                    reason: format!("rate {value:?} is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = Self {
            grid,
            rates,
            metadata: header.metadata,
        };
        map.validate()?;
        Ok(map)
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string_pretty(self).expect("rate map serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let map: Self = serde_json::from_str(text).map_err(json_error)?;
        map.validate()?;
        Ok(map)
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse {
        line: e.line(),
        reason: e.to_string(),
    }
}

fn check_metadata(metadata: &BTreeMap<String, String>) -> Result<()> {
    for (k, v) in metadata {
        let bad_key = k.is_empty() || k.contains(['=', '\n', '\r']) || k.trim() != k;
        if bad_key || v.contains(['\n', '\r']) || RESERVED.contains(&k.as_str()) {
            return Err(Error::invalid(
                "metadata",
                format!("unusable metadata entry {k:?}"),
            ));
        }
    }
    Ok(())
}

struct Header {
    fields: BTreeMap<String, (usize, String)>,
    metadata: BTreeMap<String, String>,
}

impl Header {
    fn for_map(
        grid: &ScanGrid,
        dwell: Option<f64>,
        metadata: &BTreeMap<String, String>,
    ) -> Vec<(String, String)> {
        let mut lines = vec![
            ("step_um".to_string(), grid.step.to_string()),
            ("nx".to_string(), grid.nx.to_string()),
            ("ny".to_string(), grid.ny.to_string()),
        ];
        if let Some(d) = dwell {
            lines.push(("dwell_s".to_string(), d.to_string()));
        }
        lines.push(("x0_um".to_string(), grid.x0.to_string()));
        lines.push(("y0_um".to_string(), grid.y0.to_string()));
        lines.extend(metadata.iter().map(|(k, v)| (k.clone(), v.clone())));
        lines
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.fields.get(key)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, text)) => text
                .trim()
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Parse {
                    line: *line,
                    reason: format!("header `{key}` has unparseable value {text:?}"),
                }),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parsed(key)?.ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing header line `# {key}=…`"),
        })
    }

    fn grid(&self, rows: &[(usize, [f64; 2], String)]) -> Result<ScanGrid> {
        let step: f64 = self.require("step_um")?;
        let nx: usize = self.require("nx")?;
        let ny: usize = self.require("ny")?;
        let first = rows.first().map(|r| r.1);
        let x0 = match self.parsed::<f64>("x0_um")? {
            Some(v) => v,
            None => first.map(|p| p[0]).unwrap_or(0.0),
        };
        let y0 = match self.parsed::<f64>("y0_um")? {
            Some(v) => v,
            None => first.map(|p| p[1]).unwrap_or(0.0),
        };
        let grid = ScanGrid::new(x0, y0, step, nx, ny)?;
        if rows.len() != grid.len() {
            return Err(Error::Parse {
                line: rows.last().map(|r| r.0).unwrap_or(0),
                reason: format!(
                    "expected {} data rows for a {nx}×{ny} grid, found {}",
                    grid.len(),
                    rows.len()
                ),
            });
        }
        let tol = 1e-6 * step;
        for (i, (line, xy, _)) in rows.iter().enumerate() {
            let want = grid.point(i);
            if (xy[0] - want[0]).abs() > tol || (xy[1] - want[1]).abs() > tol {
                return Err(Error::Parse {
                    line: *line,
                    reason: format!(
                        "row at ({}, {}) does not match grid point ({}, {})",
                        xy[0], xy[1], want[0], want[1]
                    ),
                });
            }
        }
        Ok(grid)
    }
}

fn write_table<W, I>(
    mut out: W,
    header: &[(String, String)],
    grid: &ScanGrid,
    column: &str,
    values: I,
) -> Result<()>
where
    W: Write,
    I: Iterator<Item = String>,
{
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer
        .write_record(["x_um", "y_um", column])
        .map_err(csv_error)?;
    for (i, value) in values.enumerate() {
        let [x, y] = grid.point(i);
        writer
            .write_record([x.to_string(), y.to_string(), value])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

type Row = (usize, [f64; 2], String);

fn read_table<R: Read>(input: R, column: &str) -> Result<(Header, Vec<Row>)> {
    let mut fields = BTreeMap::new();
    let mut metadata = BTreeMap::new();
    let mut body = String::new();
    let mut body_start = 0;
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if body.is_empty() {
            if let Some(comment) = line.trim_start().strip_prefix('#') {
                if let Some((k, v)) = comment.split_once('=') {
                    let key = k.trim().to_string();
                    if RESERVED.contains(&key.as_str()) {
                        fields.insert(key, (lineno, v.trim().to_string()));
                    } else {
                        metadata.insert(key, v.trim().to_string());
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            body_start = lineno;
        }
        body.push_str(&line);
        body.push('\n');
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    let expected = ["x_um", "y_um", column];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: body_start,
            reason: format!("expected column header `{}`", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = body_start + 1 + i;
        let record = record.map_err(|e| Error::Parse {
            line,
            reason: e.to_string(),
        })?;
        let coord = |j: usize| -> Result<f64> {
            record[j].parse::<f64>().map_err(|_| Error::Parse {
                line,
                reason: format!("coordinate {:?} is not a number", &record[j]),
            })
        };
        rows.push((line, [coord(0)?, coord(1)?], record[2].to_string()));
    }
    Ok((Header { fields, metadata }, rows))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        reason: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_map() -> ScanMap {
        let grid = ScanGrid::new(-75.5, 10.0, 37.25, 3, 2).unwrap();
        let mut m = ScanMap::new(grid, 12.2, vec![0, 5, 1220, 7, 0, 3]).unwrap();
        m.metadata.insert("seed".into(), "42".into());
        m.metadata.insert("note".into(), "two words".into());
        m
    }

    #[test]
    fn csv_layout() {
        let text = small_map().to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# step_um=37.25");
        assert_eq!(lines[1], "# nx=3");
        assert_eq!(lines[2], "# ny=2");
        assert_eq!(lines[3], "# dwell_s=12.2");
        assert!(lines.contains(&"# seed=42"));
        assert!(lines.contains(&"x_um,y_um,counts"));
        assert_eq!(*lines.last().unwrap(), "-1,47.25,3");
        assert_eq!(ScanMap::read_csv(text.as_bytes()).unwrap(), small_map());
    }

    #[test]
    fn json_round_trip() {
        let m = small_map();
        assert_eq!(ScanMap::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn rejects_malformed_input() {
        let text = small_map().to_csv_string().unwrap();
        let missing_row: String = text
            .lines()
            .take(text.lines().count() - 1)
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(matches!(
            ScanMap::read_csv(missing_row.as_bytes()),
            Err(Error::Parse { .. })
        ));
        let negative = text.replace(",1220", ",-3");
        assert!(ScanMap::read_csv(negative.as_bytes()).is_err());
        let no_dwell = text.replace("# dwell_s=12.2\n", "");
        assert!(ScanMap::read_csv(no_dwell.as_bytes()).is_err());
        let moved = text.replace("-75.5,10,0", "-70,10,0");
        assert!(ScanMap::read_csv(moved.as_bytes()).is_err());
        let grid = ScanGrid::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        assert!(ScanMap::new(grid, 1.0, vec![1, 2, 3]).is_err());
    }

    #[test]
    fn noiseless_rounds_expected_counts() {
        let grid = ScanGrid::new(0.0, 0.0, 1.0, 2, 2).unwrap();
        let rates = RateMap::new(grid, vec![0.0, 0.04, 10.0, 99.96]).unwrap();
        let m = ScanMap::noiseless(&rates, 10.0).unwrap();
        assert_eq!(m.counts, vec![0, 0, 100, 1000]);
    }

    proptest! {
        #[test]
        fn rate_map_csv_round_trip(
            x0 in -1e4f64..1e4, y0 in -1e4f64..1e4, step in 0.01f64..500.0,
            rates in proptest::collection::vec(0.0f64..1e6, 12),
        ) {
            let grid = ScanGrid::new(x0, y0, step, 4, 3).unwrap();
            let m = RateMap::new(grid, rates).unwrap();
            let back = RateMap::read_csv(m.to_csv_string().unwrap().as_bytes()).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(RateMap::from_json(&m.to_json().unwrap()).unwrap(), m);
        }

        #[test]
        fn scan_map_csv_round_trip(counts in proptest::collection::vec(0u64..100_000, 9), dwell in 0.001f64..1e4) {
            let grid = ScanGrid::new(-975.0, -975.0, 150.0, 3, 3).unwrap();
            let m = ScanMap::new(grid, dwell, counts).unwrap();
            prop_assert_eq!(ScanMap::read_csv(m.to_csv_string().unwrap().as_bytes()).unwrap(), m);
        }
    }
}
