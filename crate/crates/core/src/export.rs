//! Data files: binary count grids, count/curve/record CSVs.
//!
//! Counts file layout, little-endian throughout:
//!
//! ```text
//! "BIFC"  u32 rows  u32 columns
//! f64 × 8: r_min r_max x_min x_max transient keep inits_per_column symmetric_bins
//! u64 × rows·columns, row-major, row 0 = bin at x_min
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagram::{DiagramSpec, Raster};
use crate::envelope::EnvelopeCurve;
use crate::error::{Error, Result};
use crate::intersect::{expected_period, IntersectionRecord, PeriodicityReport};
use crate::map::{Branch, MapFamily};

pub const COUNTS_MAGIC: &[u8; 4] = b"BIFC";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 8;

/// Contents of a counts file.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsFile {
    pub rows: usize,
    pub columns: usize,
    pub r_window: (f64, f64),
    pub x_window: (f64, f64),
    pub transient: usize,
    pub keep: usize,
    pub inits_per_column: usize,
    pub symmetric_bins: bool,
    pub counts: Vec<u64>,
}

impl CountsFile {
    /// Rebuilds a raster for `family`; the seed policy is not stored, so the
    /// spec carries the default one.
    pub fn into_raster(self, family: MapFamily) -> Raster {
        let spec = DiagramSpec::new(
            family,
            self.r_window,
            self.columns,
            self.x_window,
            self.rows,
        )
        .with_iterations(self.transient, self.keep)
        .with_symmetric_bins(self.symmetric_bins);
        Raster {
            spec,
            counts: self.counts,
            escaped_columns: Vec::new(),
        }
    }
}

pub fn encode_counts(raster: &Raster) -> Vec<u8> {
    let spec = &raster.spec;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * raster.counts.len());
    out.extend_from_slice(COUNTS_MAGIC);
    out.extend_from_slice(&(spec.rows as u32).to_le_bytes());
    out.extend_from_slice(&(spec.columns as u32).to_le_bytes());
    let meta = [
        spec.r_min,
        spec.r_max,
        spec.x_min,
        spec.x_max,
        spec.transient as f64,
        spec.keep as f64,
        spec.inits_per_column() as f64,
        if spec.symmetric_bins { 1.0 } else { 0.0 },
    ];
    for v in meta {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for c in &raster.counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode_counts(bytes: &[u8]) -> Result<CountsFile> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != COUNTS_MAGIC {
        return Err(Error::Format("not a counts file".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let f64_at = |k: usize| {
        let i = 12 + 8 * k;
        f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap())
    };
    let (rows, columns) = (u32_at(4), u32_at(8));
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * rows * columns {
        return Err(Error::Format(format!(
            "expected {} count bytes for {rows}x{columns}, found {}",
            8 * rows * columns,
            body.len()
        )));
    }
    let counts = body
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(CountsFile {
        rows,
        columns,
        r_window: (f64_at(0), f64_at(1)),
        x_window: (f64_at(2), f64_at(3)),
        transient: f64_at(4) as usize,
        keep: f64_at(5) as usize,
        inits_per_column: f64_at(6) as usize,
        symmetric_bins: f64_at(7) != 0.0,
        counts,
    })
}

pub fn write_counts(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_counts(raster))?;
    w.flush()?;
    Ok(())
}

pub fn read_counts(path: impl AsRef<Path>) -> Result<CountsFile> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_counts(&bytes)
}

/// Writes `r,x,count` for every non-empty cell, column by column.
pub fn write_counts_csv(
    raster: &Raster,
    path: impl AsRef<Path>,
    comment: Option<&str>,
) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    if let Some(c) = comment {
        writeln!(file, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["r", "x", "count"])?;
    let spec = &raster.spec;
    for c in 0..spec.columns {
        let r = spec.column_parameter(c);
        for j in 0..spec.rows {
            let k = raster.get(j, c);
            if k > 0 {
                w.serialize((r, spec.row_center(j), k))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub r: f64,
    pub value: f64,
    pub derivative: f64,
}

pub fn write_curve_csv(curve: &EnvelopeCurve, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..curve.len() {
        w.serialize(CurveRow {
            r: curve.r_samples[i],
            value: curve.values[i],
            derivative: curve.derivs[i],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: impl AsRef<Path>) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// One line of the intersection record CSV. The verification columns stay
/// empty until the record has been checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub n: usize,
    pub m: usize,
    pub branch1: String,
    pub branch2: String,
    pub r_star: f64,
    pub b: f64,
    pub expected_period: usize,
    #[serde(default)]
    pub minimal_period: Option<usize>,
    pub tangential: bool,
    pub delta_residual: f64,
    #[serde(default)]
    pub period_residual: Option<f64>,
    #[serde(default)]
    pub newton_converged: Option<bool>,
    #[serde(default)]
    pub refined_b: Option<f64>,
}

impl From<&IntersectionRecord> for RecordRow {
    fn from(rec: &IntersectionRecord) -> Self {
        RecordRow {
            n: rec.n,
            m: rec.m,
            branch1: rec.branches.0.to_string(),
            branch2: rec.branches.1.to_string(),
            r_star: rec.r_star,
            b: rec.b,
            expected_period: rec.expected_period,
            minimal_period: None,
            tangential: rec.tangential,
            delta_residual: rec.delta_residual,
            period_residual: None,
            newton_converged: None,
            refined_b: None,
        }
    }
}

impl From<&PeriodicityReport> for RecordRow {
    fn from(rep: &PeriodicityReport) -> Self {
        RecordRow {
            minimal_period: rep.minimal_period,
            period_residual: Some(rep.period_residual),
            newton_converged: Some(rep.newton_converged),
            refined_b: Some(rep.refined_b),
            ..RecordRow::from(&rep.record)
        }
    }
}

impl RecordRow {
    pub fn to_record(&self) -> Result<IntersectionRecord> {
        let branch =
            |s: &str| Branch::parse(s).ok_or_else(|| Error::Format(format!("bad branch `{s}`")));
        let branches = (branch(&self.branch1)?, branch(&self.branch2)?);
        if self.n >= self.m {
            return Err(Error::Format(format!(
                "need n < m, got {} and {}",
                self.n, self.m
            )));
        }
        if self.expected_period != expected_period(self.n, self.m, branches) {
            return Err(Error::Format(format!(
                "expected_period {} disagrees with n = {}, m = {}",
                self.expected_period, self.n, self.m
            )));
        }
        Ok(IntersectionRecord {
            n: self.n,
            m: self.m,
            branches,
            r_star: self.r_star,
            b: self.b,
            expected_period: self.expected_period,
            tangential: self.tangential,
            delta_residual: self.delta_residual,
        })
    }
}

/// Record CSV with optional `# key=value` header lines.
pub fn write_records<W: Write>(
    out: W,
    header: &[(&str, String)],
    rows: &[RecordRow],
) -> Result<()> {
    let mut out = out;
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "n",
            "m",
            "branch1",
            "branch2",
            "r_star",
            "b",
            "expected_period",
            "minimal_period",
            "tangential",
            "delta_residual",
            "period_residual",
            "newton_converged",
            "refined_b",
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed record CSV: the `# key=value` header lines and the rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecordFile {
    pub header: Vec<(String, String)>,
    pub rows: Vec<RecordRow>,
}

impl RecordFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn read_records<R: Read>(input: R) -> Result<RecordFile> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let mut header = Vec::new();
    for line in text.as_bytes().lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.trim().split_once('=') {
            header.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    Ok(RecordFile { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{envelope_polyline, envelope_value};
    use proptest::prelude::*;

    fn sample_raster() -> Raster {
        let spec = DiagramSpec::new(MapFamily::sine(), (-1.0, 2.0), 3, (-3.0, 3.0), 3);
        Raster {
            spec,
            counts: vec![1, 2, 3, 0, 0, u64::MAX, 7, 8, 9],
            escaped_columns: vec![],
        }
    }

    #[test]
    fn counts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.bifc");
        let raster = sample_raster();
        write_counts(&raster, &path).unwrap();
        let back = read_counts(&path).unwrap();
        assert_eq!(back.counts, raster.counts);
        assert_eq!((back.rows, back.columns), (3, 3));
        assert_eq!(back.r_window, (-1.0, 2.0));
        assert_eq!(back.inits_per_column, 2);
        assert!(!back.symmetric_bins);
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"BIFC");
        assert_eq!(bytes.len(), HEADER_LEN + 9 * 8);
    }

    #[test]
    fn counts_rejects_garbage() {
        assert!(decode_counts(b"PNG!").is_err());
        let mut bytes = encode_counts(&sample_raster());
        bytes.pop();
        assert!(matches!(decode_counts(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn flat_line_curve_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c0.csv");
        let c = envelope_polyline(&MapFamily::sine(), 0, Branch::Plus, -1.0, 1.0, 3).unwrap();
        write_curve_csv(&c, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "r,value,derivative\n-1.0,-1.0,1.0\n0.0,0.0,1.0\n1.0,1.0,1.0\n"
        );
    }

    #[test]
    fn first_order_curve_csv_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c1.csv");
        let sine = MapFamily::sine();
        let c = envelope_polyline(&sine, 1, Branch::Minus, -5.0, 6.0, 257).unwrap();
        write_curve_csv(&c, &path).unwrap();
        for row in read_curve_csv(&path).unwrap() {
            let v = envelope_value(&sine, 1, Branch::Minus, row.r).unwrap();
            assert_eq!(v.to_bits(), row.value.to_bits());
        }
    }

    #[test]
    fn records_round_trip() {
        let sine = MapFamily::sine();
        let rec =
            IntersectionRecord::at(&sine, 0, 1, (Branch::Plus, Branch::Minus), 4.7, true).unwrap();
        let mut buf = Vec::new();
        write_records(
            &mut buf,
            &[("map", "sine".into())],
            &[RecordRow::from(&rec)],
        )
        .unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# map=sine\nn,m,branch1,branch2,r_star,b,expected_period,"));
        let file = read_records(buf.as_slice()).unwrap();
        assert_eq!(file.get("map"), Some("sine"));
        assert_eq!(file.rows.len(), 1);
        assert_eq!(file.rows[0].to_record().unwrap(), rec);
        assert_eq!(file.rows[0].minimal_period, None);
    }

    #[test]
    fn record_row_validation() {
        let sine = MapFamily::sine();
        let rec =
            IntersectionRecord::at(&sine, 1, 3, (Branch::Plus, Branch::Plus), 3.0, false).unwrap();
        let mut row = RecordRow::from(&rec);
        row.branch1 = "up".into();
        assert!(row.to_record().is_err());
        let mut row = RecordRow::from(&rec);
        row.expected_period = 3;
        assert!(row.to_record().is_err());
    }

    #[test]
    fn empty_record_file_has_header() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[], &[]).unwrap();
        assert!(read_records(buf.as_slice()).unwrap().rows.is_empty());
    }

    proptest! {
        #[test]
        fn counts_encoding_round_trips(
            rows in 1usize..6,
            cols in 1usize..6,
            seed in any::<u64>(),
        ) {
            let spec = DiagramSpec::new(MapFamily::sine(), (-2.0, 2.0), cols, (-1.5, 1.5), rows);
            let counts = (0..rows * cols)
                .map(|i| seed.wrapping_mul(i as u64 + 1).rotate_left(i as u32))
                .collect::<Vec<_>>();
            let raster = Raster { spec, counts: counts.clone(), escaped_columns: vec![] };
            let back = decode_counts(&encode_counts(&raster)).unwrap();
            prop_assert_eq!(back.counts, counts);
            prop_assert_eq!(back.symmetric_bins, rows % 2 == 0);
        }

        #[test]
        fn record_rows_round_trip(r in 0.1f64..6.0, n in 0usize..4, p in 1usize..3, mixed: bool) {
            let sine = MapFamily::sine();
            let br = if mixed { (Branch::Plus, Branch::Minus) } else { (Branch::Minus, Branch::Minus) };
            let rec = IntersectionRecord::at(&sine, n, n + p, br, r, false).unwrap();
            let mut buf = Vec::new();
            write_records(&mut buf, &[], &[RecordRow::from(&rec)]).unwrap();
            let back = read_records(buf.as_slice()).unwrap().rows[0].to_record().unwrap();
            prop_assert_eq!(back, rec);
        }
    }
}
