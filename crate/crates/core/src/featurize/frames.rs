use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

pub const DEFAULT_BASE_FEATURES: usize = 79;
pub const DEFAULT_FRAME_RATE_HZ: f64 = 100.0;

/// Frame-level acoustic descriptors for one session.
///
/// Missing-audio stretches are all-zero rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameMatrix {
    pub session_id: String,
    pub timestamps: Vec<f64>,
    pub values: Matrix,
    pub frame_rate_hz: f64,
}

impl FrameMatrix {
    pub fn new(session_id: impl Into<String>, timestamps: Vec<f64>, values: Matrix, frame_rate_hz: f64) -> Result<Self> {
        if timestamps.len() != values.rows() {
            return Err(Error::data(format!(
                "{} timestamps for {} frames",
                timestamps.len(),
                values.rows()
            )));
        }
        Ok(FrameMatrix {
            session_id: session_id.into(),
            timestamps,
            values,
            frame_rate_hz,
        })
    }

    pub fn frames(&self) -> usize {
        self.values.rows()
    }

    pub fn base_features(&self) -> usize {
        self.values.cols()
    }

    /// Frames with `start <= t < end` for every span, in span order. A span
    /// that covers no frame yields a single zero row (missing audio).
    pub fn segment_by_spans(&self, spans: &[(f64, f64)]) -> Vec<Matrix> {
        spans
            .iter()
            .map(|&(start, end)| {
                let lo = self.timestamps.partition_point(|&t| t < start);
                let hi = self.timestamps.partition_point(|&t| t < end);
                if hi > lo {
                    self.values.row_window(lo, hi - lo)
                } else {
                    Matrix::zeros(1, self.base_features())
                }
            })
            .collect()
    }

    /// Consecutive `chunk_secs`-long chunks covering all frames.
    pub fn segment_fixed(&self, chunk_secs: f64) -> Vec<Matrix> {
        let per_chunk = ((chunk_secs * self.frame_rate_hz).round() as usize).max(1);
        (0..self.frames())
            .step_by(per_chunk)
            .map(|start| self.values.row_window(start, per_chunk.min(self.frames() - start)))
            .collect()
    }

    /// CSV with a header row; column 1 is the timestamp in seconds, the rest
    /// are features.
    pub fn read_csv<R: Read>(session_id: &str, reader: R, frame_rate_hz: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let width = rdr
            .headers()
            .map_err(|e| Error::data(format!("{session_id}: bad frame header: {e}")))?
            .len();
        if width < 2 {
            return Err(Error::data(format!(
                "{session_id}: frame file needs a timestamp and at least one feature column"
            )));
        }
        let mut timestamps = Vec::new();
        let mut data = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::data(format!("{session_id}: frame row {}: {e}", i + 1)))?;
            if rec.len() != width {
                return Err(Error::data(format!(
                    "{session_id}: frame row {} has {} columns, header has {width}",
                    i + 1,
                    rec.len()
                )));
            }
            let mut fields = rec.iter().map(|f| f.trim().parse::<f64>());
            let ts = fields.next().expect("width >= 2");
            timestamps.push(ts.map_err(|e| Error::data(format!("{session_id}: frame row {}: {e}", i + 1)))?);
            for v in fields {
                let v = v.map_err(|e| Error::data(format!("{session_id}: frame row {}: {e}", i + 1)))?;
                if !v.is_finite() {
                    return Err(Error::data(format!("{session_id}: non-finite feature in row {}", i + 1)));
                }
                data.push(v);
            }
        }
        let values = Matrix::from_vec(timestamps.len(), width - 1, data)?;
        FrameMatrix::new(session_id, timestamps, values, frame_rate_hz)
    }

    pub fn load(path: &Path, frame_rate_hz: f64) -> Result<Self> {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::data(format!("cannot derive session id from {}", path.display())))?
            .to_string();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(&id, std::io::BufReader::new(file), frame_rate_hz)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["time".to_string()];
        header.extend((0..self.base_features()).map(|f| format!("f{f}")));
        let werr = |e: csv::Error| Error::data(format!("writing frames for {}: {e}", self.session_id));
        wtr.write_record(&header).map_err(werr)?;
        for (t, row) in self.timestamps.iter().zip(self.values.row_iter()) {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(t.to_string());
            rec.extend(row.iter().map(|v| v.to_string()));
            wtr.write_record(&rec).map_err(werr)?;
        }
        wtr.flush().map_err(|e| Error::data(format!("flushing frames: {e}")))?;
        Ok(())
    }
}
