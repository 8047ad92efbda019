use std::collections::BTreeMap;
use std::path::Path;

use super::DatasetContainer;
use crate::dynsys::TrajectorySet;
use crate::error::{Error, Result};
use crate::numkit::Rng;

/// Where the source series is cut into train and test parts.
#[derive(Debug, Clone, PartialEq)]
pub enum Split {
    /// The first `floor(fraction * rows)` rows go to training.
    Fraction(f64),
    /// Training takes the rows whose time column sorts strictly before this value.
    Timestamp(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvImportOptions {
    pub name: String,
    pub traj_len: usize,
    pub stride: usize,
    pub split: Split,
    /// Value columns by header name; `None` takes every column except `time_column`.
    pub columns: Option<Vec<String>>,
    pub time_column: Option<String>,
    /// Keep a random `floor(fraction * count)` windows per side.
    pub subsample: Option<f64>,
    pub seed: u64,
}

impl CsvImportOptions {
    pub fn new(name: impl Into<String>, traj_len: usize) -> Self {
        Self {
            name: name.into(),
            traj_len,
            stride: 1,
            split: Split::Fraction(0.8),
            columns: None,
            time_column: None,
            subsample: None,
            seed: 0,
        }
    }
}

/// `floor((len - traj_len) / stride) + 1`, or 0 when `len < traj_len`.
pub fn window_count(len: usize, traj_len: usize, stride: usize) -> usize {
    if len < traj_len || stride == 0 {
        0
    } else {
        (len - traj_len) / stride + 1
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<Table> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => csv_err(format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_err(e.to_string()))?;
    Ok(Table { headers, rows })
}

fn column_index(table: &Table, name: &str, path: &Path) -> Result<usize> {
    table.headers.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
        path: path.to_path_buf(),
        message: format!("no column named {name:?}"),
    })
}

fn windows(
    series: &[Vec<f64>],
    opts: &CsvImportOptions,
    side: &str,
    rng: &mut Rng,
) -> Result<TrajectorySet> {
    let dim = series.first().map_or(0, Vec::len);
    let count = window_count(series.len(), opts.traj_len, opts.stride);
    if count == 0 {
        return Err(Error::Shape(format!(
            "{side} part has {} rows, shorter than traj_len {}",
            series.len(),
            opts.traj_len
        )));
    }
    let mut starts: Vec<usize> = (0..count).map(|w| w * opts.stride).collect();
    if let Some(frac) = opts.subsample {
        rng.shuffle(&mut starts);
        starts.truncate(((frac * count as f64).floor() as usize).max(1));
        starts.sort_unstable();
    }
    let trajectories = starts
        .into_iter()
        .map(|s| series[s..s + opts.traj_len].iter().flatten().copied().collect())
        .collect();
    TrajectorySet::from_trajectories(trajectories, opts.traj_len, dim)
}

/// Reads a header-row CSV, splits it into train and test parts and cuts each
/// part into `traj_len` windows advancing by `stride`. No window crosses the
/// split point.
pub fn import_csv(path: &Path, opts: &CsvImportOptions) -> Result<DatasetContainer> {
    if opts.traj_len < 2 || opts.stride == 0 {
        return Err(Error::Config(format!(
            "need traj_len >= 2 and stride >= 1, got {} and {}",
            opts.traj_len, opts.stride
        )));
    }
    if let Some(f) = opts.subsample {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Config(format!("subsample fraction must be in (0, 1], got {f}")));
        }
    }
    let table = read_table(path)?;
    let time_idx = opts
        .time_column
        .as_deref()
        .map(|c| column_index(&table, c, path))
        .transpose()?;
    let value_idx: Vec<usize> = match &opts.columns {
        Some(cols) => cols
            .iter()
            .map(|c| column_index(&table, c, path))
            .collect::<Result<_>>()?,
        None => (0..table.headers.len()).filter(|&i| Some(i) != time_idx).collect(),
    };
    if value_idx.is_empty() {
        return Err(Error::Config("no value columns selected".into()));
    }

    let mut series = Vec::with_capacity(table.rows.len());
    for (r, row) in table.rows.iter().enumerate() {
        let state = value_idx
            .iter()
            .map(|&c| {
                let cell = row.get(c).unwrap_or("").trim();
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Csv {
                    path: path.to_path_buf(),
                    // Row numbers count the header as row 1.
                    message: format!(
                        "non-numeric value {cell:?} at row {}, column {} ({:?})",
                        r + 2,
                        c + 1,
                        table.headers[c]
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        series.push(state);
    }

    let cut = match &opts.split {
        Split::Fraction(f) => {
            if !(*f > 0.0 && *f < 1.0) {
                return Err(Error::Config(format!("split fraction must be in (0, 1), got {f}")));
            }
            (f * series.len() as f64).floor() as usize
        }
        Split::Timestamp(stamp) => {
            let t = time_idx.ok_or_else(|| {
                Error::Config("timestamp split needs a time column".into())
            })?;
            table
                .rows
                .iter()
                .position(|row| row.get(t).unwrap_or("").trim() >= stamp.as_str())
                .unwrap_or(series.len())
        }
    };
    let mut rng = Rng::new(opts.seed);
    let train = windows(&series[..cut], opts, "train", &mut rng)?;
    let test = windows(&series[cut..], opts, "test", &mut rng)?;

    let mut meta = BTreeMap::new();
    meta.insert("source".to_string(), path.display().to_string().replace('\n', " "));
    meta.insert("traj_len".to_string(), opts.traj_len.to_string());
    meta.insert("stride".to_string(), opts.stride.to_string());
    meta.insert("split_row".to_string(), cut.to_string());
    let names: Vec<&str> = value_idx.iter().map(|&i| table.headers[i].as_str()).collect();
    meta.insert("columns".to_string(), names.join(","));
    if let Some(f) = opts.subsample {
        meta.insert("subsample".to_string(), f.to_string());
        meta.insert("seed".to_string(), opts.seed.to_string());
    }
    DatasetContainer::new(opts.name.clone(), train, test, meta)
}

/// Writes one row per (split, trajectory, step) with columns
/// `split,trajectory,step,time,x0..x{D-1}`.
pub fn export_csv(c: &DatasetContainer, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let wrap = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut header = vec!["split".to_string(), "trajectory".into(), "step".into(), "time".into()];
    header.extend((0..c.dim()).map(|k| format!("x{k}")));
    w.write_record(&header).map_err(wrap)?;
    for (label, set) in [("train", &c.train), ("test", &c.test)] {
        for i in 0..set.num_trajectories() {
            for j in 0..set.traj_len() {
                let mut rec = vec![label.to_string(), i.to_string(), j.to_string(), set.time_of(j).to_string()];
                rec.extend(set.state(i, j).iter().map(|v| v.to_string()));
                w.write_record(&rec).map_err(wrap)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}
