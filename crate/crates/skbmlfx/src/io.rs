//! Text file formats: feature and prototype CSVs, planner instances and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use skbmlfx_core::extractor::{ClassId, SemanticPrototypes};
use skbmlfx_core::linalg::Matrix;
use skbmlfx_core::planner::{Instance, PlannerReport, Row, LEVELS};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: String, reason: String },
    #[error("{path}:{line}: {reason}")]
    DimensionMismatch { path: String, line: usize, reason: String },
    #[error("{path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
}

/// Visual features with their labels, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    /// D_v × N.
    pub visual: Matrix,
    pub labels: Vec<ClassId>,
    /// Semantic dimension recorded in the header.
    pub d_s: usize,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::IoFailure {
        path: display(path),
        source,
    })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write(path: &Path, contents: &str) -> Result<(), IoError> {
    let fail = |source| IoError::IoFailure {
        path: display(path),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(fail)?;
    }
    fs::write(path, contents).map_err(fail)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:e}")
}

/// Parses `# key=value key=value` into pairs, checking the expected keys in order.
fn parse_header(path: &Path, line: Option<&str>, keys: &[&str]) -> Result<Vec<f64>, IoError> {
    let bad = |reason: String| IoError::MalformedHeader {
        path: display(path),
        reason,
    };
    let line = line.ok_or_else(|| bad("file is empty".into()))?;
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| bad(format!("expected '# {}=...'", keys[0])))?;
    let fields: Vec<&str> = body.split_whitespace().collect();
    if fields.len() != keys.len() {
        return Err(bad(format!("expected fields {keys:?}")));
    }
    fields
        .iter()
        .zip(keys)
        .map(|(f, k)| {
            let (name, value) = f.split_once('=').ok_or_else(|| bad(format!("field '{f}'")))?;
            if name != *k {
                return Err(bad(format!("expected '{k}', found '{name}'")));
            }
            value.parse::<f64>().map_err(|_| bad(format!("bad value for '{k}'")))
        })
        .collect()
}

fn as_count(path: &Path, x: f64, key: &str) -> Result<usize, IoError> {
    if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
        Ok(x as usize)
    } else {
        Err(IoError::MalformedHeader {
            path: display(path),
            reason: format!("'{key}' must be a non-negative integer"),
        })
    }
}

/// Non-empty, non-comment lines after the header with their 1-based line numbers.
fn body(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_row(path: &Path, line: usize, text: &str, width: usize) -> Result<(u32, Vec<f64>), IoError> {
    let mismatch = |reason: String| IoError::DimensionMismatch {
        path: display(path),
        line,
        reason,
    };
    let mut cells = text.split(',').map(str::trim);
    let id = cells
        .next()
        .and_then(|c| c.parse::<u32>().ok())
        .ok_or_else(|| mismatch("first cell must be a class id".into()))?;
    let values = cells
        .map(|c| c.parse::<f64>().map_err(|_| mismatch(format!("bad number '{c}'"))))
        .collect::<Result<Vec<f64>, IoError>>()?;
    if values.len() != width {
        return Err(mismatch(format!("expected {width} values, found {}", values.len())));
    }
    if values.iter().any(|x| !x.is_finite()) {
        return Err(mismatch("non-finite value".into()));
    }
    Ok((id, values))
}

pub fn features_to_string(visual: &Matrix, labels: &[ClassId], d_s: usize) -> String {
    let mut out = format!("# dv={} ds={} n={}\n", visual.rows(), d_s, visual.cols());
    for (n, label) in labels.iter().enumerate() {
        let _ = write!(out, "{}", label.0);
        for d in 0..visual.rows() {
            let _ = write!(out, ",{}", fmt_real(visual[(d, n)]));
        }
        out.push('\n');
    }
    out
}

pub fn save_features(path: &Path, visual: &Matrix, labels: &[ClassId], d_s: usize) -> Result<(), IoError> {
    write(path, &features_to_string(visual, labels, d_s))
}

pub fn load_features(path: &Path) -> Result<FeatureTable, IoError> {
    let text = read(path)?;
    let header = parse_header(path, text.lines().next(), &["dv", "ds", "n"])?;
    let d_v = as_count(path, header[0], "dv")?;
    let d_s = as_count(path, header[1], "ds")?;
    let n = as_count(path, header[2], "n")?;
    let mut labels = Vec::with_capacity(n);
    let mut columns = Vec::with_capacity(n);
    for (line, row) in body(&text) {
        let width = row.split(',').count().saturating_sub(1);
        if width != d_v {
            return Err(IoError::MalformedHeader {
                path: display(path),
                reason: format!("header says dv={d_v} but line {line} has {width} values"),
            });
        }
        let (id, v) = parse_row(path, line, row, d_v)?;
        labels.push(ClassId(id));
        columns.push(v);
    }
    if labels.len() != n || n == 0 || d_v == 0 {
        return Err(IoError::MalformedHeader {
            path: display(path),
            reason: format!("header says n={n} but {} samples follow", labels.len()),
        });
    }
    let visual = Matrix::from_columns(&columns).map_err(|e| IoError::Invalid {
        path: display(path),
        reason: e.to_string(),
    })?;
    Ok(FeatureTable { visual, labels, d_s })
}

pub fn prototypes_to_string(p: &SemanticPrototypes) -> String {
    let mut out = format!("# ds={} c={}\n", p.dim(), p.len());
    for (j, id) in p.class_ids().iter().enumerate() {
        let _ = write!(out, "{}", id.0);
        for d in 0..p.dim() {
            let _ = write!(out, ",{}", fmt_real(p.vectors()[(d, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn save_prototypes(path: &Path, p: &SemanticPrototypes) -> Result<(), IoError> {
    write(path, &prototypes_to_string(p))
}

pub fn load_prototypes(path: &Path) -> Result<SemanticPrototypes, IoError> {
    let text = read(path)?;
    let header = parse_header(path, text.lines().next(), &["ds", "c"])?;
    let d_s = as_count(path, header[0], "ds")?;
    let c = as_count(path, header[1], "c")?;
    let mut ids = Vec::with_capacity(c);
    let mut columns = Vec::with_capacity(c);
    for (line, row) in body(&text) {
        let (id, s) = parse_row(path, line, row, d_s)?;
        ids.push(ClassId(id));
        columns.push(s);
    }
    if ids.len() != c || c == 0 || d_s == 0 {
        return Err(IoError::MalformedHeader {
            path: display(path),
            reason: format!("header says c={c} but {} prototypes follow", ids.len()),
        });
    }
    let invalid = |reason: String| IoError::Invalid {
        path: display(path),
        reason,
    };
    let vectors = Matrix::from_columns(&columns).map_err(|e| invalid(e.to_string()))?;
    SemanticPrototypes::new(ids, vectors).map_err(|e| invalid(e.to_string()))
}

const INSTANCE_COLUMNS: &str = "m,loss1,loss2,loss3,loss4,latency1,latency2,latency3,latency4";

pub fn instance_to_string(inst: &Instance) -> String {
    let mut out = format!("# tau={}\n{INSTANCE_COLUMNS}\n", fmt_real(inst.tau()));
    for (m, (l, t)) in inst.losses().iter().zip(inst.latencies()).enumerate() {
        let _ = write!(out, "{m}");
        for x in l.iter().chain(t) {
            let _ = write!(out, ",{}", fmt_real(*x));
        }
        out.push('\n');
    }
    out
}

pub fn save_instance(path: &Path, inst: &Instance) -> Result<(), IoError> {
    write(path, &instance_to_string(inst))
}

pub fn load_instance(path: &Path) -> Result<Instance, IoError> {
    let text = read(path)?;
    let tau = parse_header(path, text.lines().next(), &["tau"])?[0];
    let mut losses: Vec<Row> = Vec::new();
    let mut latencies: Vec<Row> = Vec::new();
    for (line, row) in body(&text) {
        if row.starts_with('m') {
            continue;
        }
        let (_, values) = parse_row(path, line, row, 2 * LEVELS)?;
        losses.push(std::array::from_fn(|j| values[j]));
        latencies.push(std::array::from_fn(|j| values[LEVELS + j]));
    }
    Instance::new(losses, latencies, tau).map_err(|e| IoError::Invalid {
        path: display(path),
        reason: e.to_string(),
    })
}

pub fn report_to_json(report: &PlannerReport) -> String {
    serde_json::to_string_pretty(report).expect("report serialises")
}
