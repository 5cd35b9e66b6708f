use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "t",
    "agent",
    "k",
    "estimate",
    "error",
    "corrupted",
    "eps_t",
    "alpha",
    "beta",
    "bound_thm1",
    "bound_thm2",
];

/// One `(t, agent, k)` row. `error` is `estimate - mu`. Bounds are filled on
/// the post-consensus rows (`k = K`) only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: usize,
    pub agent: usize,
    pub k: usize,
    pub estimate: Option<f64>,
    pub error: Option<f64>,
    pub corrupted: bool,
    pub eps_t: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub bound_thm1: Option<f64>,
    pub bound_thm2: Option<f64>,
}

/// End-of-run numbers of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub seed: u64,
    /// `|mu_(i,T)^K - mu|` per agent.
    pub final_errors: Vec<f64>,
    /// `|naive mean - mu|` per agent.
    pub naive_errors: Vec<f64>,
    pub naive_means: Vec<f64>,
    pub corrupted_counts: Vec<usize>,
    pub source: usize,
    /// Observed `t_bar` (adaptive runs with diagnostics only).
    pub t_bar: Option<usize>,
    pub bad_events: Option<usize>,
    pub max_bias_fallbacks: u64,
}

impl TrialSummary {
    pub fn max_final_error(&self) -> f64 {
        self.final_errors.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub rows: Vec<Row>,
    pub summary: TrialSummary,
}

impl TrialRecord {
    /// Rows sorted by `(t, agent, k)`.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by_key(|r| (r.t, r.agent, r.k));
    }
}

fn float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn row_fields(r: &Row) -> [String; 11] {
    [
        r.t.to_string(),
        r.agent.to_string(),
        r.k.to_string(),
        float(r.estimate),
        float(r.error),
        u8::from(r.corrupted).to_string(),
        float(r.eps_t),
        float(r.alpha),
        float(r.beta),
        float(r.bound_thm1),
        float(r.bound_thm2),
    ]
}

/// Writes rows as CSV in `(t, agent, k)` order with 17 significant digits.
pub fn write_csv<W: std::io::Write>(rows: &[Row], out: W) -> std::result::Result<(), csv::Error> {
    let mut sorted: Vec<&Row> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.t, r.agent, r.k));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in sorted {
        w.write_record(row_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[Row], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(format!("{other:?}")),
    })?;
    let header = reader
        .headers()
        .map_err(|e| parse_err(e.to_string()))?
        .clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(parse_err(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let line = n + 2;
        let int = |i: usize| {
            rec[i]
                .parse::<usize>()
                .map_err(|_| parse_err(format!("line {line}: bad {} `{}`", CSV_HEADER[i], &rec[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                return Ok(None);
            }
            rec[i]
                .parse::<f64>()
                .map(Some)
                .map_err(|_| parse_err(format!("line {line}: bad {} `{}`", CSV_HEADER[i], &rec[i])))
        };
        let corrupted = match &rec[5] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(format!("line {line}: bad corrupted `{other}`"))),
        };
        rows.push(Row {
            t: int(0)?,
            agent: int(1)?,
            k: int(2)?,
            estimate: opt(3)?,
            error: opt(4)?,
            corrupted,
            eps_t: opt(6)?,
            alpha: opt(7)?,
            beta: opt(8)?,
            bound_thm1: opt(9)?,
            bound_thm2: opt(10)?,
        });
    }
    Ok(rows)
}
