//! Toy differentially-private query engine: a purchased contract grants a
//! total privacy budget that the buyer splits across queries, one query per
//! (kind, column), answered with Laplace noise at sensitivity / eps.

use std::collections::HashSet;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DpError {
    #[error("privacy budget exceeded: requested {requested}, remaining {remaining}")]
    BudgetExceeded { requested: f64, remaining: f64 },
    #[error("query type already used: {0}")]
    DuplicateQueryType(String),
    #[error("unknown column: {0}")]
    UnknownColumn(String),
    #[error("query eps must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed journal or bounds file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryKind {
    Count,
    Sum { col: String },
    Mean { col: String },
}

impl QueryKind {
    /// One query per (kind, column) is allowed; this is the dedup key.
    pub fn key(&self) -> String {
        match self {
            QueryKind::Count => "count".into(),
            QueryKind::Sum { col } => format!("sum:{col}"),
            QueryKind::Mean { col } => format!("mean:{col}"),
        }
    }
}

impl fmt::Display for QueryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(flatten)]
    pub kind: QueryKind,
    pub eps: f64,
}

/// Numeric table with declared public per-column bounds.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub columns: Vec<String>,
    /// Column-major values.
    pub data: Vec<Vec<f64>>,
    /// (lo, hi) per column, same order as `columns`.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Deserialize)]
struct BoundsFile {
    columns: std::collections::BTreeMap<String, [f64; 2]>,
}

impl Dataset {
    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, |c| c.len())
    }

    fn col_index(&self, name: &str) -> Result<usize, DpError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| DpError::UnknownColumn(name.into()))
    }

    pub fn from_parts(
        columns: Vec<String>,
        data: Vec<Vec<f64>>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self, DpError> {
        let ds = Dataset { columns, data, bounds };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<(), DpError> {
        if self.rows() == 0 {
            return Err(DpError::Dataset("dataset is empty".into()));
        }
        if self.columns.len() != self.data.len() || self.columns.len() != self.bounds.len() {
            return Err(DpError::Dataset("column/bounds arity mismatch".into()));
        }
        for ((name, col), &(lo, hi)) in self.columns.iter().zip(&self.data).zip(&self.bounds) {
            if lo >= hi {
                return Err(DpError::Dataset(format!("bounds for {name} have lo >= hi")));
            }
            for &v in col {
                if v < lo || v > hi {
                    return Err(DpError::Dataset(format!(
                        "value {v} in column {name} outside declared bounds [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Load a CSV with a header row and a TOML bounds sidecar declaring
    /// `[columns]` entries `name = [lo, hi]` for every column.
    pub fn load(csv_path: impl AsRef<Path>, bounds_path: impl AsRef<Path>) -> Result<Self, DpError> {
        let bounds_path = bounds_path.as_ref();
        let text =
            std::fs::read_to_string(bounds_path).map_err(|source| DpError::Io {
                path: bounds_path.display().to_string(),
                source,
            })?;
        let bf: BoundsFile = toml::from_str(&text).map_err(|e| DpError::Parse(e.to_string()))?;

        let csv_path = csv_path.as_ref();
        let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| {
            DpError::Dataset(format!("{}: {e}", csv_path.display()))
        })?;
        let columns: Vec<String> =
            rdr.headers().map_err(|e| DpError::Parse(e.to_string()))?.iter().map(String::from).collect();
        let mut data = vec![Vec::new(); columns.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| DpError::Parse(e.to_string()))?;
            if rec.len() != columns.len() {
                return Err(DpError::Dataset("ragged row in dataset".into()));
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| DpError::Dataset(format!("non-numeric value {field:?}")))?;
                data[j].push(v);
            }
        }
        let bounds = columns
            .iter()
            .map(|c| {
                bf.columns
                    .get(c)
                    .map(|&[lo, hi]| (lo, hi))
                    .ok_or_else(|| DpError::Dataset(format!("no bounds declared for column {c}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_parts(columns, data, bounds)
    }

    fn true_answer(&self, kind: &QueryKind) -> Result<(f64, f64), DpError> {
        match kind {
            QueryKind::Count => Ok((self.rows() as f64, 1.0)),
            QueryKind::Sum { col } => {
                let j = self.col_index(col)?;
                let (lo, hi) = self.bounds[j];
                Ok((self.data[j].iter().sum(), hi - lo))
            }
            QueryKind::Mean { col } => {
                let j = self.col_index(col)?;
                let (lo, hi) = self.bounds[j];
                let n = self.rows() as f64;
                Ok((self.data[j].iter().sum::<f64>() / n, (hi - lo) / n))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub buyer: String,
    #[serde(flatten)]
    pub kind: QueryKind,
    pub eps: f64,
    pub seed: u64,
    pub answer: f64,
}

#[derive(Debug, Default, Deserialize)]
struct JournalFile {
    #[serde(default)]
    entry: Vec<JournalEntry>,
}

/// Per-buyer budget accounting; every successful answer is appended to the
/// optional journal before the ledger state changes are considered durable.
#[derive(Debug)]
pub struct BudgetLedger {
    pub buyer: String,
    pub purchased: f64,
    pub consumed: f64,
    used: HashSet<String>,
    journal_path: Option<PathBuf>,
}

impl BudgetLedger {
    pub fn new(buyer: impl Into<String>, purchased: f64) -> Self {
        BudgetLedger {
            buyer: buyer.into(),
            purchased,
            consumed: 0.0,
            used: HashSet::new(),
            journal_path: None,
        }
    }

    pub fn with_journal(mut self, path: impl Into<PathBuf>) -> Self {
        self.journal_path = Some(path.into());
        self
    }

    pub fn remaining(&self) -> f64 {
        self.purchased - self.consumed
    }

    fn append_journal(&self, entry: &JournalEntry) -> Result<(), DpError> {
        let Some(path) = &self.journal_path else { return Ok(()) };
        let body = toml::to_string(entry).map_err(|e| DpError::Parse(e.to_string()))?;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| DpError::Io { path: path.display().to_string(), source })?;
        write!(f, "[[entry]]\n{body}\n")
            .map_err(|source| DpError::Io { path: path.display().to_string(), source })
    }

    /// Rebuild a ledger by replaying a journal; enforces the same invariants
    /// entry by entry.
    pub fn replay(
        path: impl AsRef<Path>,
        buyer: &str,
        purchased: f64,
    ) -> Result<Self, DpError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DpError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let jf: JournalFile = toml::from_str(&text).map_err(|e| DpError::Parse(e.to_string()))?;
        let mut ledger = BudgetLedger::new(buyer, purchased);
        for e in jf.entry.iter().filter(|e| e.buyer == buyer) {
            ledger.charge(&e.kind, e.eps)?;
        }
        Ok(ledger)
    }

    fn charge(&mut self, kind: &QueryKind, eps: f64) -> Result<(), DpError> {
        if eps <= 0.0 {
            return Err(DpError::NonPositiveEps(eps));
        }
        let key = kind.key();
        if self.used.contains(&key) {
            return Err(DpError::DuplicateQueryType(key));
        }
        if eps > self.remaining() + 1e-12 {
            return Err(DpError::BudgetExceeded { requested: eps, remaining: self.remaining() });
        }
        self.used.insert(key);
        self.consumed += eps;
        Ok(())
    }
}

/// Inverse-CDF Laplace(0, scale) draw from a seeded generator.
pub fn laplace_noise(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Answer one query: `f(D) + Laplace(sensitivity / eps)`. The ledger is only
/// updated (and the journal appended) when every check passes.
pub fn answer_query(
    ledger: &mut BudgetLedger,
    query: &Query,
    ds: &Dataset,
    seed: u64,
) -> Result<f64, DpError> {
    let (truth, sensitivity) = ds.true_answer(&query.kind)?;
    // Validate before mutating: charge() rejects without partial updates.
    let snapshot = (ledger.consumed, ledger.used.len());
    ledger.charge(&query.kind, query.eps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let answer = truth + laplace_noise(&mut rng, sensitivity / query.eps);
    let entry = JournalEntry {
        buyer: ledger.buyer.clone(),
        kind: query.kind.clone(),
        eps: query.eps,
        seed,
        answer,
    };
    if let Err(e) = ledger.append_journal(&entry) {
        // Roll back the charge if the journal write failed.
        ledger.consumed = snapshot.0;
        ledger.used.remove(&query.kind.key());
        debug_assert_eq!(ledger.used.len(), snapshot.1);
        return Err(e);
    }
    Ok(answer)
}
