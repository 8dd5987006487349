//! Text formats and atomic file output.
//!
//! Pattern set:
//! ```text
//! N P seed
//! 1 -1 1 ...        (P lines of N entries)
//! ```
//! Weight matrix: `W N rule_tag`, then N rows of N reals.
//! Dual coefficients: `A P N gamma lambda eta iterations`, then P rows of N
//! reals, then the stored pattern set in the format above.
//! Model reals use 17 significant digits; experiment statistics use 6.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::{ExperimentKind, ExperimentResult, ResultRow};
use crate::kernel::KernelParams;
use crate::linalg::Matrix;
use crate::patterns::{Pattern, PatternSet, RNG_NAME};
use crate::recall::{Network, TrajectoryRecord};
use crate::trainers::{DualCoefficients, Rule, TrainConfig, WeightMatrix};

pub const RESULTS_HEADER: [&str; 7] = [
    "rule",
    "sweep_param",
    "sweep_value",
    "trials",
    "success_rate",
    "mean_final_overlap",
    "std_final_overlap",
];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err(path))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Model reals: 17 significant digits, scientific notation.
fn fmt_model(x: f64) -> String {
    format!("{x:.16e}")
}

/// Statistics: rounded to 6 significant digits, printed in shortest form.
pub fn fmt_stat(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().unwrap_or(x);
    rounded.to_string()
}

/// Line cursor that skips blank lines and remembers positions for errors.
struct Cursor<'a> {
    path: &'a Path,
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last: usize,
}

impl<'a> Cursor<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Cursor {
            path,
            lines: text.lines().enumerate().peekable(),
            last: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.to_path_buf(),
            line: self.last,
            msg: msg.into(),
        }
    }

    fn next_fields(&mut self, what: &str) -> Result<Vec<&'a str>> {
        for (idx, line) in self.lines.by_ref() {
            self.last = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok(fields);
            }
        }
        Err(self.err(format!("unexpected end of file, expected {what}")))
    }

    fn parse<T: std::str::FromStr>(&self, field: &str, what: &str) -> Result<T> {
        field
            .parse()
            .map_err(|_| self.err(format!("invalid {what} '{field}'")))
    }

    fn expect_end(&mut self) -> Result<()> {
        while let Some((idx, line)) = self.lines.next() {
            if !line.trim().is_empty() {
                self.last = idx + 1;
                return Err(self.err("trailing content"));
            }
        }
        Ok(())
    }
}

pub fn patterns_to_string(set: &PatternSet) -> String {
    let mut out = format!("{} {} {}\n", set.dim(), set.len(), set.seed());
    for p in set.patterns() {
        let line: Vec<&str> = p
            .values()
            .iter()
            .map(|&v| if v > 0 { "1" } else { "-1" })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn parse_pattern_block(cur: &mut Cursor<'_>) -> Result<PatternSet> {
    let header = cur.next_fields("pattern header 'N P seed'")?;
    if header.len() != 3 {
        return Err(cur.err("pattern header must be 'N P seed'"));
    }
    let n: usize = cur.parse(header[0], "N")?;
    let p: usize = cur.parse(header[1], "P")?;
    let seed: u64 = cur.parse(header[2], "seed")?;
    if n == 0 || p == 0 {
        return Err(cur.err("N and P must be positive"));
    }
    let mut patterns = Vec::with_capacity(p);
    for _ in 0..p {
        let fields = cur.next_fields("pattern row")?;
        if fields.len() != n {
            return Err(cur.err(format!("expected {n} entries, found {}", fields.len())));
        }
        let values = fields
            .iter()
            .map(|f| match *f {
                "1" | "+1" => Ok(1i8),
                "-1" => Ok(-1i8),
                other => Err(cur.err(format!("entry '{other}' is not -1 or +1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        patterns.push(Pattern::new(values).map_err(|e| cur.err(e.to_string()))?);
    }
    PatternSet::new(patterns, seed).map_err(|e| cur.err(e.to_string()))
}

pub fn parse_patterns(path: &Path, text: &str) -> Result<PatternSet> {
    let mut cur = Cursor::new(path, text);
    let set = parse_pattern_block(&mut cur)?;
    cur.expect_end()?;
    Ok(set)
}

pub fn save_patterns(path: &Path, set: &PatternSet) -> Result<()> {
    write_atomic(path, patterns_to_string(set).as_bytes())
}

pub fn load_patterns(path: &Path) -> Result<PatternSet> {
    parse_patterns(path, &read_text(path)?)
}

fn push_rows(out: &mut String, m: &Matrix) {
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|&v| fmt_model(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn parse_rows(cur: &mut Cursor<'_>, rows: usize, cols: usize) -> Result<Matrix> {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let fields = cur.next_fields("matrix row")?;
        if fields.len() != cols {
            return Err(cur.err(format!("expected {cols} values, found {}", fields.len())));
        }
        for f in fields {
            data.push(cur.parse::<f64>(f, "real")?);
        }
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn network_to_string(net: &Network) -> String {
    let mut out = String::new();
    match net {
        Network::Weights(w) => {
            let _ = writeln!(out, "W {} {}", w.dim(), w.rule());
            push_rows(&mut out, w.matrix());
        }
        Network::Kernel {
            coefficients,
            stored,
        } => {
            let cfg = coefficients.config();
            let _ = writeln!(
                out,
                "A {} {} {} {} {} {}",
                coefficients.patterns(),
                coefficients.neurons(),
                fmt_model(coefficients.kernel().gamma()),
                fmt_model(cfg.lambda),
                fmt_model(cfg.eta),
                cfg.iterations
            );
            push_rows(&mut out, coefficients.alpha());
            out.push_str(&patterns_to_string(stored));
        }
    }
    out
}

pub fn parse_network(path: &Path, text: &str) -> Result<Network> {
    let mut cur = Cursor::new(path, text);
    let header = cur.next_fields("model header")?;
    let net = match header.first().copied() {
        Some("W") => {
            if header.len() != 3 {
                return Err(cur.err("weight header must be 'W N rule_tag'"));
            }
            let n: usize = cur.parse(header[1], "N")?;
            let rule: Rule = header[2].parse().map_err(|e: Error| cur.err(e.to_string()))?;
            let m = parse_rows(&mut cur, n, n)?;
            Network::Weights(WeightMatrix::new(m, rule).map_err(|e| cur.err(e.to_string()))?)
        }
        Some("A") => {
            if header.len() != 7 {
                return Err(cur.err("dual header must be 'A P N gamma lambda eta iterations'"));
            }
            let p: usize = cur.parse(header[1], "P")?;
            let n: usize = cur.parse(header[2], "N")?;
            let gamma: f64 = cur.parse(header[3], "gamma")?;
            let lambda: f64 = cur.parse(header[4], "lambda")?;
            let eta: f64 = cur.parse(header[5], "eta")?;
            let iterations: usize = cur.parse(header[6], "iterations")?;
            let kernel = KernelParams::new(gamma).map_err(|e| cur.err(e.to_string()))?;
            let config =
                TrainConfig::new(lambda, eta, iterations).map_err(|e| cur.err(e.to_string()))?;
            let alpha = parse_rows(&mut cur, p, n)?;
            let coefficients =
                DualCoefficients::new(alpha, kernel, config).map_err(|e| cur.err(e.to_string()))?;
            let stored = parse_pattern_block(&mut cur)?;
            Network::kernel(coefficients, stored).map_err(|e| cur.err(e.to_string()))?
        }
        _ => return Err(cur.err("model header must start with 'W' or 'A'")),
    };
    cur.expect_end()?;
    Ok(net)
}

pub fn save_network(path: &Path, net: &Network) -> Result<()> {
    write_atomic(path, network_to_string(net).as_bytes())
}

pub fn load_network(path: &Path) -> Result<Network> {
    parse_network(path, &read_text(path)?)
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Format {
        path: path.to_path_buf(),
        line: e.position().map(|p| p.line() as usize).unwrap_or(0),
        msg: e.to_string(),
    }
}

pub fn trajectory_to_csv(record: &TrajectoryRecord) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let p = Path::new("<trajectory>");
    w.write_record(["step", "overlap"]).map_err(csv_err(p))?;
    for (step, m) in record.overlaps.iter().enumerate() {
        w.write_record([step.to_string(), m.to_string()])
            .map_err(csv_err(p))?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::domain(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::domain(e.to_string()))
}

pub fn save_trajectory(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    write_atomic(path, trajectory_to_csv(record)?.as_bytes())
}

/// CSV body for an experiment, one row per (rule, sweep value).
pub fn results_to_csv(result: &ExperimentResult) -> Result<String> {
    let p = Path::new("<results>");
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).map_err(csv_err(p))?;
    let param = result.spec.kind.sweep_param();
    for row in &result.rows {
        w.write_record([
            row.rule.as_str().to_string(),
            param.to_string(),
            row.sweep_value.to_string(),
            row.trials.to_string(),
            fmt_stat(row.success_rate),
            fmt_stat(row.mean_final_overlap),
            fmt_stat(row.std_final_overlap),
        ])
        .map_err(csv_err(p))?;
    }
    into_string(w)
}

/// Rows read back from a results CSV, with the sweep parameter name.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub sweep_param: String,
    pub rows: Vec<ResultRow>,
}

pub fn parse_results_csv(path: &Path, text: &str) -> Result<ResultsTable> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("unexpected header '{}'", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut sweep_param = String::new();
    let mut rows = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = idx + 2;
        let bad = |msg: String| Error::Format {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| bad(format!("invalid number '{}'", &rec[i])))
        };
        let rule: Rule = rec[0].parse().map_err(|e: Error| bad(e.to_string()))?;
        sweep_param = rec[1].to_string();
        let trials: usize = rec[3]
            .parse()
            .map_err(|_| bad(format!("invalid trial count '{}'", &rec[3])))?;
        let success_rate = num(4)?;
        rows.push(ResultRow {
            rule,
            sweep_value: num(2)?,
            trials,
            successes: (success_rate * trials as f64).round() as usize,
            success_rate,
            mean_final_overlap: num(5)?,
            std_final_overlap: num(6)?,
        });
    }
    Ok(ResultsTable { sweep_param, rows })
}

pub fn load_results(path: &Path) -> Result<ResultsTable> {
    parse_results_csv(path, &read_text(path)?)
}

/// `key=value` lines echoing the spec, seeds and run time.
pub fn metadata_to_string(result: &ExperimentResult) -> String {
    let s = &result.spec;
    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    let rules: Vec<&str> = s.rules.iter().map(Rule::as_str).collect();
    let gamma = match s.kind {
        ExperimentKind::GammaSweep => "swept".to_string(),
        _ => s
            .kernel_params
            .unwrap_or_else(|| KernelParams::for_network(s.n))
            .gamma()
            .to_string(),
    };
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("kind", s.kind.to_string());
    kv("sweep_param", s.kind.sweep_param().to_string());
    kv("sweep_values", join(&s.sweep_values));
    kv("n", s.n.to_string());
    kv("rules", rules.join(","));
    kv("trials", s.trials.to_string());
    kv("base_seed", s.base_seed.to_string());
    kv("load", s.load.to_string());
    kv("max_probes", s.max_probes.to_string());
    kv("lambda", s.train_config.lambda.to_string());
    kv("eta", s.train_config.eta.to_string());
    kv("iterations", s.train_config.iterations.to_string());
    kv("gamma", gamma);
    kv("steps", s.recall_config.steps.to_string());
    kv("threshold", "0".to_string());
    kv("update", "synchronous".to_string());
    kv("rng", RNG_NAME.to_string());
    for cell in &result.seeds {
        let seeds: Vec<String> = cell.seeds.iter().map(u64::to_string).collect();
        kv(
            &format!("seeds.{}.{}", cell.rule, cell.sweep_value),
            seeds.join(","),
        );
    }
    kv("timestamp", result.timestamp.to_string());
    out
}

/// Sidecar path for a results file: `<path>.meta`.
pub fn metadata_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_results(path: &Path, result: &ExperimentResult) -> Result<()> {
    write_atomic(path, results_to_csv(result)?.as_bytes())?;
    write_atomic(&metadata_path(path), metadata_to_string(result).as_bytes())
}
