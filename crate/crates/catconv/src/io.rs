//! File formats: chain CSV ingestion (long and wide), report writing and
//! re-parsing (CSV and JSON lines), and the tidy CSV outputs of the
//! simulation study and benchmark.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::chain::{encode, Label, SegmentSet};
use crate::diagnose::{DiagnosticReport, Evaluation, RunMeta, Unit};
use crate::stats::{Method, TestOutcome, Warning};
use crate::study::{BenchRow, Concordance, StudyResult};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainFormat {
    Long,
    Wide,
}

impl FromStr for ChainFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "long" => Ok(ChainFormat::Long),
            "wide" => Ok(ChainFormat::Wide),
            other => Err(Error::InvalidParameter(format!(
                "unknown chain format '{other}' (expected long or wide)"
            ))),
        }
    }
}

/// Header handling for chain files. Auto detects a header by shape: in
/// long format a first row whose iteration field is not a positive
/// integer, in wide format a first row with no integer-looking cell at
/// all. Files of text-valued wide chains need an explicit yes/no.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HeaderMode {
    #[default]
    Auto,
    Yes,
    No,
}

impl FromStr for HeaderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(HeaderMode::Auto),
            "yes" => Ok(HeaderMode::Yes),
            "no" => Ok(HeaderMode::No),
            other => Err(Error::InvalidParameter(format!(
                "unknown header mode '{other}' (expected auto, yes, or no)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "jsonl" | "json-lines" => Ok(ReportFormat::JsonLines),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format '{other}' (expected csv or jsonl)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Csv => "csv",
            ReportFormat::JsonLines => "jsonl",
        })
    }
}

/// Floats in CSV reports carry 17 significant digits, enough to round-trip
/// any f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_float(s: &str, line: u64) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid number '{s}'"),
    })
}

fn read_records<R: Read>(reader: R) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i as u64 + 1, |p| p.line());
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn looks_like_positive_int(s: &str) -> bool {
    s.trim().parse::<u64>().map(|v| v >= 1).unwrap_or(false)
}

fn cell(rec: &csv::StringRecord, idx: usize, line: u64, what: &str) -> Result<String> {
    let raw = rec.get(idx).unwrap_or("").trim();
    if raw.is_empty() {
        return Err(Error::Parse {
            line,
            message: format!("empty {what}"),
        });
    }
    Ok(raw.to_string())
}

fn parse_long(records: &[(u64, csv::StringRecord)], header: HeaderMode) -> Result<SegmentSet> {
    let skip = match header {
        HeaderMode::Yes => 1,
        HeaderMode::No => 0,
        HeaderMode::Auto => {
            let (_, first) = &records[0];
            let is_data = first.len() == 3 && looks_like_positive_int(first.get(1).unwrap_or(""));
            usize::from(!is_data)
        }
    };
    let mut chains: BTreeMap<Label, BTreeMap<u64, Label>> = BTreeMap::new();
    for (line, rec) in &records[skip.min(records.len())..] {
        let line = *line;
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields (chain, iteration, value), found {}", rec.len()),
            });
        }
        let chain = Label::parse(&cell(rec, 0, line, "chain id")?);
        let iter_raw = cell(rec, 1, line, "iteration")?;
        let iteration: u64 = iter_raw.parse().map_err(|_| Error::Parse {
            line,
            message: format!("iteration must be a positive integer, got '{iter_raw}'"),
        })?;
        if iteration == 0 {
            return Err(Error::Parse {
                line,
                message: "iteration numbering starts at 1".into(),
            });
        }
        let value = Label::parse(&cell(rec, 2, line, "value")?);
        if chains.entry(chain.clone()).or_default().insert(iteration, value).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate iteration {iteration} for chain {chain}"),
            });
        }
    }
    if chains.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut segments = Vec::with_capacity(chains.len());
    for (chain, iters) in &chains {
        let n = iters.len() as u64;
        let (&first, _) = iters.iter().next().unwrap();
        let (&last, _) = iters.iter().next_back().unwrap();
        if first != 1 || last != n {
            return Err(Error::InvalidParameter(format!(
                "chain {chain}: iterations must be contiguous 1..{n}, found range {first}..{last}"
            )));
        }
        segments.push(iters.values().cloned().collect::<Vec<Label>>());
    }
    encode(&segments)
}

fn parse_wide(records: &[(u64, csv::StringRecord)], header: HeaderMode) -> Result<SegmentSet> {
    let skip = match header {
        HeaderMode::Yes => 1,
        HeaderMode::No => 0,
        HeaderMode::Auto => {
            let (_, first) = &records[0];
            let any_int = first
                .iter()
                .any(|c| c.trim().parse::<i64>().is_ok());
            usize::from(!any_int && !first.is_empty())
        }
    };
    let data = &records[skip.min(records.len())..];
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let width = data[0].1.len();
    let mut columns: Vec<Vec<Label>> = vec![Vec::with_capacity(data.len()); width];
    for (line, rec) in data {
        if rec.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(Label::parse(&cell(rec, j, *line, "value")?));
        }
    }
    encode(&columns)
}

/// Parses a chain CSV from any reader.
pub fn parse_chain_reader<R: Read>(
    reader: R,
    format: ChainFormat,
    header: HeaderMode,
) -> Result<SegmentSet> {
    let records = read_records(reader)?;
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    match format {
        ChainFormat::Long => parse_long(&records, header),
        ChainFormat::Wide => parse_wide(&records, header),
    }
}

/// Parses a chain CSV file into encoded segments.
pub fn parse_chain_csv(path: &Path, format: ChainFormat, header: HeaderMode) -> Result<SegmentSet> {
    let file = File::open(path)?;
    parse_chain_reader(BufReader::new(file), format, header)
}

const REPORT_COLUMNS: [&str; 10] = [
    "method",
    "mode",
    "unit",
    "checkpoint",
    "statistic",
    "df",
    "replicates",
    "p",
    "reject",
    "warnings",
];

fn meta_line(meta: &RunMeta) -> Result<String> {
    let json = serde_json::to_string(meta)
        .map_err(|e| Error::InvalidParameter(format!("cannot serialize metadata: {e}")))?;
    Ok(format!("# meta {json}"))
}

/// Writes a report to any writer in the chosen format.
pub fn write_report_to<W: Write>(
    report: &DiagnosticReport,
    mut writer: W,
    format: ReportFormat,
) -> Result<()> {
    match format {
        ReportFormat::Csv => {
            writeln!(writer, "{}", meta_line(&report.meta)?)?;
            let mut wtr = csv::Writer::from_writer(writer);
            wtr.write_record(REPORT_COLUMNS)?;
            for eval in &report.evaluations {
                let o = &eval.outcome;
                wtr.write_record([
                    o.method.name().to_string(),
                    report.meta.mode.name().to_string(),
                    eval.unit.to_string(),
                    eval.checkpoint.map(|c| c.to_string()).unwrap_or_default(),
                    fmt_float(o.statistic),
                    o.df.map(|d| d.to_string()).unwrap_or_default(),
                    o.replicates.map(|b| b.to_string()).unwrap_or_default(),
                    fmt_float(o.p_value),
                    eval.reject.to_string(),
                    o.warnings
                        .iter()
                        .map(|w| w.name())
                        .collect::<Vec<_>>()
                        .join(";"),
                ])?;
            }
            wtr.flush()?;
        }
        ReportFormat::JsonLines => {
            let meta = serde_json::to_string(&report.meta)
                .map_err(|e| Error::InvalidParameter(format!("cannot serialize metadata: {e}")))?;
            writeln!(writer, "{meta}")?;
            for eval in &report.evaluations {
                let row = serde_json::to_string(eval).map_err(|e| {
                    Error::InvalidParameter(format!("cannot serialize evaluation: {e}"))
                })?;
                writeln!(writer, "{row}")?;
            }
        }
    }
    Ok(())
}

/// Writes a report file; fields round-trip exactly through `read_report`.
pub fn write_report(report: &DiagnosticReport, path: &Path, format: ReportFormat) -> Result<()> {
    let file = File::create(path)?;
    write_report_to(report, BufWriter::new(file), format)
}

fn parse_optional<T: FromStr>(s: &str, line: u64, what: &str) -> Result<Option<T>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} '{s}'"),
    })
}

fn read_report_csv(text: &str) -> Result<DiagnosticReport> {
    let mut meta: Option<RunMeta> = None;
    let mut comment_lines = 0u64;
    let mut data = String::new();
    for line in text.lines() {
        if line.starts_with('#') {
            if let Some(json) = line.strip_prefix("# meta ") {
                meta = Some(serde_json::from_str(json).map_err(|e| Error::Parse {
                    line: comment_lines + 1,
                    message: format!("bad metadata: {e}"),
                })?);
            }
            comment_lines += 1;
        } else {
            data.push_str(line);
            data.push('\n');
        }
    }
    let meta = meta.ok_or(Error::Parse {
        line: 1,
        message: "missing '# meta' line".into(),
    })?;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(data.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: comment_lines + 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or(Error::Parse {
            line: comment_lines + 1,
            message: format!("missing column '{name}'"),
        })
    };
    let cols: Vec<usize> = REPORT_COLUMNS
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut evaluations = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: comment_lines + i as u64 + 2,
            message: e.to_string(),
        })?;
        let line = comment_lines + rec.position().map_or(i as u64 + 2, |p| p.line());
        let field = |k: usize| rec.get(cols[k]).unwrap_or("").trim();

        let method: Method = field(0).parse()?;
        let unit: Unit = field(2).parse()?;
        let checkpoint: Option<usize> = parse_optional(field(3), line, "checkpoint")?;
        let statistic = parse_float(field(4), line)?;
        let df: Option<u64> = parse_optional(field(5), line, "df")?;
        let replicates: Option<u64> = parse_optional(field(6), line, "replicate count")?;
        let p_value = parse_float(field(7), line)?;
        let reject = match field(8) {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("invalid reject flag '{other}'"),
                })
            }
        };
        let warnings: Vec<Warning> = field(9)
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        evaluations.push(Evaluation {
            unit,
            checkpoint,
            outcome: TestOutcome {
                method,
                statistic,
                df,
                replicates,
                p_value,
                warnings,
            },
            reject,
        });
    }
    Ok(DiagnosticReport { meta, evaluations })
}

fn read_report_jsonl(text: &str) -> Result<DiagnosticReport> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (i, first) = lines.next().ok_or(Error::EmptyInput)?;
    let meta: RunMeta = serde_json::from_str(first).map_err(|e| Error::Parse {
        line: i as u64 + 1,
        message: format!("bad metadata: {e}"),
    })?;
    let mut evaluations = Vec::new();
    for (i, line) in lines {
        let eval: Evaluation = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        evaluations.push(eval);
    }
    Ok(DiagnosticReport { meta, evaluations })
}

/// Re-parses a written report; exact inverse of `write_report_to`.
pub fn read_report_from<R: Read>(mut reader: R, format: ReportFormat) -> Result<DiagnosticReport> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    match format {
        ReportFormat::Csv => read_report_csv(&text),
        ReportFormat::JsonLines => read_report_jsonl(&text),
    }
}

pub fn read_report(path: &Path, format: ReportFormat) -> Result<DiagnosticReport> {
    let file = File::open(path)?;
    read_report_from(BufReader::new(file), format)
}

/// Writes chains as a wide CSV (one column per chain, `chain-i` headers),
/// re-ingestable with the wide format.
pub fn write_chains_wide<W: Write>(set: &SegmentSet, writer: W) -> Result<()> {
    let lengths = set.lengths();
    let n = lengths[0];
    if lengths.iter().any(|&l| l != n) {
        return Err(Error::InvalidParameter(
            "wide output needs equal-length chains".into(),
        ));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record((1..=set.num_segments()).map(|i| format!("chain-{i}")))?;
    for t in 0..n {
        wtr.write_record(
            set.segments()
                .iter()
                .map(|seg| set.alphabet().label(seg[t]).to_string()),
        )?;
    }
    wtr.flush()?;
    Ok(())
}

/// Tidy per-cell operating characteristics. Both the rejection and
/// non-rejection proportions are carried so either convention plots
/// directly.
pub fn write_study_csv<W: Write>(result: &StudyResult, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "method",
        "length",
        "phi",
        "beta",
        "alpha",
        "replications",
        "failures",
        "rejections",
        "rejection_rate",
        "non_rejection_rate",
    ])?;
    for c in &result.cells {
        wtr.write_record([
            c.method.name().to_string(),
            c.length.to_string(),
            c.phi.to_string(),
            c.beta.to_string(),
            result.alpha.to_string(),
            c.replications.to_string(),
            c.failures.to_string(),
            c.rejections.to_string(),
            c.rejection_rate().to_string(),
            c.non_rejection_rate().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_concordance_csv<W: Write>(rows: &[Concordance], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["length", "phi", "method_a", "method_b", "pairs", "pearson_r"])?;
    for c in rows {
        wtr.write_record([
            c.length.to_string(),
            c.phi.to_string(),
            c.method_a.name().to_string(),
            c.method_b.name().to_string(),
            c.pairs.to_string(),
            c.r.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "method",
        "chains",
        "categories",
        "length",
        "repetitions",
        "median_seconds",
        "mean_seconds",
        "min_seconds",
        "max_seconds",
    ])?;
    for b in rows {
        wtr.write_record([
            b.method.name().to_string(),
            b.chains.to_string(),
            b.categories.to_string(),
            b.length.to_string(),
            b.repetitions.to_string(),
            b.median_seconds.to_string(),
            b.mean_seconds.to_string(),
            b.min_seconds.to_string(),
            b.max_seconds.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => {
                if let csv::ErrorKind::Io(io) = e.into_kind() {
                    Error::Io(io)
                } else {
                    unreachable!()
                }
            }
            _ => Error::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            },
        }
    }
}
