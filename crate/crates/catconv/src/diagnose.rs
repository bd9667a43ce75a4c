//! Runs the diagnostics over whole chain collections, head/tail windows of
//! single chains, or cumulative prefixes at sequential checkpoints.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    billingsley_boot_test, darboot_test, mcboot_test, BootstrapConfig, NullModel,
};
use crate::chain::{split_within, SegmentSet};
use crate::stats::{billingsley_test, hangartner_test, weiss_test, Method, TestOutcome, Warning};
use crate::tables::{FrequencyTable, TransitionTable};
use crate::{Error, Result};

/// Hard floor on sequential prefix length; shorter checkpoints are skipped.
pub const MIN_PREFIX: usize = 50;
/// Prefixes below this get a short-segment warning.
pub const SOFT_PREFIX: usize = 100;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.30;
pub const DEFAULT_CHECKPOINT_COUNT: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Between,
    Within,
    Sequential,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Between => "between",
            Mode::Within => "within",
            Mode::Sequential => "sequential",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "between" => Ok(Mode::Between),
            "within" => Ok(Mode::Within),
            "sequential" => Ok(Mode::Sequential),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode '{other}' (expected between, within, or sequential)"
            ))),
        }
    }
}

/// Sequential checkpoint grid: either K evenly spaced cumulative prefixes
/// or an explicit iteration list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Checkpoints {
    Count(usize),
    Explicit(Vec<usize>),
}

impl Default for Checkpoints {
    fn default() -> Self {
        Checkpoints::Count(DEFAULT_CHECKPOINT_COUNT)
    }
}

#[derive(Clone, Debug)]
pub struct DiagnosticRequest {
    pub methods: Vec<Method>,
    pub mode: Mode,
    pub window_fraction: f64,
    pub checkpoints: Checkpoints,
    pub alpha: f64,
    pub bootstrap: BootstrapConfig,
}

impl Default for DiagnosticRequest {
    fn default() -> Self {
        DiagnosticRequest {
            methods: Method::ALL.to_vec(),
            mode: Mode::Between,
            window_fraction: DEFAULT_WINDOW_FRACTION,
            checkpoints: Checkpoints::default(),
            alpha: DEFAULT_ALPHA,
            bootstrap: BootstrapConfig::default(),
        }
    }
}

impl DiagnosticRequest {
    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods requested".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        match &self.checkpoints {
            Checkpoints::Count(0) => {
                return Err(Error::InvalidParameter(
                    "checkpoint count must be at least 1".into(),
                ))
            }
            Checkpoints::Explicit(list) if list.is_empty() => {
                return Err(Error::InvalidParameter(
                    "explicit checkpoint list is empty".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

/// What one evaluation covered: all chains pooled, or a single chain's
/// head/tail comparison. Chains are numbered from 1, matching the
/// `chain-N` column headers of wide CSV files.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    All,
    Chain(usize),
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unit::All => f.write_str("all"),
            Unit::Chain(i) => write!(f, "chain-{i}"),
        }
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(Unit::All);
        }
        s.strip_prefix("chain-")
            .and_then(|rest| rest.parse().ok())
            .map(Unit::Chain)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown unit '{s}'")))
    }
}

impl Serialize for Unit {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Unit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One test outcome with its placement in the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub unit: Unit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<usize>,
    pub outcome: TestOutcome,
    pub reject: bool,
}

/// Run-level metadata carried alongside the evaluations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub mode: Mode,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_model: Option<NullModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub meta: RunMeta,
    pub evaluations: Vec<Evaluation>,
}

/// Applies one method to one segment set.
pub fn run_method(set: &SegmentSet, method: Method, boot: &BootstrapConfig) -> Result<TestOutcome> {
    match method {
        Method::Hangartner => hangartner_test(&FrequencyTable::from_segments(set)),
        Method::Weiss => weiss_test(set),
        Method::Billingsley => billingsley_test(&TransitionTable::from_segments(set)),
        Method::Darboot => darboot_test(set, boot),
        Method::Mcboot => mcboot_test(set, boot),
        Method::Billingsleyboot => billingsley_boot_test(set, boot),
    }
}

fn meta_for(req: &DiagnosticRequest, checkpoints: Option<Vec<usize>>, notes: Vec<String>) -> RunMeta {
    let any_boot = req.methods.iter().any(|m| m.is_bootstrap());
    RunMeta {
        mode: req.mode,
        methods: req.methods.clone(),
        alpha: req.alpha,
        seed: req.bootstrap.seed,
        window_fraction: (req.mode == Mode::Within).then_some(req.window_fraction),
        bootstrap_replicates: any_boot.then_some(req.bootstrap.replicates),
        null_model: any_boot.then_some(req.bootstrap.null_model),
        checkpoints,
        notes,
    }
}

/// Dispatches on the requested mode.
pub fn run(chains: &SegmentSet, req: &DiagnosticRequest) -> Result<DiagnosticReport> {
    match req.mode {
        Mode::Between => run_between(chains, req),
        Mode::Within => run_within(chains, req),
        Mode::Sequential => run_sequential(chains, req),
    }
}

/// Compares the chains against each other as independent units.
pub fn run_between(chains: &SegmentSet, req: &DiagnosticRequest) -> Result<DiagnosticReport> {
    req.validate()?;
    let mut evaluations = Vec::with_capacity(req.methods.len());
    for &method in &req.methods {
        let outcome = run_method(chains, method, &req.bootstrap)?;
        evaluations.push(Evaluation {
            unit: Unit::All,
            checkpoint: None,
            reject: outcome.reject(req.alpha),
            outcome,
        });
    }
    Ok(DiagnosticReport {
        meta: meta_for(req, None, Vec::new()),
        evaluations,
    })
}

/// Compares each chain's opening window against its closing window,
/// reporting per chain so a single wandering chain stays identifiable.
pub fn run_within(chains: &SegmentSet, req: &DiagnosticRequest) -> Result<DiagnosticReport> {
    req.validate()?;
    let mut evaluations = Vec::new();
    for i in 0..chains.num_segments() {
        let in_chain = |e: Error| Error::InChain {
            chain: i + 1,
            source: Box::new(e),
        };
        let windows = split_within(chains.segment(i), chains.alphabet(), req.window_fraction)
            .map_err(in_chain)?;
        for &method in &req.methods {
            let outcome = run_method(&windows, method, &req.bootstrap).map_err(in_chain)?;
            evaluations.push(Evaluation {
                unit: Unit::Chain(i + 1),
                checkpoint: None,
                reject: outcome.reject(req.alpha),
                outcome,
            });
        }
    }
    Ok(DiagnosticReport {
        meta: meta_for(req, None, Vec::new()),
        evaluations,
    })
}

fn checkpoint_grid(
    chains: &SegmentSet,
    checkpoints: &Checkpoints,
) -> Result<(Vec<usize>, Vec<String>)> {
    let min_len = chains.min_len();
    let mut grid: Vec<usize> = match checkpoints {
        Checkpoints::Count(k) => (1..=*k).map(|i| min_len * i / k).collect(),
        Checkpoints::Explicit(list) => {
            for &c in list {
                if c > min_len {
                    return Err(Error::InvalidParameter(format!(
                        "checkpoint {c} exceeds the shortest chain length {min_len}"
                    )));
                }
            }
            list.clone()
        }
    };
    grid.sort_unstable();
    grid.dedup();
    let skipped = grid.iter().filter(|&&c| c < MIN_PREFIX).count();
    grid.retain(|&c| c >= MIN_PREFIX);
    let mut notes = Vec::new();
    if skipped > 0 {
        notes.push(format!(
            "skipped {skipped} checkpoint(s) below the minimum prefix length {MIN_PREFIX}"
        ));
    }
    if grid.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no checkpoint reaches the minimum prefix length {MIN_PREFIX}"
        )));
    }
    Ok((grid, notes))
}

/// Evaluates the between-chain tests on cumulative prefixes of all chains.
///
/// Bootstrap methods reuse the configured seed at every checkpoint, so the
/// final checkpoint reproduces `run_between` on the full chains exactly.
pub fn run_sequential(chains: &SegmentSet, req: &DiagnosticRequest) -> Result<DiagnosticReport> {
    req.validate()?;
    let (grid, notes) = checkpoint_grid(chains, &req.checkpoints)?;
    let mut evaluations = Vec::with_capacity(grid.len() * req.methods.len());
    for &c in &grid {
        let at = |e: Error| Error::AtCheckpoint {
            checkpoint: c,
            source: Box::new(e),
        };
        let prefix = chains.prefix(c).map_err(at)?;
        for &method in &req.methods {
            let mut outcome = run_method(&prefix, method, &req.bootstrap).map_err(at)?;
            if c < SOFT_PREFIX {
                outcome.warnings.push(Warning::ShortSegment);
            }
            evaluations.push(Evaluation {
                unit: Unit::All,
                checkpoint: Some(c),
                reject: outcome.reject(req.alpha),
                outcome,
            });
        }
    }
    Ok(DiagnosticReport {
        meta: meta_for(req, Some(grid), notes),
        evaluations,
    })
}
