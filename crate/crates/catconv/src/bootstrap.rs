//! Parametric bootstrap calibration of the homogeneity statistics.
//!
//! Each replicate simulates a full segment set with the original segment
//! count and lengths from a null model fitted to the data, recomputes the
//! statistic, and the p-value is the proportion of replicate statistics at
//! or above the observed one. Replicate b draws from stream (seed, b), so
//! results do not depend on worker count or scheduling.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{CategoryAlphabet, SegmentSet};
use crate::simulate::{dar1_path, derive_stream, markov_path, Cdf};
use crate::stats::{
    billingsley_statistic, estimate_dar1, pearson_statistic, Method, TestOutcome, Warning,
};
use crate::tables::{FrequencyTable, TransitionTable};
use crate::{Error, Result};

/// Null-model parameterization for replicate simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullModel {
    /// Per-segment estimates, one fitted model per segment.
    #[default]
    AsEstimated,
    /// Estimates pooled across segments, one shared model.
    Pooled,
}

impl NullModel {
    pub fn name(self) -> &'static str {
        match self {
            NullModel::AsEstimated => "as-estimated",
            NullModel::Pooled => "pooled",
        }
    }
}

impl fmt::Display for NullModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NullModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "as-estimated" => Ok(NullModel::AsEstimated),
            "pooled" => Ok(NullModel::Pooled),
            other => Err(Error::InvalidParameter(format!(
                "unknown null model '{other}' (expected as-estimated or pooled)"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BootstrapConfig {
    /// Number of bootstrap replicates B.
    pub replicates: usize,
    pub seed: u64,
    /// Worker-count hint; None uses the global thread pool.
    pub workers: Option<usize>,
    pub null_model: NullModel,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            seed: 0,
            workers: None,
            null_model: NullModel::AsEstimated,
        }
    }
}

/// Raw bootstrap result; the p-value is exactly recomputable from the
/// other two fields.
#[derive(Clone, Debug)]
pub struct BootstrapOutcome {
    pub observed_statistic: f64,
    pub replicate_statistics: Vec<f64>,
    pub p_value: f64,
}

/// Proportion of replicate statistics at or above the observed statistic.
pub fn bootstrap_pvalue(observed: f64, replicates: &[f64]) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    let hits = replicates.iter().filter(|&&x| x >= observed).count();
    Ok(hits as f64 / replicates.len() as f64)
}

enum NullSimulator {
    Dar1 { marginals: Vec<Cdf>, phi: f64 },
    Markov { rows: Vec<Vec<Cdf>>, initials: Vec<Cdf> },
}

impl NullSimulator {
    fn segment(&self, i: usize, length: usize, rng: &mut crate::simulate::RngStream) -> Vec<usize> {
        match self {
            NullSimulator::Dar1 { marginals, phi } => {
                dar1_path(&marginals[i], *phi, length, rng)
            }
            NullSimulator::Markov { rows, initials } => {
                markov_path(&rows[i], &initials[i], length, rng)
            }
        }
    }
}

fn fit_dar1_null(set: &SegmentSet, null_model: NullModel) -> Result<(NullSimulator, Vec<Warning>)> {
    let est = estimate_dar1(set)?;
    let mut warnings = Vec::new();
    // Simulation needs a copy probability in [0, 1); negative estimates
    // are legitimate data but have no DAR(1) counterpart.
    let phi = est.phi_hat.clamp(0.0, crate::stats::PHI_CLAMP);
    if est.clamped || phi != est.phi_hat {
        warnings.push(Warning::ClampedPhi);
    }
    let marginals = match null_model {
        NullModel::AsEstimated => est
            .segment_proportions
            .iter()
            .map(|p| Cdf::new(p))
            .collect(),
        NullModel::Pooled => {
            vec![Cdf::new(&est.pooled_proportions); set.num_segments()]
        }
    };
    Ok((NullSimulator::Dar1 { marginals, phi }, warnings))
}

fn fit_markov_null(set: &SegmentSet, null_model: NullModel) -> (NullSimulator, Vec<Warning>) {
    let trans = TransitionTable::from_segments(set);
    let freq = FrequencyTable::from_segments(set);
    let s = set.num_segments();
    let (rows, initials) = match null_model {
        NullModel::AsEstimated => (
            (0..s)
                .map(|i| {
                    trans
                        .segment_matrix(i)
                        .iter()
                        .map(|row| Cdf::new(row))
                        .collect()
                })
                .collect(),
            (0..s).map(|i| Cdf::new(&freq.segment_proportions(i))).collect(),
        ),
        NullModel::Pooled => {
            let pooled_rows: Vec<Cdf> = trans
                .pooled_matrix()
                .iter()
                .map(|row| Cdf::new(row))
                .collect();
            let pooled_init = Cdf::new(&freq.pooled_proportions());
            (vec![pooled_rows; s], vec![pooled_init; s])
        }
    };
    let mut warnings = Vec::new();
    if freq.support().len() <= 1 {
        warnings.push(Warning::DegenerateSupport);
    }
    (NullSimulator::Markov { rows, initials }, warnings)
}

pub(crate) fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))
            .map(|pool| pool.install(f)),
    }
}

fn run_bootstrap<F>(
    set: &SegmentSet,
    cfg: &BootstrapConfig,
    sim: NullSimulator,
    statistic: F,
) -> Result<BootstrapOutcome>
where
    F: Fn(&SegmentSet) -> f64 + Sync,
{
    if cfg.replicates == 0 {
        return Err(Error::InvalidParameter(
            "bootstrap replicate count must be at least 1".into(),
        ));
    }
    let observed = statistic(set);
    let lengths = set.lengths();
    let r = set.num_categories();
    let alphabet = CategoryAlphabet::integers(r);
    let replicate_statistics: Vec<f64> = with_pool(cfg.workers, || {
        (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|b| {
                let mut rng = derive_stream(cfg.seed, b);
                let segments: Vec<Vec<usize>> = lengths
                    .iter()
                    .enumerate()
                    .map(|(i, &n)| sim.segment(i, n, &mut rng))
                    .collect();
                let replicate = SegmentSet::from_indices(segments, alphabet.clone())
                    .expect("simulated segments are valid by construction");
                statistic(&replicate)
            })
            .collect()
    })?;
    let p_value = bootstrap_pvalue(observed, &replicate_statistics)?;
    Ok(BootstrapOutcome {
        observed_statistic: observed,
        replicate_statistics,
        p_value,
    })
}

fn pearson_of(set: &SegmentSet) -> f64 {
    pearson_statistic(&FrequencyTable::from_segments(set)).0
}

fn billingsley_of(set: &SegmentSet) -> f64 {
    billingsley_statistic(&TransitionTable::from_segments(set)).0
}

fn require_two_segments(set: &SegmentSet) -> Result<()> {
    if set.num_segments() < 2 {
        return Err(Error::NeedTwoSegments {
            got: set.num_segments(),
        });
    }
    Ok(())
}

fn to_outcome(method: Method, out: &BootstrapOutcome, warnings: Vec<Warning>) -> TestOutcome {
    TestOutcome {
        method,
        statistic: out.observed_statistic,
        df: None,
        replicates: Some(out.replicate_statistics.len() as u64),
        p_value: out.p_value,
        warnings,
    }
}

/// Marginal homogeneity statistic calibrated by simulating from fitted
/// DAR(1) nulls.
pub fn darboot(set: &SegmentSet, cfg: &BootstrapConfig) -> Result<BootstrapOutcome> {
    require_two_segments(set)?;
    let (sim, _) = fit_dar1_null(set, cfg.null_model)?;
    run_bootstrap(set, cfg, sim, pearson_of)
}

pub fn darboot_test(set: &SegmentSet, cfg: &BootstrapConfig) -> Result<TestOutcome> {
    require_two_segments(set)?;
    let (sim, warnings) = fit_dar1_null(set, cfg.null_model)?;
    let out = run_bootstrap(set, cfg, sim, pearson_of)?;
    Ok(to_outcome(Method::Darboot, &out, warnings))
}

/// Marginal homogeneity statistic calibrated by simulating from fitted
/// first-order Markov nulls.
pub fn mcboot(set: &SegmentSet, cfg: &BootstrapConfig) -> Result<BootstrapOutcome> {
    require_two_segments(set)?;
    let (sim, _) = fit_markov_null(set, cfg.null_model);
    run_bootstrap(set, cfg, sim, pearson_of)
}

pub fn mcboot_test(set: &SegmentSet, cfg: &BootstrapConfig) -> Result<TestOutcome> {
    require_two_segments(set)?;
    let (sim, warnings) = fit_markov_null(set, cfg.null_model);
    let out = run_bootstrap(set, cfg, sim, pearson_of)?;
    Ok(to_outcome(Method::Mcboot, &out, warnings))
}

/// Transition homogeneity statistic calibrated by simulating from fitted
/// first-order Markov nulls.
pub fn billingsley_boot(set: &SegmentSet, cfg: &BootstrapConfig) -> Result<BootstrapOutcome> {
    require_two_segments(set)?;
    let (sim, _) = fit_markov_null(set, cfg.null_model);
    run_bootstrap(set, cfg, sim, billingsley_of)
}

pub fn billingsley_boot_test(set: &SegmentSet, cfg: &BootstrapConfig) -> Result<TestOutcome> {
    require_two_segments(set)?;
    let (sim, warnings) = fit_markov_null(set, cfg.null_model);
    let out = run_bootstrap(set, cfg, sim, billingsley_of)?;
    Ok(to_outcome(Method::Billingsleyboot, &out, warnings))
}
