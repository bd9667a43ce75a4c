//! Test statistics and estimators: the Pearson homogeneity statistic over
//! pooled support, the lagged-agreement estimate of serial dependence with
//! its correction factor, and the transition-matrix homogeneity statistic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chain::SegmentSet;
use crate::special::chi_squared_sf;
use crate::tables::{FrequencyTable, TransitionTable};
use crate::{Error, Result};

pub const PHI_CLAMP: f64 = 0.999;

/// The six diagnostic procedures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hangartner,
    Weiss,
    Darboot,
    Mcboot,
    Billingsley,
    Billingsleyboot,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Hangartner,
        Method::Weiss,
        Method::Darboot,
        Method::Mcboot,
        Method::Billingsley,
        Method::Billingsleyboot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Hangartner => "hangartner",
            Method::Weiss => "weiss",
            Method::Darboot => "darboot",
            Method::Mcboot => "mcboot",
            Method::Billingsley => "billingsley",
            Method::Billingsleyboot => "billingsleyboot",
        }
    }

    pub fn is_bootstrap(self) -> bool {
        matches!(
            self,
            Method::Darboot | Method::Mcboot | Method::Billingsleyboot
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

/// Non-fatal flags attached to a test outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Warning {
    /// Pooled support holds a single category; nothing to compare.
    DegenerateSupport,
    /// Degrees of freedom collapsed to zero; p fixed at 1.
    ZeroDf,
    /// The estimated dependence parameter was clamped into range.
    ClampedPhi,
    /// A segment or prefix is short enough to make the test unreliable.
    ShortSegment,
}

impl Warning {
    pub fn name(self) -> &'static str {
        match self {
            Warning::DegenerateSupport => "degenerate-support",
            Warning::ZeroDf => "zero-df",
            Warning::ClampedPhi => "clamped-phi",
            Warning::ShortSegment => "short-segment",
        }
    }
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Warning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Warning::DegenerateSupport,
            Warning::ZeroDf,
            Warning::ClampedPhi,
            Warning::ShortSegment,
        ]
        .into_iter()
        .find(|w| w.name() == s.trim())
        .ok_or_else(|| Error::InvalidParameter(format!("unknown warning '{s}'")))
    }
}

/// Result of one diagnostic test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub method: Method,
    pub statistic: f64,
    /// Degrees of freedom; present only for asymptotic methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<u64>,
    /// Bootstrap replicate count; present only for bootstrap methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<u64>,
    pub p_value: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl TestOutcome {
    pub fn reject(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

fn require_two_segments(s: usize) -> Result<()> {
    if s < 2 {
        return Err(Error::NeedTwoSegments { got: s });
    }
    Ok(())
}

/// Pearson homogeneity statistic over pooled support:
/// X^2 = sum_i sum_{j in R} n_i (p_j^(i) - p_j)^2 / p_j,
/// df = (|R|-1)(s-1).
pub fn pearson_statistic(freq: &FrequencyTable) -> (f64, u64) {
    let support = freq.support();
    let s = freq.num_segments();
    let mut x2 = 0.0;
    for i in 0..s {
        let n_i = freq.segment_total(i) as f64;
        for &j in &support {
            let diff = freq.segment_proportion(i, j) - freq.pooled_proportion(j);
            x2 += n_i * diff * diff / freq.pooled_proportion(j);
        }
    }
    let df = (support.len() as u64).saturating_sub(1) * (s as u64 - 1);
    (x2, df)
}

fn asymptotic_outcome(method: Method, statistic: f64, df: u64, degenerate: bool) -> Result<TestOutcome> {
    let mut warnings = Vec::new();
    if degenerate {
        warnings.push(Warning::DegenerateSupport);
    }
    let p_value = if df == 0 {
        warnings.push(Warning::ZeroDf);
        1.0
    } else {
        chi_squared_sf(df as f64, statistic)?
    };
    Ok(TestOutcome {
        method,
        statistic,
        df: Some(df),
        replicates: None,
        p_value,
        warnings,
    })
}

/// Chi-squared test of marginal homogeneity across segments.
pub fn hangartner_test(freq: &FrequencyTable) -> Result<TestOutcome> {
    require_two_segments(freq.num_segments())?;
    let (x2, df) = pearson_statistic(freq);
    asymptotic_outcome(Method::Hangartner, x2, df, freq.support().len() <= 1)
}

/// Bias-corrected lag-m agreement estimate over all segments:
/// kappa(m) = 1 + 1/n - (1 - sum_j p_jj(m)) / (1 - sum_j p_j^2),
/// where p_jj(m) averages the lag-m same-category frequency over segments.
pub fn kappa_hat(set: &SegmentSet, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("lag must be positive".into()));
    }
    let min_len = set.min_len();
    if m >= min_len {
        return Err(Error::InvalidParameter(format!(
            "lag {m} is not below the shortest segment length {min_len}"
        )));
    }
    let freq = FrequencyTable::from_segments(set);
    if freq.support().len() <= 1 {
        return Err(Error::InsufficientVariation);
    }
    let s = set.num_segments() as f64;
    let n = freq.total() as f64;

    let mut match_sum = 0.0;
    for seg in set.segments() {
        let pairs = (seg.len() - m) as f64;
        let matches = (0..seg.len() - m).filter(|&t| seg[t] == seg[t + m]).count();
        match_sum += matches as f64 / pairs;
    }
    let p_diag = match_sum / s;

    let p_sq: f64 = freq
        .pooled_proportions()
        .iter()
        .map(|&p| p * p)
        .sum();
    Ok(1.0 + 1.0 / n - (1.0 - p_diag) / (1.0 - p_sq))
}

/// Serial-dependence estimate used by the corrected test and the DAR(1)
/// bootstrap null.
#[derive(Clone, Debug)]
pub struct Dar1Estimate {
    pub phi_hat: f64,
    pub c_hat: f64,
    pub kappa_lags: BTreeMap<usize, f64>,
    pub segment_proportions: Vec<Vec<f64>>,
    pub pooled_proportions: Vec<f64>,
    pub clamped: bool,
}

/// Fits the one-parameter copy model: phi = kappa(1) clamped into
/// (-1, 1), c = (1 + phi)/(1 - phi).
pub fn estimate_dar1(set: &SegmentSet) -> Result<Dar1Estimate> {
    let kappa1 = kappa_hat(set, 1)?;
    let phi_hat = kappa1.clamp(-PHI_CLAMP, PHI_CLAMP);
    let clamped = phi_hat != kappa1;
    let c_hat = (1.0 + phi_hat) / (1.0 - phi_hat);
    let freq = FrequencyTable::from_segments(set);
    Ok(Dar1Estimate {
        phi_hat,
        c_hat,
        kappa_lags: BTreeMap::from([(1, kappa1)]),
        segment_proportions: (0..set.num_segments())
            .map(|i| freq.segment_proportions(i))
            .collect(),
        pooled_proportions: freq.pooled_proportions(),
        clamped,
    })
}

/// Homogeneity test with the serial-dependence correction: X^2 / c against
/// the same chi-squared reference as the uncorrected test.
pub fn weiss_test(set: &SegmentSet) -> Result<TestOutcome> {
    require_two_segments(set.num_segments())?;
    let freq = FrequencyTable::from_segments(set);
    let (x2, df) = pearson_statistic(&freq);
    if df == 0 {
        // Nothing to correct; also keeps the dependence fit away from its
        // degenerate-marginal error on single-category data.
        return asymptotic_outcome(Method::Weiss, x2, df, freq.support().len() <= 1);
    }
    let est = estimate_dar1(set)?;
    let mut outcome = asymptotic_outcome(Method::Weiss, x2 / est.c_hat, df, false)?;
    if est.clamped {
        outcome.warnings.push(Warning::ClampedPhi);
    }
    Ok(outcome)
}

/// Transition-matrix homogeneity statistic:
/// X^2_f = sum_i sum_j sum_{k in R_j} f_j^(i) (p_jk^(i) - p_jk)^2 / p_jk,
/// df = sum_j (a_j - 1)(b_j - 1). Segment rows with no departures
/// contribute nothing.
pub fn billingsley_statistic(trans: &TransitionTable) -> (f64, u64) {
    let r = trans.num_categories();
    let s = trans.num_segments();
    let mut x2 = 0.0;
    let mut df = 0u64;
    for j in 0..r {
        if trans.pooled_row_total(j) == 0 {
            continue;
        }
        let support = trans.row_support(j);
        let a_j = trans.segments_leaving(j).len() as u64;
        let b_j = support.len() as u64;
        df += (a_j - 1) * (b_j - 1);
        for i in 0..s {
            let f = trans.row_total(i, j) as f64;
            if f == 0.0 {
                continue;
            }
            for &k in &support {
                let pooled = trans.pooled_prob(j, k).expect("row has transitions");
                let diff = trans.segment_prob(i, j, k).expect("row has transitions") - pooled;
                x2 += f * diff * diff / pooled;
            }
        }
    }
    (x2, df)
}

/// Transition-matrix homogeneity test across segments.
pub fn billingsley_test(trans: &TransitionTable) -> Result<TestOutcome> {
    require_two_segments(trans.num_segments())?;
    let (x2, df) = billingsley_statistic(trans);
    let degenerate = (0..trans.num_categories())
        .filter(|&j| trans.pooled_row_total(j) > 0)
        .all(|j| trans.row_support(j).len() <= 1);
    asymptotic_outcome(Method::Billingsley, x2, df, degenerate)
}
