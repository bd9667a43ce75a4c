//! Seedable simulators for DAR(1), NDARMA(p, q), and first-order Markov
//! chains.
//!
//! All sampling is inverse-CDF over the stored category order, and every
//! generator runs on an explicit counter-derived stream, so output is
//! bit-reproducible regardless of how work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::{Error, Result};

const PROB_TOL: f64 = 1e-12;

/// A reproducible random stream, fully determined by (seed, stream_index).
#[derive(Clone, Debug)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen()
    }
}

/// Stream `index` of the generator family keyed by `seed`. Distinct
/// indices give independent sequences; the same pair always replays the
/// same sequence.
pub fn derive_stream(seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    RngStream {
        seed,
        stream_index: index,
        rng,
    }
}

/// Mixes (seed, index) into a fresh 64-bit seed for nested generator
/// families, splitmix64 finalization.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    fn mix(x: u64) -> u64 {
        let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(seed ^ mix(index))
}

fn validate_probs(p: &[f64], what: &str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} is empty")));
    }
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidParameter(format!(
            "{what} sums to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Cumulative distribution over categories for inverse-CDF sampling.
#[derive(Clone, Debug)]
pub struct Cdf {
    cum: Vec<f64>,
}

impl Cdf {
    pub fn new(probs: &[f64]) -> Self {
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in probs {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Cdf { cum }
    }

    pub fn sample(&self, u: f64) -> usize {
        self.cum
            .partition_point(|&c| c <= u)
            .min(self.cum.len() - 1)
    }
}

/// Copy-or-refresh model: with probability phi the process repeats its
/// previous value, otherwise it draws fresh from the marginal p.
#[derive(Clone, Debug)]
pub struct Dar1Params {
    pub p: Vec<f64>,
    pub phi: f64,
}

impl Dar1Params {
    pub fn new(p: Vec<f64>, phi: f64) -> Result<Self> {
        validate_probs(&p, "marginal distribution")?;
        if !(0.0..1.0).contains(&phi) {
            return Err(Error::InvalidParameter(format!(
                "phi must lie in [0, 1), got {phi}"
            )));
        }
        Ok(Dar1Params { p, phi })
    }
}

/// Mixture of lagged values and lagged innovations: the selector picks
/// lag i of the process with weight phi_weights[i-1] or innovation lag j
/// with weight varphi_weights[j].
#[derive(Clone, Debug)]
pub struct NdarmaParams {
    pub p: Vec<f64>,
    pub phi_weights: Vec<f64>,
    pub varphi_weights: Vec<f64>,
}

impl NdarmaParams {
    pub fn new(p: Vec<f64>, phi_weights: Vec<f64>, varphi_weights: Vec<f64>) -> Result<Self> {
        validate_probs(&p, "marginal distribution")?;
        if varphi_weights.is_empty() {
            return Err(Error::InvalidParameter(
                "innovation weights must include the lag-0 weight".into(),
            ));
        }
        let all_nonneg = phi_weights
            .iter()
            .chain(&varphi_weights)
            .all(|&w| w >= 0.0 && w.is_finite());
        if !all_nonneg {
            return Err(Error::InvalidParameter(
                "mixture weights must be nonnegative and finite".into(),
            ));
        }
        let total: f64 = phi_weights.iter().chain(&varphi_weights).sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        if varphi_weights.len() > 1 && *varphi_weights.last().unwrap() == 0.0 {
            return Err(Error::InvalidParameter(
                "highest-order innovation weight must be positive".into(),
            ));
        }
        if !phi_weights.is_empty() && varphi_weights[0] == 0.0 {
            return Err(Error::InvalidParameter(
                "lag-0 innovation weight must be positive when process lags are used".into(),
            ));
        }
        Ok(NdarmaParams {
            p,
            phi_weights,
            varphi_weights,
        })
    }

    pub fn ar_order(&self) -> usize {
        self.phi_weights.len()
    }

    pub fn ma_order(&self) -> usize {
        self.varphi_weights.len() - 1
    }
}

/// First-order Markov chain with an explicit initial distribution.
#[derive(Clone, Debug)]
pub struct MarkovParams {
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl MarkovParams {
    pub fn new(transition: Vec<Vec<f64>>, initial: Vec<f64>) -> Result<Self> {
        validate_probs(&initial, "initial distribution")?;
        let r = initial.len();
        if transition.len() != r {
            return Err(Error::InvalidParameter(format!(
                "transition matrix has {} rows for {} categories",
                transition.len(),
                r
            )));
        }
        for (j, row) in transition.iter().enumerate() {
            if row.len() != r {
                return Err(Error::InvalidParameter(format!(
                    "transition row {j} has {} entries for {} categories",
                    row.len(),
                    r
                )));
            }
            validate_probs(row, &format!("transition row {j}"))?;
        }
        Ok(MarkovParams {
            transition,
            initial,
        })
    }
}

fn check_length(length: usize) -> Result<()> {
    if length == 0 {
        return Err(Error::InvalidParameter(
            "simulated length must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Simulates a DAR(1) path. Per step: one uniform decides copy vs refresh,
/// a second is consumed only on refresh.
pub fn simulate_dar1(params: &Dar1Params, length: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    check_length(length)?;
    Ok(dar1_path(&Cdf::new(&params.p), params.phi, length, rng))
}

pub(crate) fn dar1_path(marginal: &Cdf, phi: f64, length: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut out = Vec::with_capacity(length);
    let mut prev = marginal.sample(rng.uniform());
    out.push(prev);
    for _ in 1..length {
        let x = if rng.uniform() < phi {
            prev
        } else {
            marginal.sample(rng.uniform())
        };
        out.push(x);
        prev = x;
    }
    out
}

/// Simulates an NDARMA(p, q) path. The first max(p, q) values are i.i.d.
/// innovations; afterwards each step draws its innovation, then a selector
/// chooses which lagged value or innovation becomes the output.
pub fn simulate_ndarma(
    params: &NdarmaParams,
    length: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    check_length(length)?;
    let cdf = Cdf::new(&params.p);
    let ar = params.ar_order();
    let ma = params.ma_order();
    let warm = ar.max(ma);
    let weights: Vec<f64> = params
        .phi_weights
        .iter()
        .chain(&params.varphi_weights)
        .copied()
        .collect();
    let selector = Cdf::new(&weights);

    let mut out: Vec<usize> = Vec::with_capacity(length);
    let mut innovations: Vec<usize> = Vec::with_capacity(length);
    for t in 0..length {
        let eps = cdf.sample(rng.uniform());
        innovations.push(eps);
        let x = if t < warm {
            eps
        } else {
            let pick = selector.sample(rng.uniform());
            if pick < ar {
                out[t - (pick + 1)]
            } else {
                innovations[t - (pick - ar)]
            }
        };
        out.push(x);
    }
    Ok(out)
}

/// Simulates a first-order Markov chain path.
pub fn simulate_markov(
    params: &MarkovParams,
    length: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    check_length(length)?;
    let initial = Cdf::new(&params.initial);
    let rows: Vec<Cdf> = params.transition.iter().map(|row| Cdf::new(row)).collect();
    Ok(markov_path(&rows, &initial, length, rng))
}

pub(crate) fn markov_path(
    rows: &[Cdf],
    initial: &Cdf,
    length: usize,
    rng: &mut RngStream,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(length);
    let mut state = initial.sample(rng.uniform());
    out.push(state);
    for _ in 1..length {
        state = rows[state].sample(rng.uniform());
        out.push(state);
    }
    out
}
