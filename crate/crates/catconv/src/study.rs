//! Simulation-study harness: operating characteristics over a
//! (length, phi, beta) grid, p-value concordance between methods, and a
//! runtime benchmark.
//!
//! Each grid cell simulates N replicate pairs of segments: the first from
//! a DAR(1) model with marginal p, the second from the same model with
//! marginal beta*p + (1-beta)*q. beta = 1 gives the null of identical
//! marginals; beta = 0 the most separated alternative.

use std::time::Instant;

use rayon::prelude::*;

use crate::bootstrap::{with_pool, BootstrapConfig, NullModel};
use crate::chain::{CategoryAlphabet, SegmentSet};
use crate::diagnose::run_method;
use crate::simulate::{dar1_path, derive_seed, derive_stream, Cdf, Dar1Params};
use crate::stats::Method;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct StudyGrid {
    pub lengths: Vec<usize>,
    pub phis: Vec<f64>,
    pub betas: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Replications N per cell.
    pub replications: usize,
    pub alpha: f64,
    pub methods: Vec<Method>,
    /// Bootstrap replicates B for the bootstrap methods.
    pub bootstrap_replicates: usize,
    pub seed: u64,
    /// Retain per-replicate p-values (needed for concordance).
    pub keep_pvalues: bool,
    pub workers: Option<usize>,
    /// Null fit for the bootstrap methods. Defaults to pooled: simulating
    /// from per-segment estimates reproduces whatever heterogeneity the
    /// data show, which centers the bootstrap null on the observed
    /// statistic and destroys power against non-convergence.
    pub null_model: NullModel,
}

impl Default for StudyGrid {
    fn default() -> Self {
        StudyGrid {
            lengths: vec![10, 100, 1000, 10000],
            phis: vec![0.0, 0.25, 0.5, 0.75],
            betas: vec![0.0, 0.3, 0.5, 0.7, 0.8, 0.85, 0.9, 0.94, 0.96, 1.0],
            p: vec![0.25, 0.3, 0.45],
            q: vec![0.75, 0.05, 0.2],
            replications: 1000,
            alpha: 0.05,
            methods: Method::ALL.to_vec(),
            bootstrap_replicates: 1000,
            seed: 0,
            keep_pvalues: false,
            workers: None,
            null_model: NullModel::Pooled,
        }
    }
}

impl StudyGrid {
    fn validate(&self) -> Result<()> {
        if self.lengths.is_empty() || self.phis.is_empty() || self.betas.is_empty() {
            return Err(Error::InvalidParameter("study grid has an empty axis".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods requested".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie strictly between 0 and 1, got {}",
                self.alpha
            )));
        }
        if self.p.len() != self.q.len() {
            return Err(Error::InvalidParameter(
                "p and q must have the same number of categories".into(),
            ));
        }
        Dar1Params::new(self.p.clone(), 0.0)?;
        Dar1Params::new(self.q.clone(), 0.0)?;
        for &phi in &self.phis {
            Dar1Params::new(self.p.clone(), phi)?;
        }
        for &beta in &self.betas {
            if !(0.0..=1.0).contains(&beta) {
                return Err(Error::InvalidParameter(format!(
                    "beta must lie in [0, 1], got {beta}"
                )));
            }
        }
        if self.methods.iter().any(|m| m.is_bootstrap()) && self.bootstrap_replicates == 0 {
            return Err(Error::InvalidParameter(
                "bootstrap replicate count must be at least 1".into(),
            ));
        }
        if self.lengths.iter().any(|&t| t < 2) {
            return Err(Error::InvalidParameter(
                "segment lengths must be at least 2".into(),
            ));
        }
        Ok(())
    }

    fn mixture(&self, beta: f64) -> Vec<f64> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(&pj, &qj)| beta * pj + (1.0 - beta) * qj)
            .collect()
    }
}

/// Outcome of one grid cell for one method.
#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub length: usize,
    pub phi: f64,
    pub beta: f64,
    /// Replicates attempted.
    pub replications: usize,
    /// Replicates where the method returned an error.
    pub failures: usize,
    pub rejections: usize,
    /// Per-replicate p-values when retained; failures recorded as NaN.
    pub p_values: Option<Vec<f64>>,
}

impl CellResult {
    pub fn evaluated(&self) -> usize {
        self.replications - self.failures
    }

    pub fn rejection_rate(&self) -> f64 {
        self.rejections as f64 / self.evaluated() as f64
    }

    pub fn non_rejection_rate(&self) -> f64 {
        1.0 - self.rejection_rate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub alpha: f64,
    pub cells: Vec<CellResult>,
}

/// Pearson correlation between two methods' p-values over the replicates
/// of a (length, phi) slice, pooled across beta.
#[derive(Clone, Debug, PartialEq)]
pub struct Concordance {
    pub length: usize,
    pub phi: f64,
    pub method_a: Method,
    pub method_b: Method,
    pub r: f64,
    /// Complete p-value pairs behind the correlation.
    pub pairs: usize,
}

fn pearson_correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

impl StudyResult {
    pub fn cell(&self, method: Method, length: usize, phi: f64, beta: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.method == method && c.length == length && c.phi == phi && c.beta == beta
        })
    }

    /// Pairwise p-value correlations per (length, phi), all method pairs.
    pub fn concordance(&self) -> Result<Vec<Concordance>> {
        if self.cells.iter().any(|c| c.p_values.is_none()) {
            return Err(Error::InvalidParameter(
                "concordance needs retained p-values; run the study with keep_pvalues".into(),
            ));
        }
        let mut slices: Vec<(usize, f64)> = self
            .cells
            .iter()
            .map(|c| (c.length, c.phi))
            .collect();
        slices.sort_by(|a, b| a.partial_cmp(b).unwrap());
        slices.dedup();

        let mut methods: Vec<Method> = self.cells.iter().map(|c| c.method).collect();
        methods.sort();
        methods.dedup();

        let mut out = Vec::new();
        for &(length, phi) in &slices {
            for (ai, &ma) in methods.iter().enumerate() {
                for &mb in &methods[ai + 1..] {
                    let (xs, ys) = self.paired_pvalues(ma, mb, length, phi);
                    if let Some(r) = pearson_correlation(&xs, &ys) {
                        out.push(Concordance {
                            length,
                            phi,
                            method_a: ma,
                            method_b: mb,
                            r,
                            pairs: xs.len(),
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    fn paired_pvalues(&self, ma: Method, mb: Method, length: usize, phi: f64) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for ca in self.cells.iter().filter(|c| {
            c.method == ma && c.length == length && c.phi == phi
        }) {
            let cb = self
                .cells
                .iter()
                .find(|c| {
                    c.method == mb && c.length == length && c.phi == phi && c.beta == ca.beta
                });
            let (Some(pa), Some(cb)) = (&ca.p_values, cb) else { continue };
            let Some(pb) = &cb.p_values else { continue };
            for (&x, &y) in pa.iter().zip(pb) {
                if !x.is_nan() && !y.is_nan() {
                    xs.push(x);
                    ys.push(y);
                }
            }
        }
        (xs, ys)
    }

    /// Full correlation matrix for one (length, phi) slice; unit diagonal,
    /// NaN where a pair lacks variation.
    pub fn concordance_matrix(&self, length: usize, phi: f64) -> Result<(Vec<Method>, Vec<Vec<f64>>)> {
        let all = self.concordance()?;
        let mut methods: Vec<Method> = self
            .cells
            .iter()
            .filter(|c| c.length == length && c.phi == phi)
            .map(|c| c.method)
            .collect();
        methods.sort();
        methods.dedup();
        let k = methods.len();
        let mut m = vec![vec![f64::NAN; k]; k];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for c in all.iter().filter(|c| c.length == length && c.phi == phi) {
            let i = methods.iter().position(|&x| x == c.method_a).unwrap();
            let j = methods.iter().position(|&x| x == c.method_b).unwrap();
            m[i][j] = c.r;
            m[j][i] = c.r;
        }
        Ok((methods, m))
    }
}

/// Runs the full grid. Replicate (cell, rep) draws its data from stream
/// (seed, cell*N + rep) with cells enumerated length-major, so results are
/// reproducible in any execution order.
pub fn run_study(grid: &StudyGrid) -> Result<StudyResult> {
    grid.validate()?;
    let n = grid.replications;
    let r = grid.p.len();
    let alphabet = CategoryAlphabet::integers(r);

    struct Cell {
        index: usize,
        length: usize,
        phi: f64,
        beta: f64,
        mixture: Vec<f64>,
    }
    let mut cells = Vec::new();
    let mut index = 0;
    for &length in &grid.lengths {
        for &phi in &grid.phis {
            for &beta in &grid.betas {
                cells.push(Cell {
                    index,
                    length,
                    phi,
                    beta,
                    mixture: grid.mixture(beta),
                });
                index += 1;
            }
        }
    }

    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..n).map(move |rep| (c, rep)))
        .collect();

    // One row per (cell, rep): each method's p-value, NaN on failure.
    let rows: Vec<Vec<f64>> = with_pool(grid.workers, || {
        tasks
            .par_iter()
            .map(|&(c, rep)| {
                let cell = &cells[c];
                let counter = (cell.index * n + rep) as u64;
                let mut rng = derive_stream(grid.seed, counter);
                let p_cdf = Cdf::new(&grid.p);
                let m_cdf = Cdf::new(&cell.mixture);
                let seg1 = dar1_path(&p_cdf, cell.phi, cell.length, &mut rng);
                let seg2 = dar1_path(&m_cdf, cell.phi, cell.length, &mut rng);
                let set = SegmentSet::from_indices(vec![seg1, seg2], alphabet.clone())
                    .expect("simulated segments are valid");
                grid.methods
                    .iter()
                    .enumerate()
                    .map(|(mi, &method)| {
                        let boot = BootstrapConfig {
                            replicates: grid.bootstrap_replicates,
                            seed: derive_seed(derive_seed(grid.seed, counter), mi as u64),
                            workers: None,
                            null_model: grid.null_model,
                        };
                        match run_method(&set, method, &boot) {
                            Ok(outcome) => outcome.p_value,
                            Err(_) => f64::NAN,
                        }
                    })
                    .collect()
            })
            .collect()
    })?;

    let mut out = Vec::with_capacity(cells.len() * grid.methods.len());
    for cell in &cells {
        for (mi, &method) in grid.methods.iter().enumerate() {
            let ps: Vec<f64> = (0..n)
                .map(|rep| rows[cell.index * n + rep][mi])
                .collect();
            let failures = ps.iter().filter(|p| p.is_nan()).count();
            let rejections = ps
                .iter()
                .filter(|p| !p.is_nan() && **p < grid.alpha)
                .count();
            out.push(CellResult {
                method,
                length: cell.length,
                phi: cell.phi,
                beta: cell.beta,
                replications: n,
                failures,
                rejections,
                p_values: grid.keep_pvalues.then_some(ps),
            });
        }
    }
    Ok(StudyResult {
        alpha: grid.alpha,
        cells: out,
    })
}

#[derive(Clone, Debug)]
pub struct BenchGrid {
    pub chains: Vec<usize>,
    pub categories: Vec<usize>,
    pub lengths: Vec<usize>,
    pub methods: Vec<Method>,
    pub bootstrap_replicates: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            chains: vec![2, 4, 6, 8, 10],
            categories: vec![4],
            lengths: vec![10000],
            methods: Method::ALL.to_vec(),
            bootstrap_replicates: 200,
            repetitions: 5,
            seed: 0,
        }
    }
}

/// Wall-clock timings for one grid point of the benchmark.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub method: Method,
    pub chains: usize,
    pub categories: usize,
    pub length: usize,
    pub repetitions: usize,
    pub median_seconds: f64,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
}

/// Times every method on DAR(1) data simulated per grid point. Timings are
/// wall-clock and inherently non-deterministic; everything else is seeded.
pub fn run_bench(grid: &BenchGrid) -> Result<Vec<BenchRow>> {
    if grid.repetitions == 0 {
        return Ok(Vec::new());
    }
    if grid.methods.is_empty() {
        return Err(Error::InvalidParameter("no methods requested".into()));
    }
    let mut rows = Vec::new();
    let mut point = 0u64;
    for &s in &grid.chains {
        for &r in &grid.categories {
            for &length in &grid.lengths {
                if s < 2 || r < 1 || length < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "invalid bench point: chains={s}, categories={r}, length={length}"
                    )));
                }
                let p = vec![1.0 / r as f64; r];
                let params = Dar1Params::new(p, 0.5)?;
                let mut rng = derive_stream(grid.seed, point);
                point += 1;
                let segments: Vec<Vec<usize>> = (0..s)
                    .map(|_| dar1_path(&Cdf::new(&params.p), params.phi, length, &mut rng))
                    .collect();
                let set = SegmentSet::from_indices(segments, CategoryAlphabet::integers(r))?;
                for &method in &grid.methods {
                    let boot = BootstrapConfig {
                        replicates: grid.bootstrap_replicates,
                        seed: grid.seed,
                        workers: None,
                        null_model: NullModel::Pooled,
                    };
                    let mut times = Vec::with_capacity(grid.repetitions);
                    for _ in 0..grid.repetitions {
                        let start = Instant::now();
                        run_method(&set, method, &boot)?;
                        times.push(start.elapsed().as_secs_f64());
                    }
                    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    let median = if times.len() % 2 == 1 {
                        times[times.len() / 2]
                    } else {
                        0.5 * (times[times.len() / 2 - 1] + times[times.len() / 2])
                    };
                    rows.push(BenchRow {
                        method,
                        chains: s,
                        categories: r,
                        length,
                        repetitions: grid.repetitions,
                        median_seconds: median,
                        mean_seconds: times.iter().sum::<f64>() / times.len() as f64,
                        min_seconds: times[0],
                        max_seconds: *times.last().unwrap(),
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_grid() -> StudyGrid {
        StudyGrid {
            lengths: vec![100],
            phis: vec![0.0, 0.5],
            betas: vec![0.0, 1.0],
            replications: 40,
            methods: vec![Method::Hangartner, Method::Weiss, Method::Darboot],
            bootstrap_replicates: 25,
            seed: 7,
            keep_pvalues: true,
            ..StudyGrid::default()
        }
    }

    #[test]
    fn study_is_deterministic() {
        let a = run_study(&tiny_grid()).unwrap();
        let b = run_study(&tiny_grid()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn study_is_worker_count_invariant() {
        let mut one = tiny_grid();
        one.workers = Some(1);
        let mut four = tiny_grid();
        four.workers = Some(4);
        assert_eq!(run_study(&one).unwrap(), run_study(&four).unwrap());
    }

    #[test]
    fn rates_are_consistent() {
        let result = run_study(&tiny_grid()).unwrap();
        assert_eq!(result.cells.len(), 2 * 2 * 3);
        for cell in &result.cells {
            assert_eq!(cell.replications, 40);
            assert!(cell.rejections + cell.failures <= cell.replications);
            let total = cell.rejection_rate() + cell.non_rejection_rate();
            assert!((total - 1.0).abs() < 1e-12);
            let ps = cell.p_values.as_ref().unwrap();
            assert_eq!(ps.len(), 40);
            assert!(ps.iter().all(|p| p.is_nan() || (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn separated_marginals_reject_more_than_null() {
        let result = run_study(&tiny_grid()).unwrap();
        let power = result
            .cell(Method::Hangartner, 100, 0.0, 0.0)
            .unwrap()
            .rejection_rate();
        let size = result
            .cell(Method::Hangartner, 100, 0.0, 1.0)
            .unwrap()
            .rejection_rate();
        assert!(power > size, "power {power} vs size {size}");
        assert!(power > 0.5, "power {power}");
    }

    #[test]
    fn concordance_matrix_is_symmetric_with_unit_diagonal() {
        let result = run_study(&tiny_grid()).unwrap();
        let (methods, m) = result.concordance_matrix(100, 0.5).unwrap();
        assert_eq!(methods.len(), 3);
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[i], 1.0);
            for (j, &v) in row.iter().enumerate() {
                assert!((v - m[j][i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn concordance_needs_retained_pvalues() {
        let mut grid = tiny_grid();
        grid.keep_pvalues = false;
        let result = run_study(&grid).unwrap();
        assert!(result.concordance().is_err());
    }

    #[test]
    fn concordance_reports_complete_pairs() {
        let result = run_study(&tiny_grid()).unwrap();
        let all = result.concordance().unwrap();
        for c in &all {
            assert!(c.pairs <= 80);
            assert!((-1.0..=1.0).contains(&c.r));
        }
        // Same-model methods correlate positively on shared data.
        let hw = all
            .iter()
            .find(|c| {
                c.length == 100
                    && c.phi == 0.0
                    && c.method_a == Method::Hangartner
                    && c.method_b == Method::Weiss
            })
            .unwrap();
        assert!(hw.r > 0.5, "r = {}", hw.r);
    }

    #[test]
    fn study_rejects_bad_grids() {
        let mut grid = tiny_grid();
        grid.betas = vec![];
        assert!(run_study(&grid).is_err());
        let mut grid = tiny_grid();
        grid.betas = vec![1.5];
        assert!(run_study(&grid).is_err());
        let mut grid = tiny_grid();
        grid.alpha = 0.0;
        assert!(run_study(&grid).is_err());
        let mut grid = tiny_grid();
        grid.q = vec![0.5, 0.5];
        assert!(run_study(&grid).is_err());
    }

    #[test]
    fn bench_zero_reps_is_empty() {
        let grid = BenchGrid {
            repetitions: 0,
            ..BenchGrid::default()
        };
        assert!(run_bench(&grid).unwrap().is_empty());
    }

    #[test]
    fn bench_times_every_grid_point() {
        let grid = BenchGrid {
            chains: vec![2, 3],
            categories: vec![3],
            lengths: vec![200],
            methods: vec![Method::Hangartner, Method::Mcboot],
            bootstrap_replicates: 10,
            repetitions: 3,
            seed: 1,
        };
        let rows = run_bench(&grid).unwrap();
        assert_eq!(rows.len(), 4);
        for row in &rows {
            assert!(row.median_seconds >= 0.0);
            assert!(row.min_seconds <= row.median_seconds);
            assert!(row.median_seconds <= row.max_seconds);
            assert_eq!(row.repetitions, 3);
        }
    }
}
