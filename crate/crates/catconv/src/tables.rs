//! Count tables consumed by the test statistics: per-segment category
//! frequencies and within-segment transition counts.

use crate::chain::SegmentSet;

/// Category counts per segment plus pooled counts and proportions.
#[derive(Clone, Debug)]
pub struct FrequencyTable {
    counts: Vec<Vec<u64>>,
    seg_totals: Vec<u64>,
    pooled: Vec<u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn from_segments(set: &SegmentSet) -> Self {
        let s = set.num_segments();
        let r = set.num_categories();
        let mut counts = vec![vec![0u64; r]; s];
        for (i, seg) in set.segments().iter().enumerate() {
            for &v in seg {
                counts[i][v] += 1;
            }
        }
        let seg_totals: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
        let mut pooled = vec![0u64; r];
        for row in &counts {
            for (j, &c) in row.iter().enumerate() {
                pooled[j] += c;
            }
        }
        let total = seg_totals.iter().sum();
        FrequencyTable {
            counts,
            seg_totals,
            pooled,
            total,
        }
    }

    pub fn num_segments(&self) -> usize {
        self.counts.len()
    }

    pub fn num_categories(&self) -> usize {
        self.pooled.len()
    }

    pub fn count(&self, segment: usize, category: usize) -> u64 {
        self.counts[segment][category]
    }

    pub fn segment_total(&self, segment: usize) -> u64 {
        self.seg_totals[segment]
    }

    pub fn pooled_count(&self, category: usize) -> u64 {
        self.pooled[category]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn segment_proportion(&self, segment: usize, category: usize) -> f64 {
        self.counts[segment][category] as f64 / self.seg_totals[segment] as f64
    }

    pub fn segment_proportions(&self, segment: usize) -> Vec<f64> {
        (0..self.num_categories())
            .map(|j| self.segment_proportion(segment, j))
            .collect()
    }

    pub fn pooled_proportion(&self, category: usize) -> f64 {
        self.pooled[category] as f64 / self.total as f64
    }

    pub fn pooled_proportions(&self) -> Vec<f64> {
        (0..self.num_categories())
            .map(|j| self.pooled_proportion(j))
            .collect()
    }

    /// Categories with positive pooled count, the support set of Eq-style
    /// sums over observed categories.
    pub fn support(&self) -> Vec<usize> {
        self.pooled
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Within-segment transition counts f_jk per segment plus pooled counts.
///
/// Transitions are pairs (X_t, X_{t+1}) for t = 1..n_i-1; nothing is
/// counted across segment boundaries.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    counts: Vec<Vec<Vec<u64>>>,
    row_totals: Vec<Vec<u64>>,
    pooled: Vec<Vec<u64>>,
    pooled_row_totals: Vec<u64>,
}

impl TransitionTable {
    pub fn from_segments(set: &SegmentSet) -> Self {
        let s = set.num_segments();
        let r = set.num_categories();
        let mut counts = vec![vec![vec![0u64; r]; r]; s];
        for (i, seg) in set.segments().iter().enumerate() {
            for w in seg.windows(2) {
                counts[i][w[0]][w[1]] += 1;
            }
        }
        let row_totals: Vec<Vec<u64>> = counts
            .iter()
            .map(|m| m.iter().map(|row| row.iter().sum()).collect())
            .collect();
        let mut pooled = vec![vec![0u64; r]; r];
        for m in &counts {
            for (j, row) in m.iter().enumerate() {
                for (k, &c) in row.iter().enumerate() {
                    pooled[j][k] += c;
                }
            }
        }
        let pooled_row_totals = pooled.iter().map(|row| row.iter().sum()).collect();
        TransitionTable {
            counts,
            row_totals,
            pooled,
            pooled_row_totals,
        }
    }

    pub fn num_segments(&self) -> usize {
        self.counts.len()
    }

    pub fn num_categories(&self) -> usize {
        self.pooled.len()
    }

    pub fn count(&self, segment: usize, from: usize, to: usize) -> u64 {
        self.counts[segment][from][to]
    }

    /// f_j for one segment: transitions leaving `from`.
    pub fn row_total(&self, segment: usize, from: usize) -> u64 {
        self.row_totals[segment][from]
    }

    pub fn pooled_count(&self, from: usize, to: usize) -> u64 {
        self.pooled[from][to]
    }

    pub fn pooled_row_total(&self, from: usize) -> u64 {
        self.pooled_row_totals[from]
    }

    /// Per-segment transition probability, defined only when the segment
    /// actually leaves `from`.
    pub fn segment_prob(&self, segment: usize, from: usize, to: usize) -> Option<f64> {
        let f = self.row_totals[segment][from];
        (f > 0).then(|| self.counts[segment][from][to] as f64 / f as f64)
    }

    pub fn pooled_prob(&self, from: usize, to: usize) -> Option<f64> {
        let f = self.pooled_row_totals[from];
        (f > 0).then(|| self.pooled[from][to] as f64 / f as f64)
    }

    /// Segments with at least one transition out of `from` (the set A_j).
    pub fn segments_leaving(&self, from: usize) -> Vec<usize> {
        (0..self.num_segments())
            .filter(|&i| self.row_totals[i][from] > 0)
            .collect()
    }

    /// Destinations with positive pooled probability out of `from`
    /// (the set B_j, equal to R_j).
    pub fn row_support(&self, from: usize) -> Vec<usize> {
        if self.pooled_row_totals[from] == 0 {
            return Vec::new();
        }
        (0..self.num_categories())
            .filter(|&k| self.pooled[from][k] > 0)
            .collect()
    }

    /// Per-segment row-stochastic matrix for simulation: observed rows are
    /// normalized counts, unobserved rows fall back to a self loop.
    pub fn segment_matrix(&self, segment: usize) -> Vec<Vec<f64>> {
        self.matrix_from(&self.counts[segment], &self.row_totals[segment])
    }

    /// Pooled row-stochastic matrix with the same self-loop fallback.
    pub fn pooled_matrix(&self) -> Vec<Vec<f64>> {
        self.matrix_from(&self.pooled, &self.pooled_row_totals)
    }

    fn matrix_from(&self, counts: &[Vec<u64>], totals: &[u64]) -> Vec<Vec<f64>> {
        let r = self.num_categories();
        counts
            .iter()
            .zip(totals)
            .enumerate()
            .map(|(j, (row, &f))| {
                if f == 0 {
                    let mut loop_row = vec![0.0; r];
                    loop_row[j] = 1.0;
                    loop_row
                } else {
                    row.iter().map(|&c| c as f64 / f as f64).collect()
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::CategoryAlphabet;

    fn set(segments: Vec<Vec<usize>>, r: usize) -> SegmentSet {
        SegmentSet::from_indices(segments, CategoryAlphabet::integers(r)).unwrap()
    }

    #[test]
    fn frequency_counts_match_hand_tally() {
        let freq = FrequencyTable::from_segments(&set(
            vec![vec![0, 0, 0, 1], vec![0, 1, 1, 1]],
            2,
        ));
        assert_eq!(freq.count(0, 0), 3);
        assert_eq!(freq.count(0, 1), 1);
        assert_eq!(freq.count(1, 0), 1);
        assert_eq!(freq.count(1, 1), 3);
        assert_eq!(freq.segment_total(0), 4);
        assert_eq!(freq.pooled_count(0), 4);
        assert_eq!(freq.total(), 8);
        assert_eq!(freq.pooled_proportion(0), 0.5);
        assert_eq!(freq.support(), vec![0, 1]);
    }

    #[test]
    fn single_category_has_singleton_support() {
        let freq = FrequencyTable::from_segments(&set(vec![vec![0, 0], vec![0, 0]], 1));
        assert_eq!(freq.support(), vec![0]);
        assert_eq!(freq.pooled_proportion(0), 1.0);
    }

    #[test]
    fn zero_count_categories_stay_in_support_when_pooled_positive() {
        let freq = FrequencyTable::from_segments(&set(vec![vec![0, 1], vec![2, 2]], 3));
        assert_eq!(freq.pooled_count(1), 1);
        assert_eq!(freq.pooled_count(2), 2);
        assert_eq!(freq.support(), vec![0, 1, 2]);
    }

    #[test]
    fn transition_counts_stay_within_segments() {
        let trans = TransitionTable::from_segments(&set(vec![vec![0, 0, 1, 1]], 2));
        assert_eq!(trans.count(0, 0, 0), 1);
        assert_eq!(trans.count(0, 0, 1), 1);
        assert_eq!(trans.count(0, 1, 1), 1);
        assert_eq!(trans.count(0, 1, 0), 0);
        assert_eq!(trans.row_total(0, 0), 2);
        assert_eq!(trans.row_total(0, 1), 1);
    }

    #[test]
    fn identical_segments_share_pooled_probabilities() {
        let trans = TransitionTable::from_segments(&set(
            vec![vec![0, 1, 0], vec![0, 1, 0]],
            2,
        ));
        for j in 0..2 {
            for k in 0..2 {
                assert_eq!(trans.segment_prob(0, j, k), trans.segment_prob(1, j, k));
                assert_eq!(trans.segment_prob(0, j, k), trans.pooled_prob(j, k));
            }
        }
    }

    #[test]
    fn absorbing_state_leaves_other_rows_undefined() {
        let trans = TransitionTable::from_segments(&set(vec![vec![0, 0, 0]], 2));
        assert_eq!(trans.segment_prob(0, 0, 0), Some(1.0));
        assert_eq!(trans.segment_prob(0, 1, 0), None);
        assert_eq!(trans.row_support(0), vec![0]);
        assert!(trans.row_support(1).is_empty());
    }

    #[test]
    fn unobserved_row_falls_back_to_self_loop() {
        let trans = TransitionTable::from_segments(&set(vec![vec![0, 0, 0]], 2));
        let m = trans.segment_matrix(0);
        assert_eq!(m[0], vec![1.0, 0.0]);
        assert_eq!(m[1], vec![0.0, 1.0]);
    }

    #[test]
    fn total_transitions_equal_length_minus_one_per_segment() {
        let s = set(vec![vec![0, 1, 2, 1, 0], vec![2, 2, 0]], 3);
        let trans = TransitionTable::from_segments(&s);
        for (i, seg) in s.segments().iter().enumerate() {
            let total: u64 = (0..3).map(|j| trans.row_total(i, j)).sum();
            assert_eq!(total as usize, seg.len() - 1);
        }
    }
}
