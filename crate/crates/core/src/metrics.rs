//! Binary classification metrics: F-score, G-mean, and exact AUC with 0.5
//! credit for score ties.

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("AUC needs at least one positive and one negative instance")]
    DegenerateClassDistribution,
}

/// Confusion counts of a binary classifier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
    pub true_neg: u64,
}

impl Confusion {
    pub fn tally(outcomes: impl IntoIterator<Item = (bool, bool)>) -> Confusion {
        let mut c = Confusion::default();
        for (predicted, actual) in outcomes {
            match (predicted, actual) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
        c
    }
}

/// F = 2TP / (2TP + FP + FN); 0 when the denominator vanishes.
pub fn f_score(c: &Confusion) -> f64 {
    let denom = 2 * c.true_pos + c.false_pos + c.false_neg;
    if denom == 0 {
        return 0.0;
    }
    2.0 * c.true_pos as f64 / denom as f64
}

/// G = sqrt(TPR · TNR); a rate with an empty denominator counts as 0.
pub fn g_mean(c: &Confusion) -> f64 {
    let tpr = if c.true_pos + c.false_neg == 0 {
        0.0
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_neg) as f64
    };
    let tnr = if c.true_neg + c.false_pos == 0 {
        0.0
    } else {
        c.true_neg as f64 / (c.true_neg + c.false_pos) as f64
    };
    (tpr * tnr).sqrt()
}

/// Exact AUC: the probability that a random positive outscores a random
/// negative, ties credited 0.5. Computed from average ranks, which equals
/// the pairwise definition exactly.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64, MetricError> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricError::DegenerateClassDistribution);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.partial_cmp(&scores[b].0).unwrap());
    // Average rank per tie group (1-based ranks).
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]].0 == scores[order[i]].0 {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for &k in &order[i..j] {
            if scores[k].1 {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}
