use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use super::check_len;
use crate::error::{Error, Result};

/// Cohen's kappa `(p_o − p_e) / (1 − p_e)`. Perfect agreement on a single
/// shared category (`p_e = 1`) yields 1.
pub fn cohens_kappa<T: Eq + Hash + Ord>(a: &[T], b: &[T]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::Empty("labeling"));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut ma: BTreeMap<&T, usize> = BTreeMap::new();
    let mut mb: BTreeMap<&T, usize> = BTreeMap::new();
    for x in a {
        *ma.entry(x).or_default() += 1;
    }
    for y in b {
        *mb.entry(y).or_default() += 1;
    }
    let p_o = agree / n;
    let p_e: f64 = ma
        .iter()
        .map(|(k, &ca)| ca as f64 * mb.get(k).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(if (p_o - 1.0).abs() < f64::EPSILON { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// 1-based ranks with ties sharing their average rank.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    if x.len() < 2 {
        return Err(Error::Empty("rank correlation input"));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Adjusted Rand index between two partitions given as per-item cluster ids.
pub fn adjusted_rand_index<A: Eq + Hash, B: Eq + Hash>(a: &[A], b: &[B]) -> Result<f64> {
    check_len(a.len(), b.len())?;
    let n = a.len();
    if n < 2 {
        return Ok(1.0);
    }
    let choose2 = |k: usize| (k * k.saturating_sub(1)) as f64 / 2.0;
    let mut joint: HashMap<(&A, &B), usize> = HashMap::new();
    let mut ca: HashMap<&A, usize> = HashMap::new();
    let mut cb: HashMap<&B, usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1;
        *ca.entry(x).or_default() += 1;
        *cb.entry(y).or_default() += 1;
    }
    let index: f64 = joint.values().map(|&k| choose2(k)).sum();
    let sa: f64 = ca.values().map(|&k| choose2(k)).sum();
    let sb: f64 = cb.values().map(|&k| choose2(k)).sum();
    let expected = sa * sb / choose2(n);
    let max = (sa + sb) / 2.0;
    if (max - expected).abs() < f64::EPSILON {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
