//! Rank correlations between node statistics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spearman,
    Kendall,
    WeightedKendall,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Spearman, Method::Kendall, Method::WeightedKendall];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spearman => "spearman",
            Method::Kendall => "kendall",
            Method::WeightedKendall => "weighted_kendall",
        }
    }

    pub fn apply(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        match self {
            Method::Spearman => spearman(x, y),
            Method::Kendall => kendall(x, y),
            Method::WeightedKendall => weighted_kendall(x, y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCorrelation {
    pub method: Method,
    /// `None` when either side is constant.
    pub value: Option<f64>,
    pub n: usize,
}

pub fn correlate(method: Method, x: &[f64], y: &[f64]) -> RankCorrelation {
    RankCorrelation {
        method,
        value: method.apply(x, y),
        n: x.len().min(y.len()),
    }
}

/// Aligns two keyed vectors on the union of keys, missing values as zero.
pub fn align<K: Ord + Clone>(a: &BTreeMap<K, f64>, b: &BTreeMap<K, f64>) -> (Vec<f64>, Vec<f64>) {
    let keys: BTreeSet<&K> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0), b.get(k).copied().unwrap_or(0.0)))
        .unzip()
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() {
        return None;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Kendall's tau-b.
pub fn kendall(x: &[f64], y: &[f64]) -> Option<f64> {
    ranked_tau(x, y, None, |_| 0.5)
}

/// Weighted Kendall tau with additive hyperbolic weights `1 / (1 + r)`, where
/// `r` is the 0-based importance rank (largest value first). The result is
/// the mean of the coefficients obtained by ranking on `x` and on `y`.
pub fn weighted_kendall(x: &[f64], y: &[f64]) -> Option<f64> {
    let w = |r: usize| 1.0 / (1.0 + r as f64);
    Some((ranked_tau(x, y, None, w)? + ranked_tau(y, x, None, w)?) / 2.0)
}

/// Weighted Kendall tau with an explicit importance rank per element.
pub fn weighted_kendall_ranked(x: &[f64], y: &[f64], rank: &[usize], weigh: impl Fn(usize) -> f64) -> Option<f64> {
    ranked_tau(x, y, Some(rank), weigh)
}

fn eq(a: f64, b: f64) -> bool {
    a.total_cmp(&b) == Ordering::Equal
}

/// Tau with additive pair weights `weigh(r_i) + weigh(r_j)`, in
/// `O(n log n)` by counting weighted exchanges during a merge sort on `y`.
fn ranked_tau(x: &[f64], y: &[f64], rank: Option<&[usize]>, weigh: impl Fn(usize) -> f64) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return None;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let rank: Vec<usize> = match rank {
        Some(r) => r.to_vec(),
        None => {
            let mut r = vec![0; n];
            for (i, &p) in perm.iter().rev().enumerate() {
                r[p] = i;
            }
            r
        }
    };
    let w: Vec<f64> = rank.iter().map(|&r| weigh(r)).collect();

    // Weight of pairs tied within each run of elements satisfying `same`.
    let tied = |perm: &[usize], same: &dyn Fn(usize, usize) -> bool| -> (f64, bool) {
        let (mut total, mut first, mut s) = (0.0, 0, 0.0);
        for i in 0..n {
            if i > 0 && !same(perm[first], perm[i]) {
                total += s * (i - first - 1) as f64;
                first = i;
                s = 0.0;
            }
            s += w[perm[i]];
        }
        total += s * (n - first - 1) as f64;
        (total, first == 0)
    };

    let (t, _) = tied(&perm, &|a, b| eq(x[a], x[b]) && eq(y[a], y[b]));
    let (u, x_const) = tied(&perm, &|a, b| eq(x[a], x[b]));
    if x_const {
        return None;
    }
    let mut temp = vec![0usize; n];
    let mut exchanges = 0.0;
    merge_weigh(&mut perm, &mut temp, y, &w, &mut exchanges);
    let (v, y_const) = tied(&perm, &|a, b| eq(y[a], y[b]));
    if y_const {
        return None;
    }
    let tot = w.iter().sum::<f64>() * (n - 1) as f64;
    let tau = ((tot - (v + u - t)) - 2.0 * exchanges) / (tot - u).sqrt() / (tot - v).sqrt();
    Some(tau.clamp(-1.0, 1.0))
}

/// Sorts `perm` by `y`, accumulating the weight of exchanged pairs; returns
/// the total weight of the slice.
fn merge_weigh(perm: &mut [usize], temp: &mut [usize], y: &[f64], w: &[f64], exchanges: &mut f64) -> f64 {
    let len = perm.len();
    if len == 1 {
        return w[perm[0]];
    }
    let mid = len / 2;
    let mut residual = merge_weigh(&mut perm[..mid], temp, y, w, exchanges);
    let weight = merge_weigh(&mut perm[mid..], temp, y, w, exchanges) + residual;
    if y[perm[mid - 1]] < y[perm[mid]] {
        return weight;
    }
    let (mut i, mut j, mut k) = (0, 0, 0);
    while j < mid && k < len - mid {
        if y[perm[j]].total_cmp(&y[perm[mid + k]]) != Ordering::Greater {
            temp[i] = perm[j];
            residual -= w[temp[i]];
            j += 1;
        } else {
            temp[i] = perm[mid + k];
            *exchanges += w[temp[i]] * (mid - j) as f64 + residual;
            k += 1;
        }
        i += 1;
    }
    perm.copy_within(j..mid, i);
    perm[..i].copy_from_slice(&temp[..i]);
    weight
}

/// Symmetric matrix of correlations between every pair of keyed vectors.
pub fn correlation_matrix<K: Ord + Clone>(series: &[BTreeMap<K, f64>], method: Method) -> Vec<Vec<Option<f64>>> {
    let n = series.len();
    let mut m = vec![vec![None; n]; n];
    for i in 0..n {
        for j in i..n {
            let (a, b) = align(&series[i], &series[j]);
            let v = method.apply(&a, &b);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

/// Mean of the defined off-diagonal entries.
pub fn mean_off_diagonal(m: &[Vec<Option<f64>>]) -> Option<f64> {
    let vals: Vec<f64> = (0..m.len())
        .flat_map(|i| (0..m.len()).filter(move |&j| j != i).map(move |j| (i, j)))
        .filter_map(|(i, j)| m[i][j])
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}
