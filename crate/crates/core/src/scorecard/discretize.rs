use serde::{Deserialize, Serialize};

use crate::featx::Label;

/// Upper bound on candidate cut points per feature.
pub const MAX_CANDIDATES: usize = 256;

/// Entropies closer than this are treated as equal.
const ENTROPY_EPS: f64 = 1e-12;

/// Two cut points splitting the line into (-inf, c1], (c1, c2], (c2, inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cuts {
    pub c1: f64,
    pub c2: f64,
    /// Size-weighted class entropy on the data the cuts were fit to, bits.
    pub entropy: f64,
    /// Fewer than three distinct values: equal-frequency cuts were used.
    pub fallback: bool,
}

/// 0, 1 or 2 for the interval containing `x`.
pub fn interval_of(x: f64, c1: f64, c2: f64) -> usize {
    if x <= c1 {
        0
    } else if x <= c2 {
        1
    } else {
        2
    }
}

fn h(bad: usize, n: usize) -> f64 {
    if n == 0 || bad == 0 || bad == n {
        return 0.0;
    }
    let p = bad as f64 / n as f64;
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// Size-weighted entropy of three intervals given (count, bad) per interval.
pub(crate) fn weighted_entropy(parts: [(usize, usize); 3]) -> f64 {
    let n: usize = parts.iter().map(|p| p.0).sum();
    parts
        .iter()
        .map(|&(c, b)| c as f64 / n as f64 * h(b, c))
        .sum()
}

/// Ordering used to pick among candidates: lower entropy, then more even
/// interval sizes, then smaller c1, then smaller c2.
pub(crate) fn better(a: (f64, u64, f64, f64), b: (f64, u64, f64, f64)) -> bool {
    if (a.0 - b.0).abs() > ENTROPY_EPS {
        return a.0 < b.0;
    }
    (a.1, a.2, a.3) < (b.1, b.2, b.3)
}

fn sq_sizes(a: usize, b: usize, c: usize) -> u64 {
    [a, b, c].iter().map(|&x| (x as u64) * (x as u64)).sum()
}

fn equal_frequency(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    let c1 = sorted[(n - 1) / 3];
    let mut c2 = sorted[(2 * (n - 1)) / 3];
    if c2 <= c1 {
        c2 = c1.next_up();
    }
    (c1, c2)
}

/// Entropy-minimal pair of cuts over midpoints of adjacent distinct values,
/// thinned to at most `MAX_CANDIDATES` evenly spaced by rank.
pub fn discretize_feature(values: &[f64], labels: &[Label]) -> Cuts {
    assert_eq!(values.len(), labels.len(), "values and labels must be parallel");
    assert!(!values.is_empty(), "cannot discretize an empty feature");
    let mut rows: Vec<(f64, bool)> = values
        .iter()
        .zip(labels)
        .map(|(v, l)| (*v, l.is_bad()))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Distinct values with cumulative counts up to and including each.
    let mut distinct: Vec<f64> = Vec::new();
    let mut cum_n: Vec<usize> = Vec::new();
    let mut cum_bad: Vec<usize> = Vec::new();
    let (mut n, mut bad) = (0, 0);
    for (i, &(v, b)) in rows.iter().enumerate() {
        n += 1;
        bad += usize::from(b);
        if i + 1 == rows.len() || rows[i + 1].0 != v {
            distinct.push(v);
            cum_n.push(n);
            cum_bad.push(bad);
        }
    }
    let sorted: Vec<f64> = rows.iter().map(|r| r.0).collect();
    if distinct.len() < 3 {
        let (c1, c2) = equal_frequency(&sorted);
        let mut parts = [(0, 0); 3];
        for &(v, b) in &rows {
            let j = interval_of(v, c1, c2);
            parts[j].0 += 1;
            parts[j].1 += usize::from(b);
        }
        return Cuts {
            c1,
            c2,
            entropy: weighted_entropy(parts),
            fallback: true,
        };
    }

    // Candidate k cuts between distinct[k] and distinct[k + 1].
    let m = distinct.len() - 1;
    let cand: Vec<usize> = if m <= MAX_CANDIDATES {
        (0..m).collect()
    } else {
        let mut c: Vec<usize> = (0..MAX_CANDIDATES)
            .map(|i| ((i as f64) * (m - 1) as f64 / (MAX_CANDIDATES - 1) as f64).round() as usize)
            .collect();
        c.dedup();
        c
    };
    let mid = |k: usize| {
        let (lo, hi) = (distinct[k], distinct[k + 1]);
        let x = lo + (hi - lo) / 2.0;
        if x < hi {
            x
        } else {
            lo
        }
    };
    let total = (rows.len(), bad);
    let mut best: Option<(f64, u64, f64, f64)> = None;
    for (a, &ka) in cand.iter().enumerate() {
        for &kb in &cand[a + 1..] {
            let p1 = (cum_n[ka], cum_bad[ka]);
            let p2 = (cum_n[kb] - cum_n[ka], cum_bad[kb] - cum_bad[ka]);
            let p3 = (total.0 - cum_n[kb], total.1 - cum_bad[kb]);
            let e = weighted_entropy([p1, p2, p3]);
            let key = (e, sq_sizes(p1.0, p2.0, p3.0), mid(ka), mid(kb));
            if best.is_none_or(|b| better(key, b)) {
                best = Some(key);
            }
        }
    }
    let (entropy, _, c1, c2) = best.expect("at least two candidates");
    Cuts {
        c1,
        c2,
        entropy,
        fallback: false,
    }
}
