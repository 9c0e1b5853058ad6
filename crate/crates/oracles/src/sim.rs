//! Textbook similarity definitions, written without reference to the
//! library's implementation.

use std::collections::{BTreeMap, BTreeSet};

/// Lowercases and splits on anything that is not a letter or digit.
pub fn naive_tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn naive_jaccard(a: &[String], b: &[String]) -> f64 {
    let sa: BTreeSet<&String> = a.iter().collect();
    let sb: BTreeSet<&String> = b.iter().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

fn common(u: &BTreeMap<i64, f64>, v: &BTreeMap<i64, f64>) -> Vec<(f64, f64)> {
    u.iter()
        .filter_map(|(k, x)| v.get(k).map(|y| (*x, *y)))
        .collect()
}

pub fn naive_inv_euclidean(u: &BTreeMap<i64, f64>, v: &BTreeMap<i64, f64>) -> f64 {
    let pairs = common(u, v);
    if pairs.is_empty() {
        return 0.0;
    }
    let d: f64 = pairs
        .iter()
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    1.0 / (1.0 + d)
}

pub fn naive_pearson(u: &BTreeMap<i64, f64>, v: &BTreeMap<i64, f64>) -> f64 {
    let pairs = common(u, v);
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return 0.0;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let constant =
        |first: f64, mut rest: Box<dyn Iterator<Item = f64> + '_>| rest.all(|z| z == first);
    if constant(pairs[0].0, Box::new(pairs.iter().map(|p| p.0)))
        || constant(pairs[0].1, Box::new(pairs.iter().map(|p| p.1)))
    {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}
