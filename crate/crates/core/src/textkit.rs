//! Tokenization and the similarity-function library shared by search and
//! recommendation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::relstore::RatingMap;

/// Lowercase terms in source order.
pub type TokenList = Vec<String>;

/// Lowercases `text` and splits it on every non-alphanumeric character.
/// Stopwords are kept.
pub fn tokenize(text: &str) -> TokenList {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// English stopwords excluded from data-cloud candidates.
pub const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "also",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "doing",
    "down",
    "during",
    "each",
    "even",
    "ever",
    "every",
    "few",
    "for",
    "from",
    "further",
    "get",
    "got",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "me",
    "more",
    "most",
    "much",
    "must",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityFn {
    Jaccard,
    Pearson,
    InvEuclidean,
}

impl SimilarityFn {
    pub const ALL: [SimilarityFn; 3] = [
        SimilarityFn::Jaccard,
        SimilarityFn::Pearson,
        SimilarityFn::InvEuclidean,
    ];

    /// Keyword used in workflow source and the SQL UDF suffix.
    pub fn keyword(self) -> &'static str {
        match self {
            SimilarityFn::Jaccard => "jaccard",
            SimilarityFn::Pearson => "pearson",
            SimilarityFn::InvEuclidean => "inv_euclidean",
        }
    }

    /// Whether the function compares token sets (text) rather than
    /// rating maps.
    pub fn on_text(self) -> bool {
        matches!(self, SimilarityFn::Jaccard)
    }
}

impl fmt::Display for SimilarityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for SimilarityFn {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.keyword() == s).ok_or(())
    }
}

/// `|A ∩ B| / |A ∪ B|` over the token sets; two empty sets score 0.
pub fn sim_jaccard(a: &[String], b: &[String]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(String::as_str).collect();
    let b: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// `1 / (1 + d)` with `d` the Euclidean distance over the common keys;
/// 0 when there are none.
pub fn sim_inv_euclidean(u: &RatingMap, v: &RatingMap) -> f64 {
    let mut common = 0usize;
    let mut sum_sq = 0.0;
    for (k, x) in u.iter() {
        if let Some(y) = v.get(k) {
            common += 1;
            sum_sq += (x - y) * (x - y);
        }
    }
    if common == 0 {
        return 0.0;
    }
    1.0 / (1.0 + sum_sq.sqrt())
}

/// Pearson correlation over the common keys. Degenerate inputs (fewer
/// than two common keys, or a constant side) score 0.
pub fn sim_pearson(u: &RatingMap, v: &RatingMap) -> f64 {
    let pairs: Vec<(f64, f64)> = u
        .iter()
        .filter_map(|(k, x)| v.get(k).map(|y| (x, y)))
        .collect();
    if pairs.len() < 2 {
        return 0.0;
    }
    let constant = |side: &dyn Fn(&(f64, f64)) -> f64| {
        let first = side(&pairs[0]);
        pairs.iter().all(|p| side(p) == first)
    };
    if constant(&|p| p.0) || constant(&|p| p.1) {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut cov, mut var_x, mut var_y) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    let r = cov / (var_x.sqrt() * var_y.sqrt());
    if r.is_finite() {
        r.clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(i64, f64)]) -> RatingMap {
        pairs.iter().copied().collect()
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("Introduction to Programming"),
            ["introduction", "to", "programming"]
        );
        assert_eq!(
            tokenize("African-American Studies!"),
            ["african", "american", "studies"]
        );
        assert_eq!(tokenize("  CS106A, 2008  "), ["cs106a", "2008"]);
    }

    #[test]
    fn stopwords_sorted_and_unique() {
        assert!(STOPWORDS.windows(2).all(|w| w[0] < w[1]));
        assert!(STOPWORDS.len() >= 110);
        assert!(is_stopword("the"));
        assert!(!is_stopword("american"));
    }

    #[test]
    fn jaccard_examples() {
        let a = tokenize("Introduction to Programming");
        let b = tokenize("Advanced Programming");
        assert_eq!(sim_jaccard(&a, &a), 1.0);
        assert_eq!(sim_jaccard(&a, &tokenize("poetry")), 0.0);
        assert_eq!(sim_jaccard(&a, &b), 0.25);
        assert_eq!(sim_jaccard(&[], &[]), 0.0);
    }

    #[test]
    fn inv_euclidean_examples() {
        let u = map(&[(1, 4.0), (2, 2.0)]);
        let v = map(&[(1, 2.0), (2, 2.0)]);
        assert_eq!(sim_inv_euclidean(&u, &u), 1.0);
        assert!((sim_inv_euclidean(&u, &v) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(sim_inv_euclidean(&u, &map(&[(3, 1.0)])), 0.0);
        // One shared key with an equal rating is a perfect match.
        assert_eq!(
            sim_inv_euclidean(&map(&[(1, 3.0)]), &map(&[(1, 3.0), (2, 5.0)])),
            1.0
        );
    }

    #[test]
    fn pearson_examples() {
        let u = map(&[(1, 1.0), (2, 2.0), (3, 3.0)]);
        assert!((sim_pearson(&u, &map(&[(1, 2.0), (2, 4.0), (3, 6.0)])) - 1.0).abs() < 1e-12);
        assert!((sim_pearson(&u, &map(&[(1, 3.0), (2, 2.0), (3, 1.0)])) + 1.0).abs() < 1e-12);
        assert_eq!(sim_pearson(&u, &map(&[(1, 5.0)])), 0.0);
        assert_eq!(sim_pearson(&u, &map(&[(1, 0.1), (2, 0.1), (3, 0.1)])), 0.0);
    }

    #[test]
    fn keywords_round_trip() {
        for f in SimilarityFn::ALL {
            assert_eq!(f.keyword().parse::<SimilarityFn>(), Ok(f));
        }
        assert!("cosine".parse::<SimilarityFn>().is_err());
    }
}
