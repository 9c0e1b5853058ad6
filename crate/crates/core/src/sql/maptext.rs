//! Text form of rating maps, used to carry extend's map attribute through
//! SQL: `key:value` pairs in ascending key order joined by `;`, e.g.
//! `1:4.5;2:3`. The empty map is the empty string.

use crate::relstore::RatingMap;

use super::SqlError;

/// Shortest decimal that parses back to `x`. Plain notation for
/// magnitudes in `[1e-5, 1e16)`, exponent notation otherwise.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn canonical_map_text(map: &RatingMap) -> String {
    let mut out = String::new();
    for (i, (k, v)) in map.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        out.push_str(&k.to_string());
        out.push(':');
        out.push_str(&format_float(v));
    }
    out
}

/// Parses map text. Values may use any finite float notation (SQL engines
/// render them differently); keys must be strictly ascending.
pub fn parse_map_text(text: &str) -> Result<RatingMap, SqlError> {
    let mut map = RatingMap::new();
    if text.is_empty() {
        return Ok(map);
    }
    let mut last: Option<i64> = None;
    for entry in text.split(';') {
        let bad = |why: &str| SqlError::MapText(format!("{why} in entry {entry:?}"));
        let (k, v) = entry.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let key: i64 = k.parse().map_err(|_| bad("bad key"))?;
        let value: f64 = v.parse().map_err(|_| bad("bad value"))?;
        if !value.is_finite() {
            return Err(bad("non-finite value"));
        }
        if last.is_some_and(|l| l >= key) {
            return Err(bad("keys out of order"));
        }
        last = Some(key);
        map.insert(key, value);
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(i64, f64)]) -> RatingMap {
        pairs.iter().copied().collect()
    }

    #[test]
    fn examples() {
        assert_eq!(canonical_map_text(&RatingMap::new()), "");
        assert_eq!(canonical_map_text(&map(&[(2, 3.0), (1, 4.5)])), "1:4.5;2:3");
        assert_eq!(
            canonical_map_text(&map(&[(-7, 0.1), (3, 1e300), (4, -2.5e-9)])),
            "-7:0.1;3:1e300;4:-2.5e-9"
        );
    }

    #[test]
    fn parses_engine_renderings() {
        let m = parse_map_text("1:4.0;2:0.10000000000000001;5:1.0000000000000001e+100").unwrap();
        assert_eq!(m, map(&[(1, 4.0), (2, 0.1), (5, 1e100)]));
        assert_eq!(parse_map_text("").unwrap(), RatingMap::new());
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "1", "1:x", "a:1", "2:1;1:1", "1:1;1:2", "1:inf", "1:NaN", ";", "1:1;",
        ] {
            assert!(parse_map_text(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn float_format_round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0,
            0.1,
            1.0 / 3.0,
            123456789.125,
            1e-7,
            5e-324,
            f64::MAX,
            1e16,
            9.999e15,
        ] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}
