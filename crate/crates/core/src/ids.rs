//! Ordering helpers for subject and dimension identifiers.

use std::cmp::Ordering;

/// Compares identifiers so that embedded numbers sort numerically
/// ("d2" < "d10", "9" < "16"), falling back to plain string order.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (pa, na) = split_numeric_suffix(a);
    let (pb, nb) = split_numeric_suffix(b);
    match (na, nb) {
        (Some(x), Some(y)) => pa.cmp(pb).then(x.cmp(&y)).then(a.cmp(b)),
        _ => a.cmp(b),
    }
}

fn split_numeric_suffix(s: &str) -> (&str, Option<u64>) {
    let digits = s.bytes().rev().take_while(u8::is_ascii_digit).count();
    if digits == 0 || digits > 18 {
        return (s, None);
    }
    let (head, tail) = s.split_at(s.len() - digits);
    (head, tail.parse().ok())
}

pub fn sort_natural(ids: &mut [String]) {
    ids.sort_by(|a, b| natural_cmp(a, b));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_sort_numerically() {
        let mut v: Vec<String> = ["d10", "d2", "d1", "x", "16", "9"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        sort_natural(&mut v);
        assert_eq!(v, ["9", "16", "d1", "d2", "d10", "x"]);
    }
}
