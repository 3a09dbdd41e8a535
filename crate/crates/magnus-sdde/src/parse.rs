//! Parsing of the numeric forms the command line accepts: plain decimals and
//! dyadic powers like `2^-12`, plus comma lists and `a..b` halving ranges of
//! step sizes.

use crate::error::{Error, Result};

/// Parse `2^k`, `2^-k`, or any decimal literal.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some(exp) = s.strip_prefix("2^") {
        let k: i32 = exp
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
        if !(-1000..=1000).contains(&k) {
            return Err(Error::Parse(format!("exponent out of range in `{s}`")));
        }
        return Ok(2f64.powi(k));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// Exact power-of-two check (including negative exponents).
fn log2_exact(v: f64) -> Option<i32> {
    if v <= 0.0 || !v.is_finite() {
        return None;
    }
    let k = v.log2().round();
    if 2f64.powi(k as i32) == v {
        Some(k as i32)
    } else {
        None
    }
}

/// Comma-separated step sizes; each item is either a single value or a dyadic
/// range `a..b` that is filled in by repeated halving (or doubling) from `a`
/// to `b`.
pub fn parse_step_list(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for item in s.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return Err(Error::Parse("empty item in step list".into()));
        }
        match item.split_once("..") {
            None => {
                let v = parse_number(item)?;
                if v <= 0.0 {
                    return Err(Error::Parse(format!("step `{item}` must be positive")));
                }
                out.push(v);
            }
            Some((a, b)) => {
                let start = parse_number(a)?;
                let end = parse_number(b)?;
                let (ka, kb) = match (log2_exact(start), log2_exact(end)) {
                    (Some(ka), Some(kb)) => (ka, kb),
                    _ => {
                        return Err(Error::Parse(format!(
                            "range `{item}` needs power-of-two endpoints"
                        )))
                    }
                };
                if ka >= kb {
                    for k in (kb..=ka).rev() {
                        out.push(2f64.powi(k));
                    }
                } else {
                    for k in ka..=kb {
                        out.push(2f64.powi(k));
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_and_decimal_forms() {
        assert_eq!(parse_number("2^-12").unwrap(), 2f64.powi(-12));
        assert_eq!(parse_number("2^3").unwrap(), 8.0);
        assert_eq!(parse_number("0.04").unwrap(), 0.04);
        assert_eq!(parse_number("1e-3").unwrap(), 1e-3);
        assert_eq!(parse_number(" 0.5 ").unwrap(), 0.5);
    }

    #[test]
    fn junk_rejected() {
        for bad in ["", "2^", "2^x", "abc", "NaN", "inf", "2^99999"] {
            assert!(parse_number(bad).is_err(), "accepted `{bad}`");
        }
    }

    #[test]
    fn range_enumerates_halvings() {
        assert_eq!(
            parse_step_list("2^-3..2^-6").unwrap(),
            vec![0.125, 0.0625, 0.03125, 0.015625]
        );
        // ascending direction is preserved
        assert_eq!(parse_step_list("2^-5..2^-3").unwrap(), vec![
            0.03125, 0.0625, 0.125
        ]);
    }

    #[test]
    fn lists_and_ranges_combine() {
        assert_eq!(
            parse_step_list("0.25, 2^-3..2^-4, 0.03125").unwrap(),
            vec![0.25, 0.125, 0.0625, 0.03125]
        );
    }

    #[test]
    fn non_dyadic_range_rejected() {
        assert!(parse_step_list("0.3..0.1").is_err());
        assert!(parse_step_list("2^-3..0.1").is_err());
    }
}
