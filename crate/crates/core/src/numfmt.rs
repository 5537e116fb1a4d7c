//! Locale-independent float formatting used by every file the crate writes.

/// Significant digits kept in written output.
pub const SIG_DIGITS: usize = 12;

/// Rounds `x` to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest round-trip representation of `x` after rounding to 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    // -0 and 0 print the same
    if r == 0.0 {
        return "0".into();
    }
    format!("{r}")
}

/// Serializes as a JSON number rounded like [`fmt_num`]; non-finite values become strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl serde::Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(round_sig(self.0) + 0.0)
        } else {
            s.serialize_str(&fmt_num(self.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(123456789.123456), "123456789.123");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
    }

    #[test]
    fn json_numbers() {
        let v = serde_json::to_string(&[Num(0.1 + 0.2), Num(f64::INFINITY), Num(-0.0)]).unwrap();
        assert_eq!(v, r#"[0.3,"inf",0.0]"#);
    }
}
