//! Output formatting shared by the exporters and the verification suites.

use serde::Serialize;

/// Significant digits used for every printed float.
pub const SIG_DIGITS: usize = 12;

/// `x` with 12 significant digits, in plain decimal notation when the
/// magnitude allows it.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{:.*e}", SIG_DIGITS - 1, x);
    }
    let decimals = (SIG_DIGITS as i32 - 1 - mag).max(0) as usize;
    let s = format!("{:.*}", decimals, x);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    sig12(x).parse().unwrap_or(x)
}

pub fn round_all(xs: &[f64]) -> Vec<f64> {
    xs.iter().copied().map(round_sig).collect()
}

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub suite: String,
    pub n: usize,
    pub params: serde_json::Value,
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    /// `|lhs - rhs| <= tolerance`.
    pub fn equality(
        suite: &str,
        check: &str,
        n: usize,
        params: serde_json::Value,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
    ) -> Self {
        let deviation = (lhs - rhs).abs();
        CheckRecord {
            check: check.into(),
            suite: suite.into(),
            n,
            params,
            lhs,
            rhs,
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        }
    }

    /// `lhs > rhs`; deviation is the margin.
    pub fn greater(
        suite: &str,
        check: &str,
        n: usize,
        params: serde_json::Value,
        lhs: f64,
        rhs: f64,
    ) -> Self {
        CheckRecord {
            check: check.into(),
            suite: suite.into(),
            n,
            params,
            lhs,
            rhs,
            deviation: lhs - rhs,
            tolerance: 0.0,
            pass: lhs > rhs,
        }
    }

    pub fn rounded(mut self) -> Self {
        self.lhs = round_sig(self.lhs);
        self.rhs = round_sig(self.rhs);
        self.deviation = round_sig(self.deviation);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(1.324_717_957_244_746), "1.32471795724");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(2.0), "2");
        assert_eq!(sig12(-0.039_096_952_200_314), "-0.0390969522003");
        assert_eq!(sig12(1234.5), "1234.5");
        assert_eq!(sig12(1e-9), "1.00000000000e-9");
        assert_eq!(round_sig(13.077_169_416_954_526), 13.0771694170);
    }
}
