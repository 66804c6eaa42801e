//! First-class finite-or-divergent values.
//!
//! Several norm constants in this crate are characterised by "finite if and
//! only if" conditions, so a divergent integral is a legitimate answer, not
//! an error. `ExtReal` carries that verdict explicitly instead of leaking an
//! IEEE infinity into downstream arithmetic.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtReal {
    Finite { value: f64 },
    Infinite,
}

impl ExtReal {
    pub fn finite(value: f64) -> Self {
        ExtReal::Finite { value }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            ExtReal::Finite { value } => Some(*value),
            ExtReal::Infinite => None,
        }
    }

    /// Panics when the value is the divergent verdict. Reserved for call
    /// sites that have already checked finiteness.
    pub fn expect_finite(&self, what: &str) -> f64 {
        match self {
            ExtReal::Finite { value } => *value,
            ExtReal::Infinite => panic!("{what}: expected a finite value, got the divergent verdict"),
        }
    }

    pub fn map<F: FnOnce(f64) -> f64>(self, f: F) -> Self {
        match self {
            ExtReal::Finite { value } => ExtReal::Finite { value: f(value) },
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }

    /// Scale by a nonnegative factor; scaling the divergent verdict by zero
    /// yields zero (the integral of the zero function is zero regardless of
    /// the kernel's tail).
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        if c == 0.0 {
            return ExtReal::finite(0.0);
        }
        self.map(|v| c * v)
    }

    pub fn add(self, other: ExtReal) -> Self {
        match (self, other) {
            (ExtReal::Finite { value: a }, ExtReal::Finite { value: b }) => ExtReal::finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::finite(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite { value } => write!(f, "{value}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_by_zero_kills_divergence() {
        assert_eq!(ExtReal::Infinite.scale(0.0), ExtReal::finite(0.0));
        assert_eq!(ExtReal::finite(3.0).scale(2.0), ExtReal::finite(6.0));
    }

    #[test]
    fn addition_absorbs_divergence() {
        assert_eq!(ExtReal::finite(1.0).add(ExtReal::Infinite), ExtReal::Infinite);
        assert_eq!(
            ExtReal::finite(1.0).add(ExtReal::finite(2.0)),
            ExtReal::finite(3.0)
        );
    }

    #[test]
    fn serializes_with_kind_tag() {
        let s = serde_json::to_string(&ExtReal::finite(2.0)).unwrap();
        assert_eq!(s, r#"{"kind":"finite","value":2.0}"#);
        let s = serde_json::to_string(&ExtReal::Infinite).unwrap();
        assert_eq!(s, r#"{"kind":"infinite"}"#);
    }
}
