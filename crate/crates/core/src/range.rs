//! Inclusive capacity / collection-size ranges as written on the command line.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// `lo..=hi`. Accepts `"3"`, `"1..3"` and `"1..=3"`; both bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacityRange {
    pub lo: usize,
    pub hi: usize,
}

impl CapacityRange {
    pub fn single(j: usize) -> Self {
        CapacityRange { lo: j, hi: j }
    }

    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Err(Error::Parse(format!("empty range {lo}..{hi}")));
        }
        Ok(CapacityRange { lo, hi })
    }

    pub fn iter(self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }

    /// Fails unless the whole range lies in `min..=max`.
    pub fn check_within(self, min: usize, max: usize) -> Result<()> {
        if self.lo < min || self.hi > max {
            return Err(Error::InvalidParameter(format!(
                "range {self} must lie within {min}..={max}"
            )));
        }
        Ok(())
    }
}

impl FromStr for CapacityRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let number = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad bound {t:?}: {e}")))
        };
        match s.split_once("..") {
            None => number(s).map(CapacityRange::single),
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                CapacityRange::new(number(lo)?, number(hi)?)
            }
        }
    }
}

impl fmt::Display for CapacityRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_forms() {
        assert_eq!("3".parse::<CapacityRange>().unwrap(), CapacityRange::single(3));
        assert_eq!("1..3".parse::<CapacityRange>().unwrap(), CapacityRange { lo: 1, hi: 3 });
        assert_eq!("1..=3".parse::<CapacityRange>().unwrap(), CapacityRange { lo: 1, hi: 3 });
        assert_eq!(" 2 .. 5 ".parse::<CapacityRange>().unwrap(), CapacityRange { lo: 2, hi: 5 });
        assert_eq!("1..3".parse::<CapacityRange>().unwrap().iter().count(), 3);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "..", "3..1", "-1", "a..b", "1...3", "1..", "..4", "1..3..5"] {
            assert!(bad.parse::<CapacityRange>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn bounds_check() {
        let r = CapacityRange::new(1, 4).unwrap();
        assert!(r.check_within(0, 4).is_ok());
        assert!(r.check_within(2, 4).is_err());
        assert!(r.check_within(0, 3).is_err());
    }

    proptest! {
        #[test]
        fn display_round_trips(lo in 0usize..1000, len in 0usize..1000) {
            let r = CapacityRange::new(lo, lo + len).unwrap();
            prop_assert_eq!(r.to_string().parse::<CapacityRange>().unwrap(), r);
        }
    }
}
