use std::fmt;
use std::str::FromStr;

/// Integer-nanosecond timestamp.
///
/// Dataset clocks run at ~1.4e9 s with ns resolution, which a single `f64`
/// cannot represent. Time differences are taken in integers and only then
/// converted to seconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

const NANOS_PER_SEC: i64 = 1_000_000_000;

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub const fn from_nanos(ns: i64) -> Self {
        Timestamp(ns)
    }

    /// Rounds to the nearest nanosecond.
    pub fn from_secs_f64(s: f64) -> Self {
        Timestamp((s * 1e9).round() as i64)
    }

    pub const fn nanos(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        let secs = self.0.div_euclid(NANOS_PER_SEC);
        let frac = self.0.rem_euclid(NANOS_PER_SEC);
        secs as f64 + frac as f64 * 1e-9
    }

    /// `self − earlier` in seconds.
    pub fn secs_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 * 1e-9
    }

    pub fn add_nanos(self, ns: i64) -> Self {
        Timestamp(self.0 + ns)
    }
}

/// Seconds with exactly nine fractional digits.
impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let ns = NANOS_PER_SEC as u64;
        write!(f, "{sign}{}.{:09}", abs / ns, abs % ns)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTimestampError(pub String);

impl fmt::Display for ParseTimestampError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid timestamp '{}'", self.0)
    }
}

impl std::error::Error for ParseTimestampError {}

/// Parses decimal seconds (`"12.5"`, `"-0.000000001"`) without going
/// through floating point. At most nine fractional digits are accepted.
impl FromStr for Timestamp {
    type Err = ParseTimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimestampError(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(err());
        }
        let digits = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
        if (!int.is_empty() && !digits(int)) || (!frac.is_empty() && !digits(frac)) || frac.len() > 9 {
            return Err(err());
        }
        let whole: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| err())? };
        let mut frac_ns: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| err())? };
        for _ in frac.len()..9 {
            frac_ns *= 10;
        }
        let ns = whole
            .checked_mul(NANOS_PER_SEC)
            .and_then(|w| w.checked_add(frac_ns))
            .ok_or_else(err)?;
        Ok(Timestamp(if neg { -ns } else { ns }))
    }
}
