//! Integer-nanosecond time types shared by the whole simulator.
//!
//! The ground-truth timeline is `SimTime` (unsigned nanoseconds since
//! simulation start). Everything a clock reads or a protocol carries is a
//! signed `Duration` in nanoseconds. There is no floating-point timeline:
//! sub-microsecond sync residuals must never be polluted by float error.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};

pub const NS_PER_US: i64 = 1_000;
pub const NS_PER_MS: i64 = 1_000_000;
pub const NS_PER_SEC: i64 = 1_000_000_000;

/// An instant on the ground-truth simulation timeline, in nanoseconds
/// since simulation start. Monotonically non-decreasing as events are
/// processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime {
    ns: u64,
}

impl SimTime {
    pub const ZERO: SimTime = SimTime { ns: 0 };

    pub const fn from_ns(ns: u64) -> Self {
        SimTime { ns }
    }

    pub const fn from_us(us: u64) -> Self {
        SimTime { ns: us * 1_000 }
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime { ns: ms * 1_000_000 }
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime {
            ns: s * 1_000_000_000,
        }
    }

    pub const fn ns(self) -> u64 {
        self.ns
    }

    /// This instant expressed as a duration since simulation start.
    pub const fn as_duration(self) -> Duration {
        Duration { ns: self.ns as i64 }
    }

    pub fn elapsed_since(self, earlier: SimTime) -> Duration {
        Duration {
            ns: self.ns as i64 - earlier.ns as i64,
        }
    }
}

impl Add<Duration> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: Duration) -> SimTime {
        let ns = self.ns as i64 + rhs.ns;
        debug_assert!(ns >= 0, "SimTime underflow: {} + {}", self, rhs);
        SimTime { ns: ns as u64 }
    }
}

impl Sub<SimTime> for SimTime {
    type Output = Duration;

    fn sub(self, rhs: SimTime) -> Duration {
        self.elapsed_since(rhs)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_ns(self.ns as i64))
    }
}

/// A signed span of time in integer nanoseconds. Also used for clock
/// readings (a local or domain clock reading is the duration since
/// simulation start as measured by that clock).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Duration {
    ns: i64,
}

impl Duration {
    pub const ZERO: Duration = Duration { ns: 0 };

    pub const fn from_ns(ns: i64) -> Self {
        Duration { ns }
    }

    pub const fn from_us(us: i64) -> Self {
        Duration { ns: us * NS_PER_US }
    }

    pub const fn from_ms(ms: i64) -> Self {
        Duration { ns: ms * NS_PER_MS }
    }

    pub const fn from_secs(s: i64) -> Self {
        Duration { ns: s * NS_PER_SEC }
    }

    pub const fn ns(self) -> i64 {
        self.ns
    }

    pub const fn abs(self) -> Duration {
        Duration { ns: self.ns.abs() }
    }

    pub fn as_secs_f64(self) -> f64 {
        self.ns as f64 / NS_PER_SEC as f64
    }
}

impl Add for Duration {
    type Output = Duration;

    fn add(self, rhs: Duration) -> Duration {
        Duration {
            ns: self.ns + rhs.ns,
        }
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.ns += rhs.ns;
    }
}

impl Sub for Duration {
    type Output = Duration;

    fn sub(self, rhs: Duration) -> Duration {
        Duration {
            ns: self.ns - rhs.ns,
        }
    }
}

impl Neg for Duration {
    type Output = Duration;

    fn neg(self) -> Duration {
        Duration { ns: -self.ns }
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_ns(self.ns))
    }
}

/// Formats a nanosecond count with the largest unit that divides it
/// exactly, so the output parses back to the same value.
pub fn format_ns(ns: i64) -> String {
    if ns == 0 {
        return "0s".to_string();
    }
    if ns % NS_PER_SEC == 0 {
        format!("{}s", ns / NS_PER_SEC)
    } else if ns % NS_PER_MS == 0 {
        format!("{}ms", ns / NS_PER_MS)
    } else if ns % NS_PER_US == 0 {
        format!("{}us", ns / NS_PER_US)
    } else {
        format!("{}ns", ns)
    }
}

/// Parses a duration literal like `125ms`, `500ns`, `1s`, `-10us`.
pub fn parse_ns(text: &str) -> Option<i64> {
    let text = text.trim();
    let (num, mult) = [
        ("ns", 1),
        ("us", NS_PER_US),
        ("ms", NS_PER_MS),
        ("s", NS_PER_SEC),
    ]
    .into_iter()
    .find_map(|(suffix, mult)| Some((text.strip_suffix(suffix)?, mult)))?;
    let num: i64 = num.trim().parse().ok()?;
    num.checked_mul(mult)
}

impl std::str::FromStr for Duration {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ns(s)
            .map(Duration::from_ns)
            .ok_or_else(|| format!("invalid duration: {s:?}"))
    }
}

impl std::str::FromStr for SimTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match parse_ns(s) {
            Some(ns) if ns >= 0 => Ok(SimTime::from_ns(ns as u64)),
            Some(_) => Err(format!("simulation time cannot be negative: {s:?}")),
            None => Err(format!("invalid time: {s:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duration_formats_with_exact_unit() {
        assert_eq!(format_ns(0), "0s");
        assert_eq!(format_ns(125_000_000), "125ms");
        assert_eq!(format_ns(500), "500ns");
        assert_eq!(format_ns(1_000), "1us");
        assert_eq!(format_ns(20_000_000_000), "20s");
        assert_eq!(format_ns(-10_000), "-10us");
        assert_eq!(format_ns(1_000_000_001), "1000000001ns");
    }

    #[test]
    fn duration_parse_roundtrip() {
        for ns in [0i64, 1, 500, 1_000, 125_000_000, -42, 20_000_000_000] {
            let text = format_ns(ns);
            assert_eq!(parse_ns(&text), Some(ns), "roundtrip of {text}");
        }
    }

    #[test]
    fn simtime_arithmetic() {
        let t = SimTime::from_secs(1);
        assert_eq!(t + Duration::from_ns(500), SimTime::from_ns(1_000_000_500));
        assert_eq!(
            SimTime::from_secs(2) - SimTime::from_secs(1),
            Duration::from_secs(1)
        );
        assert_eq!(
            SimTime::from_secs(1) - SimTime::from_secs(2),
            Duration::from_secs(-1)
        );
    }

    #[test]
    fn simtime_rejects_negative_parse() {
        assert!("-1s".parse::<SimTime>().is_err());
        assert!("4s".parse::<SimTime>().is_ok());
    }
}
