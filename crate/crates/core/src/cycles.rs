//! Exact cycle arithmetic.
//!
//! Port pressures and latencies are rationals, not floats: a three-port
//! instruction occupies 1/3 cy per port, and summing twelve of those must
//! give exactly 4, not 3.96. All accumulation happens on [`Cy`]; rendering
//! rounds at the last moment.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A quantity of clock cycles, exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cy(Ratio<i64>);

impl Cy {
    pub const ZERO: Cy = Cy(Ratio::new_raw(0, 1));

    pub fn int(n: i64) -> Cy {
        Cy(Ratio::from_integer(n))
    }

    /// `num/den` cycles. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Cy {
        Cy(Ratio::new(num, den))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn as_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn max(self, other: Cy) -> Cy {
        if self.0 >= other.0 {
            self
        } else {
            other
        }
    }

    /// Render with `decimals` fraction digits, round half away from zero.
    pub fn render(&self, decimals: u32) -> String {
        let scale = 10i64.pow(decimals);
        let scaled = (self.0 * Ratio::from_integer(scale)).round();
        let n = scaled.to_integer();
        let sign = if n < 0 { "-" } else { "" };
        let n = n.abs();
        if decimals == 0 {
            return format!("{sign}{n}");
        }
        format!(
            "{sign}{}.{:0width$}",
            n / scale,
            n % scale,
            width = decimals as usize
        )
    }

    /// Canonical text form: an integer, or `num/den` in lowest terms.
    pub fn canonical(&self) -> String {
        if self.0.is_integer() {
            self.0.to_integer().to_string()
        } else {
            format!("{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

/// Error produced when a cycle value cannot be parsed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyParseError(pub String);

impl fmt::Display for CyParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid cycle value `{}` (want an integer, a decimal like `0.5`, or a fraction like `1/3`)", self.0)
    }
}

impl std::error::Error for CyParseError {}

impl FromStr for Cy {
    type Err = CyParseError;

    /// Accepts `6`, `0.5`, `2.46`, and `1/3`. Decimals convert exactly
    /// (scaled by a power of ten), never through f64.
    fn from_str(s: &str) -> Result<Cy, CyParseError> {
        let s = s.trim();
        let err = || CyParseError(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| err())?;
            let den: i64 = den.trim().parse().map_err(|_| err())?;
            if den == 0 {
                return Err(err());
            }
            return Ok(Cy::ratio(num, den));
        }
        if let Some((int, frac)) = s.split_once('.') {
            let negative = int.trim_start().starts_with('-');
            let int: i64 = if int.is_empty() || int == "-" {
                0
            } else {
                int.parse().map_err(|_| err())?
            };
            if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            let scale = 10i64.pow(frac.len() as u32);
            let frac: i64 = frac.parse().map_err(|_| err())?;
            let whole = int.abs() * scale + frac;
            let signed = if negative { -whole } else { whole };
            return Ok(Cy::ratio(signed, scale));
        }
        let n: i64 = s.parse().map_err(|_| err())?;
        Ok(Cy::int(n))
    }
}

impl fmt::Display for Cy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl Add for Cy {
    type Output = Cy;
    fn add(self, rhs: Cy) -> Cy {
        Cy(self.0 + rhs.0)
    }
}

impl AddAssign for Cy {
    fn add_assign(&mut self, rhs: Cy) {
        self.0 += rhs.0;
    }
}

impl Sub for Cy {
    type Output = Cy;
    fn sub(self, rhs: Cy) -> Cy {
        Cy(self.0 - rhs.0)
    }
}

impl Mul for Cy {
    type Output = Cy;
    fn mul(self, rhs: Cy) -> Cy {
        Cy(self.0 * rhs.0)
    }
}

impl Div for Cy {
    type Output = Cy;
    fn div(self, rhs: Cy) -> Cy {
        Cy(self.0 / rhs.0)
    }
}

impl Sum for Cy {
    fn sum<I: Iterator<Item = Cy>>(iter: I) -> Cy {
        iter.fold(Cy::ZERO, |a, b| a + b)
    }
}

impl Serialize for Cy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for Cy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Cy, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Cy;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a string like \"0.5\" or \"1/3\"")
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Cy, E> {
                Ok(Cy::int(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Cy, E> {
                i64::try_from(v)
                    .map(Cy::int)
                    .map_err(|_| E::custom("cycle value out of range"))
            }
            fn visit_f64<E: serde::de::Error>(self, _: f64) -> Result<Cy, E> {
                Err(E::custom(
                    "float cycle values are not exact; write them as strings, e.g. \"0.5\" or \"1/3\"",
                ))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Cy, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(V)
    }
}
