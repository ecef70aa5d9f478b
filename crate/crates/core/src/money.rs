//! Exact money arithmetic.
//!
//! Amounts are integer pico-dollars (1e-12 USD). Token prices quoted in
//! dollars per million tokens become integer pico-dollars per token, so a
//! token cost is a single integer multiply and cost accounting is linear
//! with no rounding.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Pico-dollars per dollar.
pub const PICOS_PER_DOLLAR: i64 = 1_000_000_000_000;

/// A money amount in pico-dollars.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_picos(picos: i64) -> Self {
        Money(picos)
    }

    pub const fn picos(self) -> i64 {
        self.0
    }

    /// Converts to dollars. Only for reporting; never feed this back into accounting.
    pub fn dollars(self) -> f64 {
        let whole = self.0.div_euclid(PICOS_PER_DOLLAR);
        let frac = self.0.rem_euclid(PICOS_PER_DOLLAR);
        whole as f64 + frac as f64 / PICOS_PER_DOLLAR as f64
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let per = PICOS_PER_DOLLAR as u64;
        let frac = format!("{:012}", abs % per);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            write!(f, "{sign}${}", abs / per)
        } else {
            write!(f, "{sign}${}.{frac}", abs / per)
        }
    }
}

/// Price of one token in pico-dollars.
///
/// Serialized as dollars per million tokens, the unit provider price sheets
/// use. Any price with at most six decimal places converts exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenPrice(u64);

impl TokenPrice {
    pub const fn from_picos_per_token(picos: u64) -> Self {
        TokenPrice(picos)
    }

    /// Returns `None` for negative or non-finite prices.
    pub fn from_dollars_per_million(price: f64) -> Option<Self> {
        if !price.is_finite() || price < 0.0 {
            return None;
        }
        // $/1e6 tokens * 1e12 pico/$ = price * 1e6 pico per token
        let picos = (price * 1e6).round();
        if picos > u64::MAX as f64 {
            return None;
        }
        Some(TokenPrice(picos as u64))
    }

    pub const fn picos_per_token(self) -> u64 {
        self.0
    }

    pub fn dollars_per_million(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn cost(self, tokens: u64) -> Money {
        Money((self.0 * tokens) as i64)
    }
}

impl Serialize for TokenPrice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.dollars_per_million())
    }
}

impl<'de> Deserialize<'de> for TokenPrice {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        TokenPrice::from_dollars_per_million(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid token price {raw}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn price_conversion_is_exact_for_price_sheet_values() {
        for (raw, picos) in [
            (0.267, 267_000),
            (0.075, 75_000),
            (15.0, 15_000_000),
            (2.745, 2_745_000),
        ] {
            let p = TokenPrice::from_dollars_per_million(raw).unwrap();
            assert_eq!(p.picos_per_token(), picos);
            assert_eq!(p.dollars_per_million(), raw);
        }
    }

    #[test]
    fn rejects_negative_price() {
        assert!(TokenPrice::from_dollars_per_million(-0.1).is_none());
        assert!(TokenPrice::from_dollars_per_million(f64::NAN).is_none());
    }

    #[test]
    fn display_trims_trailing_zeros() {
        assert_eq!(Money::from_picos(750_000_000_000).to_string(), "$0.75");
        assert_eq!(Money::from_picos(2 * PICOS_PER_DOLLAR).to_string(), "$2");
        assert_eq!(Money::from_picos(-67_500_000_000).to_string(), "-$0.0675");
    }

    #[test]
    fn dollars_round_trip_small_amounts() {
        assert_eq!(Money::from_picos(67_500_000_000).dollars(), 0.0675);
    }
}
