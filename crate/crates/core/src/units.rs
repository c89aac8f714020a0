//! Fixed-point energy and currency quantities.
//!
//! Energy is stored as integer nano-kWh and money as integer micro-units so
//! that sums are exact and independent of aggregation order.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Length of one sample interval in minutes.
pub const INTERVAL_MINUTES: u32 = 15;
/// Length of one sample interval in hours (kW × this = kWh).
pub const INTERVAL_HOURS: f64 = 0.25;
/// Samples per day at the fixed interval.
pub const INTERVALS_PER_DAY: usize = 96;
/// Samples per hour at the fixed interval.
pub const INTERVALS_PER_HOUR: usize = 4;

const NANO_PER_KWH: f64 = 1e9;
const MICRO_PER_UNIT: f64 = 1e6;

/// Integer division rounding half to even.
pub(crate) fn div_round_half_even(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    let twice = 2 * r;
    if twice > den || (twice == den && q % 2 != 0) {
        q + 1
    } else {
        q
    }
}

/// An amount of energy in nano-kWh.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Energy(i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_nano_kwh(nano: i64) -> Self {
        Energy(nano)
    }

    pub const fn nano_kwh(self) -> i64 {
        self.0
    }

    /// Quantizes a kWh amount to the nearest nano-kWh.
    pub fn from_kwh(kwh: f64) -> Self {
        Energy((kwh * NANO_PER_KWH).round() as i64)
    }

    /// Energy delivered by a constant power over one 15-minute interval.
    pub fn from_interval_kw(kw: f64) -> Self {
        Self::from_kwh(kw * INTERVAL_HOURS)
    }

    pub fn kwh(self) -> f64 {
        self.0 as f64 / NANO_PER_KWH
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn max(self, other: Energy) -> Energy {
        Energy(self.0.max(other.0))
    }

    /// `self × numerator / denominator`, rounded half to even.
    pub fn scale(self, numerator: Energy, denominator: Energy) -> Energy {
        if denominator.0 == 0 {
            return Energy::ZERO;
        }
        let num = self.0 as i128 * numerator.0 as i128;
        let den = denominator.0 as i128;
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        Energy(div_round_half_even(num, den) as i64)
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl SubAssign for Energy {
    fn sub_assign(&mut self, rhs: Energy) {
        self.0 -= rhs.0;
    }
}

impl Neg for Energy {
    type Output = Energy;
    fn neg(self) -> Energy {
        Energy(-self.0)
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Energy> for Energy {
    fn sum<I: Iterator<Item = &'a Energy>>(iter: I) -> Energy {
        iter.copied().sum()
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} kWh", self.kwh())
    }
}

impl Serialize for Energy {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.kwh())
    }
}

impl<'de> Deserialize<'de> for Energy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Energy::from_kwh)
    }
}

/// A currency amount in integer micro-units (1e-6 of the currency unit).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_micros(micros: i64) -> Self {
        Money(micros)
    }

    pub const fn micros(self) -> i64 {
        self.0
    }

    /// Rounds a decimal amount to the nearest micro-unit.
    pub fn from_decimal(amount: f64) -> Self {
        Money((amount * MICRO_PER_UNIT).round() as i64)
    }

    pub fn as_decimal(self) -> f64 {
        self.0 as f64 / MICRO_PER_UNIT
    }

    /// Price of `energy` at `rate` per kWh, rounded half to even to the micro-unit.
    pub fn for_energy(energy: Energy, rate_per_kwh: Money) -> Money {
        let num = energy.0 as i128 * rate_per_kwh.0 as i128;
        Money(div_round_half_even(num, 1_000_000_000) as i64)
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
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

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
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
        write!(f, "{sign}${}.{:02}", abs / 1_000_000, (abs % 1_000_000) / 10_000)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_decimal())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Money::from_decimal)
    }
}
