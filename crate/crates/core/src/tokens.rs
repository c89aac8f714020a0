//! Token accounting and per-query model cost.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::units::{div_round_half_even, Money};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        TokenUsage { prompt_tokens, completion_tokens, total_tokens: prompt_tokens + completion_tokens }
    }

    pub fn is_consistent(&self) -> bool {
        self.total_tokens == self.prompt_tokens + self.completion_tokens
    }

    pub fn cost(&self, pricing: &TokenPricing) -> TokenCost {
        pricing.cost(self)
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;
    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage::new(self.prompt_tokens + rhs.prompt_tokens, self.completion_tokens + rhs.completion_tokens)
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

impl Sum for TokenUsage {
    fn sum<I: Iterator<Item = TokenUsage>>(iter: I) -> TokenUsage {
        iter.fold(TokenUsage::default(), Add::add)
    }
}

/// Model prices in currency per one million tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPricing {
    pub input_price_per_million: Money,
    pub output_price_per_million: Money,
}

impl Default for TokenPricing {
    /// $2.50 per 1M input tokens and $10.00 per 1M output tokens.
    fn default() -> Self {
        TokenPricing {
            input_price_per_million: Money::from_micros(2_500_000),
            output_price_per_million: Money::from_micros(10_000_000),
        }
    }
}

impl TokenPricing {
    /// Exact: tokens × (micro-units per million tokens) is a count of pico-units.
    pub fn cost(&self, usage: &TokenUsage) -> TokenCost {
        TokenCost(
            usage.prompt_tokens as i128 * self.input_price_per_million.micros() as i128
                + usage.completion_tokens as i128 * self.output_price_per_million.micros() as i128,
        )
    }
}

/// A model cost in integer pico-units (1e-12 of the currency unit).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenCost(pub i128);

impl TokenCost {
    pub fn pico(self) -> i128 {
        self.0
    }

    pub fn as_decimal(self) -> f64 {
        self.0 as f64 / 1e12
    }

    /// Rounded half to even to the micro-unit.
    pub fn to_money(self) -> Money {
        Money::from_micros(div_round_half_even(self.0, 1_000_000) as i64)
    }
}

impl Add for TokenCost {
    type Output = TokenCost;
    fn add(self, rhs: TokenCost) -> TokenCost {
        TokenCost(self.0 + rhs.0)
    }
}

impl Sum for TokenCost {
    fn sum<I: Iterator<Item = TokenCost>>(iter: I) -> TokenCost {
        iter.fold(TokenCost::default(), Add::add)
    }
}

impl fmt::Display for TokenCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "${:.4}", self.as_decimal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_query_cost() {
        let usage = TokenUsage::new(28_937, 530);
        assert_eq!(usage.total_tokens, 29_467);
        let cost = usage.cost(&TokenPricing::default());
        assert_eq!(cost.pico(), 77_642_500_000);
        assert_eq!(cost.to_money().micros(), 77_642);
        assert_eq!(cost.to_string(), "$0.0776");
    }

    #[test]
    fn order_independent_sum() {
        let pricing = TokenPricing::default();
        let usages: Vec<TokenUsage> = (1..50u64).map(|i| TokenUsage::new(i * 977, i * 13)).collect();
        let forward: TokenCost = usages.iter().map(|u| u.cost(&pricing)).sum();
        let backward: TokenCost = usages.iter().rev().map(|u| u.cost(&pricing)).sum();
        let total: TokenUsage = usages.iter().copied().sum();
        assert_eq!(forward, backward);
        assert_eq!(forward, total.cost(&pricing));
        assert!(total.is_consistent());
    }
}
