//! One round of the second-price auction with reserve, and the reserve
//! policies that decide the next round's reserve from the bids seen so far.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// How the reserve evolves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReserveRule {
    /// Constant reserve.
    Static { reserve: f64 },
    /// Reserve `low` until some bid strictly exceeds `rho`, then `high` forever.
    Threshold { rho: f64, low: f64, high: f64 },
    /// Reserve `low` until `k` distinct agents have bid strictly above `rho`,
    /// then `high` forever.
    Generalized { rho: f64, low: f64, high: f64, k: usize },
}

impl ReserveRule {
    fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "{name} must be a finite nonnegative price, got {x}"
                )))
            }
        };
        match *self {
            ReserveRule::Static { reserve } => finite_nonneg("reserve", reserve),
            ReserveRule::Threshold { rho, low, high } => {
                finite_nonneg("rho", rho)?;
                finite_nonneg("low reserve", low)?;
                finite_nonneg("high reserve", high)
            }
            ReserveRule::Generalized { rho, low, high, k } => {
                finite_nonneg("rho", rho)?;
                finite_nonneg("low reserve", low)?;
                finite_nonneg("high reserve", high)?;
                if k == 0 {
                    return Err(Error::Domain("generalized threshold needs k >= 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Trigger level and the number of distinct high bidders required.
    fn trigger(&self) -> Option<(f64, usize)> {
        match *self {
            ReserveRule::Static { .. } => None,
            ReserveRule::Threshold { rho, .. } => Some((rho, 1)),
            ReserveRule::Generalized { rho, k, .. } => Some((rho, k)),
        }
    }
}

/// A reserve rule together with its trigger state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservePolicy {
    rule: ReserveRule,
    triggered: bool,
    /// Agents that have bid strictly above the trigger level, while untriggered.
    high_bidders: BTreeSet<usize>,
}

/// Outcome of one round as seen by the mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub reserve: f64,
    /// `None` marks a non-participant.
    pub bids: Vec<Option<f64>>,
    pub winner: Option<usize>,
    /// Payment of the winner; zero when unsold.
    pub price: f64,
    /// Trigger state after this round's bids were processed.
    pub triggered: bool,
}

impl RoundRecord {
    pub fn participation(&self) -> Vec<bool> {
        self.bids.iter().map(Option::is_some).collect()
    }

    pub fn allocation(&self) -> Vec<u8> {
        (0..self.bids.len()).map(|i| u8::from(self.winner == Some(i))).collect()
    }

    pub fn payments(&self) -> Vec<f64> {
        (0..self.bids.len())
            .map(|i| if self.winner == Some(i) { self.price } else { 0.0 })
            .collect()
    }
}

/// Winner and price of a round, without the bid vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sale {
    pub winner: usize,
    pub price: f64,
}

/// Resolves a second-price auction with reserve.
///
/// Exactly one uniform draw is taken from `rng` per call, whether or not a
/// tie has to be broken, so paired runs stay aligned.
pub fn resolve<R: Rng + ?Sized>(reserve: f64, bids: &[Option<f64>], rng: &mut R) -> Result<Option<Sale>> {
    let u: f64 = rng.random();
    let mut best = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    let mut ties = 0usize;
    for bid in bids.iter().flatten() {
        let b = *bid;
        if !(b >= 0.0) || !b.is_finite() {
            return Err(Error::Input(format!("bids must be finite and nonnegative, got {b}")));
        }
        if b > best {
            second = best;
            best = b;
            ties = 1;
        } else if b == best {
            second = best;
            ties += 1;
        } else if b > second {
            second = b;
        }
    }
    if ties == 0 || best < reserve {
        return Ok(None);
    }
    let pick = ((u * ties as f64) as usize).min(ties - 1);
    let winner = bids
        .iter()
        .enumerate()
        .filter(|(_, b)| **b == Some(best))
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick < ties");
    Ok(Some(Sale {
        winner,
        price: second.max(reserve),
    }))
}

impl ReservePolicy {
    pub fn new(rule: ReserveRule) -> Result<Self> {
        rule.validate()?;
        Ok(Self {
            rule,
            triggered: false,
            high_bidders: BTreeSet::new(),
        })
    }

    pub fn static_reserve(reserve: f64) -> Result<Self> {
        Self::new(ReserveRule::Static { reserve })
    }

    pub fn threshold(rho: f64, low: f64, high: f64) -> Result<Self> {
        Self::new(ReserveRule::Threshold { rho, low, high })
    }

    pub fn generalized(rho: f64, low: f64, high: f64, k: usize) -> Result<Self> {
        Self::new(ReserveRule::Generalized { rho, low, high, k })
    }

    pub fn rule(&self) -> &ReserveRule {
        &self.rule
    }

    pub fn is_triggered(&self) -> bool {
        self.triggered
    }

    /// Distinct agents seen bidding above the trigger level before the rise.
    pub fn high_bidders(&self) -> &BTreeSet<usize> {
        &self.high_bidders
    }

    /// Reserve for the upcoming round.
    pub fn next_reserve(&self) -> f64 {
        match self.rule {
            ReserveRule::Static { reserve } => reserve,
            ReserveRule::Threshold { low, high, .. } | ReserveRule::Generalized { low, high, .. } => {
                if self.triggered {
                    high
                } else {
                    low
                }
            }
        }
    }

    /// True once no future bid can change the reserve.
    pub fn is_settled(&self) -> bool {
        self.triggered || matches!(self.rule, ReserveRule::Static { .. })
    }

    /// Updates the trigger state with one round's bids.
    pub fn observe(&mut self, bids: &[Option<f64>]) {
        if self.triggered {
            return;
        }
        let Some((rho, k)) = self.rule.trigger() else {
            return;
        };
        for (agent, bid) in bids.iter().enumerate() {
            if matches!(bid, Some(b) if *b > rho) {
                self.high_bidders.insert(agent);
            }
        }
        if self.high_bidders.len() >= k {
            self.triggered = true;
        }
    }

    /// Plays round `t` in place: resolves the auction at the current reserve,
    /// then advances the trigger state.
    pub fn play<R: Rng + ?Sized>(&mut self, bids: &[Option<f64>], rng: &mut R) -> Result<Option<Sale>> {
        let sale = resolve(self.next_reserve(), bids, rng)?;
        self.observe(bids);
        Ok(sale)
    }

    /// Plays round `t` and returns its record with the advanced policy,
    /// leaving `self` untouched.
    pub fn run_round<R: Rng + ?Sized>(
        &self,
        t: usize,
        bids: &[Option<f64>],
        rng: &mut R,
    ) -> Result<(RoundRecord, ReservePolicy)> {
        let mut next = self.clone();
        let reserve = next.next_reserve();
        let sale = next.play(bids, rng)?;
        let record = RoundRecord {
            t,
            reserve,
            bids: bids.to_vec(),
            winner: sale.map(|s| s.winner),
            price: sale.map_or(0.0, |s| s.price),
            triggered: next.triggered,
        };
        Ok((record, next))
    }
}
