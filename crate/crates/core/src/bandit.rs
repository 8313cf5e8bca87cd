//! Epsilon-greedy selection over the six reasoning types.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReasoningType {
    Deductive,
    Inductive,
    Abductive,
    Analogical,
    Counterfactual,
    Causal,
}

impl ReasoningType {
    /// Fixed ordinal order; argmax ties resolve to the earliest entry.
    pub const ALL: [ReasoningType; 6] = [
        ReasoningType::Deductive,
        ReasoningType::Inductive,
        ReasoningType::Abductive,
        ReasoningType::Analogical,
        ReasoningType::Counterfactual,
        ReasoningType::Causal,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ReasoningType::Deductive => "deductive",
            ReasoningType::Inductive => "inductive",
            ReasoningType::Abductive => "abductive",
            ReasoningType::Analogical => "analogical",
            ReasoningType::Counterfactual => "counterfactual",
            ReasoningType::Causal => "causal",
        }
    }
}

impl fmt::Display for ReasoningType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReasoningType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|r| r.name() == lower)
            .ok_or_else(|| format!("unknown reasoning type `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BanditError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("iteration {t} is past the horizon {horizon}")]
    Exhausted { t: usize, horizon: usize },
    #[error("reward must be finite, got {0}")]
    NonFiniteReward(f64),
    #[error("initial value must be finite, got {0}")]
    NonFiniteInit(f64),
}

#[derive(Clone, Debug)]
pub struct BanditState {
    q: [f64; 6],
    n: [u64; 6],
    t: usize,
    horizon: usize,
    q0: f64,
    rng: ChaCha8Rng,
}

impl BanditState {
    pub fn new(horizon: usize, q0: f64, seed: u64) -> Result<Self, BanditError> {
        if horizon == 0 {
            return Err(BanditError::ZeroHorizon);
        }
        if !q0.is_finite() {
            return Err(BanditError::NonFiniteInit(q0));
        }
        Ok(BanditState {
            q: [q0; 6],
            n: [0; 6],
            t: 0,
            horizon,
            q0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn q(&self) -> [f64; 6] {
        self.q
    }

    pub fn counts(&self) -> [u64; 6] {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    fn check_live(&self) -> Result<(), BanditError> {
        if self.t >= self.horizon {
            return Err(BanditError::Exhausted {
                t: self.t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// Exploration probability, decaying linearly from 1 at `t = 0` to 0 at
    /// `t = horizon - 1`.
    pub fn epsilon(&self) -> Result<f64, BanditError> {
        self.check_live()?;
        if self.horizon == 1 {
            return Ok(1.0);
        }
        Ok(1.0 - self.t as f64 / (self.horizon - 1) as f64)
    }

    pub fn greedy(&self) -> ReasoningType {
        let mut best = 0;
        for i in 1..6 {
            if self.q[i] > self.q[best] {
                best = i;
            }
        }
        ReasoningType::ALL[best]
    }

    /// Advances only the random stream; `q`, `n` and `t` are untouched.
    pub fn select(&mut self) -> Result<ReasoningType, BanditError> {
        let eps = self.epsilon()?;
        let u: f64 = self.rng.gen();
        if u < eps {
            Ok(ReasoningType::ALL[self.rng.gen_range(0..6)])
        } else {
            Ok(self.greedy())
        }
    }

    /// Harmonic-step value update: `q` becomes the running mean of the arm's
    /// rewards.
    pub fn update(&mut self, arm: ReasoningType, reward: f64) -> Result<(), BanditError> {
        if !reward.is_finite() {
            return Err(BanditError::NonFiniteReward(reward));
        }
        self.check_live()?;
        let i = arm.ordinal();
        self.n[i] += 1;
        let alpha = 1.0 / self.n[i] as f64;
        // Convex form of q += alpha * (reward - q): exact when alpha = 1.
        self.q[i] = (1.0 - alpha) * self.q[i] + alpha * reward;
        self.t += 1;
        Ok(())
    }
}
