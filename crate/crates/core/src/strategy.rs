//! Similarity builders behind one trait, selected by name at runtime.
//!
//! | name               | method  | stage                                        |
//! |--------------------|---------|----------------------------------------------|
//! | `exact`            | IBTN    | exact Jaccard over the train set             |
//! | `minhash`          | MinHash | `k` seeded hash functions, signature matches |
//! | `paper-literal`    | PP-IBTN | walk protocol, `n_ij / k`                    |
//! | `union-normalized` | PP-IBTN | walk protocol, `n_ij / (c_i + c_j − n_ij)`   |

use serde::Serialize;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::similarity::{
    estimate_matrix_from_rounds, exact_similarity_matrix, minhash_signatures, signature_similarity_matrix,
    EstimatorMode, HashFamily, SimilarityMatrix,
};
use crate::walksim::{run_protocol, Population, RoundLog, TimeoutPolicy, WalkConfig, DEFAULT_MAX_HOPS, DEFAULT_RHO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    #[serde(rename = "IBTN")]
    Ibtn,
    #[serde(rename = "PP-IBTN")]
    PpIbtn,
    #[serde(rename = "MinHash")]
    MinHash,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ibtn => "IBTN",
            Method::PpIbtn => "PP-IBTN",
            Method::MinHash => "MinHash",
        }
    }
}

/// Inputs a strategy may draw on besides the train set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BuildContext {
    /// Rounds for walk strategies, hash functions for MinHash.
    pub k: u64,
    pub seed: u64,
    pub default_rho: f64,
    /// Per-user acceptance probabilities; overrides `default_rho` when set.
    pub rho: Option<Vec<f64>>,
    pub max_hops: u64,
    pub exclude_self: bool,
    pub on_timeout: TimeoutPolicy,
}

impl BuildContext {
    pub fn new(k: u64, seed: u64) -> Self {
        BuildContext {
            k,
            seed,
            default_rho: DEFAULT_RHO,
            rho: None,
            max_hops: DEFAULT_MAX_HOPS,
            exclude_self: false,
            on_timeout: TimeoutPolicy::Skip,
        }
    }

    pub fn walk_config(&self) -> WalkConfig {
        WalkConfig {
            k_rounds: self.k,
            seed: self.seed,
            max_hops: self.max_hops,
            default_rho: self.default_rho,
            exclude_self: self.exclude_self,
            on_timeout: self.on_timeout,
        }
    }

    pub fn population(&self, train: &InteractionDataset) -> Result<Population> {
        match &self.rho {
            Some(rho) => Population::with_rho(train, rho.clone()),
            None => Population::uniform(train, self.default_rho),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Built {
    pub matrix: SimilarityMatrix,
    /// Present for walk strategies.
    pub round_log: Option<RoundLog>,
}

pub trait SimilarityStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    fn method(&self) -> Method;

    /// Whether `BuildContext::k` affects the result.
    fn uses_k(&self) -> bool {
        true
    }

    fn build(&self, train: &InteractionDataset, ctx: &BuildContext) -> Result<Built>;
}

pub struct ExactJaccard;

impl SimilarityStrategy for ExactJaccard {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn method(&self) -> Method {
        Method::Ibtn
    }

    fn uses_k(&self) -> bool {
        false
    }

    fn build(&self, train: &InteractionDataset, _ctx: &BuildContext) -> Result<Built> {
        Ok(Built {
            matrix: exact_similarity_matrix(train),
            round_log: None,
        })
    }
}

pub struct MinHashStrategy;

impl SimilarityStrategy for MinHashStrategy {
    fn name(&self) -> &'static str {
        "minhash"
    }

    fn method(&self) -> Method {
        Method::MinHash
    }

    fn build(&self, train: &InteractionDataset, ctx: &BuildContext) -> Result<Built> {
        let family = HashFamily::new(ctx.k as usize, ctx.seed)?;
        let sigs = minhash_signatures(train, &family);
        Ok(Built {
            matrix: signature_similarity_matrix(&sigs),
            round_log: None,
        })
    }
}

pub struct WalkStrategy {
    pub mode: EstimatorMode,
}

impl SimilarityStrategy for WalkStrategy {
    fn name(&self) -> &'static str {
        self.mode.name()
    }

    fn method(&self) -> Method {
        Method::PpIbtn
    }

    fn build(&self, train: &InteractionDataset, ctx: &BuildContext) -> Result<Built> {
        let pop = ctx.population(train)?;
        let (log, counts) = run_protocol(&pop, &ctx.walk_config())?;
        Ok(Built {
            matrix: estimate_matrix_from_rounds(&counts, self.mode)?,
            round_log: Some(log),
        })
    }
}

pub struct StrategyRegistry {
    entries: Vec<Box<dyn SimilarityStrategy>>,
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut reg = StrategyRegistry { entries: Vec::new() };
        reg.register(Box::new(ExactJaccard));
        reg.register(Box::new(MinHashStrategy));
        for mode in EstimatorMode::ALL {
            reg.register(Box::new(WalkStrategy { mode }));
        }
        reg
    }
}

impl StrategyRegistry {
    /// Adds a strategy, replacing any registered under the same name.
    pub fn register(&mut self, strategy: Box<dyn SimilarityStrategy>) {
        self.entries.retain(|s| s.name() != strategy.name());
        self.entries.push(strategy);
    }

    pub fn get(&self, name: &str) -> Result<&dyn SimilarityStrategy> {
        self.entries
            .iter()
            .find(|s| s.name() == name)
            .map(|s| s.as_ref())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }
}
