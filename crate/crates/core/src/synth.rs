//! Seeded synthetic like data with genre structure and long-tail item
//! popularity, shaped like a binarized movie-rating subsample.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::dataset::{binarize, InteractionDataset, RawRecord};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub n_genres: usize,
    /// Mean likes per user.
    pub mean_likes: f64,
    pub min_likes: usize,
    /// Popularity of the item at popularity rank `r` is `(r + 1)^-exponent`.
    pub popularity_exponent: f64,
    /// Probability that a like is drawn from one of the user's favorite genres.
    pub in_genre_prob: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    /// 2,000 users over the 1,000 most popular items: at least 20 and on
    /// average 144 likes per user, Zipf(1) popularity, 18 genres.
    pub fn movielens_like(seed: u64) -> Self {
        SyntheticConfig {
            n_users: 2_000,
            n_items: 1_000,
            n_genres: 18,
            mean_likes: 144.0,
            min_likes: 20,
            popularity_exponent: 1.0,
            in_genre_prob: 0.8,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 || self.n_genres == 0 || self.n_genres > self.n_items {
            return Err(Error::Domain("synthetic sizes must be positive with genres <= items".into()));
        }
        if !(0.0..=1.0).contains(&self.in_genre_prob) {
            return Err(Error::Domain("in_genre_prob must lie in [0, 1]".into()));
        }
        if self.min_likes == 0 || self.min_likes > self.n_items || self.mean_likes < self.min_likes as f64 {
            return Err(Error::Domain("need 1 <= min_likes <= mean_likes, min_likes <= items".into()));
        }
        Ok(())
    }
}

/// Raw records `("u<id>", "i<id>", 1)`, user by user.
pub fn generate(cfg: &SyntheticConfig) -> Result<Vec<RawRecord>> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, 0x5e_ed);

    let mut by_rank: Vec<usize> = (0..cfg.n_items).collect();
    by_rank.shuffle(&mut rng);
    let mut weight = vec![0.0; cfg.n_items];
    for (rank, &item) in by_rank.iter().enumerate() {
        weight[item] = ((rank + 1) as f64).powf(-cfg.popularity_exponent);
    }
    // Round-robin over a shuffled order keeps every genre non-empty.
    let mut genre_items: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_genres];
    let mut order: Vec<usize> = (0..cfg.n_items).collect();
    order.shuffle(&mut rng);
    for (pos, &item) in order.iter().enumerate() {
        genre_items[pos % cfg.n_genres].push(item);
    }
    let global = WeightedIndex::new(&weight).expect("positive weights");
    let per_genre: Vec<WeightedIndex<f64>> = genre_items
        .iter()
        .map(|items| WeightedIndex::new(items.iter().map(|&i| weight[i])).expect("non-empty genre"))
        .collect();

    let cap = (cfg.n_items / 2).max(cfg.min_likes);
    let mut records = Vec::new();
    let mut liked = vec![false; cfg.n_items];
    for u in 0..cfg.n_users {
        let favorites: Vec<usize> = if cfg.n_genres > 1 && rng.gen_bool(0.5) {
            rand::seq::index::sample(&mut rng, cfg.n_genres, 2).into_vec()
        } else {
            vec![rng.gen_range(0..cfg.n_genres)]
        };
        let extra = -(1.0 - rng.gen::<f64>()).ln() * (cfg.mean_likes - cfg.min_likes as f64);
        let target = (cfg.min_likes + extra.round() as usize).min(cap);
        let mut mine = Vec::with_capacity(target);
        let mut attempts = 0;
        while mine.len() < target && attempts < 50 * target {
            attempts += 1;
            let item = if rng.gen_bool(cfg.in_genre_prob) {
                let g = favorites[rng.gen_range(0..favorites.len())];
                genre_items[g][per_genre[g].sample(&mut rng)]
            } else {
                global.sample(&mut rng)
            };
            if !liked[item] {
                liked[item] = true;
                mine.push(item);
            }
        }
        for &item in &mine {
            liked[item] = false;
            records.push(RawRecord::new(format!("u{u}"), format!("i{item}"), 1.0));
        }
    }
    Ok(records)
}

pub fn generate_dataset(cfg: &SyntheticConfig) -> Result<InteractionDataset> {
    binarize(&generate(cfg)?)
}
