//! Client-side scoring and top-N ranking.
//!
//! Everything here takes one user's own likes plus the published similarity
//! matrix; no other user's data is involved.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt;
use crate::similarity::SimilarityMatrix;
use crate::{ItemId, UserId};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationList {
    pub user: UserId,
    pub n: usize,
    /// `(item, score)`, scores non-increasing, ties by ascending item id.
    pub items: Vec<(ItemId, f64)>,
}

impl RecommendationList {
    pub fn item_ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|&(i, _)| i).collect()
    }
}

/// Binary-rating score: `Σ_{j ∈ I_u} sim(candidate, j)`, summed in ascending `j`.
pub fn predict_binary(user_likes: &[ItemId], sims: &SimilarityMatrix, candidate: ItemId) -> Result<f64> {
    if user_likes.contains(&candidate) {
        return Err(Error::Contract(format!("item {candidate} is already liked")));
    }
    let mut sorted = user_likes.to_vec();
    sorted.sort_unstable();
    Ok(sorted.iter().fold(0.0, |acc, &j| acc + sims.get(candidate, j)))
}

/// Similarity-weighted average rating over the user's rated items.
pub fn predict_weighted(ratings: &BTreeMap<ItemId, f64>, sims: &SimilarityMatrix, candidate: ItemId) -> Result<f64> {
    if ratings.contains_key(&candidate) {
        return Err(Error::Contract(format!("item {candidate} is already rated")));
    }
    let (num, den) = ratings.iter().fold((0.0, 0.0), |(num, den), (&j, &r)| {
        let s = sims.get(candidate, j);
        (num + r * s, den + s)
    });
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::UndefinedPrediction(candidate))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TopNOptions {
    pub n: usize,
    /// Fill the list with zero-score candidates (by id) when fewer than `n`
    /// candidates score above zero.
    pub pad_with_zero: bool,
    /// Drop the user's own likes from the candidates. Turning this off is
    /// only meant for evaluating against all rated items.
    pub exclude_liked: bool,
}

impl TopNOptions {
    pub fn new(n: usize) -> Self {
        TopNOptions {
            n,
            pad_with_zero: true,
            exclude_liked: true,
        }
    }
}

/// Scores every candidate not in `user_likes` and keeps the `n` best.
///
/// `candidates` defaults to every item. Scores are accumulated through the
/// neighbor lists of the liked items in ascending order, which gives exactly
/// the value of [`predict_binary`].
pub fn top_n(
    user: UserId,
    user_likes: &[ItemId],
    sims: &SimilarityMatrix,
    opts: TopNOptions,
    candidates: Option<&[ItemId]>,
) -> Result<RecommendationList> {
    if opts.n == 0 {
        return Err(Error::Domain("N must be >= 1".into()));
    }
    let m = sims.n_items();
    let mut liked = vec![false; m];
    let mut sorted = user_likes.to_vec();
    sorted.sort_unstable();
    if opts.exclude_liked {
        for &j in &sorted {
            liked[j as usize] = true;
        }
    }
    let mut scores = vec![0.0f64; m];
    for &j in &sorted {
        for &(c, s) in sims.neighbors(j) {
            scores[c as usize] += s;
        }
    }

    let mut ranked: Vec<(ItemId, f64)> = match candidates {
        Some(cands) => {
            let mut seen = vec![false; m];
            cands
                .iter()
                .filter(|&&c| !liked[c as usize] && !std::mem::replace(&mut seen[c as usize], true))
                .map(|&c| (c, scores[c as usize]))
                .collect()
        }
        None => (0..m as ItemId)
            .filter(|&c| !liked[c as usize])
            .map(|c| (c, scores[c as usize]))
            .collect(),
    };
    if !opts.pad_with_zero {
        ranked.retain(|&(_, s)| s > 0.0);
    }
    let by_rank = |a: &(ItemId, f64), b: &(ItemId, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if ranked.len() > opts.n {
        ranked.select_nth_unstable_by(opts.n - 1, by_rank);
        ranked.truncate(opts.n);
    }
    ranked.sort_by(by_rank);
    Ok(RecommendationList {
        user,
        n: opts.n,
        items: ranked,
    })
}

/// Writes `user,rank,item,score` rows (rank is 1-based).
pub fn write_recommendations_csv<W: Write>(lists: &[RecommendationList], mut w: W) -> std::io::Result<()> {
    writeln!(w, "user,rank,item,score")?;
    for list in lists {
        for (rank, &(item, score)) in list.items.iter().enumerate() {
            writeln!(w, "{},{},{},{}", list.user, rank + 1, item, fmt::sig10(score))?;
        }
    }
    Ok(())
}
