//! Item-item similarity: exact Jaccard, MinHash signatures, and estimators
//! over co-occurrence counts collected by the random-walk protocol.

use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::{fmt, rng, ItemId};

/// `|a ∩ b| / |a ∪ b|` over sorted, duplicate-free slices; 0 when both are empty.
pub fn exact_jaccard(a: &[u32], b: &[u32]) -> f64 {
    let inter = intersection_size(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Sparse symmetric item-item similarity. Absent pairs are 0, the diagonal is 1.
///
/// Each pair is kept in both endpoints' neighbor lists so that scoring a user
/// only walks the neighborhoods of the items they like.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    neighbors: Vec<Vec<(ItemId, f64)>>,
}

impl SimilarityMatrix {
    pub fn empty(n_items: usize) -> Self {
        SimilarityMatrix {
            neighbors: vec![Vec::new(); n_items],
        }
    }

    /// Builds from upper-triangular rows: `rows[i]` holds `(j, value)` with
    /// `j > i`, ascending in `j`. Zero values are dropped.
    pub fn from_upper_rows(rows: Vec<Vec<(ItemId, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut neighbors: Vec<Vec<(ItemId, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.into_iter().enumerate() {
            let mut prev: Option<ItemId> = None;
            for (j, v) in row {
                if (j as usize) <= i || j as usize >= n || prev.is_some_and(|p| p >= j) {
                    return Err(Error::Contract(format!("bad upper-triangular entry ({i}, {j})")));
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Contract(format!("similarity {v} of ({i}, {j}) outside [0, 1]")));
                }
                prev = Some(j);
                if v == 0.0 {
                    continue;
                }
                neighbors[i].push((j, v));
                neighbors[j as usize].push((i as ItemId, v));
            }
        }
        Ok(SimilarityMatrix { neighbors })
    }

    pub fn n_items(&self) -> usize {
        self.neighbors.len()
    }

    /// Number of stored pairs `i < j`.
    pub fn nnz(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn get(&self, i: ItemId, j: ItemId) -> f64 {
        if i == j {
            return 1.0;
        }
        let row = &self.neighbors[i as usize];
        match row.binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Non-zero neighbors of `i`, ascending by id.
    pub fn neighbors(&self, i: ItemId) -> &[(ItemId, f64)] {
        &self.neighbors[i as usize]
    }

    /// Stored pairs `(i, j, value)` with `i < j`, in `(i, j)` order.
    pub fn iter_upper(&self) -> impl Iterator<Item = (ItemId, ItemId, f64)> + '_ {
        self.neighbors.iter().enumerate().flat_map(|(i, row)| {
            let i = i as ItemId;
            row.iter().filter(move |&&(j, _)| j > i).map(move |&(j, v)| (i, j, v))
        })
    }

    /// Applies `f` to every stored value; the result must stay in `[0, 1]`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let rows = self
            .neighbors
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .filter(|&&(j, _)| j as usize > i)
                    .map(|&(j, v)| (j, f(v)))
                    .collect()
            })
            .collect();
        Self::from_upper_rows(rows)
    }

    /// Writes `item_i,item_j,similarity` with a header, `i < j`, sorted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "item_i,item_j,similarity")?;
        for (i, j, v) in self.iter_upper() {
            writeln!(w, "{i},{j},{}", fmt::sig10(v))?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(reader: R, n_items: usize) -> Result<Self> {
        let mut rows: Vec<Vec<(ItemId, f64)>> = vec![Vec::new(); n_items];
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io("<similarity csv>", e))?;
            if lineno == 1 && line.starts_with("item_i") {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |m: &str| Error::Parse {
                line: lineno,
                message: m.to_string(),
            };
            let mut f = line.split(',');
            let i: usize = f.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad item_i"))?;
            let j: ItemId = f.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad item_j"))?;
            let v: f64 = f.next().and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("bad similarity"))?;
            if i >= n_items {
                return Err(bad("item_i out of range"));
            }
            rows[i].push((j, v));
        }
        for row in rows.iter_mut() {
            row.sort_by_key(|&(j, _)| j);
        }
        Self::from_upper_rows(rows)
    }
}

/// Pair co-occurrence and item occurrence counts over a collection of item
/// sets (user like lists, or sets delivered in protocol rounds).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoocCounts {
    /// Number of sets counted (completed rounds).
    pub k_rounds: u64,
    /// Per item: number of sets containing it.
    pub item_counts: Vec<u64>,
    /// Upper-triangular rows: `rows[i]` holds `(j, n_ij)` with `j > i`, `n_ij > 0`.
    rows: Vec<Vec<(ItemId, u64)>>,
}

impl CoocCounts {
    pub fn new(n_items: usize) -> Self {
        CoocCounts {
            k_rounds: 0,
            item_counts: vec![0; n_items],
            rows: vec![Vec::new(); n_items],
        }
    }

    /// Counts every unordered pair inside each set. Sets must be sorted and
    /// duplicate-free with ids below `n_items`.
    ///
    /// Work is `O(Σ |s|²)`, partitioned by item; each row is produced from
    /// immutable input so the result does not depend on the thread count.
    pub fn from_sets<S: AsRef<[ItemId]> + Sync>(n_items: usize, sets: &[S]) -> Self {
        let mut postings: Vec<Vec<u32>> = vec![Vec::new(); n_items];
        for (s, set) in sets.iter().enumerate() {
            for &i in set.as_ref() {
                postings[i as usize].push(s as u32);
            }
        }
        let rows: Vec<Vec<(ItemId, u64)>> = postings
            .par_iter()
            .enumerate()
            .map_init(
                || (vec![0u64; n_items], Vec::<ItemId>::new()),
                |(scratch, touched), (i, post)| {
                    let i = i as ItemId;
                    for &s in post {
                        let set = sets[s as usize].as_ref();
                        let start = set.partition_point(|&j| j <= i);
                        for &j in &set[start..] {
                            if scratch[j as usize] == 0 {
                                touched.push(j);
                            }
                            scratch[j as usize] += 1;
                        }
                    }
                    touched.sort_unstable();
                    let row = touched
                        .iter()
                        .map(|&j| (j, std::mem::take(&mut scratch[j as usize])))
                        .collect();
                    touched.clear();
                    row
                },
            )
            .collect();
        CoocCounts {
            k_rounds: sets.len() as u64,
            item_counts: postings.iter().map(|p| p.len() as u64).collect(),
            rows,
        }
    }

    pub fn n_items(&self) -> usize {
        self.item_counts.len()
    }

    pub fn pair_count(&self, i: ItemId, j: ItemId) -> u64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if a == b {
            return self.item_counts[a as usize];
        }
        let row = &self.rows[a as usize];
        row.binary_search_by_key(&b, |&(k, _)| k).map_or(0, |p| row[p].1)
    }

    /// `(i, j, n_ij)` with `i < j` and `n_ij > 0`, in `(i, j)` order.
    pub fn iter_pairs(&self) -> impl Iterator<Item = (ItemId, ItemId, u64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, n)| (i as ItemId, j, n)))
    }

    /// Adds counts from a disjoint set of rounds. Associative and commutative.
    pub fn merge(&mut self, other: &CoocCounts) -> Result<()> {
        if other.n_items() != self.n_items() {
            return Err(Error::MismatchedUniverse(self.n_items(), other.n_items()));
        }
        self.k_rounds += other.k_rounds;
        for (a, b) in self.item_counts.iter_mut().zip(&other.item_counts) {
            *a += b;
        }
        for (mine, theirs) in self.rows.iter_mut().zip(&other.rows) {
            if theirs.is_empty() {
                continue;
            }
            let mut merged = Vec::with_capacity(mine.len() + theirs.len());
            let (mut x, mut y) = (mine.iter().peekable(), theirs.iter().peekable());
            loop {
                match (x.peek(), y.peek()) {
                    (Some(&&(a, na)), Some(&&(b, nb))) => {
                        if a == b {
                            merged.push((a, na + nb));
                            x.next();
                            y.next();
                        } else if a < b {
                            merged.push((a, na));
                            x.next();
                        } else {
                            merged.push((b, nb));
                            y.next();
                        }
                    }
                    (Some(&&e), None) => {
                        merged.push(e);
                        x.next();
                    }
                    (None, Some(&&e)) => {
                        merged.push(e);
                        y.next();
                    }
                    (None, None) => break,
                }
            }
            *mine = merged;
        }
        Ok(())
    }

    /// Checks `0 ≤ n_ij ≤ min(c_i, c_j) ≤ k_rounds`.
    pub fn is_consistent(&self) -> bool {
        self.item_counts.iter().all(|&c| c <= self.k_rounds)
            && self.iter_pairs().all(|(i, j, n)| {
                n <= self.item_counts[i as usize].min(self.item_counts[j as usize])
            })
    }

    /// Writes `item_i,item_j,count`.
    pub fn write_pairs_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "item_i,item_j,count")?;
        for (i, j, n) in self.iter_pairs() {
            writeln!(w, "{i},{j},{n}")?;
        }
        Ok(())
    }

    /// Writes `item,count`.
    pub fn write_items_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "item,count")?;
        for (i, n) in self.item_counts.iter().enumerate() {
            writeln!(w, "{i},{n}")?;
        }
        Ok(())
    }
}

/// Jaccard similarity of every item pair with a non-empty intersection.
pub fn exact_similarity_matrix(ds: &InteractionDataset) -> SimilarityMatrix {
    let counts = CoocCounts::from_sets(ds.n_items(), ds.all_likes());
    let rows = jaccard_rows(&counts);
    SimilarityMatrix::from_upper_rows(rows).expect("jaccard values lie in [0, 1]")
}

/// `n_ij / (c_i + c_j − n_ij)` for every counted pair.
fn jaccard_rows(counts: &CoocCounts) -> Vec<Vec<(ItemId, f64)>> {
    counts
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let ci = counts.item_counts[i];
            row.iter()
                .filter_map(|&(j, n)| {
                    let union = ci + counts.item_counts[j as usize] - n;
                    (union > 0).then(|| (j, n as f64 / union as f64))
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// `n_ij / k`: the co-like frequency `|U_i ∩ U_j| / n`.
    PaperLiteral,
    /// `n_ij / (c_i + c_j − n_ij)`: rounds touching the union of the two items.
    UnionNormalized,
}

impl EstimatorMode {
    pub const ALL: [EstimatorMode; 2] = [EstimatorMode::PaperLiteral, EstimatorMode::UnionNormalized];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorMode::PaperLiteral => "paper-literal",
            EstimatorMode::UnionNormalized => "union-normalized",
        }
    }
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown estimator mode '{s}'")))
    }
}

impl std::fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn estimate_matrix_from_rounds(counts: &CoocCounts, mode: EstimatorMode) -> Result<SimilarityMatrix> {
    if counts.k_rounds == 0 {
        return Err(Error::Domain("estimation needs at least one round".into()));
    }
    let rows = match mode {
        EstimatorMode::PaperLiteral => {
            let k = counts.k_rounds as f64;
            counts
                .rows
                .iter()
                .map(|row| row.iter().map(|&(j, n)| (j, n as f64 / k)).collect())
                .collect()
        }
        EstimatorMode::UnionNormalized => jaccard_rows(counts),
    };
    SimilarityMatrix::from_upper_rows(rows)
}

/// A family of `k` seeded 64-bit hash functions over user ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    master_seed: u64,
    seeds: Vec<u64>,
}

impl HashFamily {
    pub fn new(k: usize, master_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Domain("hash family needs k >= 1".into()));
        }
        Ok(HashFamily {
            master_seed,
            seeds: (0..k as u64).map(|l| rng::derive_seed(master_seed, l)).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.seeds.len()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    #[inline]
    pub fn hash(&self, l: usize, user: u32) -> u64 {
        rng::mix64(self.seeds[l] ^ rng::mix64(u64::from(user).wrapping_add(0x632b_e59b_d9b4_e019)))
    }
}

/// Per-item MinHash signatures, stored flat. Items nobody likes have none.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemSignatures {
    k: usize,
    values: Vec<u64>,
    present: Vec<bool>,
}

impl ItemSignatures {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_items(&self) -> usize {
        self.present.len()
    }

    /// Signature of `item`, `None` when its user set is empty.
    pub fn get(&self, item: ItemId) -> Option<&[u64]> {
        let i = item as usize;
        self.present[i].then(|| &self.values[i * self.k..(i + 1) * self.k])
    }

    pub fn estimate(&self, i: ItemId, j: ItemId) -> Result<f64> {
        estimate_from_signatures(self.get(i).unwrap_or(&[]), self.get(j).unwrap_or(&[]))
    }
}

/// `signature[i][l] = min_{u ∈ U_i} h_l(u)`.
pub fn minhash_signatures(ds: &InteractionDataset, family: &HashFamily) -> ItemSignatures {
    let k = family.k();
    let per_item: Vec<Option<Vec<u64>>> = ds
        .item_index()
        .par_iter()
        .map(|users| {
            if users.is_empty() {
                return None;
            }
            Some(
                (0..k)
                    .map(|l| users.iter().map(|&u| family.hash(l, u)).min().expect("non-empty"))
                    .collect(),
            )
        })
        .collect();
    let mut values = vec![0u64; k * per_item.len()];
    let mut present = vec![false; per_item.len()];
    for (i, sig) in per_item.into_iter().enumerate() {
        if let Some(sig) = sig {
            values[i * k..(i + 1) * k].copy_from_slice(&sig);
            present[i] = true;
        }
    }
    ItemSignatures { k, values, present }
}

/// Fraction of positions where the two signatures agree.
pub fn estimate_from_signatures(a: &[u64], b: &[u64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Estimation("empty item signature".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Contract(format!("signature lengths {} and {}", a.len(), b.len())));
    }
    let equal = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(equal as f64 / a.len() as f64)
}

/// Estimated similarity for every pair of non-empty items with at least one
/// agreeing position.
pub fn signature_similarity_matrix(sigs: &ItemSignatures) -> SimilarityMatrix {
    let m = sigs.n_items();
    let rows = (0..m as ItemId)
        .into_par_iter()
        .map(|i| {
            let Some(a) = sigs.get(i) else { return Vec::new() };
            ((i + 1)..m as ItemId)
                .filter_map(|j| {
                    let b = sigs.get(j)?;
                    let v = estimate_from_signatures(a, b).expect("non-empty, equal length");
                    (v > 0.0).then_some((j, v))
                })
                .collect()
        })
        .collect();
    SimilarityMatrix::from_upper_rows(rows).expect("estimates lie in [0, 1]")
}

/// Number of hash functions for `Pr[|Ĵ − J| ≤ α] ≥ 1 − δ`:
/// `ceil((2/α²) ln(2/δ))`.
pub fn chernoff_k(alpha: f64, delta: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Domain(format!("alpha {alpha} not in (0, 1/2)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta {delta} not in (0, 1)")));
    }
    Ok(((2.0 / (alpha * alpha)) * (2.0 / delta).ln()).ceil() as u64)
}

/// Failure probability implied by `k` functions at error `alpha`:
/// `δ = 2 exp(−k α² / 2)`, the inverse of [`chernoff_k`].
pub fn chernoff_delta(k: u64, alpha: f64) -> f64 {
    2.0 * (-(k as f64) * alpha * alpha / 2.0).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{binarize, RawRecord};

    fn ds(pairs: &[(&str, &str)]) -> InteractionDataset {
        binarize(&pairs.iter().map(|&(u, i)| RawRecord::new(u, i, 1.0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn jaccard_basics() {
        assert_eq!(exact_jaccard(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(exact_jaccard(&[5, 9], &[5, 9]), 1.0);
        assert_eq!(exact_jaccard(&[], &[1]), 0.0);
        assert_eq!(exact_jaccard(&[], &[]), 0.0);
    }

    #[test]
    fn two_user_matrix() {
        let d = ds(&[("u1", "a"), ("u1", "b"), ("u2", "a")]);
        let m = exact_similarity_matrix(&d);
        assert_eq!(m.get(0, 1), 0.5);
        assert_eq!(m.get(1, 0), 0.5);
        assert_eq!(m.get(1, 1), 1.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn zero_intersection_pairs_are_omitted() {
        let d = ds(&[("u1", "a"), ("u2", "b")]);
        let m = exact_similarity_matrix(&d);
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn matrix_rejects_out_of_range() {
        assert!(SimilarityMatrix::from_upper_rows(vec![vec![(1, 1.5)], vec![]]).is_err());
        assert!(SimilarityMatrix::from_upper_rows(vec![vec![(0, 0.5)]]).is_err());
        assert!(SimilarityMatrix::from_upper_rows(vec![vec![(1, f64::NAN)], vec![]]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = SimilarityMatrix::from_upper_rows(vec![vec![(1, 1.0 / 3.0), (2, 0.25)], vec![(2, 0.5)], vec![]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "item_i,item_j,similarity\n0,1,0.3333333333\n0,2,0.25\n1,2,0.5\n");
        let back = SimilarityMatrix::read_csv(buf.as_slice(), 3).unwrap();
        assert!((back.get(0, 1) - 1.0 / 3.0).abs() < 1e-10);
        assert_eq!(back.get(2, 1), 0.5);
    }

    #[test]
    fn single_round_estimates() {
        let c = CoocCounts::from_sets(2, &[vec![0u32, 1]]);
        for mode in EstimatorMode::ALL {
            assert_eq!(estimate_matrix_from_rounds(&c, mode).unwrap().get(0, 1), 1.0);
        }
    }

    #[test]
    fn two_round_estimates() {
        let c = CoocCounts::from_sets(2, &[vec![0u32, 1], vec![0]]);
        assert_eq!(c.item_counts, vec![2, 1]);
        assert_eq!(c.pair_count(0, 1), 1);
        let pl = estimate_matrix_from_rounds(&c, EstimatorMode::PaperLiteral).unwrap();
        let un = estimate_matrix_from_rounds(&c, EstimatorMode::UnionNormalized).unwrap();
        assert_eq!(pl.get(0, 1), 0.5);
        assert_eq!(un.get(0, 1), 0.5);
    }

    #[test]
    fn estimation_needs_rounds() {
        let c = CoocCounts::new(3);
        assert!(estimate_matrix_from_rounds(&c, EstimatorMode::PaperLiteral).is_err());
    }

    #[test]
    fn merge_equals_counting_all() {
        let sets: Vec<Vec<u32>> = vec![vec![0, 1, 2], vec![1, 2], vec![0, 3], vec![2, 3], vec![0, 1, 2, 3]];
        let all = CoocCounts::from_sets(4, &sets);
        let mut a = CoocCounts::from_sets(4, &sets[..2]);
        let b = CoocCounts::from_sets(4, &sets[2..]);
        let mut b2 = b.clone();
        a.merge(&b).unwrap();
        b2.merge(&CoocCounts::from_sets(4, &sets[..2])).unwrap();
        assert_eq!(a, all);
        assert_eq!(b2, all);
        assert!(all.is_consistent());
        assert!(a.merge(&CoocCounts::new(5)).is_err());
    }

    #[test]
    fn chernoff_sizes() {
        assert_eq!(chernoff_k(0.05, 0.05).unwrap(), 2952);
        assert_eq!(chernoff_k(0.1, 0.1).unwrap(), 600);
        assert!(chernoff_k(0.5, 0.1).is_err());
        assert!(chernoff_k(0.0, 0.1).is_err());
        assert!(chernoff_k(0.1, 1.0).is_err());
        assert!(chernoff_k(0.1, 0.0).is_err());
        assert!((chernoff_delta(2952, 0.05) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn signature_estimates() {
        assert_eq!(estimate_from_signatures(&[1, 2, 3, 4], &[1, 9, 9, 9]).unwrap(), 0.25);
        assert_eq!(estimate_from_signatures(&[7, 7], &[7, 7]).unwrap(), 1.0);
        assert!(matches!(estimate_from_signatures(&[], &[1]), Err(Error::Estimation(_))));
        assert!(matches!(estimate_from_signatures(&[1], &[1, 2]), Err(Error::Contract(_))));
    }

    #[test]
    fn identical_single_user_items() {
        let d = ds(&[("7", "a"), ("7", "b")]);
        let fam = HashFamily::new(16, 3).unwrap();
        let sigs = minhash_signatures(&d, &fam);
        assert_eq!(sigs.estimate(0, 1).unwrap(), 1.0);
        assert!(HashFamily::new(0, 1).is_err());
    }

    #[test]
    fn empty_item_has_no_signature() {
        let d = crate::dataset::InteractionDataset::from_likes(
            vec![vec![0]],
            crate::dataset::IdMap::identity(1),
            crate::dataset::IdMap::identity(2),
        )
        .unwrap();
        let sigs = minhash_signatures(&d, &HashFamily::new(4, 1).unwrap());
        assert!(sigs.get(1).is_none());
        assert!(matches!(sigs.estimate(0, 1), Err(Error::Estimation(_))));
    }
}
