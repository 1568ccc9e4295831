//! Interaction data: raw loaders, binarization, indices and splits.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::{rng, ItemId, UserId};

/// Sentinel Jester uses for "not rated".
const JESTER_UNRATED: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RawFormat {
    /// `user<TAB>item[<TAB>rating]`, no header.
    PairsTsv,
    /// `userId,movieId,rating,timestamp` with header.
    MovielensCsv,
    /// `userID<TAB>artistID<TAB>weight` with header.
    LastfmDat,
    /// One row per user: count of rated jokes, then 100 ratings, 99 = unrated.
    JesterCsv,
}

impl RawFormat {
    pub const ALL: [RawFormat; 4] = [
        RawFormat::PairsTsv,
        RawFormat::MovielensCsv,
        RawFormat::LastfmDat,
        RawFormat::JesterCsv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RawFormat::PairsTsv => "pairs-tsv",
            RawFormat::MovielensCsv => "movielens-csv",
            RawFormat::LastfmDat => "lastfm-dat",
            RawFormat::JesterCsv => "jester-csv",
        }
    }
}

impl FromStr for RawFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RawFormat::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown format '{s}'")))
    }
}

impl std::fmt::Display for RawFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One raw rating record, before binarization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

impl RawRecord {
    pub fn new(user: impl Into<String>, item: impl Into<String>, rating: f64) -> Self {
        RawRecord {
            user: user.into(),
            item: item.into(),
            rating,
        }
    }
}

pub fn load_raw(path: impl AsRef<Path>, format: RawFormat) -> Result<Vec<RawRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw(BufReader::new(file), format).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses raw records from any reader. Line numbers in errors are 1-based.
pub fn parse_raw<R: BufRead>(reader: R, format: RawFormat) -> Result<Vec<RawRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io("<input>", e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match format {
            RawFormat::PairsTsv => out.push(parse_pairs_line(line, lineno)?),
            RawFormat::MovielensCsv => {
                if lineno == 1 {
                    expect_header(line, lineno, "userId")?;
                    continue;
                }
                out.push(parse_movielens_line(line, lineno)?);
            }
            RawFormat::LastfmDat => {
                if lineno == 1 {
                    expect_header(line, lineno, "userID")?;
                    continue;
                }
                out.push(parse_lastfm_line(line, lineno)?);
            }
            RawFormat::JesterCsv => parse_jester_line(line, lineno, &mut out)?,
        }
    }
    Ok(out)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn expect_header(line: &str, lineno: usize, first: &str) -> Result<()> {
    if line.trim_start_matches('\u{feff}').starts_with(first) {
        Ok(())
    } else {
        Err(parse_err(lineno, format!("expected header starting with '{first}'")))
    }
}

fn non_empty<'a>(field: Option<&'a str>, what: &str, lineno: usize) -> Result<&'a str> {
    match field.map(str::trim) {
        Some(f) if !f.is_empty() => Ok(f),
        _ => Err(parse_err(lineno, format!("missing {what}"))),
    }
}

fn parse_rating(field: &str, lineno: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|r| r.is_finite())
        .ok_or_else(|| parse_err(lineno, format!("bad rating '{field}'")))
}

fn parse_pairs_line(line: &str, lineno: usize) -> Result<RawRecord> {
    let mut fields = line.split('\t');
    let user = non_empty(fields.next(), "user", lineno)?;
    let item = non_empty(fields.next(), "item", lineno)?;
    let rating = match fields.next() {
        Some(r) => parse_rating(r, lineno)?,
        None => 1.0,
    };
    if fields.next().is_some() {
        return Err(parse_err(lineno, "too many fields"));
    }
    Ok(RawRecord::new(user, item, rating))
}

fn parse_movielens_line(line: &str, lineno: usize) -> Result<RawRecord> {
    let mut fields = line.split(',');
    let user = non_empty(fields.next(), "userId", lineno)?;
    let item = non_empty(fields.next(), "movieId", lineno)?;
    let rating = parse_rating(non_empty(fields.next(), "rating", lineno)?, lineno)?;
    Ok(RawRecord::new(user, item, rating))
}

fn parse_lastfm_line(line: &str, lineno: usize) -> Result<RawRecord> {
    let mut fields = line.split('\t');
    let user = non_empty(fields.next(), "userID", lineno)?;
    let item = non_empty(fields.next(), "artistID", lineno)?;
    let rating = parse_rating(non_empty(fields.next(), "weight", lineno)?, lineno)?;
    Ok(RawRecord::new(user, item, rating))
}

fn parse_jester_line(line: &str, lineno: usize, out: &mut Vec<RawRecord>) -> Result<()> {
    let sep = if line.contains(',') { ',' } else { '\t' };
    let mut fields = line.split(sep);
    let declared = non_empty(fields.next(), "rated count", lineno)?;
    declared
        .parse::<f64>()
        .map_err(|_| parse_err(lineno, format!("bad rated count '{declared}'")))?;
    let user = lineno.to_string();
    for (col, field) in fields.enumerate() {
        if field.trim().is_empty() {
            continue;
        }
        let rating = parse_rating(field, lineno)?;
        if rating == JESTER_UNRATED {
            continue;
        }
        out.push(RawRecord::new(user.clone(), (col + 1).to_string(), rating));
    }
    Ok(())
}

/// Raw-id ↔ dense-id bijection.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    raw: Vec<String>,
    dense: HashMap<String, u32>,
}

impl IdMap {
    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Returns the dense id for `raw`, assigning the next one on first sight.
    pub fn intern(&mut self, raw: &str) -> u32 {
        if let Some(&id) = self.dense.get(raw) {
            return id;
        }
        let id = self.raw.len() as u32;
        self.raw.push(raw.to_string());
        self.dense.insert(raw.to_string(), id);
        id
    }

    pub fn dense(&self, raw: &str) -> Option<u32> {
        self.dense.get(raw).copied()
    }

    pub fn raw(&self, dense: u32) -> Option<&str> {
        self.raw.get(dense as usize).map(String::as_str)
    }

    /// Identity map `"0".."n-1"`, used by synthetic data.
    pub fn identity(n: usize) -> Self {
        let mut map = IdMap::default();
        for i in 0..n {
            map.intern(&i.to_string());
        }
        map
    }
}

/// Binary user→item like relation with its item→user transpose.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDataset {
    likes: Vec<Vec<ItemId>>,
    item_index: Vec<Vec<UserId>>,
    users: IdMap,
    items: IdMap,
}

impl InteractionDataset {
    /// Builds a dataset from per-user like lists. Lists are sorted and
    /// deduplicated; every id must be below the size of its map.
    pub fn from_likes(mut likes: Vec<Vec<ItemId>>, users: IdMap, items: IdMap) -> Result<Self> {
        if likes.len() != users.len() {
            return Err(Error::Contract(format!(
                "{} like lists for {} users",
                likes.len(),
                users.len()
            )));
        }
        let n_items = items.len();
        for list in likes.iter_mut() {
            list.sort_unstable();
            list.dedup();
            if let Some(&last) = list.last() {
                if last as usize >= n_items {
                    return Err(Error::Contract(format!("item id {last} >= {n_items}")));
                }
            }
        }
        let item_index = transpose(&likes, n_items);
        Ok(InteractionDataset {
            likes,
            item_index,
            users,
            items,
        })
    }

    pub fn n_users(&self) -> usize {
        self.likes.len()
    }

    pub fn n_items(&self) -> usize {
        self.item_index.len()
    }

    pub fn n_likes(&self) -> usize {
        self.likes.iter().map(Vec::len).sum()
    }

    /// Sorted items liked by `user` (I_u).
    pub fn likes(&self, user: UserId) -> &[ItemId] {
        &self.likes[user as usize]
    }

    pub fn all_likes(&self) -> &[Vec<ItemId>] {
        &self.likes
    }

    /// Sorted users who like `item` (U_i).
    pub fn users_of(&self, item: ItemId) -> &[UserId] {
        &self.item_index[item as usize]
    }

    pub fn item_index(&self) -> &[Vec<UserId>] {
        &self.item_index
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.users
    }

    pub fn item_ids(&self) -> &IdMap {
        &self.items
    }

    pub fn contains(&self, user: UserId, item: ItemId) -> bool {
        self.likes(user).binary_search(&item).is_ok()
    }

    /// Same id maps and dimensions, no likes.
    fn empty_like(&self) -> Self {
        InteractionDataset {
            likes: vec![Vec::new(); self.n_users()],
            item_index: vec![Vec::new(); self.n_items()],
            users: self.users.clone(),
            items: self.items.clone(),
        }
    }

    /// Emits the likes as raw records (rating 1) in an order that makes
    /// [`binarize`] reassign the same dense ids, so a canonical export
    /// reloads to an identical dataset.
    pub fn to_records(&self) -> Vec<RawRecord> {
        canonical_order(self)
            .into_iter()
            .map(|(u, i)| {
                RawRecord::new(
                    self.users.raw(u).expect("user id in map"),
                    self.items.raw(i).expect("item id in map"),
                    1.0,
                )
            })
            .collect()
    }

    /// Writes the canonical pairs-tsv interchange file.
    pub fn write_pairs_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in self.to_records() {
            writeln!(w, "{}\t{}", rec.user, rec.item)?;
        }
        Ok(())
    }
}

fn transpose(likes: &[Vec<ItemId>], n_items: usize) -> Vec<Vec<UserId>> {
    let mut index = vec![Vec::new(); n_items];
    for (u, list) in likes.iter().enumerate() {
        for &i in list {
            index[i as usize].push(u as UserId);
        }
    }
    index
}

/// Orders likes so that users and items first appear in dense-id order.
///
/// Greedy: emit every like among already-introduced users and items, then
/// introduce the next user or item that has a like with the introduced side.
/// If neither can be introduced (a user or item with no likes), the remaining
/// likes are appended in (user, item) order.
fn canonical_order(ds: &InteractionDataset) -> Vec<(UserId, ItemId)> {
    let (n_users, n_items) = (ds.n_users(), ds.n_items());
    let mut out = Vec::with_capacity(ds.n_likes());
    let mut emitted = vec![0usize; n_users];
    let (mut nu, mut ni) = (0usize, 0usize);
    while nu < n_users || ni < n_items {
        let user_ready = nu < n_users && ds.likes[nu].first().is_some_and(|&i| (i as usize) < ni);
        let item_ready = ni < n_items && ds.item_index[ni].first().is_some_and(|&u| (u as usize) < nu);
        let both_ready = nu < n_users
            && ni < n_items
            && ds.likes[nu].first().is_some_and(|&i| i as usize == ni);
        if user_ready {
            let list = &ds.likes[nu];
            let end = list.partition_point(|&i| (i as usize) < ni);
            out.extend(list[..end].iter().map(|&i| (nu as UserId, i)));
            emitted[nu] = end;
            nu += 1;
        } else if item_ready {
            for &u in ds.item_index[ni].iter().take_while(|&&u| (u as usize) < nu) {
                out.push((u, ni as ItemId));
                emitted[u as usize] += 1;
            }
            ni += 1;
        } else if both_ready {
            out.push((nu as UserId, ni as ItemId));
            emitted[nu] = 1;
            nu += 1;
            ni += 1;
        } else {
            break;
        }
    }
    for (u, list) in ds.likes.iter().enumerate() {
        out.extend(list[emitted[u]..].iter().map(|&i| (u as UserId, i)));
    }
    out
}

/// Turns rating records into likes: any rating of any value is a like.
/// Dense ids follow first appearance; duplicates collapse.
pub fn binarize(records: &[RawRecord]) -> Result<InteractionDataset> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    let mut likes: Vec<Vec<ItemId>> = Vec::new();
    for rec in records {
        let u = users.intern(&rec.user) as usize;
        let i = items.intern(&rec.item);
        if u == likes.len() {
            likes.push(Vec::new());
        }
        likes[u].push(i);
    }
    InteractionDataset::from_likes(likes, users, items)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DatasetStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_likes: usize,
    pub density: f64,
}

pub fn stats(ds: &InteractionDataset) -> DatasetStats {
    let (n_users, n_items, n_likes) = (ds.n_users(), ds.n_items(), ds.n_likes());
    let cells = n_users as f64 * n_items as f64;
    DatasetStats {
        n_users,
        n_items,
        n_likes,
        density: if cells > 0.0 { n_likes as f64 / cells } else { 0.0 },
    }
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "users={} items={} likes={} density={:.4}%",
            self.n_users,
            self.n_items,
            self.n_likes,
            100.0 * self.density
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: InteractionDataset,
    pub test: InteractionDataset,
    pub seed: u64,
    pub ratio: f64,
}

/// Sends each like to train with probability `ratio`, independently, driven
/// only by `seed`. Train and test keep the source's id maps and dimensions.
pub fn split_train_test(ds: &InteractionDataset, ratio: f64, seed: u64) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut rng = rng::stream(seed, 0x5917);
    let mut train = Vec::with_capacity(ds.n_users());
    let mut test = Vec::with_capacity(ds.n_users());
    for list in &ds.likes {
        let (mut tr, mut te) = (Vec::new(), Vec::new());
        for &i in list {
            if rng.gen::<f64>() < ratio {
                tr.push(i);
            } else {
                te.push(i);
            }
        }
        train.push(tr);
        test.push(te);
    }
    let mut train_ds = ds.empty_like();
    train_ds.item_index = transpose(&train, ds.n_items());
    train_ds.likes = train;
    let mut test_ds = ds.empty_like();
    test_ds.item_index = transpose(&test, ds.n_items());
    test_ds.likes = test;
    Ok(SplitPair {
        train: train_ds,
        test: test_ds,
        seed,
        ratio,
    })
}

/// Keeps at most `max_users` raw users, chosen by a seeded shuffle of the
/// users in first-appearance order. Record order is preserved.
pub fn subsample_users(records: &[RawRecord], max_users: usize, seed: u64) -> Vec<RawRecord> {
    let mut order = IdMap::default();
    for rec in records {
        order.intern(&rec.user);
    }
    if order.len() <= max_users {
        return records.to_vec();
    }
    let mut ids: Vec<u32> = (0..order.len() as u32).collect();
    rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng::stream(seed, 0x5a3b1e));
    let mut keep = vec![false; order.len()];
    for &id in &ids[..max_users] {
        keep[id as usize] = true;
    }
    records
        .iter()
        .filter(|r| keep[order.dense(&r.user).expect("interned") as usize])
        .cloned()
        .collect()
}

/// Keeps records of the `max_items` most-rated items (ties: first appearance).
pub fn limit_items(records: &[RawRecord], max_items: usize) -> Vec<RawRecord> {
    let mut order = IdMap::default();
    let mut counts: Vec<usize> = Vec::new();
    for rec in records {
        let id = order.intern(&rec.item) as usize;
        if id == counts.len() {
            counts.push(0);
        }
        counts[id] += 1;
    }
    if order.len() <= max_items {
        return records.to_vec();
    }
    let mut ids: Vec<usize> = (0..counts.len()).collect();
    ids.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut keep = vec![false; counts.len()];
    for &id in &ids[..max_items] {
        keep[id] = true;
    }
    records
        .iter()
        .filter(|r| keep[order.dense(&r.item).expect("interned") as usize])
        .cloned()
        .collect()
}
