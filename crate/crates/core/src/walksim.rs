//! Deterministic simulation of the anonymous random-walk collection protocol.
//!
//! Each round, the server hands an empty token to a uniformly chosen user.
//! The holder draws `ρ ~ U[0,1)`; below its acceptance probability it either
//! inserts its own like set (empty token) or delivers the token to the server
//! (filled token). Otherwise it forwards the token to a uniformly chosen
//! user. The server only ever sees the delivered set and who delivered it.
//!
//! Round `r` draws all randomness from a stream keyed by `(seed, r)`, so
//! rounds can run in any order or in parallel with identical results.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::similarity::CoocCounts;
use crate::{rng, ItemId, UserId};

pub const DEFAULT_RHO: f64 = 0.5;
pub const DEFAULT_MAX_HOPS: u64 = 1_000;

/// Users taking part in the protocol: their like sets and private
/// acceptance probabilities.
#[derive(Debug, Clone)]
pub struct Population {
    likes: Vec<Vec<ItemId>>,
    rho: Vec<f64>,
    n_items: usize,
}

impl Population {
    /// Every user gets acceptance probability `rho`.
    pub fn uniform(ds: &InteractionDataset, rho: f64) -> Result<Self> {
        Self::with_rho(ds, vec![rho; ds.n_users()])
    }

    pub fn with_rho(ds: &InteractionDataset, rho: Vec<f64>) -> Result<Self> {
        Self::from_parts(ds.all_likes().to_vec(), rho, ds.n_items())
    }

    pub fn from_parts(likes: Vec<Vec<ItemId>>, rho: Vec<f64>, n_items: usize) -> Result<Self> {
        if likes.is_empty() {
            return Err(Error::Domain("population is empty".into()));
        }
        if rho.len() != likes.len() {
            return Err(Error::Contract(format!("{} rho values for {} users", rho.len(), likes.len())));
        }
        if let Some((u, r)) = rho.iter().enumerate().find(|(_, &r)| !(r > 0.0 && r < 1.0)) {
            return Err(Error::Domain(format!("rho of user {u} is {r}, must lie in (0, 1)")));
        }
        Ok(Population { likes, rho, n_items })
    }

    pub fn n_users(&self) -> usize {
        self.likes.len()
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn likes(&self, user: UserId) -> &[ItemId] {
        &self.likes[user as usize]
    }

    pub fn rho(&self, user: UserId) -> f64 {
        self.rho[user as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeoutPolicy {
    Abort,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkConfig {
    pub k_rounds: u64,
    pub seed: u64,
    /// Forwards allowed per round before the round times out.
    pub max_hops: u64,
    pub default_rho: f64,
    /// Forward only to users other than the current holder.
    pub exclude_self: bool,
    pub on_timeout: TimeoutPolicy,
}

impl WalkConfig {
    pub fn new(k_rounds: u64, seed: u64) -> Self {
        WalkConfig {
            k_rounds,
            seed,
            max_hops: DEFAULT_MAX_HOPS,
            default_rho: DEFAULT_RHO,
            exclude_self: false,
            on_timeout: TimeoutPolicy::Skip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Insert,
    Forward,
    Deliver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub holder: UserId,
    pub action: Action,
}

/// Complete audit record of one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundOutcome {
    pub round_index: u64,
    pub contributed_set: Vec<ItemId>,
    /// Audit only: never part of an observer view except the contributor's own.
    pub contributor: UserId,
    pub delivering_user: UserId,
    pub hop_trace: Vec<Hop>,
}

impl RoundOutcome {
    pub fn forwards(&self) -> usize {
        self.hop_trace.iter().filter(|h| h.action == Action::Forward).count()
    }

    pub fn start_user(&self) -> UserId {
        self.hop_trace[0].holder
    }
}

pub fn run_round(pop: &Population, cfg: &WalkConfig, round_index: u64) -> Result<RoundOutcome> {
    let n = pop.n_users();
    let mut rng = rng::stream(cfg.seed, round_index);
    let mut holder = rng.gen_range(0..n) as UserId;
    let mut contributor: Option<UserId> = None;
    let mut trace = Vec::new();
    let mut forwards = 0u64;
    loop {
        let draw: f64 = rng.gen();
        if draw < pop.rho(holder) {
            if contributor.is_none() {
                contributor = Some(holder);
                trace.push(Hop { holder, action: Action::Insert });
                continue;
            }
            trace.push(Hop { holder, action: Action::Deliver });
            let contributor = contributor.expect("inserted before delivery");
            return Ok(RoundOutcome {
                round_index,
                contributed_set: pop.likes(contributor).to_vec(),
                contributor,
                delivering_user: holder,
                hop_trace: trace,
            });
        }
        if forwards == cfg.max_hops {
            return Err(Error::ProtocolTimeout {
                round: round_index,
                max_hops: cfg.max_hops,
            });
        }
        trace.push(Hop { holder, action: Action::Forward });
        forwards += 1;
        holder = if cfg.exclude_self && n > 1 {
            let pick = rng.gen_range(0..n - 1) as UserId;
            if pick >= holder {
                pick + 1
            } else {
                pick
            }
        } else {
            rng.gen_range(0..n) as UserId
        };
    }
}

/// All completed rounds in index order, plus rounds skipped on timeout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundLog {
    pub n_users: usize,
    pub n_items: usize,
    pub rounds: Vec<RoundOutcome>,
    pub skipped: Vec<u64>,
}

impl RoundLog {
    /// Rebuilds co-occurrence counts from the delivered sets.
    pub fn counts(&self) -> CoocCounts {
        let sets: Vec<&[ItemId]> = self.rounds.iter().map(|r| r.contributed_set.as_slice()).collect();
        CoocCounts::from_sets(self.n_items, &sets)
    }

    /// JSON lines `{round, contributor, deliverer, hops, items}`; `hops` is
    /// the number of forwards. `redacted` omits the contributor.
    pub fn write_jsonl<W: Write>(&self, mut w: W, redacted: bool) -> std::io::Result<()> {
        for r in &self.rounds {
            let mut obj = serde_json::Map::new();
            obj.insert("round".into(), r.round_index.into());
            if !redacted {
                obj.insert("contributor".into(), r.contributor.into());
            }
            obj.insert("deliverer".into(), r.delivering_user.into());
            obj.insert("hops".into(), r.forwards().into());
            obj.insert("items".into(), r.contributed_set.clone().into());
            serde_json::to_writer(&mut w, &obj)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Runs `cfg.k_rounds` independent rounds (in parallel) and counts the
/// delivered sets.
pub fn run_protocol(pop: &Population, cfg: &WalkConfig) -> Result<(RoundLog, CoocCounts)> {
    if cfg.k_rounds == 0 {
        return Err(Error::Domain("k_rounds must be >= 1".into()));
    }
    if cfg.max_hops == 0 {
        return Err(Error::Domain("max_hops must be >= 1".into()));
    }
    let outcomes: Vec<Result<RoundOutcome>> = (0..cfg.k_rounds)
        .into_par_iter()
        .map(|r| run_round(pop, cfg, r))
        .collect();
    let mut rounds = Vec::with_capacity(outcomes.len());
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(r) => rounds.push(r),
            Err(Error::ProtocolTimeout { round, .. }) if cfg.on_timeout == TimeoutPolicy::Skip => {
                skipped.push(round)
            }
            Err(e) => return Err(e),
        }
    }
    let log = RoundLog {
        n_users: pop.n_users(),
        n_items: pop.n_items(),
        rounds,
        skipped,
    };
    let counts = log.counts();
    Ok((log, counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "id")]
pub enum Party {
    Server,
    User(UserId),
}

/// Who a user received the token from or passed it to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "id")]
pub enum Peer {
    Server,
    User(UserId),
}

/// What the server sees of one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ServerEvent {
    pub round: u64,
    pub delivered_set: Vec<ItemId>,
    pub deliverer: UserId,
}

/// One stint of a user holding the token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserEvent {
    pub round: u64,
    pub received_from: Peer,
    pub received_set: Vec<ItemId>,
    /// True only when this user inserted its own set during the stint.
    pub inserted: bool,
    pub sent_to: Peer,
    pub sent_set: Vec<ItemId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase", tag = "party")]
pub enum ObservationRecord {
    Server { events: Vec<ServerEvent> },
    User { id: UserId, events: Vec<UserEvent> },
}

impl ObservationRecord {
    pub fn is_empty(&self) -> bool {
        match self {
            ObservationRecord::Server { events } => events.is_empty(),
            ObservationRecord::User { events, .. } => events.is_empty(),
        }
    }
}

/// Projects the log onto what `party` would observe in a deployment.
pub fn observer_view(log: &RoundLog, party: Party) -> Result<ObservationRecord> {
    match party {
        Party::Server => Ok(ObservationRecord::Server {
            events: log
                .rounds
                .iter()
                .map(|r| ServerEvent {
                    round: r.round_index,
                    delivered_set: r.contributed_set.clone(),
                    deliverer: r.delivering_user,
                })
                .collect(),
        }),
        Party::User(id) => {
            if id as usize >= log.n_users {
                return Err(Error::UnknownParty(id));
            }
            let mut events = Vec::new();
            for r in &log.rounds {
                user_events(r, id, &mut events);
            }
            Ok(ObservationRecord::User { id, events })
        }
    }
}

fn user_events(round: &RoundOutcome, id: UserId, out: &mut Vec<UserEvent>) {
    // Split the trace into stints: maximal runs of hops by one holder that
    // end in a forward or the delivery.
    let trace = &round.hop_trace;
    let mut token: &[ItemId] = &[];
    let mut received_from = Peer::Server;
    let mut start = 0;
    while start < trace.len() {
        let holder = trace[start].holder;
        let mut end = start;
        while trace[end].action == Action::Insert {
            end += 1;
        }
        let inserted = trace[start..end].iter().any(|h| h.action == Action::Insert);
        let received = token;
        if inserted {
            token = &round.contributed_set;
        }
        let sent_to = match trace[end].action {
            Action::Deliver => Peer::Server,
            _ => Peer::User(trace.get(end + 1).map_or(holder, |h| h.holder)),
        };
        if holder == id {
            out.push(UserEvent {
                round: round.round_index,
                received_from,
                received_set: received.to_vec(),
                inserted,
                sent_to,
                sent_set: token.to_vec(),
            });
        }
        received_from = Peer::User(holder);
        start = end + 1;
    }
}

/// How often each user was the contributor.
pub fn contributor_distribution(log: &RoundLog) -> Result<Vec<u64>> {
    if log.rounds.is_empty() {
        return Err(Error::Domain("round log is empty".into()));
    }
    let mut hist = vec![0u64; log.n_users];
    for r in &log.rounds {
        hist[r.contributor as usize] += 1;
    }
    Ok(hist)
}
