//! Monte Carlo and audit checks on the walk protocol.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pprec::eval::{chi_square_uniform_p, tv_from_uniform};
use pprec::similarity::CoocCounts;
use pprec::walksim::{
    contributor_distribution, observer_view, run_protocol, run_round, Action, Party, Population, TimeoutPolicy,
    WalkConfig,
};
use pprec::{Error, ItemId};

fn random_population(n: usize, m: usize, rho: f64, seed: u64) -> Population {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let likes = (0..n)
        .map(|_| (0..m as ItemId).filter(|_| rng.gen_bool(0.3)).collect())
        .collect();
    Population::from_parts(likes, vec![rho; n], m).unwrap()
}

#[test]
fn contributor_uniform_at_n100() {
    let pop = random_population(100, 10, 0.5, 1);
    let (log, _) = run_protocol(&pop, &WalkConfig::new(100_000, 1)).unwrap();
    let hist = contributor_distribution(&log).unwrap();
    let tv = tv_from_uniform(&hist);
    let p = chi_square_uniform_p(&hist).unwrap();
    assert!(tv <= 0.02, "tv {tv}");
    assert!(p > 0.01, "chi-square p {p}");
}

#[test]
fn contributor_max_deviation_at_n50() {
    let pop = random_population(50, 10, 0.5, 2);
    let rounds = 50_000;
    let (log, _) = run_protocol(&pop, &WalkConfig::new(rounds, 2)).unwrap();
    let hist = contributor_distribution(&log).unwrap();
    let worst = hist
        .iter()
        .map(|&c| (c as f64 / rounds as f64 - 1.0 / 50.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.005, "max deviation {worst}");
}

/// The deliverer is visible to the server. Given a delivery by `d`, the
/// contributor equals `d` with probability about `rho + (1 - rho) / n`; over
/// the remaining rounds it is spread uniformly over the other users.
#[test]
fn contributor_given_server_view() {
    let n = 10;
    let pop = random_population(n, 8, 0.5, 3);
    let rounds = 10_000;
    let (log, _) = run_protocol(&pop, &WalkConfig::new(rounds, 3)).unwrap();
    let mut offsets = vec![0u64; n - 1];
    let mut same = 0;
    for r in &log.rounds {
        if r.contributor == r.delivering_user {
            same += 1;
        } else {
            let off = (r.contributor as usize + n - r.delivering_user as usize) % n;
            offsets[off - 1] += 1;
        }
    }
    let same_frac = same as f64 / rounds as f64;
    assert!((same_frac - 0.55).abs() < 0.02, "same-user rate {same_frac}");
    let tv = tv_from_uniform(&offsets);
    assert!(tv < 0.03, "conditional tv {tv}");
}

#[test]
fn heterogeneous_rho_skews_contributors() {
    let n = 20;
    let base = random_population(n, 5, 0.1, 4);
    let likes: Vec<Vec<ItemId>> = (0..n as u32).map(|u| base.likes(u).to_vec()).collect();
    let mut rho = vec![0.1; n];
    rho[0] = 0.9;
    let pop = Population::from_parts(likes, rho, 5).unwrap();
    let rounds = 20_000;
    let (log, _) = run_protocol(&pop, &WalkConfig::new(rounds, 4)).unwrap();
    let hist = contributor_distribution(&log).unwrap();
    let share = hist[0] as f64 / rounds as f64;
    // First accepting visit wins: 0.9 / (0.9 + 19 * 0.1) ≈ 0.32.
    assert!((share - 0.9 / 2.8).abs() < 0.02, "share {share}");
}

#[test]
fn counts_match_naive_oracle() {
    let pop = random_population(40, 12, 0.5, 5);
    let cfg = WalkConfig::new(3_000, 5);
    let (log, counts) = run_protocol(&pop, &cfg).unwrap();
    assert_eq!(counts, log.counts());

    let mut pairs: HashMap<(ItemId, ItemId), u64> = HashMap::new();
    let mut items = vec![0u64; 12];
    for r in &log.rounds {
        assert_eq!(r.contributed_set.as_slice(), pop.likes(r.contributor));
        for (a, &i) in r.contributed_set.iter().enumerate() {
            items[i as usize] += 1;
            for &j in &r.contributed_set[a + 1..] {
                *pairs.entry((i, j)).or_default() += 1;
            }
        }
    }
    assert_eq!(counts.item_counts, items);
    assert_eq!(counts.k_rounds, 3_000);
    for i in 0..12 {
        for j in i + 1..12 {
            let n = counts.pair_count(i, j);
            assert_eq!(n, pairs.get(&(i, j)).copied().unwrap_or(0));
            assert_eq!(n, counts.pair_count(j, i));
            assert!(n <= items[i as usize].min(items[j as usize]));
        }
    }
    assert!(counts.is_consistent());
}

#[test]
fn serial_rounds_equal_parallel_protocol() {
    let pop = random_population(30, 6, 0.4, 6);
    let cfg = WalkConfig::new(500, 6);
    let (log, _) = run_protocol(&pop, &cfg).unwrap();
    for r in (0..500).rev() {
        assert_eq!(run_round(&pop, &cfg, r).unwrap(), log.rounds[r as usize]);
    }
}

#[test]
fn views_expose_only_what_each_party_sees() {
    let pop = random_population(200, 6, 0.5, 7);
    let (log, _) = run_protocol(&pop, &WalkConfig::new(3, 7)).unwrap();

    let server = serde_json::to_value(observer_view(&log, Party::Server).unwrap()).unwrap();
    for ev in server["events"].as_array().unwrap() {
        let mut keys: Vec<&str> = ev.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["delivered_set", "deliverer", "round"]);
    }

    let holders: Vec<u32> = log.rounds.iter().flat_map(|r| r.hop_trace.iter().map(|h| h.holder)).collect();
    let idle = (0..200).find(|u| !holders.contains(u)).unwrap();
    assert!(observer_view(&log, Party::User(idle)).unwrap().is_empty());

    let c = log.rounds[0].contributor;
    let own = serde_json::to_value(observer_view(&log, Party::User(c)).unwrap()).unwrap();
    assert!(own["events"].as_array().unwrap().iter().any(|e| e["inserted"] == true));
    assert!(matches!(observer_view(&log, Party::User(200)), Err(Error::UnknownParty(200))));
}

#[test]
fn empty_contributor_delivers_empty_set() {
    let pop = Population::from_parts(vec![vec![], vec![]], vec![0.5, 0.5], 3).unwrap();
    let (log, counts) = run_protocol(&pop, &WalkConfig::new(50, 8)).unwrap();
    assert_eq!(log.rounds.len(), 50);
    for r in &log.rounds {
        assert!(r.contributed_set.is_empty());
        assert_eq!(r.hop_trace.iter().filter(|h| h.action == Action::Insert).count(), 1);
    }
    assert_eq!(counts.item_counts, vec![0, 0, 0]);
    assert_eq!(counts.iter_pairs().count(), 0);
}

#[test]
fn timeout_policies() {
    let pop = Population::from_parts(vec![vec![0]; 4], vec![1e-9; 4], 1).unwrap();
    let mut cfg = WalkConfig::new(5, 9);
    cfg.max_hops = 3;
    let (log, counts) = run_protocol(&pop, &cfg).unwrap();
    assert_eq!(log.skipped, vec![0, 1, 2, 3, 4]);
    assert!(log.rounds.is_empty());
    assert_eq!(counts.item_counts, vec![0]);

    cfg.on_timeout = TimeoutPolicy::Abort;
    assert!(matches!(run_protocol(&pop, &cfg), Err(Error::ProtocolTimeout { .. })));
}

#[test]
fn exclude_self_never_forwards_to_holder() {
    let pop = random_population(3, 4, 0.3, 10);
    let mut cfg = WalkConfig::new(2_000, 10);
    cfg.exclude_self = true;
    let (log, _) = run_protocol(&pop, &cfg).unwrap();
    for r in &log.rounds {
        for w in r.hop_trace.windows(2) {
            if w[0].action == Action::Forward {
                assert_ne!(w[0].holder, w[1].holder);
            }
        }
    }
}

#[test]
fn jsonl_export_fields() {
    let pop = random_population(5, 4, 0.5, 11);
    let (log, _) = run_protocol(&pop, &WalkConfig::new(4, 11)).unwrap();
    let mut full = Vec::new();
    log.write_jsonl(&mut full, false).unwrap();
    let mut redacted = Vec::new();
    log.write_jsonl(&mut redacted, true).unwrap();
    let full = String::from_utf8(full).unwrap();
    let redacted = String::from_utf8(redacted).unwrap();
    assert_eq!(full.lines().count(), 4);
    for (line, r) in full.lines().zip(&log.rounds) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["round"], r.round_index);
        assert_eq!(v["contributor"], r.contributor);
        assert_eq!(v["deliverer"], r.delivering_user);
        assert_eq!(v["hops"], r.forwards());
        assert_eq!(v["items"], serde_json::json!(r.contributed_set));
    }
    assert!(redacted.lines().all(|l| !l.contains("contributor")));
}

#[test]
fn cooc_merge_is_order_insensitive() {
    let sets: Vec<Vec<ItemId>> = vec![vec![0, 1, 2], vec![1, 2], vec![0, 3], vec![], vec![2, 3]];
    let whole = CoocCounts::from_sets(4, &sets);
    let mut left = CoocCounts::from_sets(4, &sets[..2]);
    left.merge(&CoocCounts::from_sets(4, &sets[2..])).unwrap();
    let mut right = CoocCounts::from_sets(4, &sets[3..]);
    right.merge(&CoocCounts::from_sets(4, &sets[..3])).unwrap();
    assert_eq!(whole, left);
    assert_eq!(whole, right);
}
