use proptest::prelude::*;

use pprec::dataset::{binarize, split_train_test, stats, IdMap, InteractionDataset, RawRecord};
use pprec::eval::{ae_statistics, precision_at_n};
use pprec::recommender::{predict_binary, top_n, TopNOptions};
use pprec::similarity::{
    estimate_from_signatures, exact_similarity_matrix, minhash_signatures, signature_similarity_matrix,
    CoocCounts, HashFamily, SimilarityMatrix,
};
use pprec::strategy::{BuildContext, StrategyRegistry};
use pprec::ItemId;

fn likes_strategy(max_users: usize, max_items: usize) -> impl Strategy<Value = (Vec<Vec<ItemId>>, usize)> {
    (1..=max_items).prop_flat_map(move |m| {
        (
            prop::collection::vec(prop::collection::btree_set(0..m as ItemId, 0..=m), 1..=max_users)
                .prop_map(|users| users.into_iter().map(|s| s.into_iter().collect()).collect()),
            Just(m),
        )
    })
}

fn dataset(likes: Vec<Vec<ItemId>>, m: usize) -> InteractionDataset {
    let n = likes.len();
    InteractionDataset::from_likes(likes, IdMap::identity(n), IdMap::identity(m)).unwrap()
}

fn records_strategy() -> impl Strategy<Value = Vec<RawRecord>> {
    prop::collection::vec((0u8..12, 0u8..9, -10i8..=10), 1..80).prop_map(|v| {
        v.into_iter()
            .map(|(u, i, r)| RawRecord::new(format!("u{u}"), format!("i{i}"), r as f64))
            .collect()
    })
}

fn assert_symmetric_in_range(s: &SimilarityMatrix) -> Result<(), TestCaseError> {
    let m = s.n_items() as ItemId;
    for i in 0..m {
        prop_assert_eq!(s.get(i, i), 1.0);
        for j in 0..m {
            let v = s.get(i, j);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v.to_bits(), s.get(j, i).to_bits());
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transpose_round_trip((likes, m) in likes_strategy(30, 20)) {
        let ds = dataset(likes, m);
        let mut rebuilt = vec![Vec::new(); m];
        for u in 0..ds.n_users() as u32 {
            for &i in ds.likes(u) {
                rebuilt[i as usize].push(u);
            }
        }
        prop_assert_eq!(ds.item_index(), rebuilt.as_slice());
    }

    #[test]
    fn binarize_idempotent(records in records_strategy()) {
        let ds = binarize(&records).unwrap();
        let again = binarize(&ds.to_records()).unwrap();
        prop_assert_eq!(&again, &ds);
        let distinct: std::collections::HashSet<_> = records.iter().map(|r| (&r.user, &r.item)).collect();
        prop_assert_eq!(ds.n_likes(), distinct.len());
    }

    #[test]
    fn density_formula((likes, m) in likes_strategy(30, 20)) {
        let ds = dataset(likes, m);
        let s = stats(&ds);
        let back = s.density * (s.n_users * s.n_items) as f64;
        prop_assert!((back - s.n_likes as f64).abs() <= 1e-9 * s.n_likes.max(1) as f64);
    }

    #[test]
    fn split_partitions_and_is_deterministic((likes, m) in likes_strategy(30, 20), seed in any::<u64>()) {
        let ds = dataset(likes, m);
        let a = split_train_test(&ds, 0.8, seed).unwrap();
        let b = split_train_test(&ds, 0.8, seed).unwrap();
        prop_assert_eq!(&a.train, &b.train);
        prop_assert_eq!(&a.test, &b.test);
        for u in 0..ds.n_users() as u32 {
            let mut joined: Vec<ItemId> = a.train.likes(u).iter().chain(a.test.likes(u)).copied().collect();
            joined.sort_unstable();
            prop_assert_eq!(joined.as_slice(), ds.likes(u));
            prop_assert!(a.train.likes(u).iter().all(|i| !a.test.likes(u).contains(i)));
        }
        if ds.n_likes() >= 64 {
            let c = split_train_test(&ds, 0.8, seed ^ 1).unwrap();
            prop_assert_ne!(&a.train, &c.train);
        }
    }

    #[test]
    fn estimators_symmetric_and_bounded((likes, m) in likes_strategy(25, 12), seed in 0u64..1000) {
        let ds = dataset(likes, m);
        let registry = StrategyRegistry::default();
        for name in registry.names() {
            let built = registry.get(name).unwrap().build(&ds, &BuildContext::new(40, seed)).unwrap();
            assert_symmetric_in_range(&built.matrix)?;
        }
    }

    #[test]
    fn equal_user_sets_estimate_exactly_one(users in prop::collection::btree_set(0u32..500, 1..40), k in 1usize..300, seed in any::<u64>()) {
        let mut likes = vec![Vec::new(); 500];
        for &u in &users {
            likes[u as usize] = vec![0, 1];
        }
        let ds = dataset(likes, 2);
        let sigs = minhash_signatures(&ds, &HashFamily::new(k, seed).unwrap());
        prop_assert_eq!(estimate_from_signatures(sigs.get(0).unwrap(), sigs.get(1).unwrap()).unwrap(), 1.0);
        prop_assert_eq!(signature_similarity_matrix(&sigs).get(0, 1), 1.0);
    }

    #[test]
    fn cooc_counts_bounded((likes, m) in likes_strategy(30, 15)) {
        let counts = CoocCounts::from_sets(m, &likes);
        prop_assert!(counts.is_consistent());
        for (i, j, n) in counts.iter_pairs() {
            prop_assert!(n <= counts.item_counts[i as usize].min(counts.item_counts[j as usize]));
            prop_assert!(n <= counts.k_rounds);
        }
    }

    #[test]
    fn top_n_candidate_order_irrelevant((likes, m) in likes_strategy(20, 15), n in 1usize..8, rot in 0usize..15) {
        let ds = dataset(likes, m);
        let sims = exact_similarity_matrix(&ds);
        let mut cands: Vec<ItemId> = (0..m as ItemId).collect();
        cands.rotate_left(rot % m);
        cands.reverse();
        for u in 0..ds.n_users() as u32 {
            let all = top_n(u, ds.likes(u), &sims, TopNOptions::new(n), None).unwrap();
            let permuted = top_n(u, ds.likes(u), &sims, TopNOptions::new(n), Some(&cands)).unwrap();
            prop_assert_eq!(&all, &permuted);
            prop_assert!(all.items.windows(2).all(|w| w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0)));
            prop_assert!(all.items.iter().all(|(i, _)| !ds.likes(u).contains(i)));
        }
    }

    #[test]
    fn adding_a_like_never_lowers_score((likes, m) in likes_strategy(20, 12), extra in 0u32..12) {
        let ds = dataset(likes, m);
        let sims = exact_similarity_matrix(&ds);
        let extra = extra % m as u32;
        for u in 0..ds.n_users() as u32 {
            let base = ds.likes(u);
            if base.contains(&extra) {
                continue;
            }
            let mut more = base.to_vec();
            more.push(extra);
            for c in (0..m as ItemId).filter(|c| !more.contains(c)) {
                prop_assert!(predict_binary(&more, &sims, c).unwrap() >= predict_binary(base, &sims, c).unwrap());
            }
        }
    }

    #[test]
    fn ranking_invariant_under_scaling((likes, m) in likes_strategy(20, 15), shift in 1i32..6, n in 1usize..8) {
        let ds = dataset(likes, m);
        let sims = exact_similarity_matrix(&ds);
        let c = 2f64.powi(-shift);
        let scaled = sims.map_values(|v| v * c).unwrap();
        for u in 0..ds.n_users() as u32 {
            let a = top_n(u, ds.likes(u), &sims, TopNOptions::new(n), None).unwrap();
            let b = top_n(u, ds.likes(u), &scaled, TopNOptions::new(n), None).unwrap();
            prop_assert_eq!(a.item_ids(), b.item_ids());
            for (x, y) in a.items.iter().zip(&b.items) {
                prop_assert_eq!(x.1 * c, y.1);
            }
        }
    }

    #[test]
    fn coverage_monotone_in_alpha((likes, m) in likes_strategy(25, 12), seed in 0u64..1000) {
        let ds = dataset(likes, m);
        let exact = exact_similarity_matrix(&ds);
        let est = StrategyRegistry::default().get("union-normalized").unwrap()
            .build(&ds, &BuildContext::new(20, seed)).unwrap().matrix;
        let alphas = [0.01, 0.03, 0.05, 0.1, 0.3];
        let st = ae_statistics(&est, &exact, &alphas).unwrap();
        prop_assert!(st.coverage.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(st.coverage.iter().all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn precision_in_unit_interval(rec in prop::collection::btree_set(0u32..30, 1..10), rel in prop::collection::btree_set(0u32..30, 0..10)) {
        let rec: Vec<u32> = rec.into_iter().collect();
        let rel: Vec<u32> = rel.into_iter().collect();
        let p = precision_at_n(&rec, &rel).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
