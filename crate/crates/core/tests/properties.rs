use irris_core::ats::{generate_neighbors, random_topology, TabuList};
use irris_core::channel::draw_drop;
use irris_core::model::{equivalent_channel, EvalCounter, PhaseConfig, TopologyMask};
use irris_core::nece::{init_probability, sample_candidates, select_elites, update_probability, Nece};
use irris_core::objective::Workspace;
use irris_core::oracle::exhaustive_phases;
use irris_core::{Objective, SearchContext, StreamKey, SystemConfig};
use proptest::prelude::*;
use rand::SeedableRng;

fn phase_from(bits: u32, levels: &[u32], ns: usize) -> PhaseConfig {
    let max = 1u32 << bits;
    PhaseConfig::new(bits, (0..ns).map(|i| levels[i % levels.len()] % max).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighbors_keep_cardinality(seed in any::<u64>(), ns in 4usize..40, frac in 0.1f64..0.9, p in 1usize..4) {
        let n = ((ns as f64 * frac).round() as usize).clamp(1, ns - 1);
        let p = p.min(n).min(ns - n);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z = random_topology(n, ns, &mut rng).unwrap();
        let mut tabu = TabuList::new(1);
        let first = generate_neighbors(&z, p, 1, &TabuList::new(1), 50, &mut rng).unwrap();
        if let Some(m) = first.masks.first() {
            tabu.push(m.clone());
        }
        let batch = generate_neighbors(&z, p, 10, &tabu, 50, &mut rng).unwrap();
        for m in &batch.masks {
            prop_assert_eq!(m.count(), n);
            prop_assert_eq!(m.hamming(&z), 2 * p);
            prop_assert!(!tabu.contains(m));
        }
        let mut sorted = batch.masks.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), batch.masks.len());
    }

    #[test]
    fn inactive_phases_do_not_matter(seed in 0u64..1000, levels in prop::collection::vec(0u32..4, 1..16), bits in 1u32..3) {
        let cfg = SystemConfig::with_dims(3, 2, 4, 10);
        let (_, ch) = draw_drop(&SystemConfig { seed, ..cfg.clone() }, 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mask = random_topology(4, 10, &mut rng).unwrap();
        let a = phase_from(bits, &levels, 10);
        let mut b = a.clone();
        for i in mask.inactive_indices() {
            b.set_level(i, (b.level(i) + 1) % (1 << bits));
        }
        let ha = equivalent_channel(&ch, &mask, &a).unwrap();
        let hb = equivalent_channel(&ch, &mask, &b).unwrap();
        prop_assert_eq!(ha, hb);
    }

    #[test]
    fn fast_score_matches_full_pipeline(seed in 0u64..1000, levels in prop::collection::vec(0u32..2, 16)) {
        let cfg = SystemConfig { seed, ..SystemConfig::with_dims(4, 3, 8, 16) };
        let (_, ch) = draw_drop(&cfg, seed).unwrap();
        let ctx = SearchContext::new(&cfg, &ch, Objective::sum_rate(&cfg)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mask = random_topology(8, 16, &mut rng).unwrap();
        let phase = PhaseConfig::new(1, levels).unwrap();
        let fast = ctx.score(&mask.active_indices(), phase.levels(), &mut Workspace::default());
        let full = irris_core::model::evaluate(&cfg, &ch, &mask, &phase, &EvalCounter::new()).unwrap();
        prop_assert!((fast - full.wsr).abs() <= 1e-9 * full.wsr);
    }

    #[test]
    fn probability_updates_stay_stochastic(seed in any::<u64>(), bits in 1u32..3, ns in 1usize..12, elites in 1usize..10) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut p = init_probability(bits, ns);
        for _ in 0..4 {
            let samples = sample_candidates(&p, elites + 5, &mut rng);
            let scored: Vec<(PhaseConfig, f64)> = samples.into_iter().enumerate().map(|(i, c)| (c, 1.0 / (1 + i) as f64)).collect();
            let e = select_elites(&scored, &[], elites, scored[0].1, |s| s).unwrap();
            p = update_probability(&p, &e, 1e-3);
            for n in 0..ns {
                let col = p.column(n);
                prop_assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(col.iter().all(|&x| x >= 1e-3 * (1.0 - 1e-9)));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nece_never_beats_exhaustive_phases(seed in 0u64..10_000) {
        let mut cfg = SystemConfig { seed, ..SystemConfig::with_dims(4, 2, 6, 10) };
        cfg.nece.iterations = 5;
        cfg.nece.candidates = 40;
        cfg.nece.primary_elites = 8;
        let (_, ch) = draw_drop(&cfg, 0).unwrap();
        let ctx = SearchContext::new(&cfg, &ch, Objective::sum_rate(&cfg)).unwrap();
        let mask = TopologyMask::leading(10, 6);
        let (sol, trace) = Nece::new(cfg.nece.clone()).run(&ctx, &mask, StreamKey::root(seed)).unwrap();
        let (_, best) = exhaustive_phases(&ctx, &mask).unwrap();
        prop_assert!(sol.score <= best * (1.0 + 1e-12));
        prop_assert!(trace.windows(2).all(|w| w[1].incumbent >= w[0].incumbent));
        prop_assert_eq!(trace.last().unwrap().incumbent, sol.score);
    }
}
