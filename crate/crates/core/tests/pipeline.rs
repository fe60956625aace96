use irris_core::ats::ats_optimize;
use irris_core::channel::draw_drop;
use irris_core::model::{equivalent_channel, sinr, EvalCounter};
use irris_core::nece::Nece;
use irris_core::oracle::{exhaustive_search, DEFAULT_CAP};
use irris_core::power::{joint_power_minimize, SinrTargets};
use irris_core::{Objective, SearchContext, StreamKey, SystemConfig};

fn reduced(m: usize, k: usize, n: usize, ns: usize) -> SystemConfig {
    let mut cfg = SystemConfig::with_dims(m, k, n, ns);
    cfg.ats.iterations = 8;
    cfg.ats.neighbors = 5;
    cfg.nece.iterations = 6;
    cfg.nece.candidates = 60;
    cfg.nece.primary_elites = 12;
    cfg
}

#[test]
fn reported_solution_reproduces_its_rate() {
    let cfg = reduced(4, 4, 16, 32);
    let (_, ch) = draw_drop(&cfg, 2).unwrap();
    let ctx = SearchContext::new(&cfg, &ch, Objective::sum_rate(&cfg)).unwrap();
    let r = ats_optimize(&ctx, &Nece::new(cfg.nece.clone()), None, StreamKey::root(3)).unwrap();
    assert_eq!(r.mask.count(), 16);
    let again = irris_core::model::evaluate(&cfg, &ch, &r.mask, &r.phase, &EvalCounter::new()).unwrap();
    assert!((again.wsr - r.evaluation.wsr).abs() <= 1e-12 * again.wsr);
    assert!((r.score - r.evaluation.wsr).abs() <= 1e-9 * r.score);
    assert_eq!(r.trace.len(), 8);
    assert!(ctx.evaluations() >= r.evaluations);
}

#[test]
fn search_is_independent_of_thread_count() {
    let cfg = reduced(4, 2, 8, 16);
    let (_, ch) = draw_drop(&cfg, 0).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let ctx = SearchContext::new(&cfg, &ch, Objective::sum_rate(&cfg)).unwrap();
            let r = ats_optimize(&ctx, &Nece::new(cfg.nece.clone()), None, StreamKey::root(11)).unwrap();
            (r.mask, r.phase, r.evaluation.wsr.to_bits(), r.evaluations)
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn exhaustive_bounds_joint_search() {
    for seed in 0..5 {
        let cfg = SystemConfig { seed, ..reduced(2, 2, 3, 6) };
        let (_, ch) = draw_drop(&cfg, 0).unwrap();
        let ctx = SearchContext::new(&cfg, &ch, Objective::sum_rate(&cfg)).unwrap();
        let joint = ats_optimize(&ctx, &Nece::new(cfg.nece.clone()), None, StreamKey::root(seed)).unwrap();
        let exact = exhaustive_search(&ctx, DEFAULT_CAP).unwrap();
        assert!(joint.evaluation.wsr <= exact.evaluation.wsr * (1.0 + 1e-9));
        assert_eq!(exact.budget.phase_combos_searched, 20 * 8);
    }
}

#[test]
fn power_minimization_end_to_end() {
    let cfg = reduced(4, 4, 8, 16);
    let (_, ch) = draw_drop(&cfg, 1).unwrap();
    let targets = SinrTargets::uniform_db(4, 10.0).unwrap();
    let r = joint_power_minimize(&cfg, &ch, &targets, None, StreamKey::root(5)).unwrap();
    let h = equivalent_channel(&ch, &r.mask, &r.phase).unwrap();
    let g = sinr(&h, &r.precoder, cfg.noise_power).unwrap();
    for (g, mu) in g.iter().zip(targets.values()) {
        assert!(*g >= mu * (1.0 - 1e-6));
    }
    let w_power: f64 = r.precoder.w.iter().map(|c| c.norm_sqr()).sum();
    assert!((w_power - r.p_tx).abs() <= 1e-12 * r.p_tx);
}
