use irris_core::model::TopologyMask;
use irris_harness::spec::{ExperimentSpec, Sweep};
use irris_harness::stats::{mean, paired_t_test, std_dev, std_err};
use irris_harness::topology::{export_topology, parse_topology};
use proptest::prelude::*;

proptest! {
    #[test]
    fn topology_round_trip(rows in 1usize..10, cols in 1usize..10, bits in prop::collection::vec(any::<bool>(), 100)) {
        let mask = TopologyMask::from_bits(bits[..rows * cols].to_vec());
        let b = export_topology(&mask, rows, cols).unwrap();
        prop_assert_eq!(b.grid.matches('1').count(), mask.count());
        prop_assert_eq!(b.coordinates.lines().count(), mask.count() + 1);
        let (back, r, c) = parse_topology(&b.grid).unwrap();
        prop_assert_eq!((back, r, c), (mask, rows, cols));
    }

    #[test]
    fn power_lists_parse_exactly(values in prop::collection::vec(-30i32..40, 1..8)) {
        let list: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        let spec = ExperimentSpec::parse(&format!("sweep.power_dbm = {}", list.join(", "))).unwrap();
        let expected: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        prop_assert_eq!(spec.sweep, Sweep::PowerDbm(expected));
    }

    #[test]
    fn stderr_is_sd_over_root_n(xs in prop::collection::vec(-1e3f64..1e3, 2..50)) {
        let se = std_err(&xs);
        prop_assert!((se - std_dev(&xs) / (xs.len() as f64).sqrt()).abs() <= 1e-12 * (1.0 + se));
    }

    #[test]
    fn paired_test_is_antisymmetric(a in prop::collection::vec(0f64..10.0, 3..30), shift in -1f64..1.0) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x + shift + 0.01 * (i % 3) as f64).collect();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.mean_difference + ba.mean_difference).abs() < 1e-9);
        prop_assert!((ab.mean_difference - (mean(&a) - mean(&b))).abs() < 1e-9);
        prop_assert!((ab.p_value + ba.p_value - 1.0).abs() < 1e-9);
    }
}
