use fpsketch_harness::generators::turnstile;
use fpsketch_harness::trials::quantile;
use fpsketch_harness::{HardInstanceSpec, InstanceKind};
use proptest::prelude::*;

proptest! {
    #[test]
    fn turnstile_stream_sums_back(
        x in prop::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], 1..60),
        rounds in 1usize..6,
        seed in any::<u64>(),
    ) {
        let mut back = vec![0.0; x.len()];
        for (i, v) in turnstile(&x, rounds, seed) {
            back[i as usize] += v;
        }
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
        }
    }

    #[test]
    fn quantile_is_monotone(mut v in prop::collection::vec(-1e3f64..1e3, 1..50), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        v.sort_by(f64::total_cmp);
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(quantile(&v, lo) <= quantile(&v, hi));
    }

    #[test]
    fn instances_depend_only_on_their_spec(n in 8u64..512, seed in any::<u64>(), m in 1usize..8) {
        let spec = HardInstanceSpec::new(InstanceKind::Spike { m, magnitude: 50.0, sigma: 1.0 }, n, seed);
        let x = spec.vector().unwrap();
        prop_assert_eq!(&x, &spec.vector().unwrap());
        prop_assert_eq!(x.len() as u64, n);
        prop_assert_eq!(x.iter().filter(|&&v| v == 50.0).count(), m.min(n as usize));
    }
}
