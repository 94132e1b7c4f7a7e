use fpsketch::{AeStructure, CsStructure, HashMode, HashParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
}

fn sketch(x: &[f64], rows: usize, buckets: usize, seed: u64) -> CsStructure<f64> {
    let params = HashParams::new(x.len() as u64, 8, HashMode::Prf);
    let mut t = CsStructure::new(rows, buckets, seed, params).unwrap();
    for (i, &v) in x.iter().enumerate() {
        t.update(i as u64, v).unwrap();
    }
    t
}

#[test]
fn three_spikes_are_the_top_three() {
    let mut x = gaussian(4096, 1);
    let spikes = [17u64, 2048, 4000];
    for &i in &spikes {
        x[i as usize] = 100.0;
    }
    let hits = (0..100)
        .filter(|&seed| {
            let mut top: Vec<u64> = sketch(&x, 5, 512, seed).topk(3, 0..4096).into_iter().map(|(i, _)| i).collect();
            top.sort_unstable();
            top == spikes
        })
        .count();
    assert!(hits >= 99, "{hits}/100");
}

/// Failure rate of a single-row deviation bound `c·‖x‖₂/√C` over
/// (seed, item) pairs, with `rows` rows and the median estimate.
fn deviation_failure_rate(x: &[f64], rows: usize, buckets: usize, c: f64, pairs: u64) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bound = c * norm / (buckets as f64).sqrt();
    let mut fails = 0;
    for seed in 0..pairs {
        let t = sketch(x, rows, buckets, seed);
        let i = (seed * 2654435761) % x.len() as u64;
        if (t.point_estimate(i) - x[i as usize]).abs() > bound {
            fails += 1;
        }
    }
    fails as f64 / pairs as f64
}

#[test]
fn single_row_deviation_bound() {
    let x = gaussian(4096, 2);
    let rate = deviation_failure_rate(&x, 1, 256, 24f64.sqrt(), 2000);
    assert!(rate <= 0.30, "{rate}");
}

#[test]
fn concentration_improves_with_rows() {
    let x = gaussian(4096, 3);
    let loose: Vec<f64> = [1, 5, 9].iter().map(|&s| deviation_failure_rate(&x, s, 256, 24f64.sqrt(), 1000)).collect();
    assert!(loose.windows(2).all(|w| w[1] <= w[0]), "{loose:?}");
    // At one standard deviation the single-row rate is about a third, so the
    // decay is visible rather than pinned at zero.
    let tight: Vec<f64> = [1, 5, 9].iter().map(|&s| deviation_failure_rate(&x, s, 256, 1.0, 1000)).collect();
    assert!(tight.windows(2).all(|w| w[1] < w[0]), "{tight:?}");
    assert!(tight[0] > 0.2, "{tight:?}");
}

struct PlantedDraws {
    avg: Vec<f64>,
    median: Vec<f64>,
}

fn planted_draws(spike: f64, seeds: u64) -> PlantedDraws {
    let n = 4096u64;
    let mut x = gaussian(n as usize, 77);
    let item = 1234u64;
    x[item as usize] = -spike;
    let params = HashParams::new(n, 8, HashMode::Prf);
    let (mut avg, mut median) = (Vec::new(), Vec::new());
    for seed in 0..seeds {
        let mut hh = CsStructure::<f64>::new(9, 512, seed ^ 0xABCD, params).unwrap();
        let mut ae = AeStructure::<f64>::new(18, 512, 36, seed, params).unwrap();
        for (i, &v) in x.iter().enumerate() {
            hh.update_unchecked(i as u64, v);
            ae.update_unchecked(i as u64, v);
        }
        let blocked: Vec<u64> = hh.topk(32, 0..n).into_iter().map(|(i, _)| i).collect();
        let rep = ae.collision_free_rows(item, &blocked);
        let sign = hh.point_estimate(item).signum();
        avg.push(ae.avg_estimate(&rep, sign).unwrap().re);
        median.push(ae.median_estimate(&rep, sign).unwrap());
    }
    PlantedDraws { avg, median }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, (var / v.len() as f64).sqrt())
}

#[test]
fn averaged_estimator_moments() {
    let spike = 50.0;
    let draws = planted_draws(spike, 3000);
    let (m, se) = mean_se(&draws.avg);
    assert!((m - spike).abs() <= 3.0 * se, "mean {m}, se {se}");
    for p in [2.5, 3.0, 4.0] {
        let powered: Vec<f64> = draws.avg.iter().map(|x| x.abs().powf(p)).collect();
        let (m, se) = mean_se(&powered);
        let target = spike.powf(p);
        assert!((m - target).abs() <= (3.0 * se).max(0.02 * target), "p = {p}: {m} vs {target}");
    }
}

#[test]
fn averaging_beats_median_of_rows() {
    let spike = 50.0;
    let draws = planted_draws(spike, 1000);
    let mse = |v: &[f64]| v.iter().map(|x| (x - spike).powi(2)).sum::<f64>() / v.len() as f64;
    let (a, m) = (mse(&draws.avg), mse(&draws.median));
    println!("averaged MSE {a:.4}, median-of-rows MSE {m:.4}");
    // The median has the larger spread; the exact ratio depends on the row count.
    assert!(a < m, "averaged {a} vs median {m}");
}
