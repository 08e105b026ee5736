//! Synthetic trade data shared by the benchmarks.

use fgrid_core::{ObservationSeries, Timestamp};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// `n` trades at strictly increasing timestamps: (price, size) series.
pub fn trades(n: usize, seed: u64) -> (ObservationSeries, ObservationSeries) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut t = 1_203_499_800_000_000i64;
    let mut prices = Vec::with_capacity(n);
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        t += rng.random_range(1..2_000_000);
        prices.push((Timestamp(t), rng.random_range(100.0..200.0)));
        sizes.push((Timestamp(t), rng.random_range(1..10_000) as f64));
    }
    (ObservationSeries::new(prices).unwrap(), ObservationSeries::new(sizes).unwrap())
}

/// A series whose timestamps are a random `keep` fraction of `base`'s.
pub fn thinned(base: &ObservationSeries, keep: f64, seed: u64) -> ObservationSeries {
    let mut rng = StdRng::seed_from_u64(seed);
    let points: Vec<_> =
        base.iter().filter_map(|(t, _)| rng.random_bool(keep).then(|| (t, rng.random_range(0.5..2.0)))).collect();
    ObservationSeries::new(points).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let (p, s) = trades(100, 9);
        assert_eq!(p.times(), s.times());
        assert_eq!(trades(100, 9).0, p);
        let t = thinned(&p, 0.5, 1);
        assert!(t.len() < p.len() && t.times().iter().all(|x| p.get(*x).is_some()));
    }
}
