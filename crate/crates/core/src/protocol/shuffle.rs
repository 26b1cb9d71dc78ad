use rand::seq::SliceRandom;
use rand::Rng;

/// Uniformly random permutation of `items` (Fisher–Yates).
pub fn exchanger_shuffle<T, R: Rng + ?Sized>(mut items: Vec<T>, rng: &mut R) -> Vec<T> {
    items.shuffle(rng);
    items
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::rng;

    #[test]
    fn singleton_is_unchanged() {
        assert_eq!(exchanger_shuffle(vec![42], &mut rng(401)), vec![42]);
    }

    #[test]
    fn multiset_is_preserved() {
        let mut r = rng(402);
        let items: Vec<u32> = vec![1, 1, 2, 3, 5, 8, 13, 13, 13];
        for _ in 0..1_000 {
            let mut out = exchanger_shuffle(items.clone(), &mut r);
            out.sort_unstable();
            assert_eq!(out, items);
        }
    }

    #[test]
    fn positions_are_uniform() {
        // χ² over the 5×5 (item, position) table, 16 degrees of freedom.
        let mut r = rng(403);
        let trials = 100_000;
        let mut table = [[0u32; 5]; 5];
        for _ in 0..trials {
            for (pos, item) in exchanger_shuffle((0..5usize).collect(), &mut r).into_iter().enumerate() {
                table[item][pos] += 1;
            }
        }
        let expected = trials as f64 / 5.0;
        let chi2: f64 = table
            .iter()
            .flatten()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9th percentile of χ²(16).
        assert!(chi2 < 39.25, "chi2 = {chi2}");
    }
}
