//! The truncated, ceiled Laplace distribution `⌈max(0, X)⌉`, `X ~ Lap(μ, λ)`.

use rand::Rng;

/// CDF of `Lap(mu, lambda)` at `x`.
pub fn laplace_cdf(x: f64, mu: f64, lambda: f64) -> f64 {
    let z = (x - mu) / lambda;
    if z < 0.0 {
        0.5 * z.exp()
    } else {
        1.0 - 0.5 * (-z).exp()
    }
}

/// `P(⌈max(0, X)⌉ ≤ k)`, which equals `P(X ≤ k)` for `k ≥ 0`.
pub fn ceiled_cdf(k: u64, mu: f64, lambda: f64) -> f64 {
    laplace_cdf(k as f64, mu, lambda)
}

/// `E[⌈max(0, X)⌉] = Σ_{j ≥ 0} P(X > j)`.
pub fn ceiled_mean(mu: f64, lambda: f64) -> f64 {
    let mut total = 0.0;
    let mut j = 0u64;
    loop {
        let tail = 1.0 - ceiled_cdf(j, mu, lambda);
        total += tail;
        if (j as f64) > mu && tail < 1e-17 {
            return total;
        }
        j += 1;
    }
}

/// One draw of `⌈max(0, X)⌉` by inverting the Laplace CDF.
pub fn sample_truncated_laplace<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> u64 {
    assert!(lambda > 0.0, "Laplace scale must be positive");
    // u in (-1/2, 1/2]; the endpoint -1/2 would map to -infinity.
    let u: f64 = 0.5 - rng.gen::<f64>();
    let x = mu - lambda * u.signum() * (1.0 - 2.0 * u.abs()).ln();
    if x <= 0.0 {
        0
    } else {
        x.ceil() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::rng;

    #[test]
    fn mass_far_below_zero_is_all_zero() {
        let mut r = rng(41);
        for _ in 0..10_000 {
            assert_eq!(sample_truncated_laplace(-1e6, 1.0, &mut r), 0);
        }
    }

    #[test]
    fn centred_at_zero_hits_zero_half_the_time() {
        let mut r = rng(42);
        let draws = 1_000_000;
        let zeros = (0..draws)
            .filter(|_| sample_truncated_laplace(0.0, 1.0, &mut r) == 0)
            .count();
        let p = zeros as f64 / draws as f64;
        assert!((p - 0.5).abs() < 0.01, "P(0) = {p}");
    }

    #[test]
    fn series_mean_matches_tail_sum_identity() {
        // Far above zero the ceiling adds roughly one half.
        let m = ceiled_mean(1000.0, 2.0);
        assert!((m - 1000.5).abs() < 0.05, "{m}");
    }

    #[test]
    fn unit_location_and_scale_closed_form() {
        // P(X > 0) + Σ_{j ≥ 1} e^{-(j-1)}/2 for X ~ Lap(1, 1).
        let e = std::f64::consts::E;
        let closed = 1.0 - 0.5 / e + 0.5 / (1.0 - 1.0 / e);
        assert!((ceiled_mean(1.0, 1.0) - closed).abs() < 1e-12);
        assert!((closed - 1.607).abs() < 1e-3);
    }
}
