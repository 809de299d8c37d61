//! Shared helpers for the integration suites: analytic pmfs, chi-square
//! goodness-of-fit machinery, and a tiny self-contained RNG for oracles that
//! must stay independent of the simulator's sampling code.

// Each test target uses a different subset of these helpers.
#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Splitmix64-based uniform generator. Deliberately unrelated to the
/// ChaCha streams used by the simulator.
pub struct OracleRng {
    state: u64,
}

impl OracleRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Poisson pmf by recurrence: p(0) = e^{-mu}, p(k) = p(k-1)·mu/k.
pub fn poisson_pmf(mu: f64, k: u64) -> f64 {
    let mut p = (-mu).exp();
    for i in 1..=k {
        p *= mu / i as f64;
    }
    p
}

/// Inverse-CDF Poisson draw via direct pmf summation; used only by test
/// oracles (the simulator uses a different algorithm and RNG).
pub fn poisson_inverse(mu: f64, u: f64) -> u64 {
    let mut k = 0u64;
    let mut pmf = (-mu).exp();
    let mut cdf = pmf;
    while u > cdf {
        k += 1;
        pmf *= mu / k as f64;
        cdf += pmf;
        if k > 1_000_000 {
            break; // unreachable for the means used in tests
        }
    }
    k
}

/// Binomial pmf by recurrence.
pub fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    let q = 1.0 - p;
    let mut pmf = q.powi(n as i32);
    for i in 1..=k {
        pmf *= (n - i + 1) as f64 / i as f64 * (p / q);
    }
    pmf
}

/// Chi-square goodness-of-fit of integer samples against an analytic pmf.
///
/// Bins are 0..=k with the tail merged once its expected mass drops below
/// `min_expected` counts. Returns (statistic, critical value at the given
/// significance).
pub fn chi_square_gof(
    samples: &[u64],
    pmf: impl Fn(u64) -> f64,
    significance: f64,
    min_expected: f64,
) -> (f64, f64) {
    let n = samples.len() as f64;

    // choose the tail cut: smallest k where the remaining mass is small
    let mut cut = 0u64;
    let mut tail_mass = 1.0;
    while n * (tail_mass - pmf(cut)) >= min_expected {
        tail_mass -= pmf(cut);
        cut += 1;
        assert!(cut < 10_000, "pmf mass never concentrated");
    }

    let bins = cut as usize + 1; // 0..cut-1 individually, >=cut merged
    let mut observed = vec![0u64; bins];
    for &s in samples {
        let idx = (s.min(cut)) as usize;
        observed[idx] += 1;
    }
    let mut expected = vec![0.0; bins];
    let mut acc = 0.0;
    for (k, e) in expected.iter_mut().enumerate().take(bins - 1) {
        *e = n * pmf(k as u64);
        acc += pmf(k as u64);
    }
    expected[bins - 1] = n * (1.0 - acc);

    let statistic: f64 = observed
        .iter()
        .zip(expected.iter())
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = (bins - 1) as f64;
    let critical = ChiSquared::new(dof)
        .expect("dof >= 1")
        .inverse_cdf(1.0 - significance);
    (statistic, critical)
}
