//! Probability kernels used by the analytic expressions: binomial and
//! negative-binomial pmfs, the within-block decoding success probability,
//! the save-duration distribution, and moments of geometric random sums.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::DiscretePmf;

/// First and second moments of a random sum with a geometric number of
/// independent summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSumMoments {
    pub mean: f64,
    pub second_moment: f64,
}

/// Table of log factorials, `table[i] = ln(i!)`.
pub(crate) struct LnFact(Vec<f64>);

impl LnFact {
    pub(crate) fn new(max_n: usize) -> Self {
        let table = (0..=max_n).map(|i| ln_gamma(i as f64 + 1.0)).collect();
        LnFact(table)
    }

    #[inline]
    pub(crate) fn ln_fact(&self, n: usize) -> f64 {
        self.0[n]
    }

    /// `ln C(n, k)`; requires `k <= n` within the table range.
    #[inline]
    pub(crate) fn ln_choose(&self, n: usize, k: usize) -> f64 {
        self.ln_fact(n) - self.ln_fact(k) - self.ln_fact(n - k)
    }
}

fn check_probability(name: &str, s: f64) -> Result<()> {
    if !s.is_finite() || !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParam(format!(
            "{name} = {s} is not a probability in [0, 1]"
        )));
    }
    Ok(())
}

/// Largest argument for which pmfs are evaluated by direct multiplicative
/// products; beyond it everything moves to log space.
const DIRECT_EVAL_LIMIT: u64 = 1024;

/// Binomial pmf `P[Bin(trials, s) = x]`. Small arguments are evaluated by a
/// direct multiplicative product; large ones in log space so the
/// combinatorial coefficient neither overflows nor underflows prematurely.
pub fn binomial_pmf(trials: u64, s: f64, x: u64) -> Result<f64> {
    check_probability("s", s)?;
    if x > trials {
        return Err(Error::InvalidParam(format!(
            "x = {x} exceeds the number of trials {trials}"
        )));
    }
    if s == 0.0 {
        return Ok(if x == 0 { 1.0 } else { 0.0 });
    }
    if s == 1.0 {
        return Ok(if x == trials { 1.0 } else { 0.0 });
    }
    if trials <= DIRECT_EVAL_LIMIT && (trials - x) as f64 * (-s).ln_1p() > -700.0 {
        // C(trials, x) s^x assembled factor by factor keeps every partial
        // product monotone up to the final value, so nothing overflows.
        let mut value = (1.0 - s).powi((trials - x) as i32);
        for i in 1..=x {
            value *= (trials - x + i) as f64 / i as f64 * s;
        }
        return Ok(value);
    }
    let ln_choose = ln_gamma(trials as f64 + 1.0)
        - ln_gamma(x as f64 + 1.0)
        - ln_gamma((trials - x) as f64 + 1.0);
    let ln_pmf = ln_choose + x as f64 * s.ln() + (trials - x) as f64 * (-s).ln_1p();
    Ok(ln_pmf.exp())
}

/// Negative-binomial pmf: probability that the `r`-th success of a Bernoulli
/// process with per-trial success probability `s` occurs on trial `w`,
/// `C(w-1, r-1) s^r (1-s)^{w-r}`. Values `w < r` carry zero mass.
pub fn negbin_pmf(r: u32, s: f64, w: u64) -> Result<f64> {
    check_probability("s", s)?;
    if s == 0.0 {
        return Err(Error::InvalidParam(
            "s = 0: the r-th success never occurs".into(),
        ));
    }
    if r == 0 {
        return Err(Error::InvalidParam("r must be a positive integer".into()));
    }
    if w < r as u64 {
        return Ok(0.0);
    }
    if s == 1.0 {
        return Ok(if w == r as u64 { 1.0 } else { 0.0 });
    }
    if w <= DIRECT_EVAL_LIMIT && r as f64 * s.ln() > -700.0 {
        let fails = w - r as u64;
        let mut value = s.powi(r as i32);
        for i in 1..=fails {
            value *= (r as u64 - 1 + i) as f64 / i as f64 * (1.0 - s);
        }
        return Ok(value);
    }
    let ln_choose = ln_gamma(w as f64) - ln_gamma(r as f64) - ln_gamma((w - r as u64) as f64 + 1.0);
    let ln_pmf = ln_choose + r as f64 * s.ln() + (w - r as u64) as f64 * (-s).ln_1p();
    Ok(ln_pmf.exp())
}

/// Probability that at least `k` of `n` transmitted symbols succeed when each
/// succeeds independently with probability `s`: the sum of the
/// negative-binomial masses for decoding instants `k..=n`, equivalently
/// `P[Bin(n, s) >= k]`.
///
/// The kernel is parameterized by the per-symbol success probability so the
/// same function serves both the erasure-only case (`s = 1 - delta`) and the
/// best-effort case (`s = q`).
pub fn success_prob_eps(k: u32, n: u32, s: f64) -> Result<f64> {
    check_probability("s", s)?;
    if k == 0 {
        return Err(Error::InvalidParam("k must be a positive integer".into()));
    }
    if n < k {
        return Err(Error::InvalidParam(format!(
            "blocklength n = {n} must be at least k = {k}"
        )));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    if s == 1.0 {
        return Ok(1.0);
    }
    // Negative-binomial masses advanced by a ratio recurrence and summed with
    // compensation. When the first mass s^k would underflow, the recurrence
    // runs in log space instead.
    let fail = 1.0 - s;
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut add = |term: f64| {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    };
    if k as f64 * s.ln() > -700.0 {
        let mut term = s.powi(k as i32);
        for x in k..=n {
            add(term);
            term *= fail * x as f64 / (x - k + 1) as f64;
        }
    } else {
        let ln_fail = (-s).ln_1p();
        let mut ln_term = k as f64 * s.ln();
        for x in k..=n {
            add(ln_term.exp());
            ln_term += ln_fail + (x as f64).ln() - ((x - k + 1) as f64).ln();
        }
    }
    Ok(sum.min(1.0))
}

/// Distribution of the saving duration before an MDS transmission round: the
/// number of slots, rounded up to a multiple of `n`, needed to harvest `n`
/// energy units from Bernoulli(`p`) arrivals. The support is truncated once
/// the remaining tail drops below `tail_tol`, with the truncated probability
/// recorded in the pmf's tail mass.
pub fn save_duration_pmf(n: u32, p: f64, tail_tol: f64) -> Result<DiscretePmf> {
    check_probability("p", p)?;
    if p == 0.0 {
        return Err(Error::InvalidParam(
            "p = 0: the battery never recharges".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidParam("n must be a positive integer".into()));
    }
    if tail_tol <= 0.0 || tail_tol.is_nan() {
        return Err(Error::InvalidParam(
            "tail tolerance must be positive".into(),
        ));
    }
    if p == 1.0 {
        return DiscretePmf::new(n as i64, vec![1.0], 0.0);
    }

    // Walk the harvest-time pmf (n-th arrival at slot w) upward from w = n,
    // accumulating each mass into its multiple-of-n bucket. The masses follow
    // a ratio recurrence, in linear space unless the first one underflows.
    let linear = n as f64 * p.ln() > -700.0;
    let fail = 1.0 - p;
    let ln_fail = (-p).ln_1p();
    let mut term = if linear { p.powi(n as i32) } else { 0.0 };
    let mut ln_term = n as f64 * p.ln();
    let mut total = 0.0_f64;
    let mut comp = 0.0_f64;
    let mut buckets: Vec<f64> = Vec::new();
    let mut w = n as u64;
    while 1.0 - total >= tail_tol {
        let mass = if linear { term } else { ln_term.exp() };
        let bucket = w.div_ceil(n as u64) as usize;
        if buckets.len() < bucket {
            buckets.resize(bucket, 0.0);
        }
        buckets[bucket - 1] += mass;
        let y = mass - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
        let ratio_num = w as f64;
        let ratio_den = (w - n as u64 + 1) as f64;
        if linear {
            term *= fail * ratio_num / ratio_den;
        } else {
            ln_term += ln_fail + ratio_num.ln() - ratio_den.ln();
        }
        w += 1;
        // Secondary stop: mass has decayed past the mode to nothing, so the
        // target tail tolerance is below what f64 accumulation can resolve.
        if mass == 0.0 && total > 0.5 {
            break;
        }
    }
    let tail_mass = (1.0 - total).max(0.0);

    let len = (buckets.len() - 1) * n as usize + 1;
    let mut masses = vec![0.0; len];
    for (j, &mass) in buckets.iter().enumerate() {
        masses[j * n as usize] = mass;
    }
    DiscretePmf::new(n as i64, masses, tail_mass)
}

/// Distribution of the decoding instant within a transmission round of `n`
/// symbols, conditioned on the round succeeding: the negative binomial
/// restricted to `{k, ..., n}` and renormalized by the success probability.
pub fn decode_slot_pmf(k: u32, n: u32, s: f64) -> Result<DiscretePmf> {
    check_probability("s", s)?;
    if k == 0 {
        return Err(Error::InvalidParam("k must be a positive integer".into()));
    }
    if n < k {
        return Err(Error::InvalidParam(format!(
            "blocklength n = {n} must be at least k = {k}"
        )));
    }
    if s == 1.0 {
        let mut masses = vec![0.0; (n - k + 1) as usize];
        masses[0] = 1.0;
        return DiscretePmf::new(k as i64, masses, 0.0);
    }
    if s == 0.0 {
        return Err(Error::Unsupported(
            "decoding impossible: per-symbol success probability is zero".into(),
        ));
    }
    let mut terms = Vec::with_capacity((n - k + 1) as usize);
    if k as f64 * s.ln() > -700.0 {
        let mut term = s.powi(k as i32);
        for x in k..=n {
            terms.push(term);
            term *= (1.0 - s) * x as f64 / (x - k + 1) as f64;
        }
    } else {
        let ln_fail = (-s).ln_1p();
        let mut ln_term = k as f64 * s.ln();
        for x in k..=n {
            terms.push(ln_term.exp());
            ln_term += ln_fail + (x as f64).ln() - ((x - k + 1) as f64).ln();
        }
    }
    let eps: f64 = terms.iter().sum();
    if eps <= 0.0 {
        return Err(Error::Unsupported(
            "decoding impossible: success probability underflows to zero".into(),
        ));
    }
    for t in terms.iter_mut() {
        *t /= eps;
    }
    DiscretePmf::new(k as i64, terms, 0.0)
}

/// Moments of `S = sum_{j=1}^{V} Z_j` where `V` is geometric with success
/// probability `eps` and the `Z_j` are i.i.d. with the given first and second
/// moments, independent of `V`.
pub fn random_sum_moments(z_mean: f64, z_second: f64, eps: f64) -> Result<RandomSumMoments> {
    check_probability("eps", eps)?;
    if eps == 0.0 {
        return Err(Error::InvalidParam(
            "eps = 0: the geometric count never terminates".into(),
        ));
    }
    if z_second < z_mean * z_mean * (1.0 - 1e-12) - 1e-12 {
        return Err(Error::InvalidParam(format!(
            "second moment {z_second} below squared mean {}",
            z_mean * z_mean
        )));
    }
    let mean = z_mean / eps;
    let second_moment = z_second / eps + (2.0 - 2.0 * eps) / (eps * eps) * z_mean * z_mean;
    Ok(RandomSumMoments {
        mean,
        second_moment,
    })
}

/// Binomial pmf window around the mode: returns `(x_lo, probs)` covering all
/// outcomes with mass at least `threshold` (the mode is always included).
/// Probabilities are grown outward from the mode by ratio recurrences, so
/// very large `trials` neither overflow nor underflow.
pub(crate) fn binomial_window(
    trials: u32,
    p: f64,
    threshold: f64,
    lnfact: &LnFact,
) -> (u32, Vec<f64>) {
    debug_assert!(p > 0.0 && p < 1.0);
    if trials == 0 {
        return (0, vec![1.0]);
    }
    let t = trials as f64;
    let mode = (((trials + 1) as f64 * p).floor() as u32).min(trials);
    let ln_mode = lnfact.ln_choose(trials as usize, mode as usize)
        + mode as f64 * p.ln()
        + (t - mode as f64) * (-p).ln_1p();
    let pmf_mode = ln_mode.exp();

    let odds = p / (1.0 - p);
    let mut lower = Vec::new();
    let mut value = pmf_mode;
    let mut x = mode;
    while x > 0 {
        // pmf(x-1) = pmf(x) * x / ((trials - x + 1) * odds)
        value *= x as f64 / ((t - x as f64 + 1.0) * odds);
        if value < threshold {
            break;
        }
        lower.push(value);
        x -= 1;
    }
    let x_lo = x;

    let mut probs = Vec::with_capacity(lower.len() + 8);
    probs.extend(lower.iter().rev());
    probs.push(pmf_mode);
    let mut value = pmf_mode;
    let mut x = mode;
    while x < trials {
        // pmf(x+1) = pmf(x) * (trials - x) * odds / (x + 1)
        value *= (t - x as f64) * odds / (x as f64 + 1.0);
        if value < threshold {
            break;
        }
        probs.push(value);
        x += 1;
    }
    (x_lo, probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Probability of exactly `x` successes in `trials` slots where a success
    /// needs both an arrival and a kept symbol, each an independent fair
    /// coin: exhaustive enumeration over all joint patterns. With arrival
    /// probability 1/2 thinned by 1/2 the per-slot success rate is 1/4.
    fn enumerate_thinned_binomial(trials: u32, x: u32) -> f64 {
        let mut count = 0u64;
        for arrivals in 0u32..(1 << trials) {
            for kept in 0u32..(1 << trials) {
                if (arrivals & kept).count_ones() == x {
                    count += 1;
                }
            }
        }
        count as f64 / 4f64.powi(trials as i32)
    }

    /// P[the `r`-th success lands exactly on slot `w`] by enumerating all
    /// length-`w` success/erasure patterns.
    fn enumerate_negbin(r: u32, s: f64, w: u32) -> f64 {
        let mut prob = 0.0;
        for pattern in 0u32..(1 << w) {
            if pattern & (1 << (w - 1)) == 0 {
                continue; // last slot must be the r-th success
            }
            if pattern.count_ones() != r {
                continue;
            }
            prob += s.powi(r as i32) * (1.0 - s).powi((w - r) as i32);
        }
        prob
    }

    /// P[at least `k` successes among `n` slots] by enumeration.
    fn enumerate_success_prob(k: u32, n: u32, s: f64) -> f64 {
        let mut prob = 0.0;
        for pattern in 0u32..(1 << n) {
            let ones = pattern.count_ones();
            if ones >= k {
                prob += s.powi(ones as i32) * (1.0 - s).powi((n - ones) as i32);
            }
        }
        prob
    }

    #[test]
    fn binomial_edge_cases() {
        assert_eq!(binomial_pmf(4, 0.0, 0).unwrap(), 1.0);
        assert_eq!(binomial_pmf(4, 0.0, 2).unwrap(), 0.0);
        assert_eq!(binomial_pmf(4, 1.0, 4).unwrap(), 1.0);
        assert!((binomial_pmf(2, 0.5, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(binomial_pmf(3, 0.5, 4).is_err());
        assert!(binomial_pmf(3, 1.5, 1).is_err());
    }

    #[test]
    fn binomial_matches_thinning_enumeration() {
        let expected = enumerate_thinned_binomial(10, 3);
        let got = binomial_pmf(10, 0.25, 3).unwrap();
        assert!(
            (got - expected).abs() < 1e-12,
            "got {got}, enumeration {expected}"
        );
    }

    #[test]
    fn negbin_values() {
        assert!((negbin_pmf(1, 0.37, 1).unwrap() - 0.37).abs() < 1e-15);
        assert!((negbin_pmf(2, 0.5, 2).unwrap() - 0.25).abs() < 1e-12);
        assert!((negbin_pmf(2, 0.5, 3).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(negbin_pmf(2, 0.5, 1).unwrap(), 0.0);
        assert_eq!(negbin_pmf(3, 1.0, 3).unwrap(), 1.0);
        assert_eq!(negbin_pmf(3, 1.0, 4).unwrap(), 0.0);
        assert!(negbin_pmf(2, 0.0, 3).is_err());
    }

    #[test]
    fn negbin_matches_enumeration() {
        for (r, s, w) in [(2, 0.5, 3), (2, 0.5, 4), (3, 0.3, 7), (1, 0.8, 5)] {
            let expected = enumerate_negbin(r, s, w);
            let got = negbin_pmf(r, s, w as u64).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "r={r} s={s} w={w}: got {got}, enumeration {expected}"
            );
        }
    }

    #[test]
    fn success_prob_values() {
        assert!((success_prob_eps(1, 2, 0.5).unwrap() - 0.75).abs() < 1e-12);
        assert!((success_prob_eps(2, 3, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((success_prob_eps(3, 3, 0.7).unwrap() - 0.7f64.powi(3)).abs() < 1e-12);
        assert_eq!(success_prob_eps(2, 5, 1.0).unwrap(), 1.0);
        assert_eq!(success_prob_eps(2, 5, 0.0).unwrap(), 0.0);
        assert!(success_prob_eps(5, 4, 0.5).is_err());
    }

    #[test]
    fn success_prob_matches_enumeration() {
        for (k, n, s) in [(1, 2, 0.5), (2, 3, 0.5), (3, 8, 0.3), (4, 6, 0.9)] {
            let expected = enumerate_success_prob(k, n, s);
            let got = success_prob_eps(k, n, s).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "k={k} n={n} s={s}: got {got}, enumeration {expected}"
            );
        }
    }

    #[test]
    fn save_duration_deterministic_arrivals() {
        let pmf = save_duration_pmf(2, 1.0, 1e-12).unwrap();
        assert_eq!(pmf.offset(), 2);
        assert_eq!(pmf.masses(), &[1.0]);
        assert_eq!(pmf.tail_mass(), 0.0);
        assert_eq!(pmf.mean(), 2.0);
    }

    #[test]
    fn save_duration_half_rate() {
        // First bucket is the harvest-time mass at w = 2; the second collects
        // w in {3, 4}.
        let pmf = save_duration_pmf(2, 0.5, 1e-12).unwrap();
        assert!((pmf.mass_at(2) - 0.25).abs() < 1e-12);
        assert!((pmf.mass_at(4) - 0.4375).abs() < 1e-12);
        assert_eq!(pmf.mass_at(3), 0.0);
        let total: f64 = pmf.masses().iter().sum::<f64>() + pmf.tail_mass();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(pmf.tail_mass() <= 1e-12);
    }

    #[test]
    fn save_duration_large_block_stays_normalized() {
        // Large n with small p exercises the log-space recurrence well past
        // the territory where a direct p^n start would underflow.
        let pmf = save_duration_pmf(500, 0.2, 1e-12).unwrap();
        let total: f64 = pmf.masses().iter().sum::<f64>() + pmf.tail_mass();
        assert!((total - 1.0).abs() < 1e-9);
        let mean = pmf.mean();
        // E[W] = n/p = 2500; rounding up to multiples of n adds at most n.
        assert!(mean > 2500.0 && mean < 3000.0, "mean {mean}");
    }

    #[test]
    fn decode_slot_examples() {
        let pmf = decode_slot_pmf(1, 2, 0.5).unwrap();
        assert!((pmf.mass_at(1) - 2.0 / 3.0).abs() < 1e-12);
        assert!((pmf.mass_at(2) - 1.0 / 3.0).abs() < 1e-12);
        assert!((pmf.mean() - 4.0 / 3.0).abs() < 1e-12);

        let pmf = decode_slot_pmf(5, 5, 0.7).unwrap();
        assert_eq!(pmf.masses().len(), 1);
        assert!((pmf.mass_at(5) - 1.0).abs() < 1e-12);

        let pmf = decode_slot_pmf(1, 2, 1.0).unwrap();
        assert_eq!(pmf.mass_at(1), 1.0);
        assert_eq!(pmf.mass_at(2), 0.0);

        assert!(decode_slot_pmf(1, 2, 0.0).is_err());
    }

    #[test]
    fn random_sum_examples() {
        let m = random_sum_moments(2.0, 4.0, 0.5).unwrap();
        assert_eq!(m.mean, 4.0);
        assert_eq!(m.second_moment, 24.0);

        let m = random_sum_moments(3.7, 19.0, 1.0).unwrap();
        assert_eq!(m.mean, 3.7);
        assert_eq!(m.second_moment, 19.0);

        assert!(random_sum_moments(2.0, 4.0, 0.0).is_err());
        assert!(random_sum_moments(2.0, 3.0, 0.5).is_err());
    }

    #[test]
    fn random_sum_point_mass_recovers_geometric_moments() {
        // Z identically n makes the sum n * V with V geometric(eps).
        for (n, eps) in [(2.0, 0.5), (7.0, 0.3), (1.0, 0.9)] {
            let m = random_sum_moments(n, n * n, eps).unwrap();
            assert!((m.mean - n / eps).abs() < 1e-12);
            assert!((m.second_moment - n * n * (2.0 - eps) / (eps * eps)).abs() < 1e-9);
        }
    }

    #[test]
    fn binomial_window_covers_mass() {
        let lnfact = LnFact::new(2000);
        for (trials, p) in [(2000u32, 0.2f64), (50, 0.9), (1, 0.5), (0, 0.3)] {
            let (lo, probs) = binomial_window(trials, p, 1e-18, &lnfact);
            let total: f64 = probs.iter().sum();
            assert!(
                (total - 1.0).abs() < 1e-12,
                "trials={trials} p={p}: window mass {total}"
            );
            for (i, &v) in probs.iter().enumerate() {
                let x = lo as u64 + i as u64;
                let direct = binomial_pmf(trials as u64, p, x).unwrap();
                assert!((v - direct).abs() < 1e-12 * (1.0 + direct));
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Monotone in both the blocklength and the success probability.
            #[test]
            fn success_prob_monotone(k in 1u32..=20, extra in 0u32..=20, s in 0.05f64..=0.95) {
                let n = k + extra;
                let base = success_prob_eps(k, n, s).unwrap();
                prop_assert!(success_prob_eps(k, n + 1, s).unwrap() >= base - 1e-12);
                prop_assert!(success_prob_eps(k, n, (s + 0.04).min(1.0)).unwrap() >= base - 1e-12);
            }

            // Conditioned decode masses times the success probability give
            // back the unconditioned negative-binomial masses.
            #[test]
            fn decode_pmf_recovers_negbin(k in 1u32..=15, extra in 0u32..=15, s in 0.05f64..=0.95) {
                let n = k + extra;
                let eps = success_prob_eps(k, n, s).unwrap();
                let pmf = decode_slot_pmf(k, n, s).unwrap();
                for x in k..=n {
                    let recovered = pmf.mass_at(x as i64) * eps;
                    let direct = negbin_pmf(k, s, x as u64).unwrap();
                    prop_assert!((recovered - direct).abs() < 1e-12);
                }
            }

            // Cumulative negative-binomial mass equals the binomial tail at
            // the same horizon: two routes to the same quantity.
            #[test]
            fn negbin_cumsum_matches_binomial_tail(r in 1u32..=12, extra in 0u32..=12, s in 0.05f64..=0.95) {
                let w_max = r + extra;
                let cumsum: f64 = (r..=w_max)
                    .map(|w| negbin_pmf(r, s, w as u64).unwrap())
                    .sum();
                let tail: f64 = (r..=w_max)
                    .map(|x| binomial_pmf(w_max as u64, s, x as u64).unwrap())
                    .sum();
                prop_assert!((cumsum - tail).abs() < 1e-11, "cumsum {cumsum} tail {tail}");
                let eps = success_prob_eps(r, w_max, s).unwrap();
                prop_assert!((cumsum - eps).abs() < 1e-11);
            }

            // Truncated save-duration pmf stays normalized with its tail.
            #[test]
            fn save_duration_normalized(n in 1u32..=40, p in 0.05f64..=1.0) {
                let pmf = save_duration_pmf(n, p, 1e-12).unwrap();
                let total: f64 = pmf.masses().iter().sum::<f64>() + pmf.tail_mass();
                prop_assert!((total - 1.0).abs() < 1e-9);
                prop_assert!(pmf.tail_mass() <= 1e-12 * 1.001);
            }
        }
    }
}
