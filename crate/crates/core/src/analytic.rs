//! Closed-form average age of information for the four policies: MDS or
//! rateless coding, each under best-effort or save-and-transmit.

use crate::dist::{
    binomial_window, decode_slot_pmf, random_sum_moments, save_duration_pmf, success_prob_eps,
    LnFact,
};
use crate::error::{Error, Result};
use crate::model::{renewal_aoi, AoiBreakdown, DiscretePmf, SystemParams};

/// Conditional moments of the best-effort completion time `Z` given the
/// duration `y` of the preceding no-outage phase under rateless
/// save-and-transmit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcStConditionalMoments {
    pub z_mean_given_y: f64,
    pub z_second_given_y: f64,
    pub yz_mean_given_y: f64,
}

/// Average AoI of MDS coding with save-and-transmit: the transmitter banks
/// energy in multiples of `n` slots until it can send a full `n`-symbol round
/// without outage, drains its battery at every round boundary, and repeats
/// until a round delivers `k` symbols.
pub fn aoi_mds_st(params: &SystemParams, n: u32, tail_tol: f64) -> Result<AoiBreakdown> {
    if n < params.k() {
        return Err(Error::InvalidParam(format!(
            "blocklength n = {n} must be at least k = {}",
            params.k()
        )));
    }
    let s = 1.0 - params.delta();
    let eps = success_prob_eps(params.k(), n, s)?;
    if eps <= 0.0 {
        return Err(Error::Unsupported(
            "round success probability underflows to zero".into(),
        ));
    }
    let z = save_duration_pmf(n, params.p(), tail_tol)?;
    let (ez, ez2) = (z.mean(), z.second_moment());
    let mu_decode = decode_slot_pmf(params.k(), n, s)?.mean();

    // Moments of the geometric round count and of the total saving time
    // accumulated across the rounds of one renewal.
    let rounds_mean = 1.0 / eps;
    let rounds_sq = (2.0 - eps) / (eps * eps);
    let saves = random_sum_moments(ez, ez2, eps)?;

    let nf = n as f64;
    let mean_t = nf * rounds_mean + saves.mean;
    let mean_q = 0.5 * nf * nf * rounds_sq
        + nf * mu_decode * rounds_mean
        + nf * rounds_sq * ez
        + mu_decode * saves.mean
        + 0.5 * saves.second_moment;
    renewal_aoi(mean_q, mean_t)
}

/// Average AoI of MDS coding with best-effort transmission: every slot
/// attempts a symbol, which succeeds with probability `q = p (1 - delta)`,
/// and a fresh update starts every `n` slots.
pub fn aoi_mds_be(params: &SystemParams, n: u32) -> Result<AoiBreakdown> {
    if n < params.k() {
        return Err(Error::InvalidParam(format!(
            "blocklength n = {n} must be at least k = {}",
            params.k()
        )));
    }
    let q = params.q();
    let k = params.k();
    let eps = success_prob_eps(k, n, q)?;
    if eps <= 0.0 {
        return Err(Error::Unsupported(
            "round success probability underflows to zero".into(),
        ));
    }
    let eps_next = success_prob_eps(k + 1, n + 1, q)?;
    let nf = n as f64;
    let aoi = nf / eps - nf / 2.0 + (k as f64) * eps_next / (q * eps);
    let mean_t = nf / eps;
    renewal_aoi(aoi * mean_t, mean_t)
}

/// Average AoI of rateless coding with best-effort transmission: symbols flow
/// every slot with per-symbol success `q` until `k` arrive, and the next
/// update starts immediately.
pub fn aoi_rc_be(params: &SystemParams) -> Result<AoiBreakdown> {
    let q = params.q();
    let k = params.k() as f64;
    let aoi = (k / q) * (1.5 + (1.0 - q) / k);
    let mean_t = k / q;
    renewal_aoi(aoi * mean_t, mean_t)
}

/// Documented constant gap between the rateless best-effort closed form and
/// the zero-saving limit of the rateless save-and-transmit expression:
/// `aoi_rc_be - aoi_rc_st(m = 0) = (1 - q) / (2 q)`. The two formulas come
/// from different age-accounting conventions and are both kept verbatim; the
/// gap is reported, never silently reconciled.
pub fn rc_be_st_gap(params: &SystemParams) -> f64 {
    let q = params.q();
    (1.0 - q) / (2.0 * q)
}

/// Closed-form moments of the total energy `Y` harvested across the
/// no-outage phase: `E[Y] = m p / (1 - p)` and
/// `var(Y) = m p (1 + p) / ((1 - p)(1 - p^2))`.
/// Returns `(mean, variance, second_moment)`.
pub fn harvest_moments(m: u32, p: f64) -> Result<(f64, f64, f64)> {
    check_open_unit_p(p)?;
    let mf = m as f64;
    let mean = mf * p / (1.0 - p);
    let variance = mf * p * (1.0 + p) / ((1.0 - p) * (1.0 - p * p));
    Ok((mean, variance, variance + mean * mean))
}

fn check_open_unit_p(p: f64) -> Result<()> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "p = {p} must satisfy 0 < p < 1"
        )));
    }
    if p >= 1.0 {
        return Err(Error::Unsupported(
            "p = 1: the no-outage phase never terminates; use the rateless \
             best-effort analysis (RC_BE) instead"
                .into(),
        ));
    }
    Ok(())
}

/// Distribution of the total number of slots the transmitter can send without
/// outage after banking energy for `m` slots: the total progeny of the
/// binomial-thinning chain where each generation of banked units is spent one
/// per slot while new arrivals thin in at rate `p`.
///
/// Computed by dynamic programming over states (current generation size,
/// accumulated total), pruning states below `tail_tol`-scaled thresholds and
/// recording all pruned and unterminated probability in the tail mass.
pub fn total_harvest_pmf(m: u32, p: f64, tail_tol: f64) -> Result<DiscretePmf> {
    check_open_unit_p(p)?;
    if tail_tol <= 0.0 || tail_tol.is_nan() {
        return Err(Error::InvalidParam(
            "tail tolerance must be positive".into(),
        ));
    }
    if m == 0 {
        return DiscretePmf::new(0, vec![1.0], 0.0);
    }

    // Per-value thresholds: window truncation of each binomial kernel and
    // edge trimming of state vectors both stay far below the tail budget;
    // the loop stops once the live probability itself is inside the budget.
    let window_thr = tail_tol * 1e-5;
    let trim_thr = tail_tol * 1e-7;
    let stop_thr = 0.45 * tail_tol;

    let lnfact = LnFact::new(m as usize);
    let mut absorbed: Vec<f64> = vec![0.0];

    // groups[e] = (smallest accumulated total, probabilities over consecutive
    // totals) for chains whose current generation holds e units.
    let mut groups: Vec<Option<(u32, Vec<f64>)>> = vec![None; m as usize + 1];
    let (lo, probs) = binomial_window(m, p, window_thr, &lnfact);
    let mut active_mass = 0.0;
    for (i, &pr) in probs.iter().enumerate() {
        let e = lo + i as u32;
        if e == 0 {
            absorbed[0] += pr;
        } else {
            groups[e as usize] = Some((e, vec![pr]));
            active_mass += pr;
        }
    }

    while active_mass >= stop_thr {
        // Window of the thinning kernel for every live generation size.
        let mut sources: Vec<(u32, u32, Vec<f64>)> = Vec::new();
        for (e, slot) in groups.iter().enumerate() {
            if slot.is_some() {
                let (xlo, w) = binomial_window(e as u32, p, window_thr, &lnfact);
                sources.push((e as u32, xlo, w));
            }
        }

        // Bounds of every target generation's accumulated-total window.
        let e_next_max = sources
            .iter()
            .map(|(_, xlo, w)| xlo + w.len() as u32 - 1)
            .max()
            .unwrap_or(0);
        let mut bounds: Vec<(u32, u32)> = vec![(u32::MAX, 0); e_next_max as usize + 1];
        for (e, xlo, w) in &sources {
            let (y_lo, v) = groups[*e as usize].as_ref().unwrap();
            let y_hi = y_lo + v.len() as u32 - 1;
            for j in 0..w.len() {
                let e_next = xlo + j as u32;
                if e_next == 0 {
                    continue;
                }
                let b = &mut bounds[e_next as usize];
                b.0 = b.0.min(y_lo + e_next);
                b.1 = b.1.max(y_hi + e_next);
            }
        }

        let mut next: Vec<Option<(u32, Vec<f64>)>> = vec![None; e_next_max as usize + 1];
        for (e_next, &(lo, hi)) in bounds.iter().enumerate() {
            if lo != u32::MAX {
                next[e_next] = Some((lo, vec![0.0; (hi - lo + 1) as usize]));
            }
        }

        for (e, xlo, w) in &sources {
            let (y_lo, v) = groups[*e as usize].take().unwrap();
            for (j, &weight) in w.iter().enumerate() {
                let e_next = xlo + j as u32;
                if e_next == 0 {
                    // Chain dies here: the accumulated total is final.
                    let need = y_lo as usize + v.len();
                    if absorbed.len() < need {
                        absorbed.resize(need, 0.0);
                    }
                    for (dst, &src) in absorbed[y_lo as usize..].iter_mut().zip(v.iter()) {
                        *dst += weight * src;
                    }
                } else {
                    let (t_lo, t) = next[e_next as usize].as_mut().unwrap();
                    let start = (y_lo + e_next - *t_lo) as usize;
                    for (dst, &src) in t[start..].iter_mut().zip(v.iter()) {
                        *dst += weight * src;
                    }
                }
            }
        }

        // Trim negligible window edges and refresh the live mass.
        active_mass = 0.0;
        for slot in next.iter_mut() {
            if let Some((y_lo, v)) = slot {
                let mut start = 0;
                while start < v.len() && v[start] < trim_thr {
                    start += 1;
                }
                let mut end = v.len();
                while end > start && v[end - 1] < trim_thr {
                    end -= 1;
                }
                if start >= end {
                    *slot = None;
                    continue;
                }
                if start > 0 || end < v.len() {
                    *y_lo += start as u32;
                    v.copy_within(start..end, 0);
                    v.truncate(end - start);
                }
                active_mass += v.iter().sum::<f64>();
            }
        }
        groups = next;
    }

    let total_absorbed: f64 = absorbed.iter().sum();
    let tail_mass = (1.0 - total_absorbed).max(0.0);
    DiscretePmf::new(0, absorbed, tail_mass)
}

fn conditional_z_terms(k: u32, q: f64, delta: f64, y: u32, lnfact: &LnFact) -> (f64, f64) {
    if delta == 0.0 {
        // Every no-outage symbol arrives; the remainder is deterministic.
        let g = k.saturating_sub(y) as f64;
        if g == 0.0 {
            return (0.0, 0.0);
        }
        return (g / q, g * (g + 1.0 - q) / (q * q));
    }
    let ln_s = (-delta).ln_1p();
    let ln_d = delta.ln();
    let w_max = y.min(k - 1);
    let mut mean_num = 0.0;
    let mut second_num = 0.0;
    for w in 0..=w_max {
        let ln_p =
            lnfact.ln_choose(y as usize, w as usize) + w as f64 * ln_s + (y - w) as f64 * ln_d;
        let prob = ln_p.exp();
        let g = (k - w) as f64;
        mean_num += prob * g;
        second_num += prob * g * (g + 1.0 - q);
    }
    (mean_num / q, second_num / (q * q))
}

/// Moments of the residual best-effort completion time `Z` conditioned on a
/// no-outage phase of `y` slots: the successes among the `y` symbols follow
/// `Bin(y, 1 - delta)`, and each shortfall symbol costs a geometric(q) wait.
pub fn rc_st_conditional_moments(params: &SystemParams, y: u32) -> RcStConditionalMoments {
    let lnfact = LnFact::new(y as usize);
    let (z_mean, z_second) =
        conditional_z_terms(params.k(), params.q(), params.delta(), y, &lnfact);
    RcStConditionalMoments {
        z_mean_given_y: z_mean,
        z_second_given_y: z_second,
        yz_mean_given_y: y as f64 * z_mean,
    }
}

/// Average AoI of rateless coding with save-and-transmit: after each update
/// the transmitter stays silent for `m` slots, then sends without outage
/// until the banked energy runs out, then finishes any shortfall in
/// best-effort mode.
///
/// Note the zero-saving limit: `aoi_rc_st(m = 0)` equals `(3k + 1 - q) / (2q)`,
/// which sits `(1 - q) / (2q)` below the rateless best-effort closed form;
/// see [`rc_be_st_gap`].
pub fn aoi_rc_st(params: &SystemParams, m: u32, tail_tol: f64) -> Result<AoiBreakdown> {
    let y_pmf = total_harvest_pmf(m, params.p(), tail_tol)?;
    let (ey, _, ey2) = harvest_moments(m, params.p())?;

    let lnfact = LnFact::new(y_pmf.max_support().max(0) as usize);
    let q = params.q();
    let k = params.k();
    let delta = params.delta();
    let mut ez = 0.0;
    let mut ez2 = 0.0;
    let mut eyz = 0.0;
    for (y, mass) in y_pmf.iter() {
        if mass == 0.0 {
            continue;
        }
        let (zm, zs) = conditional_z_terms(k, q, delta, y as u32, &lnfact);
        ez += mass * zm;
        ez2 += mass * zs;
        eyz += mass * y as f64 * zm;
    }

    let mf = m as f64;
    let busy = ey + ez; // E[Y + Z]
    let mean_t = mf + busy;
    // E[(m + Y + Z)^2], then the cross term with the previous renewal's
    // (Y' + Z'), which factors by renewal independence.
    let mean_sq = mf * mf + 2.0 * mf * busy + ey2 + 2.0 * eyz + ez2;
    let mean_q = 0.5 * (mean_sq + 2.0 * mean_t * busy);
    renewal_aoi(mean_q, mean_t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_TAIL_TOL;

    fn params(p: f64, delta: f64, k: u32) -> SystemParams {
        SystemParams::new(p, delta, k).unwrap()
    }

    #[test]
    fn mds_st_hand_value() {
        // p = 1, n = 2, k = 1, delta = 0.5: the saving time is identically 2,
        // the round succeeds with probability 3/4, and the decode instant
        // averages 4/3, giving E[T] = 16/3 and E[Q] = 224/9.
        let b = aoi_mds_st(&params(1.0, 0.5, 1), 2, DEFAULT_TAIL_TOL).unwrap();
        assert!((b.mean_t - 16.0 / 3.0).abs() < 1e-12, "mean_t {}", b.mean_t);
        assert!(
            (b.mean_q - 224.0 / 9.0).abs() < 1e-12,
            "mean_q {}",
            b.mean_q
        );
        assert!((b.aoi - 14.0 / 3.0).abs() < 1e-12, "aoi {}", b.aoi);
    }

    #[test]
    fn mds_st_no_erasures_tightest_block() {
        // p = 1, delta -> 0, n = k: each renewal is one save plus one round,
        // both of length n, and the age at delivery is always k.
        for k in [1u32, 5, 40] {
            let b = aoi_mds_st(&params(1.0, 0.0, k), k, DEFAULT_TAIL_TOL).unwrap();
            assert!((b.mean_t - 2.0 * k as f64).abs() < 1e-9);
            assert!((b.mean_q - 4.0 * (k as f64).powi(2)).abs() < 1e-6);
            assert!((b.aoi - 2.0 * k as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn mds_st_deterministic_saving_matches_point_mass_assembly() {
        // With p = 1 the saving duration is the point mass at n, so the full
        // expression must agree with assembling the moments by hand.
        let pr = params(1.0, 0.3, 7);
        let n = 12u32;
        let b = aoi_mds_st(&pr, n, DEFAULT_TAIL_TOL).unwrap();

        let s = 1.0 - pr.delta();
        let eps = success_prob_eps(pr.k(), n, s).unwrap();
        let mu = decode_slot_pmf(pr.k(), n, s).unwrap().mean();
        let nf = n as f64;
        let saves = random_sum_moments(nf, nf * nf, eps).unwrap();
        let mean_t = nf / eps + saves.mean;
        let mean_q = 0.5 * nf * nf * (2.0 - eps) / (eps * eps)
            + nf * mu / eps
            + nf * (2.0 - eps) / (eps * eps) * nf
            + mu * saves.mean
            + 0.5 * saves.second_moment;
        assert!((b.mean_t - mean_t).abs() < 1e-9);
        assert!((b.mean_q - mean_q).abs() < 1e-9 * mean_q);
    }

    #[test]
    fn mds_be_identities() {
        // q = 1 and n = k collapse to 3k/2.
        for k in [1u32, 10, 100] {
            let b = aoi_mds_be(&params(1.0, 0.0, k), k).unwrap();
            assert!((b.aoi - 1.5 * k as f64).abs() < 1e-9, "k={k} aoi {}", b.aoi);
        }
        // At p = 1 best-effort sees success probability 1 - delta, so the
        // result equals the same expression with that success rate.
        let pr = params(1.0, 0.4, 8);
        let b = aoi_mds_be(&pr, 20).unwrap();
        let eps = success_prob_eps(8, 20, 0.6).unwrap();
        let eps_next = success_prob_eps(9, 21, 0.6).unwrap();
        let direct = 20.0 / eps - 10.0 + 8.0 * eps_next / (0.6 * eps);
        assert!((b.aoi - direct).abs() < 1e-12);
    }

    #[test]
    fn rc_be_values() {
        assert!((aoi_rc_be(&params(1.0, 0.0, 100)).unwrap().aoi - 150.0).abs() < 1e-12);
        assert!((aoi_rc_be(&params(0.5, 0.0, 100)).unwrap().aoi - 301.0).abs() < 1e-12);
        // q = 0.14 at k = 100.
        let b = aoi_rc_be(&params(0.2, 0.3, 100)).unwrap();
        let expected = (100.0 / 0.14) * (1.5 + 0.86 / 100.0);
        assert!((b.aoi - expected).abs() < 1e-9);
        assert!((expected - 1077.5714285714287).abs() < 1e-9);
        assert!((b.mean_t - 100.0 / 0.14).abs() < 1e-9);
    }

    #[test]
    fn rc_be_monotone_in_q() {
        let mut last = f64::INFINITY;
        for i in 1..=20 {
            let p = i as f64 / 20.0;
            let aoi = aoi_rc_be(&params(p, 0.0, 50)).unwrap().aoi;
            assert!(aoi < last, "aoi not decreasing in q at p={p}");
            last = aoi;
        }
    }

    #[test]
    fn harvest_moment_values() {
        let (mean, var, second) = harvest_moments(10, 0.5).unwrap();
        assert!((mean - 10.0).abs() < 1e-12);
        assert!((var - 20.0).abs() < 1e-12);
        assert!((second - 120.0).abs() < 1e-12);
        let (mean, var, second) = harvest_moments(0, 0.5).unwrap();
        assert_eq!((mean, var, second), (0.0, 0.0, 0.0));
        assert!(harvest_moments(5, 1.0).is_err());
        assert!(harvest_moments(5, 0.0).is_err());
    }

    #[test]
    fn total_harvest_geometric_case() {
        // One banked unit survives each following slot with probability 1/2,
        // so the total is geometric: P(Y = y) = 2^-(y+1).
        let pmf = total_harvest_pmf(1, 0.5, 1e-12).unwrap();
        for y in 0..=120i64 {
            let expected = 2f64.powi(-(y as i32 + 1));
            let got = pmf.mass_at(y);
            assert!(
                (got - expected).abs() < 1e-10,
                "y={y}: got {got}, expected {expected}"
            );
        }
        assert!(pmf.tail_mass() < 1e-12 * 1.01);

        // Its moments match the closed forms: mean 1, variance 2.
        assert!((pmf.mean() - 1.0).abs() < 1e-10);
        assert!((pmf.variance() - 2.0).abs() < 1e-9);
        let (mean, var, _) = harvest_moments(1, 0.5).unwrap();
        assert!((mean - 1.0).abs() < 1e-15);
        assert!((var - 2.0).abs() < 1e-15);
    }

    #[test]
    fn total_harvest_zero_saving_is_point_mass() {
        let pmf = total_harvest_pmf(0, 0.4, 1e-12).unwrap();
        assert_eq!(pmf.offset(), 0);
        assert_eq!(pmf.masses(), &[1.0]);
    }

    #[test]
    fn total_harvest_matches_closed_moments() {
        for (m, p) in [(10u32, 0.5), (4, 0.2), (20, 0.9), (7, 0.75)] {
            let tol = 1e-12;
            let pmf = total_harvest_pmf(m, p, tol).unwrap();
            let (mean, var, _) = harvest_moments(m, p).unwrap();
            let budget = 10.0 * tol * pmf.max_support() as f64;
            assert!(
                (pmf.mean() - mean).abs() <= budget + 1e-9 * mean.max(1.0),
                "m={m} p={p}: dp mean {} closed {mean}",
                pmf.mean()
            );
            assert!(
                (pmf.variance() - var).abs() <= 1e-6 * var.max(1.0),
                "m={m} p={p}: dp var {} closed {var}",
                pmf.variance()
            );
        }
    }

    #[test]
    fn total_harvest_rejects_degenerate_rates() {
        assert!(matches!(
            total_harvest_pmf(3, 1.0, 1e-12),
            Err(Error::Unsupported(_))
        ));
        assert!(total_harvest_pmf(3, 0.0, 1e-12).is_err());
        assert!(total_harvest_pmf(3, 0.5, 0.0).is_err());
    }

    #[test]
    fn conditional_moments_cases() {
        // Empty no-outage phase: pure geometric-sum remainder.
        let pr = params(0.28, 0.5, 2);
        let q = pr.q();
        assert!((q - 0.14).abs() < 1e-15);
        let c = rc_st_conditional_moments(&pr, 0);
        assert!((c.z_mean_given_y - 2.0 / q).abs() < 1e-12);
        assert!((c.z_second_given_y - 2.0 * (2.0 + 1.0 - q) / (q * q)).abs() < 1e-9);
        assert_eq!(c.yz_mean_given_y, 0.0);

        // One no-outage slot at delta = 0.5 halves the shortfall.
        let c = rc_st_conditional_moments(&pr, 1);
        let expected = 0.5 * (2.0 / q) + 0.5 * (1.0 / q);
        assert!((c.z_mean_given_y - expected).abs() < 1e-12);
        assert!((c.yz_mean_given_y - expected).abs() < 1e-12);

        // No erasures and enough no-outage slots leave nothing to send.
        let pr0 = params(0.5, 0.0, 3);
        let c = rc_st_conditional_moments(&pr0, 3);
        assert_eq!(c.z_mean_given_y, 0.0);
        assert_eq!(c.z_second_given_y, 0.0);
    }

    #[test]
    fn rc_st_zero_saving_closed_form() {
        for (p, delta, k) in [(0.5, 0.3, 20u32), (0.2, 0.3, 50), (0.9, 0.1, 5)] {
            let pr = params(p, delta, k);
            let q = pr.q();
            let kf = k as f64;
            let b = aoi_rc_st(&pr, 0, DEFAULT_TAIL_TOL).unwrap();
            let expected = (3.0 * kf + 1.0 - q) / (2.0 * q);
            assert!(
                (b.aoi - expected).abs() < 1e-9,
                "p={p} delta={delta} k={k}: got {}, expected {expected}",
                b.aoi
            );
            // The documented offset against the best-effort closed form.
            let be = aoi_rc_be(&pr).unwrap();
            let gap = be.aoi - b.aoi;
            assert!((gap - rc_be_st_gap(&pr)).abs() < 1e-9);
        }
    }

    #[test]
    fn rc_st_rejects_full_recharge() {
        let pr = params(1.0, 0.3, 10);
        assert!(matches!(
            aoi_rc_st(&pr, 5, DEFAULT_TAIL_TOL),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn aoi_never_below_update_length() {
        for (p, delta, k) in [(0.5, 0.3, 10u32), (0.9, 0.05, 3), (0.2, 0.3, 25)] {
            let pr = params(p, delta, k);
            let kf = k as f64;
            assert!(aoi_rc_be(&pr).unwrap().aoi >= kf);
            assert!(aoi_mds_be(&pr, k + 5).unwrap().aoi >= kf);
            assert!(aoi_mds_st(&pr, k + 5, DEFAULT_TAIL_TOL).unwrap().aoi >= kf);
            assert!(aoi_rc_st(&pr, 10, DEFAULT_TAIL_TOL).unwrap().aoi >= kf);
        }
    }
}
