//! Slot-level Monte Carlo simulation of the four policies, plus
//! renewal-reward oracle samplers that check the expectation algebra of the
//! closed forms independently of slot-level conventions.
//!
//! Age accounting is continuous piecewise-linear with unit slot duration:
//! the age grows at slope one and drops at the end of the slot in which the
//! k-th symbol of an update is received, down to the time elapsed since that
//! update was generated. Per-slot area contributions are half-integers, so
//! the simulator accumulates twice the area in integer arithmetic and the
//! totals are exact.

use rand::distr::{Bernoulli, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;

use crate::dist::{decode_slot_pmf, save_duration_pmf, success_prob_eps};
use crate::error::{Error, Result};
use crate::model::{
    BatteryMode, DiscretePmf, Policy, PolicyConfig, SystemParams, DEFAULT_TAIL_TOL,
};

/// One simulated slot, for tracing and invariant checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotEvent {
    pub slot_index: u64,
    pub energy_arrived: bool,
    pub symbol_sent: bool,
    pub symbol_erased: bool,
    pub battery_after: u64,
}

/// Simulator output: exact accumulated age area, elapsed slots, delivery
/// count, and per-renewal `(q_i, t_i)` samples for error estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub total_area: f64,
    pub total_slots: u64,
    pub deliveries: u64,
    pub q_samples: Option<Vec<f64>>,
    pub t_samples: Option<Vec<u64>>,
}

impl SimStats {
    pub fn empirical_aoi(&self) -> f64 {
        self.total_area / self.total_slots as f64
    }

    /// Delta-method standard error of the empirical AoI from the per-renewal
    /// samples, when at least two full renewals completed.
    pub fn aoi_standard_error(&self) -> Option<f64> {
        let q = self.q_samples.as_deref()?;
        let t = self.t_samples.as_deref()?;
        let tf: Vec<f64> = t.iter().map(|&v| v as f64).collect();
        ratio_delta_method(q, &tf).ok().map(|(_, se)| se)
    }
}

struct AgeTracker {
    area2: u128,
    ren_area2: u128,
    age: u64,
    slots: u64,
    ren_slots: u64,
    deliveries: u64,
    q_samples: Vec<f64>,
    t_samples: Vec<u64>,
}

impl AgeTracker {
    fn new() -> Self {
        AgeTracker {
            area2: 0,
            ren_area2: 0,
            age: 0,
            slots: 0,
            ren_slots: 0,
            deliveries: 0,
            q_samples: Vec::new(),
            t_samples: Vec::new(),
        }
    }

    /// Advances one slot: the age rises linearly from `age` to `age + 1`, so
    /// the slot contributes `age + 1/2` to the area.
    #[inline]
    fn tick(&mut self) {
        let contrib = (2 * self.age + 1) as u128;
        self.area2 += contrib;
        self.ren_area2 += contrib;
        self.age += 1;
        self.slots += 1;
        self.ren_slots += 1;
    }

    /// Registers a delivery at the end of the current slot; the age drops to
    /// the delivered update's own age.
    #[inline]
    fn deliver(&mut self, update_age: u64) {
        self.age = update_age;
        self.deliveries += 1;
    }

    /// Closes a renewal cycle at the end of the current slot.
    fn renewal_boundary(&mut self) {
        self.q_samples.push(self.ren_area2 as f64 / 2.0);
        self.t_samples.push(self.ren_slots);
        self.ren_area2 = 0;
        self.ren_slots = 0;
    }

    fn finish(self, k: u32) -> SimStats {
        debug_assert!(self.deliveries <= self.slots / k as u64);
        SimStats {
            total_area: self.area2 as f64 / 2.0,
            total_slots: self.slots,
            deliveries: self.deliveries,
            q_samples: Some(self.q_samples),
            t_samples: Some(self.t_samples),
        }
    }
}

/// Runs the slotted process for one policy over `horizon` slots with the
/// given seed. Same seed, same output, bit for bit.
pub fn simulate_policy(
    params: &SystemParams,
    cfg: &PolicyConfig,
    horizon: u64,
    seed: u64,
) -> Result<SimStats> {
    let mut rng = stream_rng(seed, 0);
    run_policy(params, cfg, horizon, &mut rng, &mut |_| {})
}

/// As [`simulate_policy`], but also records the first `trace_limit` slot
/// events for inspection.
pub fn simulate_policy_traced(
    params: &SystemParams,
    cfg: &PolicyConfig,
    horizon: u64,
    seed: u64,
    trace_limit: usize,
) -> Result<(SimStats, Vec<SlotEvent>)> {
    let mut rng = stream_rng(seed, 0);
    let mut events = Vec::new();
    let stats = run_policy(params, cfg, horizon, &mut rng, &mut |ev| {
        if events.len() < trace_limit {
            events.push(ev);
        }
    })?;
    Ok((stats, events))
}

/// Runs `reps` independent replications in parallel, one RNG stream per
/// replication index, and returns them in index order so aggregate statistics
/// are deterministic.
pub fn run_replications(
    params: &SystemParams,
    cfg: &PolicyConfig,
    horizon: u64,
    seed: u64,
    reps: u64,
) -> Result<Vec<SimStats>> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, rep);
            run_policy(params, cfg, horizon, &mut rng, &mut |_| {})
        })
        .collect()
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn run_policy(
    params: &SystemParams,
    cfg: &PolicyConfig,
    horizon: u64,
    rng: &mut ChaCha8Rng,
    trace: &mut dyn FnMut(SlotEvent),
) -> Result<SimStats> {
    cfg.validate(params)?;
    if horizon < 10 * params.k() as u64 {
        return Err(Error::InvalidParam(format!(
            "horizon {horizon} too small; need at least 10 k = {} slots",
            10 * params.k()
        )));
    }
    let arrival = Bernoulli::new(params.p()).expect("validated probability");
    let erasure = Bernoulli::new(params.delta()).expect("validated probability");
    let k = params.k();
    match cfg.policy {
        Policy::MdsBe => Ok(run_mds_be(
            k,
            cfg.n.unwrap(),
            horizon,
            &arrival,
            &erasure,
            rng,
            trace,
        )),
        Policy::MdsSt => Ok(run_mds_st(
            k,
            cfg.n.unwrap(),
            cfg.battery_mode,
            horizon,
            &arrival,
            &erasure,
            rng,
            trace,
        )),
        Policy::RcBe => Ok(run_rc_be(k, horizon, &arrival, &erasure, rng, trace)),
        Policy::RcSt => Ok(run_rc_st(
            k,
            cfg.m.unwrap(),
            horizon,
            &arrival,
            &erasure,
            rng,
            trace,
        )),
    }
}

/// MDS best-effort: a fresh update starts every `n` slots; each slot sends a
/// symbol whenever energy is available. Energy arriving in a slot is usable
/// in that same slot, so the battery never accumulates while transmitting
/// and per-symbol success is an independent Bernoulli(q).
fn run_mds_be(
    k: u32,
    n: u32,
    horizon: u64,
    arrival: &Bernoulli,
    erasure: &Bernoulli,
    rng: &mut ChaCha8Rng,
    trace: &mut dyn FnMut(SlotEvent),
) -> SimStats {
    let mut tr = AgeTracker::new();
    let mut battery: u64 = 0;
    let mut received: u32 = 0;
    let mut delivered = false;
    let mut round_start: u64 = 0;
    for t in 0..horizon {
        if t % n as u64 == 0 {
            round_start = t;
            received = 0;
            delivered = false;
        }
        let arrived = arrival.sample(rng);
        if arrived {
            battery += 1;
        }
        let sent = battery >= 1;
        let mut erased = false;
        if sent {
            battery -= 1;
            erased = erasure.sample(rng);
        }
        tr.tick();
        if sent && !erased && !delivered {
            received += 1;
            if received == k {
                delivered = true;
                tr.deliver(t + 1 - round_start);
            }
        }
        if delivered && (t + 1) % n as u64 == 0 {
            tr.renewal_boundary();
        }
        trace(SlotEvent {
            slot_index: t,
            energy_arrived: arrived,
            symbol_sent: sent,
            symbol_erased: erased,
            battery_after: battery,
        });
    }
    tr.finish(k)
}

/// MDS save-and-transmit: bank energy in blocks of `n` slots until the
/// battery holds at least `n`, then transmit an `n`-slot round during which
/// no outage is possible. In analysis-faithful mode the battery is drained
/// after every round; in physical mode leftovers carry over and the saving
/// phase is skipped while the battery already holds `n`.
#[allow(clippy::too_many_arguments)]
fn run_mds_st(
    k: u32,
    n: u32,
    mode: BatteryMode,
    horizon: u64,
    arrival: &Bernoulli,
    erasure: &Bernoulli,
    rng: &mut ChaCha8Rng,
    trace: &mut dyn FnMut(SlotEvent),
) -> SimStats {
    let mut tr = AgeTracker::new();
    let mut battery: u64 = 0;
    let mut t: u64 = 0;
    'outer: loop {
        while battery < n as u64 {
            for _ in 0..n {
                if t >= horizon {
                    break 'outer;
                }
                let arrived = arrival.sample(rng);
                if arrived {
                    battery += 1;
                }
                tr.tick();
                trace(SlotEvent {
                    slot_index: t,
                    energy_arrived: arrived,
                    symbol_sent: false,
                    symbol_erased: false,
                    battery_after: battery,
                });
                t += 1;
            }
        }
        let round_start = t;
        let mut received: u32 = 0;
        let mut delivered = false;
        for _ in 0..n {
            if t >= horizon {
                break 'outer;
            }
            let arrived = arrival.sample(rng);
            if arrived {
                battery += 1;
            }
            debug_assert!(battery >= 1, "energy outage inside a round");
            battery -= 1;
            let erased = erasure.sample(rng);
            tr.tick();
            if !erased && !delivered {
                received += 1;
                if received == k {
                    delivered = true;
                    tr.deliver(t + 1 - round_start);
                }
            }
            trace(SlotEvent {
                slot_index: t,
                energy_arrived: arrived,
                symbol_sent: true,
                symbol_erased: erased,
                battery_after: battery,
            });
            t += 1;
        }
        if mode == BatteryMode::AnalysisFaithful {
            battery = 0;
        }
        if delivered {
            tr.renewal_boundary();
        }
    }
    tr.finish(k)
}

/// Rateless best-effort: one update at a time, a symbol attempted every slot
/// energy permits, delivery at the k-th success, next update generated
/// immediately.
fn run_rc_be(
    k: u32,
    horizon: u64,
    arrival: &Bernoulli,
    erasure: &Bernoulli,
    rng: &mut ChaCha8Rng,
    trace: &mut dyn FnMut(SlotEvent),
) -> SimStats {
    let mut tr = AgeTracker::new();
    let mut battery: u64 = 0;
    let mut received: u32 = 0;
    let mut gen: u64 = 0;
    for t in 0..horizon {
        let arrived = arrival.sample(rng);
        if arrived {
            battery += 1;
        }
        let sent = battery >= 1;
        let mut erased = false;
        if sent {
            battery -= 1;
            erased = erasure.sample(rng);
        }
        tr.tick();
        if sent && !erased {
            received += 1;
            if received == k {
                tr.deliver(t + 1 - gen);
                tr.renewal_boundary();
                received = 0;
                gen = t + 1;
            }
        }
        trace(SlotEvent {
            slot_index: t,
            energy_arrived: arrived,
            symbol_sent: sent,
            symbol_erased: erased,
            battery_after: battery,
        });
    }
    tr.finish(k)
}

/// Rateless save-and-transmit: after each renewal the transmitter banks
/// energy for `m` slots, generates the update, transmits every slot until
/// the battery first hits zero (erasures still apply), then finishes any
/// remaining symbols best-effort. The battery is exactly zero when the
/// best-effort phase begins.
fn run_rc_st(
    k: u32,
    m: u32,
    horizon: u64,
    arrival: &Bernoulli,
    erasure: &Bernoulli,
    rng: &mut ChaCha8Rng,
    trace: &mut dyn FnMut(SlotEvent),
) -> SimStats {
    let mut tr = AgeTracker::new();
    let mut battery: u64 = 0;
    let mut t: u64 = 0;
    'outer: loop {
        for _ in 0..m {
            if t >= horizon {
                break 'outer;
            }
            let arrived = arrival.sample(rng);
            if arrived {
                battery += 1;
            }
            tr.tick();
            trace(SlotEvent {
                slot_index: t,
                energy_arrived: arrived,
                symbol_sent: false,
                symbol_erased: false,
                battery_after: battery,
            });
            t += 1;
        }
        let gen = t;
        let mut received: u32 = 0;
        let mut delivered = false;
        while battery > 0 {
            if t >= horizon {
                break 'outer;
            }
            let arrived = arrival.sample(rng);
            if arrived {
                battery += 1;
            }
            battery -= 1;
            let erased = erasure.sample(rng);
            tr.tick();
            if !erased && !delivered {
                received += 1;
                if received == k {
                    delivered = true;
                    tr.deliver(t + 1 - gen);
                }
            }
            trace(SlotEvent {
                slot_index: t,
                energy_arrived: arrived,
                symbol_sent: true,
                symbol_erased: erased,
                battery_after: battery,
            });
            t += 1;
        }
        while !delivered {
            if t >= horizon {
                break 'outer;
            }
            let arrived = arrival.sample(rng);
            let sent = arrived; // battery is zero; arrivals are spent in place
            let mut erased = false;
            if sent {
                erased = erasure.sample(rng);
            }
            tr.tick();
            if sent && !erased {
                received += 1;
                if received == k {
                    delivered = true;
                    tr.deliver(t + 1 - gen);
                }
            }
            trace(SlotEvent {
                slot_index: t,
                energy_arrived: arrived,
                symbol_sent: sent,
                symbol_erased: erased,
                battery_after: 0,
            });
            t += 1;
        }
        tr.renewal_boundary();
    }
    tr.finish(k)
}

// ---------------------------------------------------------------------------
// Renewal-reward oracle samplers
// ---------------------------------------------------------------------------

/// Monte Carlo estimate from a renewal oracle: sample means of the per-cycle
/// age area and cycle length, their ratio, and delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub mean_q: f64,
    pub mean_t: f64,
    pub aoi: f64,
    pub se_q: f64,
    pub se_t: f64,
    pub se_aoi: f64,
    pub renewals: u64,
}

struct MomentAccumulator {
    n: u64,
    sum_q2: u128,
    sum_t: u128,
    sum_q2_sq: u128,
    sum_t_sq: u128,
    sum_q2_t: u128,
}

impl MomentAccumulator {
    fn new() -> Self {
        MomentAccumulator {
            n: 0,
            sum_q2: 0,
            sum_t: 0,
            sum_q2_sq: 0,
            sum_t_sq: 0,
            sum_q2_t: 0,
        }
    }

    /// Records one renewal with twice the age area `q2` and length `t`.
    fn push(&mut self, q2: u128, t: u128) {
        self.n += 1;
        self.sum_q2 += q2;
        self.sum_t += t;
        self.sum_q2_sq += q2 * q2;
        self.sum_t_sq += t * t;
        self.sum_q2_t += q2 * t;
    }

    fn estimate(&self) -> OracleEstimate {
        let n = self.n as f64;
        let mean_q = self.sum_q2 as f64 / (2.0 * n);
        let mean_t = self.sum_t as f64 / n;
        let aoi = self.sum_q2 as f64 / (2.0 * self.sum_t as f64);
        if self.n < 2 {
            return OracleEstimate {
                mean_q,
                mean_t,
                aoi,
                se_q: f64::NAN,
                se_t: f64::NAN,
                se_aoi: f64::NAN,
                renewals: self.n,
            };
        }
        let var_q = ((self.sum_q2_sq as f64 / 4.0 - n * mean_q * mean_q) / (n - 1.0)).max(0.0);
        let var_t = ((self.sum_t_sq as f64 - n * mean_t * mean_t) / (n - 1.0)).max(0.0);
        let cov_qt = (self.sum_q2_t as f64 / 2.0 - n * mean_q * mean_t) / (n - 1.0);
        let ratio_var = (var_q - 2.0 * aoi * cov_qt + aoi * aoi * var_t).max(0.0);
        OracleEstimate {
            mean_q,
            mean_t,
            aoi,
            se_q: (var_q / n).sqrt(),
            se_t: (var_t / n).sqrt(),
            se_aoi: (ratio_var / n).sqrt() / mean_t,
            renewals: self.n,
        }
    }
}

/// Compact inverse-CDF sampler over a pmf's non-zero support.
struct TableSampler {
    values: Vec<i64>,
    cum: Vec<f64>,
}

impl TableSampler {
    fn from_pmf(pmf: &DiscretePmf) -> Self {
        let mut values = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for (v, mass) in pmf.iter() {
            if mass > 0.0 {
                acc += mass;
                values.push(v);
                cum.push(acc);
            }
        }
        TableSampler { values, cum }
    }

    /// Draws conditioned on the stored support; the truncated tail, already
    /// below the pmf's tolerance, never gets selected.
    fn sample(&self, rng: &mut ChaCha8Rng) -> i64 {
        let total = *self.cum.last().expect("non-empty support");
        let u: f64 = rng.random::<f64>() * total;
        let idx = self.cum.partition_point(|&c| c <= u);
        self.values[idx.min(self.values.len() - 1)]
    }
}

/// Number of Bernoulli(`prob`) trials up to and including the first success.
#[inline]
fn sample_geometric(rng: &mut ChaCha8Rng, prob: f64) -> u64 {
    if prob >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    1 + ((1.0 - u).ln() / (1.0 - prob).ln()) as u64
}

#[inline]
fn sample_binomial(rng: &mut ChaCha8Rng, trials: u64, prob: f64) -> u64 {
    if trials == 0 {
        return 0;
    }
    Binomial::new(trials, prob)
        .expect("validated probability")
        .sample(rng)
}

/// Twice the per-renewal age area of MDS save-and-transmit, assembled from
/// the area geometry: a trapezoid over the renewal prefix plus the wedge
/// between delivery and the round boundary.
pub fn mds_q_area_twice_nested(n: u64, rounds: u64, decode_slot: u64, save_total: u64) -> u128 {
    let n = n as u128;
    let v = rounds as u128;
    let x = decode_slot as u128;
    let s = save_total as u128;
    let prefix = n * (v - 1) + x + s;
    2 * n * prefix + prefix * prefix + n * n - x * x
}

/// Twice the per-renewal age area of MDS save-and-transmit, fully expanded.
/// Must agree with [`mds_q_area_twice_nested`] exactly on every sample.
pub fn mds_q_area_twice_expanded(n: u64, rounds: u64, decode_slot: u64, save_total: u64) -> u128 {
    let n = n as u128;
    let v = rounds as u128;
    let x = decode_slot as u128;
    let s = save_total as u128;
    n * n * v * v + 2 * n * v * x + 2 * n * s + 2 * (n * (v - 1) + x) * s + s * s
}

/// Renewal-reward oracle for MDS save-and-transmit: samples the round count,
/// decode instant, and save durations from their distributions, evaluates the
/// per-renewal area in exact integer arithmetic through both printed forms,
/// and returns the sample means and their ratio.
pub fn renewal_oracle_mds_st(
    params: &SystemParams,
    n: u32,
    renewals: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    if n < params.k() {
        return Err(Error::InvalidParam(format!(
            "blocklength n = {n} must be at least k = {}",
            params.k()
        )));
    }
    if renewals < 1 {
        return Err(Error::InvalidParam("need at least one renewal".into()));
    }
    let s = 1.0 - params.delta();
    let eps = success_prob_eps(params.k(), n, s)?;
    let decode = TableSampler::from_pmf(&decode_slot_pmf(params.k(), n, s)?);
    let saves = TableSampler::from_pmf(&save_duration_pmf(n, params.p(), DEFAULT_TAIL_TOL)?);

    let mut rng = stream_rng(seed, 0);
    let mut acc = MomentAccumulator::new();
    for _ in 0..renewals {
        let v = sample_geometric(&mut rng, eps);
        let x = decode.sample(&mut rng) as u64;
        let mut save_total: u64 = 0;
        for _ in 0..v {
            save_total += saves.sample(&mut rng) as u64;
        }
        let q2 = mds_q_area_twice_nested(n as u64, v, x, save_total);
        let q2_check = mds_q_area_twice_expanded(n as u64, v, x, save_total);
        assert_eq!(
            q2, q2_check,
            "the two area forms disagree at v={v} x={x} s={save_total}"
        );
        let t = n as u128 * v as u128 + save_total as u128;
        acc.push(q2, t);
    }
    Ok(acc.estimate())
}

/// Renewal-reward oracle for rateless save-and-transmit: simulates the
/// banked-energy thinning chain for the no-outage duration, the erasure
/// thinning of its symbols, and the geometric best-effort remainder, then
/// accumulates the renewal numerator including the cross term with the
/// previous renewal.
pub fn renewal_oracle_rc_st(
    params: &SystemParams,
    m: u32,
    renewals: u64,
    seed: u64,
) -> Result<OracleEstimate> {
    if params.p() >= 1.0 {
        return Err(Error::Unsupported(
            "p = 1: the no-outage phase never terminates; use the rateless \
             best-effort analysis (RC_BE) instead"
                .into(),
        ));
    }
    if renewals < 1 {
        return Err(Error::InvalidParam("need at least one renewal".into()));
    }
    let p = params.p();
    let s = 1.0 - params.delta();
    let q = params.q();
    let k = params.k() as u64;
    let mut rng = stream_rng(seed, 0);

    let draw_cycle = |rng: &mut ChaCha8Rng| -> (u64, u64) {
        let mut generation = sample_binomial(rng, m as u64, p);
        let mut no_outage: u64 = 0;
        while generation > 0 {
            no_outage += generation;
            generation = sample_binomial(rng, generation, p);
        }
        let successes = sample_binomial(rng, no_outage, s);
        let shortfall = k.saturating_sub(successes);
        let mut best_effort: u64 = 0;
        for _ in 0..shortfall {
            best_effort += sample_geometric(rng, q);
        }
        (no_outage, best_effort)
    };

    // The numerator couples each renewal to the previous one; draw one extra
    // cycle up front to stand in for it.
    let (mut y_prev, mut z_prev) = draw_cycle(&mut rng);
    let mut acc = MomentAccumulator::new();
    for _ in 0..renewals {
        let (y, z) = draw_cycle(&mut rng);
        let t = m as u128 + y as u128 + z as u128;
        let carry = y_prev as u128 + z_prev as u128;
        let q2 = t * t + 2 * t * carry;
        acc.push(q2, t);
        (y_prev, z_prev) = (y, z);
    }
    Ok(acc.estimate())
}

// ---------------------------------------------------------------------------
// Estimation helpers
// ---------------------------------------------------------------------------

/// Sample mean and standard error of the mean.
pub fn estimate_ci(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InvalidParam(
            "need at least two samples to estimate a standard error".into(),
        ));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Ratio of sample means with its delta-method standard error, for paired
/// per-renewal samples `(q_i, t_i)`.
pub fn ratio_delta_method(q: &[f64], t: &[f64]) -> Result<(f64, f64)> {
    if q.len() != t.len() {
        return Err(Error::InvalidParam(
            "paired samples must have equal length".into(),
        ));
    }
    if q.len() < 2 {
        return Err(Error::InvalidParam(
            "need at least two samples to estimate a standard error".into(),
        ));
    }
    let n = q.len() as f64;
    let mean_q = q.iter().sum::<f64>() / n;
    let mean_t = t.iter().sum::<f64>() / n;
    let ratio = mean_q / mean_t;
    let mut var_q = 0.0;
    let mut var_t = 0.0;
    let mut cov = 0.0;
    for (&qi, &ti) in q.iter().zip(t.iter()) {
        var_q += (qi - mean_q) * (qi - mean_q);
        var_t += (ti - mean_t) * (ti - mean_t);
        cov += (qi - mean_q) * (ti - mean_t);
    }
    var_q /= n - 1.0;
    var_t /= n - 1.0;
    cov /= n - 1.0;
    let ratio_var = (var_q - 2.0 * ratio * cov + ratio * ratio * var_t).max(0.0);
    Ok((ratio, (ratio_var / n).sqrt() / mean_t))
}
