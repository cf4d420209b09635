//! Domain types shared by the analysis, simulation, and search modules:
//! channel/source parameters, policy configuration, finite-support pmfs,
//! and the renewal-reward age identity.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance for pmf normalization checks (sum of masses plus tail mass).
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Default absolute tail tolerance for truncated distributions.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Channel and source parameters shared by all four policies.
///
/// `p` is the probability of a unit energy arrival per slot, `delta` the
/// probability of symbol erasure per slot, and `k` the number of symbols
/// per uncoded status update. The derived per-symbol success probability
/// under best-effort transmission is `q = p * (1 - delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    p: f64,
    delta: f64,
    k: u32,
}

impl SystemParams {
    /// Validates a candidate parameter set.
    ///
    /// `p = 0` (no energy ever arrives) and `delta = 1` (every symbol is
    /// erased) are rejected outright: both make the average age infinite.
    pub fn new(p: f64, delta: f64, k: u32) -> Result<Self> {
        if !p.is_finite() || p <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "p = {p}: no energy arrivals; p must satisfy 0 < p <= 1"
            )));
        }
        if p > 1.0 {
            return Err(Error::InvalidParam(format!(
                "p = {p} is not a probability (0 < p <= 1)"
            )));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InvalidParam(format!(
                "delta = {delta} must satisfy 0 <= delta < 1"
            )));
        }
        if delta >= 1.0 {
            return Err(Error::InvalidParam(format!(
                "delta = {delta}: every symbol is erased; delta must be < 1"
            )));
        }
        if k < 1 {
            return Err(Error::InvalidParam("k must be a positive integer".into()));
        }
        Ok(Self { p, delta, k })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Per-symbol success probability under best-effort: `q = p (1 - delta)`.
    pub fn q(&self) -> f64 {
        self.p * (1.0 - self.delta)
    }
}

/// Validates a raw `(p, delta, k)` triple. Alias for [`SystemParams::new`];
/// validating an already validated set returns it unchanged.
pub fn validate_params(p: f64, delta: f64, k: u32) -> Result<SystemParams> {
    SystemParams::new(p, delta, k)
}

/// The four transmission policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// MDS coding, best-effort transmission.
    MdsBe,
    /// MDS coding, save-and-transmit.
    MdsSt,
    /// Rateless coding, best-effort transmission.
    RcBe,
    /// Rateless coding, save-and-transmit.
    RcSt,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::MdsBe, Policy::MdsSt, Policy::RcBe, Policy::RcSt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::MdsSt => "MDS_ST",
            Policy::MdsBe => "MDS_BE",
            Policy::RcBe => "RC_BE",
            Policy::RcSt => "RC_ST",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "MDS_ST" => Ok(Policy::MdsSt),
            "MDS_BE" => Ok(Policy::MdsBe),
            "RC_BE" => Ok(Policy::RcBe),
            "RC_ST" => Ok(Policy::RcSt),
            other => Err(Error::InvalidParam(format!(
                "unknown policy '{other}' (expected MDS_ST, MDS_BE, RC_BE, or RC_ST)"
            ))),
        }
    }
}

/// Battery bookkeeping variant for the MDS save-and-transmit simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatteryMode {
    /// Battery is drained to zero after every transmission round, making the
    /// save durations independent and identically distributed. This is the
    /// regime the closed-form expressions describe and upper-bounds the
    /// physical policy.
    #[default]
    AnalysisFaithful,
    /// Leftover energy carries over between rounds; saving phases shorten
    /// accordingly (and are skipped when the battery already holds `n`).
    Physical,
}

impl BatteryMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BatteryMode::AnalysisFaithful => "analysis-faithful",
            BatteryMode::Physical => "physical",
        }
    }
}

impl FromStr for BatteryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "analysis-faithful" => Ok(BatteryMode::AnalysisFaithful),
            "physical" => Ok(BatteryMode::Physical),
            other => Err(Error::InvalidParam(format!(
                "unknown battery mode '{other}' (expected analysis-faithful or physical)"
            ))),
        }
    }
}

/// Policy discriminator plus its free parameter: the blocklength `n` for the
/// MDS policies, or the saving duration `m` for rateless save-and-transmit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyConfig {
    pub policy: Policy,
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub battery_mode: BatteryMode,
}

impl PolicyConfig {
    pub fn mds_st(n: u32) -> Self {
        Self {
            policy: Policy::MdsSt,
            n: Some(n),
            m: None,
            battery_mode: BatteryMode::AnalysisFaithful,
        }
    }

    pub fn mds_be(n: u32) -> Self {
        Self {
            policy: Policy::MdsBe,
            n: Some(n),
            m: None,
            battery_mode: BatteryMode::AnalysisFaithful,
        }
    }

    pub fn rc_be() -> Self {
        Self {
            policy: Policy::RcBe,
            n: None,
            m: None,
            battery_mode: BatteryMode::AnalysisFaithful,
        }
    }

    pub fn rc_st(m: u32) -> Self {
        Self {
            policy: Policy::RcSt,
            n: None,
            m: Some(m),
            battery_mode: BatteryMode::AnalysisFaithful,
        }
    }

    pub fn with_battery_mode(mut self, mode: BatteryMode) -> Self {
        self.battery_mode = mode;
        self
    }

    /// Checks the configuration against the system parameters: MDS policies
    /// require `n >= k`, rateless save-and-transmit requires `m`, and unused
    /// free parameters are rejected rather than silently ignored.
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        match self.policy {
            Policy::MdsSt | Policy::MdsBe => {
                let n = self.n.ok_or_else(|| {
                    Error::InvalidConfig(format!("{} requires a blocklength n", self.policy))
                })?;
                if n < params.k() {
                    return Err(Error::InvalidConfig(format!(
                        "blocklength n = {n} must be at least k = {}",
                        params.k()
                    )));
                }
                if self.m.is_some() {
                    return Err(Error::InvalidConfig(format!(
                        "{} does not take a saving duration m",
                        self.policy
                    )));
                }
            }
            Policy::RcBe => {
                if self.n.is_some() || self.m.is_some() {
                    return Err(Error::InvalidConfig("RC_BE takes no free parameter".into()));
                }
            }
            Policy::RcSt => {
                if self.m.is_none() {
                    return Err(Error::InvalidConfig(
                        "RC_ST requires a saving duration m".into(),
                    ));
                }
                if self.n.is_some() {
                    return Err(Error::InvalidConfig(
                        "RC_ST does not take a blocklength n".into(),
                    ));
                }
            }
        }
        if self.battery_mode == BatteryMode::Physical && self.policy != Policy::MdsSt {
            return Err(Error::InvalidConfig(
                "battery mode applies to MDS_ST simulation only".into(),
            ));
        }
        Ok(())
    }
}

/// Finite-support probability mass function over consecutive integers
/// starting at `offset`, with the probability truncated beyond the stored
/// support recorded in `tail_mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    offset: i64,
    masses: Vec<f64>,
    tail_mass: f64,
}

impl DiscretePmf {
    /// Builds a pmf, verifying non-negativity and normalization to within
    /// [`NORMALIZATION_TOL`].
    pub fn new(offset: i64, masses: Vec<f64>, tail_mass: f64) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::InvalidParam(
                "pmf must have at least one mass".into(),
            ));
        }
        if tail_mass < 0.0 || !tail_mass.is_finite() {
            return Err(Error::InvalidParam(format!(
                "tail mass {tail_mass} must be finite and non-negative"
            )));
        }
        if masses.iter().any(|&m| m < 0.0 || !m.is_finite()) {
            return Err(Error::InvalidParam(
                "pmf masses must be finite and non-negative".into(),
            ));
        }
        let total: f64 = masses.iter().sum::<f64>() + tail_mass;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParam(format!(
                "pmf masses plus tail sum to {total}, expected 1 within {NORMALIZATION_TOL:e}"
            )));
        }
        Ok(Self {
            offset,
            masses,
            tail_mass,
        })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Largest stored support point.
    pub fn max_support(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    /// Probability mass at integer value `v` (zero outside the stored support).
    pub fn mass_at(&self, v: i64) -> f64 {
        if v < self.offset {
            return 0.0;
        }
        let idx = (v - self.offset) as usize;
        self.masses.get(idx).copied().unwrap_or(0.0)
    }

    /// Iterates over `(value, mass)` pairs of the stored support.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, &m)| (self.offset + i as i64, m))
    }

    /// Mean over the stored (truncated) support.
    pub fn mean(&self) -> f64 {
        self.iter().map(|(v, m)| v as f64 * m).sum()
    }

    /// Second moment over the stored (truncated) support.
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(v, m)| (v as f64) * (v as f64) * m).sum()
    }

    /// Variance over the stored (truncated) support.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.second_moment() - mean * mean
    }

    /// Inverse-CDF draw conditioned on the stored support: `u` is scaled by
    /// the stored mass so the truncated tail is never selected.
    pub fn sample_value(&self, u: f64) -> i64 {
        let stored: f64 = self.masses.iter().sum();
        let target = u.clamp(0.0, 1.0) * stored;
        let mut acc = 0.0;
        for (v, m) in self.iter() {
            acc += m;
            if target < acc {
                return v;
            }
        }
        self.max_support()
    }
}

/// Analytic result: average age of information together with its
/// renewal-reward constituents, the expected per-renewal age area `mean_q`
/// (slot^2) and the expected renewal length `mean_t` (slots).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AoiBreakdown {
    pub mean_q: f64,
    pub mean_t: f64,
    pub aoi: f64,
}

/// Renewal-reward identity: average age equals expected age area per renewal
/// divided by expected renewal length.
pub fn renewal_aoi(mean_q: f64, mean_t: f64) -> Result<AoiBreakdown> {
    if mean_t <= 0.0 || !mean_t.is_finite() {
        return Err(Error::InvalidParam(format!(
            "mean renewal length {mean_t} must be positive and finite"
        )));
    }
    if mean_q <= 0.0 || !mean_q.is_finite() {
        return Err(Error::InvalidParam(format!(
            "mean age area {mean_q} must be positive and finite"
        )));
    }
    Ok(AoiBreakdown {
        mean_q,
        mean_t,
        aoi: mean_q / mean_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_accept_and_derive_q() {
        let params = SystemParams::new(0.5, 0.3, 100).unwrap();
        assert!((params.q() - 0.35).abs() < 1e-15);
        let params = SystemParams::new(0.2, 0.3, 100).unwrap();
        assert!((params.q() - 0.14).abs() < 1e-15);
    }

    #[test]
    fn params_reject_degenerate() {
        let err = SystemParams::new(0.0, 0.3, 100).unwrap_err();
        assert!(err.to_string().contains("no energy arrivals"), "{err}");
        assert!(SystemParams::new(0.5, 1.0, 100).is_err());
        assert!(SystemParams::new(0.5, -0.1, 100).is_err());
        assert!(SystemParams::new(1.5, 0.3, 100).is_err());
        assert!(SystemParams::new(0.5, 0.3, 0).is_err());
        assert!(SystemParams::new(f64::NAN, 0.3, 1).is_err());
    }

    #[test]
    fn validate_is_idempotent() {
        let a = validate_params(0.7, 0.25, 42).unwrap();
        let b = validate_params(a.p(), a.delta(), a.k()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn renewal_identity() {
        let b = renewal_aoi(50.0, 10.0).unwrap();
        assert_eq!(b.aoi, 5.0);
        // Deterministic renewal of length T starting from age c has area
        // T^2/2 + T c, hence age T/2 + c.
        let (t, c) = (10.0_f64, 3.0_f64);
        let b = renewal_aoi(t * t / 2.0 + t * c, t).unwrap();
        assert!((b.aoi - (t / 2.0 + c)).abs() < 1e-12);
        assert!(renewal_aoi(-1.0, 10.0).is_err());
        assert!(renewal_aoi(10.0, 0.0).is_err());
    }

    #[test]
    fn breakdown_product_recovers_area() {
        for (q, t) in [(224.0 / 9.0, 16.0 / 3.0), (7.0, 2.0), (1e8, 997.0)] {
            let b = renewal_aoi(q, t).unwrap();
            let back = b.aoi * b.mean_t;
            assert!((back - b.mean_q).abs() <= 4.0 * f64::EPSILON * b.mean_q.abs());
        }
    }

    #[test]
    fn policy_config_validation() {
        let params = SystemParams::new(0.5, 0.3, 10).unwrap();
        assert!(PolicyConfig::mds_st(15).validate(&params).is_ok());
        assert!(PolicyConfig::mds_st(9).validate(&params).is_err());
        assert!(PolicyConfig::rc_st(0).validate(&params).is_ok());
        assert!(PolicyConfig::rc_be().validate(&params).is_ok());

        let mut bad = PolicyConfig::rc_be();
        bad.n = Some(12);
        assert!(bad.validate(&params).is_err());

        let mut bad = PolicyConfig::mds_be(15);
        bad.m = Some(3);
        assert!(bad.validate(&params).is_err());

        let bad = PolicyConfig::rc_st(5).with_battery_mode(BatteryMode::Physical);
        assert!(bad.validate(&params).is_err());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("mds-st".parse::<Policy>().unwrap(), Policy::MdsSt);
        assert_eq!("RC_BE".parse::<Policy>().unwrap(), Policy::RcBe);
        assert!("fountain".parse::<Policy>().is_err());
    }

    #[test]
    fn pmf_validation_and_moments() {
        let pmf = DiscretePmf::new(2, vec![0.25, 0.0, 0.75], 0.0).unwrap();
        assert_eq!(pmf.mass_at(2), 0.25);
        assert_eq!(pmf.mass_at(4), 0.75);
        assert_eq!(pmf.mass_at(5), 0.0);
        assert!((pmf.mean() - 3.5).abs() < 1e-15);
        assert!((pmf.second_moment() - 13.0).abs() < 1e-15);

        assert!(DiscretePmf::new(0, vec![0.5, 0.4], 0.0).is_err());
        assert!(DiscretePmf::new(0, vec![0.5, -0.1, 0.6], 0.0).is_err());
        assert!(DiscretePmf::new(0, vec![0.5, 0.5], 0.1).is_err());
        assert!(DiscretePmf::new(0, vec![0.5, 0.4999999999], 1e-10).is_ok());
    }

    #[test]
    fn pmf_sampling_respects_truncation() {
        let pmf = DiscretePmf::new(0, vec![0.5, 0.25, 0.25 - 1e-10], 1e-10).unwrap();
        assert_eq!(pmf.sample_value(0.0), 0);
        assert_eq!(pmf.sample_value(0.49), 0);
        assert_eq!(pmf.sample_value(0.51), 1);
        assert_eq!(pmf.sample_value(0.9999), 2);
        assert_eq!(pmf.sample_value(1.0), 2);
    }
}
