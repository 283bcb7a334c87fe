//! Trust-state representation, composite scoring, temporal decay and
//! ceiling clamping.
//!
//! A trust state is a point in `[0,1]^5`, one coordinate per
//! [`TrustComponent`]. Every vector in this crate is stored in the canonical
//! component order `(id, dev, ctx, net, pol)`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `Σ w_j = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrustComponent {
    Identity,
    Device,
    Context,
    Network,
    Policy,
}

impl TrustComponent {
    pub const ALL: [TrustComponent; 5] = [
        TrustComponent::Identity,
        TrustComponent::Device,
        TrustComponent::Context,
        TrustComponent::Network,
        TrustComponent::Policy,
    ];

    pub const fn index(self) -> usize {
        self as usize
    }

    /// Short label used in scenario files and CSV headers.
    pub const fn short(self) -> &'static str {
        match self {
            TrustComponent::Identity => "id",
            TrustComponent::Device => "dev",
            TrustComponent::Context => "ctx",
            TrustComponent::Network => "net",
            TrustComponent::Policy => "pol",
        }
    }

    pub fn from_short(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.short() == s)
    }
}

impl fmt::Display for TrustComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

/// One value per trust component, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerComponent<T>(pub [T; 5]);

impl<T: Copy> PerComponent<T> {
    pub const fn splat(v: T) -> Self {
        PerComponent([v; 5])
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> PerComponent<U> {
        PerComponent(self.0.map(f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (TrustComponent, T)> + '_ {
        TrustComponent::ALL.into_iter().zip(self.0.iter().copied())
    }
}

impl<T> Index<TrustComponent> for PerComponent<T> {
    type Output = T;
    fn index(&self, c: TrustComponent) -> &T {
        &self.0[c.index()]
    }
}

impl<T> IndexMut<TrustComponent> for PerComponent<T> {
    fn index_mut(&mut self, c: TrustComponent) -> &mut T {
        &mut self.0[c.index()]
    }
}

fn check_unit(what: impl Into<String>, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::OutOfUnitRange {
            what: what.into(),
            value,
        })
    }
}

/// Trust state `s(d, t, R)`; every component lies in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct TrustState([f64; 5]);

impl TrustState {
    pub const ZERO: TrustState = TrustState([0.0; 5]);
    pub const ONE: TrustState = TrustState([1.0; 5]);

    pub fn new(values: [f64; 5]) -> Result<Self> {
        for (c, v) in TrustComponent::ALL.into_iter().zip(values) {
            check_unit(format!("s_{c}"), v)?;
        }
        Ok(TrustState(values))
    }

    /// Uniform state with every component equal to `v`.
    pub fn uniform(v: f64) -> Result<Self> {
        Self::new([v; 5])
    }

    pub fn get(&self, c: TrustComponent) -> f64 {
        self.0[c.index()]
    }

    pub fn values(&self) -> [f64; 5] {
        self.0
    }

    /// Replace one component, clamping into `[0, 1]`.
    pub fn with(mut self, c: TrustComponent, v: f64) -> Self {
        self.0[c.index()] = v.clamp(0.0, 1.0);
        self
    }

    /// Component-wise map whose output is clamped into `[0, 1]`.
    pub(crate) fn map_clamped(self, mut f: impl FnMut(TrustComponent, f64) -> f64) -> Self {
        let mut out = self.0;
        for c in TrustComponent::ALL {
            out[c.index()] = f(c, self.0[c.index()]).clamp(0.0, 1.0);
        }
        TrustState(out)
    }

    /// `true` when every component of `self` is `<=` the matching one in `other`.
    pub fn le(&self, other: &TrustState) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }
}

impl TryFrom<[f64; 5]> for TrustState {
    type Error = Error;
    fn try_from(v: [f64; 5]) -> Result<Self> {
        TrustState::new(v)
    }
}

impl From<TrustState> for [f64; 5] {
    fn from(s: TrustState) -> [f64; 5] {
        s.0
    }
}

/// Policy weights `w`: strictly positive, summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct WeightVector([f64; 5]);

impl WeightVector {
    pub fn new(w: [f64; 5]) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.iter().any(|x| !(*x > 0.0 && *x <= 1.0)) || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidWeights { sum });
        }
        Ok(WeightVector(w))
    }

    /// Commercial IoT profile `(0.20, 0.15, 0.20, 0.25, 0.20)`.
    pub fn commercial() -> Self {
        WeightVector([0.20, 0.15, 0.20, 0.25, 0.20])
    }

    /// Defence / contested-environment profile `(0.30, 0.25, 0.15, 0.15, 0.15)`.
    pub fn defence() -> Self {
        WeightVector([0.30, 0.25, 0.15, 0.15, 0.15])
    }

    pub fn uniform() -> Self {
        WeightVector([0.2; 5])
    }

    pub fn get(&self, c: TrustComponent) -> f64 {
        self.0[c.index()]
    }

    pub fn values(&self) -> [f64; 5] {
        self.0
    }
}

impl TryFrom<[f64; 5]> for WeightVector {
    type Error = Error;
    fn try_from(v: [f64; 5]) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for [f64; 5] {
    fn from(w: WeightVector) -> [f64; 5] {
        w.0
    }
}

/// Per-RAT decay parameters.
///
/// Continuous decay follows `s · exp(-(λ·Δt)^k)` with `λ` in 1/minute;
/// `k = 1` is the plain exponential model. `triggers` maps an event name to a
/// per-component multiplicative drop factor (1.0 leaves a component alone).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub rate_per_min: PerComponent<f64>,
    pub shape: PerComponent<f64>,
    pub triggers: BTreeMap<String, PerComponent<f64>>,
}

impl DecayParams {
    pub fn exponential(rate_per_min: [f64; 5]) -> Self {
        DecayParams {
            rate_per_min: PerComponent(rate_per_min),
            shape: PerComponent::splat(1.0),
            triggers: BTreeMap::new(),
        }
    }

    pub fn none() -> Self {
        Self::exponential([0.0; 5])
    }

    pub fn validate(&self) -> Result<()> {
        for (c, rate) in self.rate_per_min.iter() {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::Config(format!("decay rate for {c} must be >= 0, got {rate}")));
            }
        }
        for (c, k) in self.shape.iter() {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Config(format!("decay shape for {c} must be > 0, got {k}")));
            }
        }
        for (name, factors) in &self.triggers {
            for (c, f) in factors.iter() {
                check_unit(format!("trigger `{name}` factor for {c}"), f)?;
            }
        }
        Ok(())
    }
}

impl Default for DecayParams {
    fn default() -> Self {
        Self::none()
    }
}

/// Symbolic RAT identifier (`5G`, `LoRaWAN`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RatId(String);

impl RatId {
    pub fn new(id: impl Into<String>) -> Self {
        RatId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// RAT ids appear in `from.to` matrix keys and `;`-joined CSV cells.
    pub fn is_valid(s: &str) -> bool {
        !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    }
}

impl fmt::Display for RatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RatId {
    fn from(s: &str) -> Self {
        RatId(s.to_string())
    }
}

impl std::borrow::Borrow<str> for RatId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatFamily {
    Cellular,
    LpwanStar,
    LoraMesh,
    ProprietaryC2,
    TelemetrySerial,
    Ble,
    Wifi,
    Satellite,
}

impl RatFamily {
    pub const ALL: [RatFamily; 8] = [
        RatFamily::Cellular,
        RatFamily::LpwanStar,
        RatFamily::LoraMesh,
        RatFamily::ProprietaryC2,
        RatFamily::TelemetrySerial,
        RatFamily::Ble,
        RatFamily::Wifi,
        RatFamily::Satellite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RatFamily::Cellular => "cellular",
            RatFamily::LpwanStar => "lpwan-star",
            RatFamily::LoraMesh => "lora-mesh",
            RatFamily::ProprietaryC2 => "proprietary-c2",
            RatFamily::TelemetrySerial => "telemetry-serial",
            RatFamily::Ble => "ble",
            RatFamily::Wifi => "wifi",
            RatFamily::Satellite => "satellite",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Trust capabilities of one RAT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatProfile {
    pub id: RatId,
    pub family: RatFamily,
    /// Per-component ceiling `ŝ_j(R)`.
    pub ceiling: TrustState,
    /// Level `r_j(R)` reachable by full re-authentication on this RAT alone.
    pub reauth: TrustState,
    /// Full re-establishment cost `c_j(R)` in millijoules.
    pub cost_mj: PerComponent<f64>,
    /// Full re-establishment latency per component in milliseconds.
    pub latency_ms: PerComponent<f64>,
    /// Energy of one continuous-verification exchange.
    pub verify_energy_mj: f64,
    pub decay: DecayParams,
    pub mutual_auth: bool,
    /// Closed domain: trust evidence can neither leave nor enter.
    pub trust_silo: bool,
    /// Whether the domain can reach a revocation service.
    pub connected: bool,
}

impl RatProfile {
    /// Profile with ceiling and attainment at 1, zero costs and no decay.
    pub fn open(id: impl Into<String>, family: RatFamily) -> Self {
        RatProfile {
            id: RatId::new(id),
            family,
            ceiling: TrustState::ONE,
            reauth: TrustState::ONE,
            cost_mj: PerComponent::splat(0.0),
            latency_ms: PerComponent::splat(0.0),
            verify_energy_mj: 0.0,
            decay: DecayParams::none(),
            mutual_auth: true,
            trust_silo: false,
            connected: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in TrustComponent::ALL {
            if self.reauth.get(c) > self.ceiling.get(c) {
                return Err(Error::Config(format!(
                    "{}: re-auth attainment r_{c} = {} exceeds ceiling {}",
                    self.id,
                    self.reauth.get(c),
                    self.ceiling.get(c)
                )));
            }
        }
        let costs = self.cost_mj.iter().chain(self.latency_ms.iter());
        for (c, v) in costs {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{}: negative cost for {c}: {v}", self.id)));
            }
        }
        if !(self.verify_energy_mj >= 0.0 && self.verify_energy_mj.is_finite()) {
            return Err(Error::Config(format!("{}: negative verification energy", self.id)));
        }
        self.decay.validate()
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Composite trust `T = Σ_j w_j · s_j`.
pub fn composite_score(state: &TrustState, weights: &WeightVector) -> f64 {
    let t: f64 = state.0.iter().zip(weights.0.iter()).map(|(s, w)| w * s).sum();
    t.clamp(0.0, 1.0)
}

/// Continuous decay over `dt_min` minutes.
pub fn decay(state: &TrustState, dt_min: f64, params: &DecayParams) -> Result<TrustState> {
    if dt_min < 0.0 || dt_min.is_nan() {
        return Err(Error::NegativeDuration(dt_min));
    }
    Ok(state.map_clamped(|c, s| {
        let rate = params.rate_per_min[c];
        if rate == 0.0 || dt_min == 0.0 {
            return s;
        }
        let k = params.shape[c];
        let x = rate * dt_min;
        let exponent = if k == 1.0 { x } else { x.powf(k) };
        s * (-exponent).exp()
    }))
}

/// Step decay for a named event. Unknown events leave the state untouched.
pub fn apply_event_decay(state: &TrustState, event: &str, params: &DecayParams) -> TrustState {
    match params.triggers.get(event) {
        Some(factors) => state.map_clamped(|c, s| s * factors[c]),
        None => {
            log::warn!("decay trigger `{event}` is not registered; ignored");
            *state
        }
    }
}

pub fn clamp_to_ceiling(state: &TrustState, profile: &RatProfile) -> TrustState {
    state.map_clamped(|c, s| s.min(profile.ceiling.get(c)))
}

/// Composite ceiling `T̂(R) = Σ_j w_j · ŝ_j(R)`.
pub fn trust_ceiling(profile: &RatProfile, weights: &WeightVector) -> f64 {
    composite_score(&profile.ceiling, weights)
}

/// Remote ID as a weak contextual signal: a self-reported position that agrees
/// with authenticated sources nudges `s_ctx` up by `weight`, a disagreement
/// removes the same amount. Never exceeds the RAT ceiling and never touches
/// any other component.
pub fn corroborate_remote_id(
    state: &TrustState,
    consistent: bool,
    weight: f64,
    profile: &RatProfile,
) -> TrustState {
    let ctx = TrustComponent::Context;
    let current = state.get(ctx);
    let next = if consistent {
        (current + weight).min(profile.ceiling.get(ctx)).max(current)
    } else {
        current - weight
    };
    state.with(ctx, next)
}
