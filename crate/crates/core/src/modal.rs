//! TM-mode spectrum of the circular patch cavity.
//!
//! With a magnetic wall at the effective radius `R`, mode `TM_ni` has cutoff
//! wavenumber `k_c = v_ni / R` and resonates at
//! `f_ni = c v_ni / (2 pi R sqrt(eps_eff))`, where `v_ni` is the `i`-th root
//! of `J_n'`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specfun::{self, BesselOrder, PrimeRootTable, SpecfunError};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModalError {
    #[error("radius must be positive and finite, got {0}")]
    Radius(f64),
    #[error("effective permittivity must be >= 1, got {0}")]
    Permittivity(f64),
    #[error("frequency must be positive and finite, got {0}")]
    Frequency(f64),
    #[error("radial index must be >= 1")]
    RadialIndex,
    #[error("TM_0i has no degenerate partner; orientation must be cosine")]
    AxisymmetricOrientation,
    #[error(
        "spectrum bound n <= {max_order}, i <= {max_radial} cannot guarantee completeness up to {f_max:e} Hz"
    )]
    BoundsExceeded {
        max_order: u32,
        max_radial: u32,
        f_max: f64,
    },
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Selects one member of a degenerate `sin(n phi)` / `cos(n phi)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Cosine,
    Sine,
}

impl Orientation {
    /// `cos(arg)` or `sin(arg)`.
    pub fn trig(self, arg: f64) -> f64 {
        match self {
            Orientation::Cosine => arg.cos(),
            Orientation::Sine => arg.sin(),
        }
    }

    /// Derivative of [`Orientation::trig`] with respect to its argument.
    pub fn trig_derivative(self, arg: f64) -> f64 {
        match self {
            Orientation::Cosine => -arg.sin(),
            Orientation::Sine => arg.cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// One TM cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawModeId")]
pub struct ModeId {
    n: u32,
    i: u32,
    orientation: Orientation,
}

#[derive(Deserialize)]
struct RawModeId {
    n: u32,
    i: u32,
    orientation: Orientation,
}

impl TryFrom<RawModeId> for ModeId {
    type Error = ModalError;
    fn try_from(r: RawModeId) -> Result<Self, Self::Error> {
        ModeId::new(r.n, r.i, r.orientation)
    }
}

impl ModeId {
    pub fn new(n: u32, i: u32, orientation: Orientation) -> Result<Self, ModalError> {
        BesselOrder::new(n)?;
        if i == 0 {
            return Err(ModalError::RadialIndex);
        }
        if n == 0 && orientation != Orientation::Cosine {
            return Err(ModalError::AxisymmetricOrientation);
        }
        Ok(Self { n, i, orientation })
    }

    /// Convenience constructor: cosine orientation, valid for every `n`.
    pub fn tm(n: u32, i: u32) -> Result<Self, ModalError> {
        Self::new(n, i, Orientation::Cosine)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn i(&self) -> u32 {
        self.i
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn order(&self) -> BesselOrder {
        // validated on construction
        BesselOrder::new(self.n).expect("order checked in ModeId::new")
    }

    /// Same `(n, i)` with another orientation. `n = 0` stays cosine.
    pub fn with_orientation(self, orientation: Orientation) -> Self {
        let orientation = if self.n == 0 {
            Orientation::Cosine
        } else {
            orientation
        };
        Self {
            orientation,
            ..self
        }
    }

    pub fn parity(&self) -> Parity {
        parity(self)
    }

    /// Whether `other` shares `(n, i)` regardless of orientation.
    pub fn same_family(&self, other: &ModeId) -> bool {
        self.n == other.n && self.i == other.i
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TM{}{}", self.n, self.i)?;
        if self.n > 0 && self.orientation == Orientation::Sine {
            write!(f, "(sin)")?;
        }
        Ok(())
    }
}

/// `Odd` iff `n` is odd.
pub fn parity(mode: &ModeId) -> Parity {
    if mode.n % 2 == 1 {
        Parity::Odd
    } else {
        Parity::Even
    }
}

/// Effective description of the circular patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ResonatorSpec {
    radius_m: f64,
    eps_eff: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    radius_m: f64,
    eps_eff: f64,
}

impl TryFrom<RawSpec> for ResonatorSpec {
    type Error = ModalError;
    fn try_from(r: RawSpec) -> Result<Self, Self::Error> {
        ResonatorSpec::new(r.radius_m, r.eps_eff)
    }
}

impl ResonatorSpec {
    pub fn new(radius_m: f64, eps_eff: f64) -> Result<Self, ModalError> {
        if !(radius_m.is_finite() && radius_m > 0.0) {
            return Err(ModalError::Radius(radius_m));
        }
        if !(eps_eff.is_finite() && eps_eff >= 1.0) {
            return Err(ModalError::Permittivity(eps_eff));
        }
        Ok(Self { radius_m, eps_eff })
    }

    /// Radius given, permittivity fitted so that `mode` resonates at `freq`.
    pub fn fitted(radius_m: f64, mode: ModeId, freq: f64) -> Result<Self, ModalError> {
        let eps = fit_eps_eff(radius_m, mode, freq)?;
        Self::new(radius_m, eps)
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn eps_eff(&self) -> f64 {
        self.eps_eff
    }
}

/// `k_c = v_ni / R` in rad/m.
pub fn cutoff_wavenumber(spec: &ResonatorSpec, mode: ModeId) -> Result<f64, ModalError> {
    Ok(specfun::prime_root(mode.order(), mode.i)? / spec.radius_m)
}

fn frequency_from_root(spec: &ResonatorSpec, root: f64) -> f64 {
    SPEED_OF_LIGHT * root / (2.0 * PI * spec.radius_m * spec.eps_eff.sqrt())
}

/// Resonant frequency of `mode` in Hz. Orientation does not enter.
pub fn resonant_frequency(spec: &ResonatorSpec, mode: ModeId) -> Result<f64, ModalError> {
    let root = specfun::prime_root(mode.order(), mode.i)?;
    Ok(frequency_from_root(spec, root))
}

/// Inverts the resonance formula for the effective permittivity.
pub fn fit_eps_eff(radius_m: f64, mode: ModeId, f_measured: f64) -> Result<f64, ModalError> {
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return Err(ModalError::Radius(radius_m));
    }
    if !(f_measured.is_finite() && f_measured > 0.0) {
        return Err(ModalError::Frequency(f_measured));
    }
    let root = specfun::prime_root(mode.order(), mode.i)?;
    let s = SPEED_OF_LIGHT * root / (2.0 * PI * radius_m * f_measured);
    Ok(s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    /// Canonical (cosine) member of the family.
    pub mode: ModeId,
    pub k_c: f64,
    pub freq: f64,
    pub degeneracy: u8,
}

/// Index bounds for spectrum enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectrumBounds {
    pub max_order: u32,
    pub max_radial: u32,
}

impl Default for SpectrumBounds {
    fn default() -> Self {
        Self {
            max_order: 6,
            max_radial: 4,
        }
    }
}

/// Every `TM_ni` with `f_ni <= f_max`, ascending, using the default bounds.
pub fn spectrum(spec: &ResonatorSpec, f_max: f64) -> Result<Vec<SpectrumEntry>, ModalError> {
    spectrum_within(spec, f_max, SpectrumBounds::default())
}

/// As [`spectrum`] with explicit bounds. Fails with
/// [`ModalError::BoundsExceeded`] when a mode outside the bounds could fall
/// below `f_max`, so the returned list is never silently truncated.
pub fn spectrum_within(
    spec: &ResonatorSpec,
    f_max: f64,
    bounds: SpectrumBounds,
) -> Result<Vec<SpectrumEntry>, ModalError> {
    if !(f_max.is_finite() && f_max > 0.0) {
        return Err(ModalError::Frequency(f_max));
    }
    if bounds.max_radial == 0 {
        return Err(ModalError::RadialIndex);
    }
    let table = PrimeRootTable::build(bounds.max_order + 1, bounds.max_radial + 1)?;

    // Roots grow with both n and i, so the first excluded mode in each
    // direction bounds everything beyond it.
    let mut lowest_excluded = table.get(bounds.max_order + 1, 1).unwrap_or(f64::INFINITY);
    for n in 0..=bounds.max_order {
        if let Some(v) = table.get(n, bounds.max_radial + 1) {
            lowest_excluded = lowest_excluded.min(v);
        }
    }
    if frequency_from_root(spec, lowest_excluded) <= f_max {
        return Err(ModalError::BoundsExceeded {
            max_order: bounds.max_order,
            max_radial: bounds.max_radial,
            f_max,
        });
    }

    let mut out = Vec::new();
    for n in 0..=bounds.max_order {
        for i in 1..=bounds.max_radial {
            let v = table.get(n, i).expect("table covers bounds");
            let freq = frequency_from_root(spec, v);
            if freq <= f_max {
                out.push(SpectrumEntry {
                    mode: ModeId::tm(n, i)?,
                    k_c: v / spec.radius_m,
                    freq,
                    degeneracy: if n == 0 { 1 } else { 2 },
                });
            }
        }
    }
    out.sort_by(|a, b| {
        a.freq
            .total_cmp(&b.freq)
            .then(a.mode.n.cmp(&b.mode.n))
            .then(a.mode.i.cmp(&b.mode.i))
    });
    Ok(out)
}
