//! Balanced-port, via and slot placement for single- and dual-band designs.
//!
//! A diametrically opposed port pair sees `E_z(phi + pi) = (-1)^n E_z(phi)`,
//! so a differential drive couples only to odd `n` and a common-mode drive
//! only to even `n`. Output ports are then rotated onto exact azimuthal nulls
//! of the modes that must not reach them, vias go where the common-mode
//! fields are strong and the differential ones vanish, and slots sit where
//! the upper differential mode carries much more current than the lower one.
//!
//! All angles in this module are measured in the mode frame: odd modes are
//! sine-oriented and even modes cosine-oriented about the reference axis
//! unless a different [`OrientationRule`] is supplied.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, ModeField};
use crate::modal::{self, ModalError, ModeId, Orientation, Parity, ResonatorSpec, SpectrumEntry};

/// Angles closer than this are treated as the same null.
const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("unsatisfiable placement: {0}")]
    Unsatisfiable(String),
    #[error("invalid design input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Top,
    Bottom,
}

/// A balanced port pair; the second port sits at `angle + pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortPair {
    pub angle: f64,
    pub layer: Layer,
}

impl PortPair {
    pub fn new(angle: f64, layer: Layer) -> Self {
        Self {
            angle: angle.rem_euclid(TAU),
            layer,
        }
    }

    pub fn partner_angle(&self) -> f64 {
        (self.angle + PI).rem_euclid(TAU)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Excitation {
    Dm,
    Cm,
}

/// Differential drive excites odd modes, common-mode drive even ones.
pub fn excited_parity(excitation: Excitation) -> Parity {
    match excitation {
        Excitation::Dm => Parity::Odd,
        Excitation::Cm => Parity::Even,
    }
}

/// Projection of a mode's rim field onto a port pair driven as
/// `excitation`: `(E_a - E_b) / 2` for DM, `(E_a + E_b) / 2` for CM,
/// relative to the mode's peak.
pub fn port_coupling(
    spec: &ResonatorSpec,
    mode: ModeId,
    pair: &PortPair,
    excitation: Excitation,
) -> Result<f64, DesignError> {
    let mf = ModeField::new(spec, mode)?;
    let r = spec.radius_m();
    let a = mf.normalized_ez(r, pair.angle)?;
    let b = mf.normalized_ez(r, pair.angle + PI)?;
    Ok(match excitation {
        Excitation::Dm => 0.5 * (a - b),
        Excitation::Cm => 0.5 * (a + b),
    })
}

/// Spectrum entries up to `f_max` that `excitation` can drive.
pub fn excitable_modes(
    spec: &ResonatorSpec,
    excitation: Excitation,
    f_max: f64,
) -> Result<Vec<SpectrumEntry>, DesignError> {
    let want = excited_parity(excitation);
    Ok(modal::spectrum(spec, f_max)?
        .into_iter()
        .filter(|e| e.mode.parity() == want)
        .collect())
}

/// How degenerate modes are oriented relative to the reference axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationRule {
    ByParity { odd: Orientation, even: Orientation },
    /// Use the orientation already stored in each `ModeId`.
    AsGiven,
}

impl Default for OrientationRule {
    fn default() -> Self {
        OrientationRule::ByParity {
            odd: Orientation::Sine,
            even: Orientation::Cosine,
        }
    }
}

impl OrientationRule {
    pub fn apply(&self, mode: ModeId) -> ModeId {
        match *self {
            OrientationRule::AsGiven => mode,
            OrientationRule::ByParity { odd, even } => match mode.parity() {
                Parity::Odd => mode.with_orientation(odd),
                Parity::Even => mode.with_orientation(even),
            },
        }
    }
}

/// `|T(n phi)|`, the rim field relative to the rim maximum.
fn rim_level(mode: ModeId, phi: f64) -> f64 {
    if mode.n() == 0 {
        1.0
    } else {
        mode.orientation().trig(mode.n() as f64 * phi).abs()
    }
}

/// Exact zeros of `T(n phi)` in `[0, pi)`.
fn trig_zeros_half_turn(mode: ModeId) -> Vec<f64> {
    let n = mode.n() as f64;
    (0..mode.n())
        .map(|k| match mode.orientation() {
            Orientation::Sine => k as f64 * PI / n,
            Orientation::Cosine => (2 * k + 1) as f64 * FRAC_PI_2 / n,
        })
        .collect()
}

/// Output-port angles in `[0, pi)` that null every suppressed mode and
/// keep every passed mode at `min_pass_level` of its rim maximum or more.
///
/// Structurally impossible requests (a suppressed `TM_0i`, overlapping
/// sets, nothing to suppress) are errors; a well-posed request with no
/// solution returns an empty list.
pub fn solve_output_angle(
    pass: &[ModeId],
    suppress: &[ModeId],
    rule: OrientationRule,
    min_pass_level: f64,
) -> Result<Vec<f64>, DesignError> {
    if !(0.0..=1.0).contains(&min_pass_level) {
        return Err(DesignError::Invalid(format!(
            "min_pass_level must be in [0, 1], got {min_pass_level}"
        )));
    }
    if suppress.is_empty() {
        return Err(DesignError::Invalid("at least one suppressed mode is required".into()));
    }
    for p in pass {
        if suppress.iter().any(|s| s.same_family(p)) {
            return Err(DesignError::Unsatisfiable(format!(
                "{p} is both passed and suppressed"
            )));
        }
    }
    if let Some(m) = suppress.iter().find(|m| m.n() == 0) {
        return Err(DesignError::Unsatisfiable(format!(
            "{m} is azimuthally uniform and has no rim null"
        )));
    }
    let pass: Vec<ModeId> = pass.iter().map(|m| rule.apply(*m)).collect();
    let suppress: Vec<ModeId> = suppress.iter().map(|m| rule.apply(*m)).collect();

    let candidates = trig_zeros_half_turn(suppress[0]);
    Ok(candidates
        .into_iter()
        .filter(|&phi| suppress[1..].iter().all(|m| rim_level(*m, phi) <= ANGLE_EPS))
        .filter(|&phi| pass.iter().all(|m| rim_level(*m, phi) >= min_pass_level))
        .collect())
}

/// `sum_cm |E_z|^2 - lambda * sum_dm |E_z|^2` at a site, each mode
/// normalized to unit peak. Modes are used with the orientation they carry.
pub fn via_score(
    spec: &ResonatorSpec,
    site: (f64, f64),
    dm_modes: &[ModeId],
    cm_modes: &[ModeId],
    lambda: f64,
) -> Result<f64, DesignError> {
    let dm = fields_for(spec, dm_modes)?;
    let cm = fields_for(spec, cm_modes)?;
    via_score_with(&dm, &cm, site, lambda)
}

fn fields_for(spec: &ResonatorSpec, modes: &[ModeId]) -> Result<Vec<ModeField>, DesignError> {
    modes
        .iter()
        .map(|m| ModeField::new(spec, *m).map_err(DesignError::from))
        .collect()
}

fn via_score_with(dm: &[ModeField], cm: &[ModeField], (rho, phi): (f64, f64), lambda: f64) -> Result<f64, DesignError> {
    let mut gain = 0.0;
    for m in cm {
        gain += m.normalized_ez(rho, phi)?.powi(2);
    }
    let mut penalty = 0.0;
    for m in dm {
        penalty += m.normalized_ez(rho, phi)?.powi(2);
    }
    Ok(gain - lambda * penalty)
}

/// `|K_perp(strengthen)|^2 - |K_perp(protect)|^2` where `K_perp` is the
/// normalized surface current across a slot whose axis points along the
/// global angle `slot_axis`.
pub fn slot_score(
    spec: &ResonatorSpec,
    site: (f64, f64),
    slot_axis: f64,
    strengthen: ModeId,
    protect: ModeId,
) -> Result<f64, DesignError> {
    if strengthen == protect {
        return Err(DesignError::Invalid("strengthen and protect must differ".into()));
    }
    let s = ModeField::new(spec, strengthen)?;
    let p = ModeField::new(spec, protect)?;
    slot_score_with(&s, &p, site, slot_axis)
}

fn slot_score_with(s: &ModeField, p: &ModeField, (rho, phi): (f64, f64), slot_axis: f64) -> Result<f64, DesignError> {
    let across = slot_axis + FRAC_PI_2;
    let ks = s.normalized_current(rho, phi)?.along(across).norm_sqr();
    let kp = p.normalized_current(rho, phi)?.along(across).norm_sqr();
    Ok(ks - kp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturberKind {
    Via,
    Slot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturberSite {
    pub kind: PerturberKind,
    pub rho: f64,
    pub phi: f64,
    /// Slot axis as a global angle; equal to `phi` for vias.
    pub direction: f64,
    pub length_m: Option<f64>,
    pub width_m: Option<f64>,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Single,
    Dual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Passband {
    pub center_hz: f64,
    pub fbw: f64,
}

/// Slot dimensions carried through to the report; they do not enter any
/// computation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotMetadata {
    pub length_m: Option<f64>,
    pub width_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    pub spec: ResonatorSpec,
    pub kind: FilterKind,
    pub orientation_rule: OrientationRule,
    /// Global angle of the mode-frame origin.
    pub reference_axis: f64,
    pub input_pair: PortPair,
    pub output_pair: PortPair,
    pub passed_modes: Vec<ModeId>,
    pub suppressed_dm_modes: Vec<ModeId>,
    /// Modes the vias are scored against.
    pub via_dm_modes: Vec<ModeId>,
    pub via_cm_modes: Vec<ModeId>,
    pub via_weight: f64,
    pub via_sites: Vec<PerturberSite>,
    pub slot_sites: Vec<PerturberSite>,
    pub predicted_passbands: Vec<Passband>,
    pub predicted_tz: Vec<f64>,
    /// Geometry carried along for reporting, SI units.
    pub metadata: BTreeMap<String, f64>,
}

impl FilterDesign {
    /// The whole layout turned by `delta` radians about the patch centre.
    pub fn rotated(&self, delta: f64) -> Self {
        let turn = |a: f64| (a + delta).rem_euclid(TAU);
        let mut out = self.clone();
        out.reference_axis = turn(self.reference_axis);
        out.input_pair.angle = turn(self.input_pair.angle);
        out.output_pair.angle = turn(self.output_pair.angle);
        for s in out.via_sites.iter_mut().chain(out.slot_sites.iter_mut()) {
            s.phi = turn(s.phi);
            s.direction = turn(s.direction);
        }
        out
    }

    /// Re-evaluates the via score of a site given in global coordinates.
    pub fn via_score_at(&self, rho: f64, phi: f64) -> Result<f64, DesignError> {
        via_score(
            &self.spec,
            (rho, phi - self.reference_axis),
            &self.via_dm_modes,
            &self.via_cm_modes,
            self.via_weight,
        )
    }

    /// Re-evaluates the slot score of a slot given in global coordinates.
    pub fn slot_score_at(&self, site: &PerturberSite) -> Result<f64, DesignError> {
        let (upper, lower) = match self.passed_modes.as_slice() {
            [lower, upper, ..] => (*upper, *lower),
            _ => return Err(DesignError::Invalid("slot scoring needs two passed modes".into())),
        };
        slot_score(
            &self.spec,
            (site.rho, site.phi - self.reference_axis),
            site.direction - self.reference_axis,
            upper,
            lower,
        )
    }

    pub fn output_angle_deg(&self) -> f64 {
        (self.output_pair.angle - self.reference_axis)
            .rem_euclid(TAU)
            .to_degrees()
    }
}

/// Tunables for design assembly. Defaults follow the documented conventions.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    pub orientation_rule: OrientationRule,
    pub min_pass_level: f64,
    pub via_weight: f64,
    /// Modes up to `band_factor * f(TM31)` are considered.
    pub band_factor: f64,
    /// Input pair offset from the reference axis.
    pub input_angle: f64,
    pub via_max_radius_frac: f64,
    pub via_min_spacing_frac: f64,
    pub via_grid: (usize, usize),
    pub single_via_count: usize,
    pub dual_via_count: usize,
    pub slot_radius_frac: f64,
    pub slot_count: usize,
    pub single_fbw: f64,
    pub dual_fbw: [f64; 2],
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            orientation_rule: OrientationRule::default(),
            min_pass_level: 0.5,
            via_weight: 1.0,
            band_factor: 1.1,
            input_angle: FRAC_PI_2,
            via_max_radius_frac: 0.9,
            via_min_spacing_frac: 0.2,
            via_grid: (45, 72),
            single_via_count: 3,
            dual_via_count: 5,
            slot_radius_frac: 0.95,
            slot_count: 4,
            single_fbw: 0.157,
            dual_fbw: [0.110, 0.048],
        }
    }
}

impl DesignOptions {
    fn validate(&self) -> Result<(), DesignError> {
        let frac_ok = |v: f64| v > 0.0 && v <= 1.0;
        if !frac_ok(self.via_max_radius_frac) || !frac_ok(self.slot_radius_frac) {
            return Err(DesignError::Invalid("radius fractions must be in (0, 1]".into()));
        }
        if !(0.0..).contains(&self.via_min_spacing_frac) || !(0.0..).contains(&self.via_weight) {
            return Err(DesignError::Invalid("via spacing and weight must be non-negative".into()));
        }
        if self.via_grid.0 == 0 || self.via_grid.1 == 0 {
            return Err(DesignError::Invalid("via grid must be non-empty".into()));
        }
        if !(self.band_factor.is_finite() && self.band_factor > 1.0) {
            return Err(DesignError::Invalid("band_factor must exceed 1".into()));
        }
        let fbw_ok = |v: f64| v > 0.0 && v < 1.0;
        if !fbw_ok(self.single_fbw) || !self.dual_fbw.iter().all(|&v| fbw_ok(v)) {
            return Err(DesignError::Invalid("fractional bandwidths must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Modes of the working band, split by drive.
struct BandModes {
    dm: Vec<ModeId>,
    cm: Vec<ModeId>,
}

fn band_modes(spec: &ResonatorSpec, opts: &DesignOptions) -> Result<BandModes, DesignError> {
    let f31 = modal::resonant_frequency(spec, ModeId::tm(3, 1)?)?;
    let f_max = opts.band_factor * f31;
    let orient = |e: &SpectrumEntry| opts.orientation_rule.apply(e.mode);
    let dm: Vec<ModeId> = excitable_modes(spec, Excitation::Dm, f_max)?.iter().map(orient).collect();
    let cm: Vec<ModeId> = excitable_modes(spec, Excitation::Cm, f_max)?.iter().map(orient).collect();
    if dm.len() < 2 {
        return Err(DesignError::Unsatisfiable(
            "band holds fewer than two differential modes".into(),
        ));
    }
    if !cm.iter().any(|m| m.n() > 0) {
        return Err(DesignError::Unsatisfiable(
            "band holds no common-mode family with azimuthal nulls".into(),
        ));
    }
    Ok(BandModes { dm, cm })
}

fn chord(a: (f64, f64), b: (f64, f64)) -> f64 {
    let d2 = a.0 * a.0 + b.0 * b.0 - 2.0 * a.0 * b.0 * (a.1 - b.1).cos();
    d2.max(0.0).sqrt()
}

/// Centrosymmetric greedy via placement in the mode frame. An odd count
/// always includes the centre; the rest come in `(rho, phi)`,
/// `(rho, phi + pi)` pairs ranked by via score and kept apart by the
/// minimum spacing.
fn place_vias(
    spec: &ResonatorSpec,
    dm: &[ModeField],
    cm: &[ModeField],
    opts: &DesignOptions,
    count: usize,
) -> Result<Vec<PerturberSite>, DesignError> {
    let r = spec.radius_m();
    let spacing = opts.via_min_spacing_frac * r;
    let (n_rho, n_phi) = opts.via_grid;
    let site = |rho: f64, phi: f64, score: f64| PerturberSite {
        kind: PerturberKind::Via,
        rho,
        phi: phi.rem_euclid(TAU),
        direction: phi.rem_euclid(TAU),
        length_m: None,
        width_m: None,
        score,
    };

    let mut candidates = Vec::with_capacity(n_rho * n_phi);
    for j in 1..=n_rho {
        let rho = opts.via_max_radius_frac * r * j as f64 / n_rho as f64;
        for k in 0..n_phi {
            let phi = PI * k as f64 / n_phi as f64;
            let score = via_score_with(dm, cm, (rho, phi), opts.via_weight)?;
            candidates.push((rho, phi, score));
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.total_cmp(&b.0)).then(a.1.total_cmp(&b.1)));

    let mut chosen: Vec<PerturberSite> = Vec::with_capacity(count);
    if count % 2 == 1 {
        let score = via_score_with(dm, cm, (0.0, 0.0), opts.via_weight)?;
        chosen.push(site(0.0, 0.0, score));
    }
    for (rho, phi, score) in candidates {
        if chosen.len() + 2 > count {
            break;
        }
        let a = (rho, phi);
        let b = (rho, phi + PI);
        let clear = chord(a, b) >= spacing
            && chosen
                .iter()
                .all(|s| chord(a, (s.rho, s.phi)) >= spacing && chord(b, (s.rho, s.phi)) >= spacing);
        if clear {
            chosen.push(site(rho, phi, score));
            chosen.push(site(rho, phi + PI, score));
        }
    }
    if chosen.len() != count {
        return Err(DesignError::Unsatisfiable(format!(
            "could only place {} of {count} vias with spacing {spacing:e} m",
            chosen.len()
        )));
    }
    Ok(chosen)
}

fn golden_max<F: Fn(f64) -> Result<f64, DesignError>>(f: F, mut a: f64, mut b: f64) -> Result<f64, DesignError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Radial slots at the strongest local maxima of the slot score around the
/// ring `rho = slot_radius_frac * R`, in the mode frame.
fn place_slots(
    spec: &ResonatorSpec,
    strengthen: &ModeField,
    protect: &ModeField,
    opts: &DesignOptions,
    meta: SlotMetadata,
) -> Result<Vec<PerturberSite>, DesignError> {
    let rho = opts.slot_radius_frac * spec.radius_m();
    let score = |phi: f64| slot_score_with(strengthen, protect, (rho, phi), phi);
    let samples = 720;
    let step = TAU / samples as f64;
    let values = (0..samples)
        .map(|k| score(k as f64 * step))
        .collect::<Result<Vec<_>, _>>()?;
    let mut peaks = Vec::new();
    for k in 0..samples {
        let prev = values[(k + samples - 1) % samples];
        let next = values[(k + 1) % samples];
        if values[k] > prev && values[k] >= next {
            let phi = golden_max(score, (k as f64 - 1.0) * step, (k as f64 + 1.0) * step)?;
            peaks.push((phi.rem_euclid(TAU), score(phi)?));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    if peaks.len() < opts.slot_count {
        return Err(DesignError::Unsatisfiable(format!(
            "found {} slot-score maxima, need {}",
            peaks.len(),
            opts.slot_count
        )));
    }
    peaks.truncate(opts.slot_count);
    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(peaks
        .into_iter()
        .map(|(phi, s)| PerturberSite {
            kind: PerturberKind::Slot,
            rho,
            phi,
            direction: phi,
            length_m: meta.length_m,
            width_m: meta.width_m,
            score: s,
        })
        .collect())
}

fn resolve_spec(spec: &ResonatorSpec, f_target: Option<f64>) -> Result<ResonatorSpec, DesignError> {
    match f_target {
        Some(f) => Ok(ResonatorSpec::fitted(spec.radius_m(), ModeId::tm(1, 1)?, f)?),
        None => Ok(*spec),
    }
}

fn assemble(
    spec: ResonatorSpec,
    kind: FilterKind,
    opts: &DesignOptions,
    slot_meta: SlotMetadata,
) -> Result<FilterDesign, DesignError> {
    opts.validate()?;
    let band = band_modes(&spec, opts)?;
    let lowest_even_with_nulls = *band.cm.iter().find(|m| m.n() > 0).expect("checked in band_modes");

    let (passed, port_suppressed, suppressed_dm) = match kind {
        FilterKind::Single => {
            let passed = vec![band.dm[0]];
            let blocked = band.dm[1..].to_vec();
            let mut suppressed = blocked.clone();
            suppressed.push(lowest_even_with_nulls);
            (passed, blocked, suppressed)
        }
        FilterKind::Dual => {
            let passed = band.dm[..2].to_vec();
            let blocked = vec![lowest_even_with_nulls];
            (passed, blocked.clone(), blocked)
        }
    };

    let angles = solve_output_angle(
        &passed,
        &port_suppressed,
        OrientationRule::AsGiven,
        opts.min_pass_level,
    )?;
    let out_angle = *angles.first().ok_or_else(|| {
        DesignError::Unsatisfiable("no output angle meets the null and pass-level constraints".into())
    })?;

    let dm_fields = fields_for(&spec, &band.dm)?;
    let cm_fields = fields_for(&spec, &band.cm)?;
    let via_count = match kind {
        FilterKind::Single => opts.single_via_count,
        FilterKind::Dual => opts.dual_via_count,
    };
    let via_sites = place_vias(&spec, &dm_fields, &cm_fields, opts, via_count)?;

    let slot_sites = match kind {
        FilterKind::Single => Vec::new(),
        FilterKind::Dual => {
            let strengthen = ModeField::new(&spec, passed[1])?;
            let protect = ModeField::new(&spec, passed[0])?;
            place_slots(&spec, &strengthen, &protect, opts, slot_meta)?
        }
    };

    let fbws: Vec<f64> = match kind {
        FilterKind::Single => vec![opts.single_fbw],
        FilterKind::Dual => opts.dual_fbw.to_vec(),
    };
    let predicted_passbands = passed
        .iter()
        .zip(fbws)
        .map(|(m, fbw)| {
            Ok(Passband {
                center_hz: modal::resonant_frequency(&spec, *m)?,
                fbw,
            })
        })
        .collect::<Result<Vec<_>, DesignError>>()?;
    let predicted_tz = suppressed_dm
        .iter()
        .filter(|m| m.parity() == Parity::Even)
        .map(|m| modal::resonant_frequency(&spec, *m).map_err(DesignError::from))
        .collect::<Result<Vec<_>, _>>()?;

    let mut metadata = BTreeMap::new();
    if let Some(l) = slot_meta.length_m {
        metadata.insert("lc_m".to_string(), l);
    }
    if let Some(w) = slot_meta.width_m {
        metadata.insert("wc_m".to_string(), w);
    }

    Ok(FilterDesign {
        spec,
        kind,
        orientation_rule: opts.orientation_rule,
        reference_axis: 0.0,
        input_pair: PortPair::new(opts.input_angle, Layer::Top),
        output_pair: PortPair::new(out_angle, Layer::Bottom),
        passed_modes: passed,
        suppressed_dm_modes: suppressed_dm,
        via_dm_modes: band.dm,
        via_cm_modes: band.cm,
        via_weight: opts.via_weight,
        via_sites,
        slot_sites,
        predicted_passbands,
        predicted_tz,
        metadata,
    })
}

/// Single-band design: passes the lowest differential mode and nulls the
/// next one at the output pair. With `f_target` the permittivity is refitted
/// so that `TM11` lands there.
pub fn design_single_band(
    spec: &ResonatorSpec,
    f_target: Option<f64>,
    opts: &DesignOptions,
) -> Result<FilterDesign, DesignError> {
    let spec = resolve_spec(spec, f_target)?;
    assemble(spec, FilterKind::Single, opts, SlotMetadata::default())
}

/// Dual-band design: passes the two lowest differential modes, nulls the
/// lowest even mode with azimuthal structure at the output pair, and adds
/// current-perturbing slots.
pub fn design_dual_band(
    spec: &ResonatorSpec,
    f_target: Option<f64>,
    slot_meta: SlotMetadata,
    opts: &DesignOptions,
) -> Result<FilterDesign, DesignError> {
    let spec = resolve_spec(spec, f_target)?;
    assemble(spec, FilterKind::Dual, opts, slot_meta)
}
