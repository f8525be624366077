//! Coupling extraction and a coupled-resonator response model.
//!
//! Each passband is a second-order maximally flat section
//! (`g0 = 1, g1 = g2 = sqrt 2, g3 = 1`), so `k = fbw / sqrt 2` and
//! `q_ext = sqrt 2 / fbw`. Band transmissions are summed, reflections
//! multiplied, and every transmission zero applies a notch that tends to 1
//! away from its frequency. The common-mode path is a qualitative sum of
//! Lorentzian leakage peaks.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balanced::{FilterDesign, Passband};
use crate::modal;

/// Lowpass prototype constants of the second-order maximally flat section.
pub const G_VALUES: [f64; 4] = [1.0, SQRT_2, SQRT_2, 1.0];
pub const DEFAULT_NOTCH_Q: f64 = 10.0;
pub const DEFAULT_CM_Q: f64 = 50.0;
pub const DEFAULT_CM_LEAKAGE_DB: f64 = 20.0;

pub const TOUCHSTONE_OPTIONS: &str = "# Hz S RI R 50";
pub const CSV_HEADER: &str = "freq_hz,sdd11_re,sdd11_im,sdd21_re,sdd21_im,scc21_re,scc21_im";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("split frequencies must satisfy 0 < f_p1 <= f_p2, got {f_p1} and {f_p2}")]
    Split { f_p1: f64, f_p2: f64 },
    #[error("coupling must lie in [0, 1), got {0}")]
    Coupling(f64),
    #[error("invalid band: {0}")]
    Band(String),
    #[error("passbands {0} and {1} overlap at the 3 dB level")]
    Overlap(usize, usize),
    #[error("transmission zero {tz} Hz falls inside passband {band}")]
    ZeroInBand { tz: f64, band: usize },
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("invalid common-mode model: {0}")]
    CommonMode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingSign {
    #[default]
    Positive,
    Negative,
}

impl CouplingSign {
    fn factor(self) -> f64 {
        match self {
            CouplingSign::Positive => 1.0,
            CouplingSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub f_p1: f64,
    pub f_p2: f64,
    pub k: f64,
    pub sign: CouplingSign,
}

impl CouplingResult {
    pub fn magnitude(&self) -> f64 {
        self.k.abs()
    }
}

/// `k = (f_p2^2 - f_p1^2) / (f_p2^2 + f_p1^2)` on the positive branch.
pub fn coupling_from_split(f_p1: f64, f_p2: f64) -> Result<CouplingResult, CircuitError> {
    coupling_from_split_signed(f_p1, f_p2, CouplingSign::Positive)
}

pub fn coupling_from_split_signed(f_p1: f64, f_p2: f64, sign: CouplingSign) -> Result<CouplingResult, CircuitError> {
    if !(f_p1.is_finite() && f_p2.is_finite() && f_p1 > 0.0 && f_p1 <= f_p2) {
        return Err(CircuitError::Split { f_p1, f_p2 });
    }
    // (b - a)(b + a) keeps the difference exact for nearly equal pairs
    let num = (f_p2 - f_p1) * (f_p2 + f_p1);
    let den = f_p2 * f_p2 + f_p1 * f_p1;
    Ok(CouplingResult {
        f_p1,
        f_p2,
        k: sign.factor() * num / den,
        sign,
    })
}

/// Inverse of [`coupling_from_split`] with `f0^2 = (f_p1^2 + f_p2^2) / 2`.
pub fn split_from_coupling(f0: f64, k: f64) -> Result<(f64, f64), CircuitError> {
    if !(f0.is_finite() && f0 > 0.0) {
        return Err(CircuitError::Split { f_p1: f0, f_p2: f0 });
    }
    if !(0.0..1.0).contains(&k) {
        return Err(CircuitError::Coupling(k));
    }
    Ok((f0 * (1.0 - k).sqrt(), f0 * (1.0 + k).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSection {
    pub center: f64,
    pub fbw: f64,
    pub k: f64,
    pub q_ext: f64,
}

impl BandSection {
    /// 3 dB edges of the isolated section: `f/f0 - f0/f = +-fbw`.
    pub fn edges(&self) -> (f64, f64) {
        let h = 0.5 * self.fbw;
        let root = (1.0 + h * h).sqrt();
        (self.center * (root - h), self.center * (root + h))
    }

    /// `(s11, s21)` of the isolated, lossless section.
    pub fn eval(&self, f: f64) -> (Complex64, Complex64) {
        let j = Complex64::i();
        let a = 1.0 / self.q_ext;
        let p = j * (f / self.center - self.center / f) + a;
        let den = p * p + self.k * self.k;
        let s21 = 2.0 * a * j * self.k / den;
        let s11 = 1.0 - 2.0 * a * p / den;
        (s11, s21)
    }
}

pub fn band_section_from_spec(center: f64, fbw: f64) -> Result<BandSection, CircuitError> {
    if !(center.is_finite() && center > 0.0) {
        return Err(CircuitError::Band(format!("center must be positive, got {center}")));
    }
    if !(fbw > 0.0 && fbw < 1.0) {
        return Err(CircuitError::Band(format!("fbw must be in (0, 1), got {fbw}")));
    }
    let [g0, g1, g2, _] = G_VALUES;
    Ok(BandSection {
        center,
        fbw,
        k: fbw / (g1 * g2).sqrt(),
        q_ext: g0 * g1 / fbw,
    })
}

pub fn bands_from_passbands(passbands: &[Passband]) -> Result<Vec<BandSection>, CircuitError> {
    passbands
        .iter()
        .map(|p| band_section_from_spec(p.center_hz, p.fbw))
        .collect()
}

/// The differential-mode model: bands plus notches.
#[derive(Debug, Clone, PartialEq)]
pub struct DmModel {
    bands: Vec<BandSection>,
    zeros: Vec<f64>,
    notch_q: f64,
}

impl DmModel {
    pub fn new(bands: Vec<BandSection>, zeros: Vec<f64>, notch_q: f64) -> Result<Self, CircuitError> {
        if !(notch_q.is_finite() && notch_q > 0.0) {
            return Err(CircuitError::Band(format!("notch Q must be positive, got {notch_q}")));
        }
        let edges: Vec<(f64, f64)> = bands.iter().map(BandSection::edges).collect();
        for a in 0..edges.len() {
            for b in a + 1..edges.len() {
                if edges[a].0 <= edges[b].1 && edges[b].0 <= edges[a].1 {
                    return Err(CircuitError::Overlap(a, b));
                }
            }
        }
        for &tz in &zeros {
            if !(tz.is_finite() && tz > 0.0) {
                return Err(CircuitError::Band(format!("transmission zero must be positive, got {tz}")));
            }
            if let Some(band) = edges.iter().position(|&(lo, hi)| tz >= lo && tz <= hi) {
                return Err(CircuitError::ZeroInBand { tz, band });
            }
        }
        Ok(Self { bands, zeros, notch_q })
    }

    pub fn bands(&self) -> &[BandSection] {
        &self.bands
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    fn notch(&self, f: f64) -> Complex64 {
        let mut n = Complex64::new(1.0, 0.0);
        for &z in &self.zeros {
            let d = (f - z) * (f + z);
            n *= Complex64::new(d, 0.0) / Complex64::new(d, f * z / self.notch_q);
        }
        n
    }

    /// `(s_dd11, s_dd21)` at `f`.
    pub fn eval(&self, f: f64) -> (Complex64, Complex64) {
        let mut s11 = Complex64::new(1.0, 0.0);
        let mut s21 = Complex64::new(0.0, 0.0);
        for b in &self.bands {
            let (r, t) = b.eval(f);
            s11 *= r;
            s21 += t;
        }
        s21 *= self.notch(f);
        let power = s11.norm_sqr() + s21.norm_sqr();
        if power > 1.0 {
            let scale = power.sqrt().recip();
            s11 *= scale;
            s21 *= scale;
        }
        (s11, s21)
    }

    /// Peak and 3 dB edges of band `index`, located on the continuous model.
    pub fn band_metrics(&self, index: usize) -> Option<BandMetrics> {
        let band = self.bands.get(index)?;
        let mag = |f: f64| self.eval(f).1.norm();
        let (lo, hi) = band.edges();
        let span = hi - lo;
        let peak_hz = golden_max(mag, lo - 0.5 * span, hi + 0.5 * span);
        let peak = mag(peak_hz);
        let level = peak / SQRT_2;
        let below = |f: f64| mag(f) < level;
        let lower = edge_search(&mag, level, peak_hz, -span, &below)?;
        let upper = edge_search(&mag, level, peak_hz, span, &below)?;
        let center = 0.5 * (lower + upper);
        Some(BandMetrics {
            peak_hz,
            peak_mag: peak,
            lower_3db: lower,
            upper_3db: upper,
            center_hz: center,
            fbw: (upper - lower) / center,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandMetrics {
    pub peak_hz: f64,
    pub peak_mag: f64,
    pub lower_3db: f64,
    pub upper_3db: f64,
    /// Midpoint of the 3 dB edges.
    pub center_hz: f64,
    pub fbw: f64,
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > 1e-9 * b.abs() {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Walks from `start` in steps of `step` until the magnitude drops below
/// `level`, then bisects the crossing.
fn edge_search<F: Fn(f64) -> f64, B: Fn(f64) -> bool>(
    mag: &F,
    level: f64,
    start: f64,
    step: f64,
    below: &B,
) -> Option<f64> {
    let mut inside = start;
    let mut outside = start;
    let step = step / 16.0;
    for _ in 0..256 {
        outside += step;
        if outside <= 0.0 {
            return None;
        }
        if below(outside) {
            break;
        }
        inside = outside;
    }
    if !below(outside) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (inside + outside);
        if mag(mid) < level {
            outside = mid;
        } else {
            inside = mid;
        }
        if (outside - inside).abs() <= 1e-12 * mid {
            break;
        }
    }
    Some(0.5 * (inside + outside))
}

/// Lorentzian common-mode leakage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmModel {
    /// `(frequency Hz, attenuation dB)` pairs.
    pub resonances: Vec<(f64, f64)>,
    pub q: f64,
}

impl CmModel {
    pub fn new(resonances: Vec<(f64, f64)>, q: f64) -> Result<Self, CircuitError> {
        if !(q.is_finite() && q > 0.0) {
            return Err(CircuitError::CommonMode(format!("Q must be positive, got {q}")));
        }
        for &(f, att) in &resonances {
            if !(f.is_finite() && f > 0.0) {
                return Err(CircuitError::CommonMode(format!("resonance must be positive, got {f}")));
            }
            if !(att.is_finite() && att >= 0.0) {
                return Err(CircuitError::CommonMode(format!("attenuation must be >= 0 dB, got {att}")));
            }
        }
        Ok(Self { resonances, q })
    }

    /// Leakage at the unperturbed frequencies of the design's even modes.
    pub fn for_design(design: &FilterDesign, leakage_db: f64) -> Result<Self, CircuitError> {
        let mut res = Vec::with_capacity(design.via_cm_modes.len());
        for m in &design.via_cm_modes {
            let f = modal::resonant_frequency(&design.spec, *m)
                .map_err(|e| CircuitError::CommonMode(e.to_string()))?;
            res.push((f, leakage_db));
        }
        Self::new(res, DEFAULT_CM_Q)
    }

    pub fn eval(&self, f: f64) -> Complex64 {
        self.resonances
            .iter()
            .map(|&(fr, att)| {
                let a = 10f64.powf(-att / 20.0);
                Complex64::new(a, 0.0) / Complex64::new(1.0, self.q * (f / fr - fr / f))
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedModeSParams {
    pub freqs: Vec<f64>,
    pub s_dd11: Vec<Complex64>,
    pub s_dd21: Vec<Complex64>,
    pub s_cc21: Vec<Complex64>,
    pub metadata: BTreeMap<String, String>,
}

impl MixedModeSParams {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Differential pair as a reciprocal, symmetric 2-port.
    pub fn write_touchstone<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TOUCHSTONE_OPTIONS}")?;
        for (k, v) in &self.metadata {
            writeln!(w, "! {k}: {v}")?;
        }
        writeln!(w, "! columns: freq S11 S21 S12 S22 (differential pair)")?;
        for i in 0..self.freqs.len() {
            let (s11, s21) = (self.s_dd11[i], self.s_dd21[i]);
            writeln!(
                w,
                "{:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e} {:.8e}",
                self.freqs[i], s11.re, s11.im, s21.re, s21.im, s21.re, s21.im, s11.re, s11.im
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..self.freqs.len() {
            let (a, b, c) = (self.s_dd11[i], self.s_dd21[i], self.s_cc21[i]);
            writeln!(
                w,
                "{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
                self.freqs[i], a.re, a.im, b.re, b.im, c.re, c.im
            )?;
        }
        Ok(())
    }
}

fn check_grid(freqs: &[f64]) -> Result<(), CircuitError> {
    if freqs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(CircuitError::Sweep("frequencies must be positive".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CircuitError::Sweep("frequencies must be strictly ascending".into()));
    }
    Ok(())
}

fn design_metadata(design: &FilterDesign) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("kind".into(), format!("{:?}", design.kind).to_lowercase());
    m.insert("radius_m".into(), format!("{:e}", design.spec.radius_m()));
    m.insert("eps_eff".into(), format!("{:.12}", design.spec.eps_eff()));
    m
}

/// Differential-mode response on `freqs`; `s_cc21` is left at zero.
pub fn dm_response(
    design: &FilterDesign,
    bands: &[BandSection],
    tz: &[f64],
    freqs: &[f64],
) -> Result<MixedModeSParams, CircuitError> {
    dm_response_with_q(design, bands, tz, freqs, DEFAULT_NOTCH_Q)
}

pub fn dm_response_with_q(
    design: &FilterDesign,
    bands: &[BandSection],
    tz: &[f64],
    freqs: &[f64],
    notch_q: f64,
) -> Result<MixedModeSParams, CircuitError> {
    check_grid(freqs)?;
    let model = DmModel::new(bands.to_vec(), tz.to_vec(), notch_q)?;
    let (s_dd11, s_dd21) = freqs.iter().map(|&f| model.eval(f)).unzip();
    let mut metadata = design_metadata(design);
    metadata.insert("g_values".into(), format!("{:?}", G_VALUES));
    metadata.insert("notch_q".into(), format!("{notch_q}"));
    Ok(MixedModeSParams {
        freqs: freqs.to_vec(),
        s_dd11,
        s_dd21,
        s_cc21: vec![Complex64::new(0.0, 0.0); freqs.len()],
        metadata,
    })
}

/// Common-mode leakage on `freqs`; the differential entries are a matched,
/// non-transmitting placeholder.
pub fn cm_response(
    design: &FilterDesign,
    cm_resonances: &[(f64, f64)],
    freqs: &[f64],
) -> Result<MixedModeSParams, CircuitError> {
    check_grid(freqs)?;
    let model = CmModel::new(cm_resonances.to_vec(), DEFAULT_CM_Q)?;
    let mut metadata = design_metadata(design);
    metadata.insert("cm_q".into(), format!("{}", model.q));
    Ok(MixedModeSParams {
        freqs: freqs.to_vec(),
        s_dd11: vec![Complex64::new(1.0, 0.0); freqs.len()],
        s_dd21: vec![Complex64::new(0.0, 0.0); freqs.len()],
        s_cc21: freqs.iter().map(|&f| model.eval(f)).collect(),
        metadata,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub f_start: f64,
    pub f_stop: f64,
    pub points: usize,
    pub notch_q: f64,
    /// Overrides the design's predicted passbands when set.
    pub bands: Option<Vec<BandSection>>,
    /// `None` uses the design's even-mode frequencies at `cm_leakage_db`.
    pub cm_resonances: Option<Vec<(f64, f64)>>,
    pub cm_leakage_db: f64,
    pub cm_q: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            f_start: 1e9,
            f_stop: 8e9,
            points: 1001,
            notch_q: DEFAULT_NOTCH_Q,
            bands: None,
            cm_resonances: None,
            cm_leakage_db: DEFAULT_CM_LEAKAGE_DB,
            cm_q: DEFAULT_CM_Q,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<f64>, CircuitError> {
        if !(self.f_start.is_finite() && self.f_start > 0.0 && self.f_stop > self.f_start) {
            return Err(CircuitError::Sweep(format!(
                "need 0 < f_start < f_stop, got {} and {}",
                self.f_start, self.f_stop
            )));
        }
        if self.points < 2 {
            return Err(CircuitError::Sweep("at least two points are required".into()));
        }
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                if i == self.points - 1 {
                    self.f_stop
                } else {
                    self.f_start + (self.f_stop - self.f_start) * i as f64 / last
                }
            })
            .collect())
    }
}

/// Full mixed-mode sweep of a design.
pub fn sweep(design: &FilterDesign, config: &SweepConfig) -> Result<MixedModeSParams, CircuitError> {
    let freqs = config.grid()?;
    let bands = match &config.bands {
        Some(b) => b.clone(),
        None => bands_from_passbands(&design.predicted_passbands)?,
    };
    let mut out = dm_response_with_q(design, &bands, &design.predicted_tz, &freqs, config.notch_q)?;
    let cm = match &config.cm_resonances {
        Some(r) => CmModel::new(r.clone(), config.cm_q)?,
        None => {
            let base = CmModel::for_design(design, config.cm_leakage_db)?;
            CmModel::new(base.resonances, config.cm_q)?
        }
    };
    out.s_cc21 = freqs.iter().map(|&f| cm.eval(f)).collect();
    out.metadata.insert("cm_q".into(), format!("{}", cm.q));
    out.metadata.insert(
        "cm_resonances_hz".into(),
        cm.resonances
            .iter()
            .map(|(f, a)| format!("{f:.6e}@{a}dB"))
            .collect::<Vec<_>>()
            .join(" "),
    );
    Ok(out)
}
