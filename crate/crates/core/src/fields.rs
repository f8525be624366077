//! Cavity-model fields of a single TM mode.
//!
//! The patch mode has no `z` variation, so the transverse electric field
//! vanishes and only `E_z`, `H_rho` and `H_phi` survive:
//!
//! ```text
//! E_z   = J_n(k_c rho) T(n phi)
//! H_rho =  j (w eps / k_c) (n / (k_c rho)) J_n(k_c rho) T'(n phi)
//! H_phi = -j (w eps / k_c) J_n'(k_c rho) T(n phi)
//! ```
//!
//! where `T` is `cos` or `sin` depending on orientation. Amplitudes use
//! `E_ni = 1`. Surface current on the patch is `K = z x H_t`.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modal::{self, ModalError, ModeId, Orientation, ResonatorSpec};
use crate::specfun::{self, SpecfunError};

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;

/// Default relative gate for [`rim_nulls`].
pub const DEFAULT_NULL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("radial position {rho} outside [0, {radius}]")]
    OutsidePatch { rho: f64, radius: f64 },
    #[error("angle must be finite")]
    Angle,
    #[error("grid needs n_rho >= 2 and n_phi >= 4, got {n_rho} x {n_phi}")]
    Grid { n_rho: usize, n_phi: usize },
    #[error("TM_0i is azimuthally uniform and has no rim nulls")]
    NoAzimuthalNulls,
    #[error("null tolerance must lie in (0, 1), got {0}")]
    Tolerance(f64),
    #[error(transparent)]
    Modal(#[from] ModalError),
    #[error(transparent)]
    Specfun(#[from] SpecfunError),
}

/// Field components at one point of the patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldPoint {
    pub rho: f64,
    pub phi: f64,
    pub e_z: Complex64,
    pub e_rho: Complex64,
    pub e_phi: Complex64,
    pub h_rho: Complex64,
    pub h_phi: Complex64,
}

impl FieldPoint {
    pub fn surface_current(&self) -> SurfaceCurrent {
        SurfaceCurrent {
            rho: self.rho,
            phi: self.phi,
            k_rho: -self.h_phi,
            k_phi: self.h_rho,
        }
    }

    fn scaled(mut self, s: f64) -> Self {
        self.e_z *= s;
        self.e_rho *= s;
        self.e_phi *= s;
        self.h_rho *= s;
        self.h_phi *= s;
        self
    }
}

/// Surface current density `z x H_t` on the patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCurrent {
    pub rho: f64,
    pub phi: f64,
    pub k_rho: Complex64,
    pub k_phi: Complex64,
}

impl SurfaceCurrent {
    pub fn magnitude(&self) -> f64 {
        (self.k_rho.norm_sqr() + self.k_phi.norm_sqr()).sqrt()
    }

    /// Component along the in-plane unit vector at global angle `direction`.
    pub fn along(&self, direction: f64) -> Complex64 {
        let rel = direction - self.phi;
        self.k_rho * rel.cos() + self.k_phi * rel.sin()
    }
}

/// Precomputed per-mode constants.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ModeField {
    mode: ModeId,
    radius: f64,
    k_c: f64,
    /// `w eps / k_c`; equal to `sqrt(eps_eff) / eta_0` for every mode.
    h_scale: f64,
    /// Peak `|E_z|` over the patch for unit amplitude.
    peak_ez: f64,
}

impl ModeField {
    pub(crate) fn new(spec: &ResonatorSpec, mode: ModeId) -> Result<Self, FieldError> {
        let k_c = modal::cutoff_wavenumber(spec, mode)?;
        let freq = modal::resonant_frequency(spec, mode)?;
        let omega = 2.0 * PI * freq;
        let h_scale = omega * EPS0 * spec.eps_eff() / k_c;
        Ok(Self {
            mode,
            radius: spec.radius_m(),
            k_c,
            h_scale,
            peak_ez: peak_ez(mode)?,
        })
    }

    pub(crate) fn eval(&self, rho: f64, phi: f64) -> Result<FieldPoint, FieldError> {
        if !(rho.is_finite() && rho >= 0.0 && rho <= self.radius * (1.0 + 1e-12)) {
            return Err(FieldError::OutsidePatch {
                rho,
                radius: self.radius,
            });
        }
        if !phi.is_finite() {
            return Err(FieldError::Angle);
        }
        let order = self.mode.order();
        let n = self.mode.n() as f64;
        let x = self.k_c * rho;
        let (j, dj) = specfun::bessel_j_and_prime(order, x)?;
        let j_over_x = specfun::bessel_j_over_x(order, x)?;
        let o = self.mode.orientation();
        let arg = n * phi;
        let t = o.trig(arg);
        let dt = o.trig_derivative(arg);
        let i = Complex64::i();
        Ok(FieldPoint {
            rho,
            phi,
            e_z: Complex64::new(j * t, 0.0),
            e_rho: Complex64::new(0.0, 0.0),
            e_phi: Complex64::new(0.0, 0.0),
            h_rho: i * (self.h_scale * n * j_over_x * dt),
            h_phi: -i * (self.h_scale * dj * t),
        })
    }

    /// `E_z / peak`, so the mode maximum over the patch is 1.
    pub(crate) fn normalized_ez(&self, rho: f64, phi: f64) -> Result<f64, FieldError> {
        Ok(self.eval(rho, phi)?.e_z.re / self.peak_ez)
    }

    /// Surface current scaled by `1 / (h_scale * peak)`: dimensionless and
    /// comparable across modes of one resonator.
    pub(crate) fn normalized_current(&self, rho: f64, phi: f64) -> Result<SurfaceCurrent, FieldError> {
        let k = self.eval(rho, phi)?.surface_current();
        let s = 1.0 / (self.h_scale * self.peak_ez);
        Ok(SurfaceCurrent {
            k_rho: k.k_rho * s,
            k_phi: k.k_phi * s,
            ..k
        })
    }
}

/// Peak `|E_z|` over the patch at unit amplitude: 1 for `n = 0`, otherwise
/// `|J_n(v_n1)|` because the first maximum of `J_n` is its largest.
pub fn peak_ez(mode: ModeId) -> Result<f64, FieldError> {
    if mode.n() == 0 {
        return Ok(1.0);
    }
    let v1 = specfun::prime_root(mode.order(), 1)?;
    Ok(specfun::bessel_j(mode.order(), v1)?.abs())
}

/// Fields of `mode` at `(rho, phi)` with unit amplitude.
pub fn field_at(spec: &ResonatorSpec, mode: ModeId, rho: f64, phi: f64) -> Result<FieldPoint, FieldError> {
    ModeField::new(spec, mode)?.eval(rho, phi)
}

pub fn surface_current(
    spec: &ResonatorSpec,
    mode: ModeId,
    rho: f64,
    phi: f64,
) -> Result<SurfaceCurrent, FieldError> {
    Ok(field_at(spec, mode, rho, phi)?.surface_current())
}

/// Uniform polar sampling: `rho_j = R j / (n_rho - 1)`, `phi_k = 2 pi k / n_phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_rho: usize,
    pub n_phi: usize,
}

impl PolarGrid {
    pub fn new(n_rho: usize, n_phi: usize) -> Result<Self, FieldError> {
        if n_rho < 2 || n_phi < 4 {
            return Err(FieldError::Grid { n_rho, n_phi });
        }
        Ok(Self { n_rho, n_phi })
    }

    pub fn rho(&self, radius: f64, j: usize) -> f64 {
        if j + 1 == self.n_rho {
            radius
        } else {
            radius * j as f64 / (self.n_rho - 1) as f64
        }
    }

    pub fn phi(&self, k: usize) -> f64 {
        TAU * k as f64 / self.n_phi as f64
    }
}

/// Sampled, peak-normalized fields of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMap {
    pub mode: ModeId,
    pub grid: PolarGrid,
    /// Row-major, `rho` outer: `values[j * n_phi + k]`.
    pub values: Vec<FieldPoint>,
    /// Factor applied to every component so the grid maximum of `|E_z|` is 1.
    pub normalization: f64,
}

impl FieldMap {
    pub fn at(&self, j: usize, k: usize) -> &FieldPoint {
        &self.values[j * self.grid.n_phi + k]
    }

    /// Writes the map as CSV, one sample per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "rho_m,phi_rad,Ez_re,Ez_im,Hrho_re,Hrho_im,Hphi_re,Hphi_im,Krho_re,Krho_im,Kphi_re,Kphi_im"
        )?;
        for p in &self.values {
            let k = p.surface_current();
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                p.rho,
                p.phi,
                p.e_z.re,
                p.e_z.im,
                p.h_rho.re,
                p.h_rho.im,
                p.h_phi.re,
                p.h_phi.im,
                k.k_rho.re,
                k.k_rho.im,
                k.k_phi.re,
                k.k_phi.im
            )?;
        }
        Ok(())
    }
}

pub fn field_map(spec: &ResonatorSpec, mode: ModeId, n_rho: usize, n_phi: usize) -> Result<FieldMap, FieldError> {
    let grid = PolarGrid::new(n_rho, n_phi)?;
    let mf = ModeField::new(spec, mode)?;
    let mut values = Vec::with_capacity(n_rho * n_phi);
    for j in 0..n_rho {
        let rho = grid.rho(spec.radius_m(), j);
        for k in 0..n_phi {
            values.push(mf.eval(rho, grid.phi(k))?);
        }
    }
    let max = values.iter().map(|p| p.e_z.norm()).fold(0.0, f64::max);
    let normalization = if max > 0.0 { 1.0 / max } else { 1.0 };
    for v in values.iter_mut() {
        *v = v.scaled(normalization);
    }
    Ok(FieldMap {
        mode,
        grid,
        values,
        normalization,
    })
}

/// Angles in `[0, 2 pi)` where `E_z` vanishes on the rim.
///
/// The rim is scanned for sign changes, each bracket is bisected, and a
/// candidate is accepted when `|E_z| <= tol * max|E_z|` there. Accepted
/// candidates are snapped to the exact zero of the trig factor.
pub fn rim_nulls(spec: &ResonatorSpec, mode: ModeId, tol: f64) -> Result<Vec<f64>, FieldError> {
    if mode.n() == 0 {
        return Err(FieldError::NoAzimuthalNulls);
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(FieldError::Tolerance(tol));
    }
    let mf = ModeField::new(spec, mode)?;
    let r = spec.radius_m();
    let n = mode.n() as f64;
    let rim = |phi: f64| mf.eval(r, phi).map(|p| p.e_z.re);
    let rim_max = mf.eval(r, 0.0)?.e_z.re.abs().max(mf.eval(r, PI / (2.0 * n))?.e_z.re.abs());

    // half-period offset keeps samples away from exact zeros
    let samples = 64 * mode.n() as usize;
    let step = TAU / samples as f64;
    let offset = 0.5 * step;
    let mut out: Vec<f64> = Vec::new();
    for s in 0..samples {
        let a = offset + s as f64 * step;
        let b = a + step;
        let (mut lo, mut hi) = (a, b);
        let mut flo = rim(lo)?;
        let fhi = rim(hi)?;
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = rim(mid)?;
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let approx = 0.5 * (lo + hi);
        if rim(approx)?.abs() > tol * rim_max {
            continue;
        }
        out.push(snap_to_trig_zero(approx, n, mode.orientation()));
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(out)
}

/// Nearest exact zero of `T(n phi)`, wrapped into `[0, 2 pi)`.
fn snap_to_trig_zero(phi: f64, n: f64, orientation: Orientation) -> f64 {
    let period = PI / n;
    let shift = match orientation {
        Orientation::Sine => 0.0,
        Orientation::Cosine => 0.5 * period,
    };
    let k = ((phi - shift) / period).round();
    let z = shift + k * period;
    let wrapped = z.rem_euclid(TAU);
    if (TAU - wrapped) < 1e-12 {
        0.0
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ResonatorSpec {
        ResonatorSpec::new(0.016, 3.92894950185).unwrap()
    }

    fn mode(n: u32, o: Orientation) -> ModeId {
        ModeId::new(n, 1, o).unwrap()
    }

    fn deg(v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| (x.to_degrees() * 1e6).round() / 1e6).collect()
    }

    #[test]
    fn tm01_center() {
        let p = field_at(&spec(), mode(0, Orientation::Cosine), 0.0, 1.234).unwrap();
        assert_eq!(p.e_z.re, 1.0);
        assert_eq!(p.h_rho.norm(), 0.0);
        assert_eq!(p.h_phi.norm(), 0.0);
        assert_eq!(p.e_rho.norm() + p.e_phi.norm(), 0.0);
        let k = surface_current(&spec(), mode(0, Orientation::Cosine), 0.0, 0.0).unwrap();
        assert_eq!(k.magnitude(), 0.0);
    }

    #[test]
    fn tm31_rim_null_at_sixty_degrees() {
        let s = spec();
        let p = field_at(&s, mode(3, Orientation::Sine), s.radius_m(), 60f64.to_radians()).unwrap();
        assert!(p.e_z.norm() < 1e-12);
        let k = surface_current(&s, mode(3, Orientation::Sine), 0.99 * s.radius_m(), 60f64.to_radians()).unwrap();
        assert!(k.magnitude() > 0.0);
    }

    #[test]
    fn tm11_rim_value() {
        let s = spec();
        let p = field_at(&s, mode(1, Orientation::Sine), s.radius_m(), 90f64.to_radians()).unwrap();
        assert!((p.e_z.re.abs() - 0.581865224281596).abs() < 1e-10);
    }

    #[test]
    fn outside_patch_rejected() {
        let s = spec();
        assert!(matches!(
            field_at(&s, mode(1, Orientation::Sine), 1.1 * s.radius_m(), 0.0),
            Err(FieldError::OutsidePatch { .. })
        ));
        assert!(field_at(&s, mode(1, Orientation::Sine), -1e-6, 0.0).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            field_map(&spec(), mode(1, Orientation::Sine), 1, 8),
            Err(FieldError::Grid { .. })
        ));
        assert!(field_map(&spec(), mode(1, Orientation::Sine), 2, 3).is_err());
    }

    #[test]
    fn rim_null_sets() {
        let s = spec();
        let t31 = rim_nulls(&s, mode(3, Orientation::Sine), DEFAULT_NULL_TOL).unwrap();
        assert_eq!(deg(&t31), vec![0.0, 60.0, 120.0, 180.0, 240.0, 300.0]);
        let t21 = rim_nulls(&s, mode(2, Orientation::Cosine), DEFAULT_NULL_TOL).unwrap();
        assert_eq!(deg(&t21), vec![45.0, 135.0, 225.0, 315.0]);
        let t11 = rim_nulls(&s, mode(1, Orientation::Sine), DEFAULT_NULL_TOL).unwrap();
        assert_eq!(deg(&t11), vec![0.0, 180.0]);
        assert_eq!(
            rim_nulls(&s, mode(0, Orientation::Cosine), DEFAULT_NULL_TOL),
            Err(FieldError::NoAzimuthalNulls)
        );
        // exact trig zeros after snapping
        for phi in t31 {
            let v = field_at(&s, mode(3, Orientation::Sine), s.radius_m(), phi).unwrap();
            assert!(v.e_z.norm() < 1e-12);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let m = field_map(&spec(), mode(2, Orientation::Cosine), 3, 4).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "rho_m,phi_rad,Ez_re,Ez_im,Hrho_re,Hrho_im,Hphi_re,Hphi_im,Krho_re,Krho_im,Kphi_re,Kphi_im"
        );
        assert_eq!(lines.len(), 1 + 12);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 12));
    }
}
