//! Text and JSON renderings of designs and spectra.

use std::fmt::Write as _;

use crate::balanced::{FilterDesign, FilterKind, PerturberSite};
use crate::circuit::{BandMetrics, G_VALUES};
use crate::modal::SpectrumEntry;

const GHZ: f64 = 1e9;
const MM: f64 = 1e3;

pub fn design_to_json(design: &FilterDesign) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(design)?;
    s.push('\n');
    Ok(s)
}

pub fn design_from_json(text: &str) -> serde_json::Result<FilterDesign> {
    serde_json::from_str(text)
}

fn kind_name(kind: FilterKind) -> &'static str {
    match kind {
        FilterKind::Single => "single-band",
        FilterKind::Dual => "dual-band",
    }
}

fn site_table(out: &mut String, title: &str, sites: &[PerturberSite]) {
    let _ = writeln!(out, "{title}: {}", sites.len());
    if sites.is_empty() {
        return;
    }
    let _ = writeln!(out, "  {:>3} {:>10} {:>10} {:>10} {:>12}", "#", "rho_mm", "phi_deg", "axis_deg", "score");
    for (i, s) in sites.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {:>3} {:>10.4} {:>10.4} {:>10.4} {:>12.6}",
            i + 1,
            s.rho * MM,
            s.phi.to_degrees(),
            s.direction.to_degrees(),
            s.score
        );
    }
}

/// `key: value` lines and site tables; contains nothing run-dependent.
pub fn design_summary(design: &FilterDesign) -> String {
    let mut out = String::new();
    let spec = &design.spec;
    let modes = |v: &[crate::modal::ModeId]| v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "kind: {}", kind_name(design.kind));
    let _ = writeln!(out, "radius: {:.4} mm ({:e} m)", spec.radius_m() * MM, spec.radius_m());
    let _ = writeln!(out, "eps_eff: {:.9}", spec.eps_eff());
    let _ = writeln!(out, "reference_axis_deg: {:.6}", design.reference_axis.to_degrees());
    let _ = writeln!(
        out,
        "input_pair: {:.6} deg / {:.6} deg ({:?})",
        design.input_pair.angle.to_degrees(),
        design.input_pair.partner_angle().to_degrees(),
        design.input_pair.layer
    );
    let _ = writeln!(
        out,
        "output_pair: {:.6} deg / {:.6} deg ({:?})",
        design.output_pair.angle.to_degrees(),
        design.output_pair.partner_angle().to_degrees(),
        design.output_pair.layer
    );
    let _ = writeln!(out, "output_angle_deg: {:.6}", design.output_angle_deg());
    let _ = writeln!(out, "passed_modes: {}", modes(&design.passed_modes));
    let _ = writeln!(out, "suppressed_dm_modes: {}", modes(&design.suppressed_dm_modes));
    for (i, p) in design.predicted_passbands.iter().enumerate() {
        let _ = writeln!(
            out,
            "passband_{}: {:.6} GHz, fbw {:.2}%",
            i + 1,
            p.center_hz / GHZ,
            p.fbw * 100.0
        );
    }
    for (i, tz) in design.predicted_tz.iter().enumerate() {
        let _ = writeln!(out, "tz_{}: {:.6} GHz", i + 1, tz / GHZ);
    }
    site_table(&mut out, "via_sites", &design.via_sites);
    site_table(&mut out, "slot_sites", &design.slot_sites);
    if !design.metadata.is_empty() {
        let _ = writeln!(out, "geometry:");
        for (k, v) in &design.metadata {
            let shown = match k.strip_suffix("_m") {
                Some(base) => format!("{base} = {:.4} mm", v * MM),
                None => format!("{k} = {v}"),
            };
            let _ = writeln!(out, "  {shown}");
        }
    }
    out
}

/// Human-readable dossier. `generated` is the only run-dependent line.
pub fn report_text(design: &FilterDesign, metrics: &[BandMetrics], generated: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Balanced {} filter on a circular patch", kind_name(design.kind));
    let _ = writeln!(out, "generated: {generated}");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "The output pair sits {:.1} deg from the reference axis, on an exact rim null of {}.",
        design.output_angle_deg(),
        design
            .suppressed_dm_modes
            .iter()
            .filter(|m| {
                let phi = design.output_pair.angle - design.reference_axis;
                m.orientation().trig(m.n() as f64 * phi).abs() < 1e-9
            })
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(" and ")
    );
    let _ = writeln!(
        out,
        "{} vias sit where the even modes are strong and the odd modes vanish.",
        design.via_sites.len()
    );
    if !design.slot_sites.is_empty() {
        let _ = writeln!(
            out,
            "{} radial slots cut the upper-band current while sparing the lower band.",
            design.slot_sites.len()
        );
    }
    let _ = writeln!(out);
    out.push_str(&design_summary(design));
    let _ = writeln!(out);
    let _ = writeln!(out, "response model: 2nd-order maximally flat, g = {:?}", G_VALUES);
    for (i, m) in metrics.iter().enumerate() {
        let _ = writeln!(
            out,
            "band_{}: peak {:.6} GHz ({:.3} dB), 3 dB edges {:.6}-{:.6} GHz, fbw {:.2}%",
            i + 1,
            m.peak_hz / GHZ,
            20.0 * m.peak_mag.log10(),
            m.lower_3db / GHZ,
            m.upper_3db / GHZ,
            m.fbw * 100.0
        );
    }
    for (key, label) in [("phi1_deg", "phi1"), ("phi2_deg", "phi2"), ("phi_c_deg", "phi_c")] {
        if let Some(v) = design.metadata.get(key) {
            let computed = match key {
                "phi_c_deg" => design.slot_sites.first().map(|s| s.phi.to_degrees()),
                _ => Some(design.output_angle_deg()),
            };
            if let Some(c) = computed {
                let _ = writeln!(out, "{label}: fabricated {v:.1} deg, computed {c:.3} deg");
            }
        }
    }
    out
}

pub fn spectrum_table(entries: &[SpectrumEntry]) -> String {
    let mut out = String::new();
    let f_ref = entries.first().map(|e| e.freq).unwrap_or(1.0);
    let _ = writeln!(out, "{:<6} {:>3} {:>3} {:>4} {:>16} {:>10}", "mode", "n", "i", "deg", "f_hz", "f/f1");
    for e in entries {
        let _ = writeln!(
            out,
            "{:<6} {:>3} {:>3} {:>4} {:>16.6e} {:>10.6}",
            format!("TM{}{}", e.mode.n(), e.mode.i()),
            e.mode.n(),
            e.mode.i(),
            e.degeneracy,
            e.freq,
            e.freq / f_ref
        );
    }
    out
}

pub fn spectrum_csv(entries: &[SpectrumEntry]) -> String {
    let mut out = String::from("mode,n,i,degeneracy,k_c,freq_hz,ratio\n");
    let f_ref = entries.first().map(|e| e.freq).unwrap_or(1.0);
    for e in entries {
        let _ = writeln!(
            out,
            "TM{}{},{},{},{},{:.12e},{:.12e},{:.12e}",
            e.mode.n(),
            e.mode.i(),
            e.mode.n(),
            e.mode.i(),
            e.degeneracy,
            e.k_c,
            e.freq,
            e.freq / f_ref
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balanced::{design_single_band, DesignOptions};
    use crate::modal::{self, ResonatorSpec};

    fn design() -> FilterDesign {
        let spec = ResonatorSpec::new(0.016, 4.0).unwrap();
        design_single_band(&spec, Some(2.77e9), &DesignOptions::default()).unwrap()
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = design();
        let back = design_from_json(&design_to_json(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn corrupted_json_is_rejected() {
        let text = design_to_json(&design()).unwrap().replace("\"eps_eff\": 3.", "\"eps_eff\": 0.");
        assert!(design_from_json(&text).is_err());
    }

    #[test]
    fn summary_lines() {
        let s = design_summary(&design());
        assert!(s.contains("output_angle_deg: 60.000000"));
        assert!(s.contains("via_sites: 3"));
        assert!(s.contains("tz_1: 4.59"));
    }

    #[test]
    fn spectrum_ratios_column() {
        let spec = ResonatorSpec::new(0.016, 4.0).unwrap();
        let e = modal::spectrum(&spec, 8e9).unwrap();
        let csv = spectrum_csv(&e);
        assert!(csv.lines().nth(1).unwrap().starts_with("TM11,1,1,2,"));
        assert!(spectrum_table(&e).lines().count() == e.len() + 1);
    }
}
