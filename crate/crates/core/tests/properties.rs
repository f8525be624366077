use std::f64::consts::{PI, TAU};

use circpatch::balanced::{
    self, port_coupling, solve_output_angle, DesignOptions, Excitation, Layer, OrientationRule, PortPair,
    SlotMetadata,
};
use circpatch::circuit::{self, band_section_from_spec, coupling_from_split, split_from_coupling, DmModel};
use circpatch::fields;
use circpatch::modal::{self, ModeId, Orientation, ResonatorSpec};
use proptest::prelude::*;

fn orientation() -> impl Strategy<Value = Orientation> {
    prop_oneof![Just(Orientation::Cosine), Just(Orientation::Sine)]
}

fn mode(max_n: u32, max_i: u32) -> impl Strategy<Value = ModeId> {
    (0..=max_n, 1..=max_i, orientation()).prop_map(|(n, i, o)| {
        let o = if n == 0 { Orientation::Cosine } else { o };
        ModeId::new(n, i, o).unwrap()
    })
}

fn spec() -> impl Strategy<Value = ResonatorSpec> {
    (5e-3..50e-3f64, 1.0..12.0f64).prop_map(|(r, e)| ResonatorSpec::new(r, e).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ez_parity_under_half_turn(s in spec(), m in mode(6, 4), u in 0.0..1.0f64, phi in 0.0..TAU) {
        let rho = u * s.radius_m();
        let a = fields::field_at(&s, m, rho, phi).unwrap().e_z.re;
        let b = fields::field_at(&s, m, rho, phi + PI).unwrap().e_z.re;
        let sign = if m.n() % 2 == 0 { 1.0 } else { -1.0 };
        prop_assert!((b - sign * a).abs() <= 1e-12);
    }

    #[test]
    fn drives_select_parity(s in spec(), m in mode(6, 3), angle in 0.0..TAU) {
        let pair = PortPair::new(angle, Layer::Top);
        let dm = port_coupling(&s, m, &pair, Excitation::Dm).unwrap();
        let cm = port_coupling(&s, m, &pair, Excitation::Cm).unwrap();
        if m.n() % 2 == 0 {
            prop_assert!(dm.abs() <= 1e-12);
        } else {
            prop_assert!(cm.abs() <= 1e-12);
        }
    }

    #[test]
    fn magnetic_wall_at_rim(s in spec(), m in mode(6, 4), phi in 0.0..TAU) {
        // H is E / eta with eta = eta_0 / sqrt(eps_eff)
        let eta0 = modal::SPEED_OF_LIGHT * 4e-7 * PI;
        let h_unit = s.eps_eff().sqrt() / eta0;
        let p = fields::field_at(&s, m, s.radius_m(), phi).unwrap();
        let bound = 1e-9 * h_unit * fields::peak_ez(m).unwrap();
        prop_assert!(p.h_phi.norm() <= bound);
    }

    #[test]
    fn normalized_ez_bounded(s in spec(), m in mode(6, 4), u in 0.0..=1.0f64, phi in 0.0..TAU) {
        let v = fields::field_at(&s, m, u * s.radius_m(), phi).unwrap().e_z.norm();
        prop_assert!(v <= fields::peak_ez(m).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn frequency_scale_law(s in spec(), m in mode(6, 4), k in 1.0..5.0f64) {
        let f = modal::resonant_frequency(&s, m).unwrap();
        let bigger = ResonatorSpec::new(s.radius_m() * k, s.eps_eff()).unwrap();
        let denser = ResonatorSpec::new(s.radius_m(), s.eps_eff() * k * k).unwrap();
        let fb = modal::resonant_frequency(&bigger, m).unwrap();
        let fd = modal::resonant_frequency(&denser, m).unwrap();
        prop_assert!((fb * k / f - 1.0).abs() <= 1e-13);
        prop_assert!((fd * k / f - 1.0).abs() <= 1e-13);
    }

    #[test]
    fn fit_inverts_resonance(r in 5e-3..50e-3f64, m in mode(4, 3), f in 1e9..2e10f64) {
        if let Ok(s) = ResonatorSpec::fitted(r, m, f) {
            let back = modal::resonant_frequency(&s, m).unwrap();
            prop_assert!((back / f - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn split_coupling_round_trip(f0 in 1e8..1e11f64, k in 0.0..=0.99f64) {
        let (a, b) = split_from_coupling(f0, k).unwrap();
        let back = coupling_from_split(a, b).unwrap().k;
        prop_assert!((back - k).abs() <= 1e-12 * k.max(1e-300) || (back - k).abs() <= 1e-15);
    }

    #[test]
    fn coupling_monotone_in_upper(f1 in 1e9..5e9f64, d1 in 0.0..2e9f64, extra in 1e3..2e9f64) {
        let lo = coupling_from_split(f1, f1 + d1).unwrap().k;
        let hi = coupling_from_split(f1, f1 + d1 + extra).unwrap().k;
        prop_assert!(hi > lo);
    }

    #[test]
    fn coupling_scale_invariant(f1 in 1e9..5e9f64, d in 0.0..2e9f64, e in -20i32..20) {
        let base = coupling_from_split(f1, f1 + d).unwrap().k;
        let s = 2f64.powi(e);
        prop_assert_eq!(coupling_from_split(f1 * s, (f1 + d) * s).unwrap().k, base);
    }

    #[test]
    fn section_symmetric_in_lowpass_variable(f0 in 1e9..1e10f64, fbw in 0.01..0.5f64, lam in 0.0..3.0f64) {
        let band = band_section_from_spec(f0, fbw).unwrap();
        let model = DmModel::new(vec![band], vec![], 10.0).unwrap();
        let root = (1.0 + 0.25 * lam * lam).sqrt();
        let up = model.eval(f0 * (root + 0.5 * lam)).1.norm();
        let down = model.eval(f0 * (root - 0.5 * lam)).1.norm();
        prop_assert!((up - down).abs() <= 1e-9);
    }

    #[test]
    fn response_is_passive(
        c1 in 1e9..3e9f64, fbw1 in 0.02..0.3f64,
        gap in 1.5..3.0f64, fbw2 in 0.02..0.3f64,
        q in 1.0..100.0f64, f in 0.5e9..12e9f64,
    ) {
        let a = band_section_from_spec(c1, fbw1).unwrap();
        let b = band_section_from_spec(c1 * gap, fbw2).unwrap();
        let tz = c1 * (1.0 + gap) / 2.0;
        if let Ok(model) = DmModel::new(vec![a, b], vec![tz], q) {
            let (s11, s21) = model.eval(f);
            prop_assert!(s11.norm_sqr() + s21.norm_sqr() <= 1.0 + 1e-9);
            prop_assert_eq!(model.eval(tz).1.norm(), 0.0);
        }
    }

    #[test]
    fn output_angles_are_sound(
        pass_n in proptest::collection::vec(1u32..6, 1..3),
        sup_n in proptest::collection::vec(1u32..6, 1..3),
        level in 0.0..0.9f64,
    ) {
        let pass: Vec<ModeId> = pass_n.iter().map(|&n| ModeId::tm(n, 1).unwrap()).collect();
        let sup: Vec<ModeId> = sup_n.iter().map(|&n| ModeId::tm(n, 1).unwrap()).collect();
        let rule = OrientationRule::default();
        let spec = ResonatorSpec::new(0.016, 4.0).unwrap();
        if let Ok(angles) = solve_output_angle(&pass, &sup, rule, level) {
            for phi in angles {
                prop_assert!((0.0..PI).contains(&phi));
                for m in &sup {
                    let m = rule.apply(*m);
                    let ez = fields::field_at(&spec, m, spec.radius_m(), phi).unwrap().e_z.norm();
                    prop_assert!(ez <= 1e-12);
                }
                for m in &pass {
                    let m = rule.apply(*m);
                    let ez = fields::field_at(&spec, m, spec.radius_m(), phi).unwrap().e_z.norm();
                    let rim_max = fields::field_at(&spec, m.with_orientation(Orientation::Cosine), spec.radius_m(), 0.0)
                        .unwrap()
                        .e_z
                        .norm();
                    prop_assert!(ez >= level * rim_max - 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rotation_leaves_scores_unchanged(delta in -PI..PI, dual in any::<bool>()) {
        let s = ResonatorSpec::new(0.016, 4.0).unwrap();
        let opts = DesignOptions::default();
        let d = if dual {
            balanced::design_dual_band(&s, Some(2.77e9), SlotMetadata::default(), &opts).unwrap()
        } else {
            balanced::design_single_band(&s, Some(2.77e9), &opts).unwrap()
        };
        let r = d.rotated(delta);
        prop_assert_eq!(&r.predicted_passbands, &d.predicted_passbands);
        prop_assert_eq!(&r.predicted_tz, &d.predicted_tz);
        prop_assert!((r.output_angle_deg() - d.output_angle_deg()).abs() < 1e-9);
        for (a, b) in d.via_sites.iter().zip(&r.via_sites) {
            let sa = d.via_score_at(a.rho, a.phi).unwrap();
            let sb = r.via_score_at(b.rho, b.phi).unwrap();
            prop_assert!((sa - sb).abs() <= 1e-12);
            prop_assert!((sa - a.score).abs() <= 1e-12);
        }
        for (a, b) in d.slot_sites.iter().zip(&r.slot_sites) {
            let sa = d.slot_score_at(a).unwrap();
            let sb = r.slot_score_at(b).unwrap();
            prop_assert!((sa - sb).abs() <= 1e-12);
        }
        let sa = circuit::sweep(&d, &circuit::SweepConfig { points: 41, ..Default::default() }).unwrap();
        let sb = circuit::sweep(&r, &circuit::SweepConfig { points: 41, ..Default::default() }).unwrap();
        prop_assert_eq!(sa.s_dd21, sb.s_dd21);
    }
}

#[test]
fn single_and_dual_share_input_and_spec() {
    let s = ResonatorSpec::new(0.016, 4.0).unwrap();
    let opts = DesignOptions::default();
    let a = balanced::design_single_band(&s, Some(2.77e9), &opts).unwrap();
    let b = balanced::design_dual_band(&s, Some(2.77e9), SlotMetadata::default(), &opts).unwrap();
    assert_eq!(a.spec, b.spec);
    assert_eq!(a.input_pair, b.input_pair);
    assert_ne!(a.output_pair, b.output_pair);
}
