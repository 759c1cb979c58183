mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use spintime::arrival::{arrival_distribution, mean_arrival, ArrivalSeries};
use spintime::barrier::{scattering_state, transmission_amplitude, BarrierScenario, KGrid};
use spintime::guidance::{current_spinless, spin_current_term, spin_vector, velocity, SpinorState};
use spintime::packets::UniformFieldPacket;
use spintime::phys::electron_constants;
use spintime::quadrature::QuadratureRule;
use spintime::trajectory::initial_position;
use spintime::Vec3;

fn barrier(v0: f64, width: f64) -> BarrierScenario {
    BarrierScenario {
        v0,
        width,
        k0: 1.6,
        sigma0: 5.0,
        x0: -50.0,
        kgrid: KGrid::around(1.6, 5.0, 65, QuadratureRule::GaussLegendre),
    }
}

fn packet(force: f64) -> UniformFieldPacket {
    let c = electron_constants();
    UniformFieldPacket::new(5.0, c.speed_for_energy(5.0).unwrap(), force, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn energy_wavenumber_round_trip(log_e in -6.0f64..3.0) {
        let c = electron_constants();
        let e = 10f64.powf(log_e);
        let back = c.wavenumber_to_energy(c.energy_to_wavenumber(e).unwrap());
        prop_assert!(common::close(back, e, 1e-12));
    }

    #[test]
    fn normalized_spinor_gives_unit_spin(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
        let n = (a * a + b * b + c * c + d * d).sqrt();
        prop_assume!(n > 1e-3);
        let chi = SpinorState::new(Complex64::new(a / n, b / n), Complex64::new(c / n, d / n)).unwrap();
        prop_assert!((chi.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert!((spin_vector(&chi).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitarity_for_any_barrier(k in 0.05f64..3.0, v0 in 0.0f64..15.0, width in 0.5f64..20.0) {
        let c = electron_constants();
        let st = scattering_state(k, &barrier(v0, width), &c).unwrap();
        prop_assert!((st.t.norm_sqr() + st.r.norm_sqr() - 1.0).abs() <= 1e-12);
        let (t, _) = common::transfer_matrix(k, &[(0.0, width, v0)], &c);
        prop_assert!((st.t - t).norm() <= 1e-9 * t.norm().max(1e-6), "{} vs {}", st.t, t);
    }

    #[test]
    fn tunnelling_falls_with_width(frac in 0.05f64..0.95, width in 0.5f64..15.0, extra in 0.1f64..5.0) {
        let c = electron_constants();
        let v0 = 8.0;
        let k = (frac * v0 / c.kinetic_scale()).sqrt();
        let thin = transmission_amplitude(k, &barrier(v0, width), &c).unwrap().norm_sqr();
        let thick = transmission_amplitude(k, &barrier(v0, width + extra), &c).unwrap().norm_sqr();
        prop_assert!(thick < thin);
    }

    #[test]
    fn resonances_transmit_fully(n in 1u32..8, width in 2.0f64..20.0) {
        let c = electron_constants();
        let v0 = 8.0;
        let q = n as f64 * std::f64::consts::PI / width;
        let k = (q * q + v0 / c.kinetic_scale()).sqrt();
        let t = transmission_amplitude(k, &barrier(v0, width), &c).unwrap();
        prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn streamlines_follow_the_spread(z0 in -20.0f64..20.0, t in 0.0f64..30.0) {
        let p = packet(0.05);
        prop_assert!(common::close(p.z_exact(z0, t) / z0, p.spread(t) / p.sigma0, 1e-14) || z0 == 0.0);
    }

    #[test]
    fn spinless_x_order_is_preserved(xa in -15.0f64..15.0, gap in 1e-3f64..10.0, y in -10.0f64..10.0, t in 0.0f64..20.0) {
        let p = packet(0.05);
        let (a, _) = p.xy_exact(xa, y, t, false);
        let (b, _) = p.xy_exact(xa + gap, y, t, false);
        prop_assert!(a < b);
    }

    #[test]
    fn spin_flip_negates_only_the_spin_part(x in -10.0f64..40.0, y in -10.0f64..10.0, z in -10.0f64..10.0, t in 0.0f64..3.0) {
        let p = packet(0.05);
        let c = p.constants;
        let w = p.wave_sample(Vec3::new(x, y, z), t);
        prop_assume!(w.density() > 1e-25);
        let base = current_spinless(&w, &c);
        let js = spin_current_term(&w, Vec3::Z, &c);
        let up = velocity(&w, Some(Vec3::Z), &c).unwrap();
        let down = velocity(&w, Some(-Vec3::Z), &c).unwrap();
        let rho = w.density();
        let tol = 1e-12 * (up.norm() + down.norm()).max(1.0);
        prop_assert!(((up + down) * 0.5 - base * (1.0 / rho)).norm() <= tol);
        prop_assert!(((up - down) * 0.5 - js * (1.0 / rho)).norm() <= tol);
    }

    #[test]
    fn closed_form_velocity_matches_factorized(x in -10.0f64..40.0, y in -10.0f64..10.0, z in -10.0f64..10.0, t in 0.0f64..3.0, spin in any::<bool>()) {
        let p = packet(0.05);
        let r = Vec3::new(x, y, z);
        let a = p.velocity(r, t, spin);
        let b = spintime::guidance::velocity_factorized(&p.factorized_sample(r, t), spin, &p.constants).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn distribution_ignores_current_scale(exp in -20i32..20, scale in 1e-3f64..1e3) {
        let times: Vec<f64> = (0..101).map(|i| i as f64 * 0.1).collect();
        let j: Vec<f64> = times.iter().map(|t| (-(t - 5.0) * (t - 5.0)).exp() + 1e-3 * t).collect();
        let s = ArrivalSeries::from_samples(Vec3::ZERO, times.clone(), j.clone(), j.clone()).unwrap();
        let pi = arrival_distribution(&s, true).unwrap();
        // Powers of two rescale exactly.
        let p2 = 2f64.powi(exp);
        let exact = ArrivalSeries::from_samples(Vec3::ZERO, times.clone(), j.iter().map(|v| v * p2).collect(), j.clone()).unwrap();
        prop_assert_eq!(&arrival_distribution(&exact, true).unwrap(), &pi);
        prop_assert_eq!(mean_arrival(&exact, true).unwrap(), mean_arrival(&s, true).unwrap());
        let any = ArrivalSeries::from_samples(Vec3::ZERO, times, j.iter().map(|v| v * scale).collect(), j).unwrap();
        for (a, b) in arrival_distribution(&any, true).unwrap().iter().zip(&pi) {
            prop_assert!(common::close(*a, *b, 1e-14));
        }
    }

    #[test]
    fn mean_lies_inside_window(centre in 1.0f64..9.0, width in 0.2f64..3.0) {
        let times: Vec<f64> = (0..401).map(|i| i as f64 * 0.025).collect();
        let j: Vec<f64> = times.iter().map(|t| (-((t - centre) / width).powi(2)).exp()).collect();
        let s = ArrivalSeries::from_samples(Vec3::ZERO, times, j.clone(), j).unwrap();
        let tau = mean_arrival(&s, false).unwrap();
        prop_assert!((0.0..=10.0).contains(&tau));
        let pi = arrival_distribution(&s, false).unwrap();
        prop_assert!(pi.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn initial_positions_are_reproducible(seed in any::<u64>(), id in 0usize..100_000) {
        let s = common::uniform();
        prop_assert_eq!(initial_position(&s, seed, id), initial_position(&s, seed, id));
        prop_assert_ne!(initial_position(&s, seed, id), initial_position(&s, seed, id + 1));
    }
}
