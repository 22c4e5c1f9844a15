//! Property checks that span modules or need larger ensembles than the unit
//! tests.

use std::f64::consts::PI;

use nalgebra::Vector3;
use proptest::prelude::*;
use spinwave::dephasing::{
    g2_asymptotic, g2_of_t, g2_zero, overlap_symmetric, phase_matrix, InteractionModel, StateAmplitudes,
};
use spinwave::dicke::{oracle_coupling_matrix, oracle_matrix_element, TimedDicke};
use spinwave::dynamics::{
    e0_of_t, emission_spectrum, fit_lorentzian, linspace, single_exc_ode_oracle, validity_check, ModeGrid,
    PulseProfile, PulseShape,
};
use spinwave::ensemble::{AtomCount, AtomicEnsemble, Geometry, PhysicalUnits, WaveVector};
use spinwave::radiative::{f_pair, gamma_n, ComplexRate, DipoleAxis, KernelMode};
use spinwave::scan::shell_patch;
use spinwave::Complex64;

fn geometry(kind: u8, size_um: f64) -> Geometry {
    match kind % 3 {
        0 => Geometry::Cube { side_um: size_um },
        1 => Geometry::Sphere { radius_um: size_um },
        _ => Geometry::Gaussian { sigma_um: size_um },
    }
}

fn unit(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampled_points_are_contained(kind in 0u8..2, size in 0.5f64..20.0, n in 1usize..300, seed in any::<u64>()) {
        let g = geometry(kind, size);
        let units = PhysicalUnits::default();
        let e = AtomicEnsemble::generate(g, AtomCount::Count(n), seed, units).unwrap();
        prop_assert!(e.positions().iter().all(|p| g.contains(p, &units)));
    }

    #[test]
    fn density_rounding(kind in 0u8..3, size in 1.0f64..8.0, log_rho in 10.0f64..12.5) {
        let g = geometry(kind, size);
        let rho = 10f64.powf(log_rho);
        let n = AtomCount::Density(rho).resolve(&g).unwrap_or(0);
        prop_assume!(n > 0);
        prop_assert!((n as f64 - rho * g.volume_cm3()).abs() <= 0.5);
    }

    #[test]
    fn generation_ignores_thread_count(kind in 0u8..3, n in 1usize..500, seed in any::<u64>()) {
        let g = geometry(kind, 3.0);
        let build = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                AtomicEnsemble::generate(g, AtomCount::Count(n), seed, PhysicalUnits::default()).unwrap()
            })
        };
        let (one, four) = (build(1), build(4));
        prop_assert_eq!(one.positions(), four.positions());
    }

    #[test]
    fn f_is_bounded(r in 0.0f64..80.0, t1 in 0.0f64..PI, p1 in 0.0f64..6.3, t2 in 0.0f64..PI, p2 in 0.0f64..6.3) {
        let axis = DipoleAxis::new(unit(t2, p2)).unwrap();
        prop_assert!(f_pair(&(unit(t1, p1) * r), &axis).abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn symmetric_coupling_is_real_and_factorizes(seed in 0u64..1000, n in 1usize..60, t in 0.0f64..PI, p in 0.0f64..6.3, order in 1usize..4) {
        prop_assume!(order <= n);
        let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 1.5 }, AtomCount::Count(n), seed, PhysicalUnits::default()).unwrap();
        let sys = TimedDicke::new(&e, WaveVector::along_z());
        let k = WaveVector::from(unit(t, p));
        let v = sys.v_nn(order, 0, 0, &k).unwrap().0;
        let d = sys.v_nn_double_sum(order, &k).unwrap().0;
        prop_assert!(v.im == 0.0 && v.re >= 0.0);
        prop_assert!((v - d).norm() <= 1e-10 * v.norm().max(1.0));
    }

    #[test]
    fn spectral_width_tracks_rate(re in 1.0f64..50.0, im in -5.0f64..5.0) {
        let e = AtomicEnsemble::from_positions(vec![Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0)]).unwrap();
        let sys = TimedDicke::new(&e, WaveVector::along_z());
        let g = ComplexRate(Complex64::new(re, im));
        let grid = ModeGrid::single_direction(Vector3::z(), ModeGrid::default_detunings(g).unwrap(), DipoleAxis::x()).unwrap();
        let rows = emission_spectrum(&sys, g, &grid, f64::INFINITY, true).unwrap();
        let x: Vec<f64> = rows.iter().map(|r| r.detuning).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.intensity).collect();
        let fit = fit_lorentzian(&x, &y).unwrap();
        prop_assert!((fit.fwhm / re - 1.0).abs() < 0.02);
    }
}

#[test]
fn phase_matched_peak_dominates_shell_grid() {
    let k0p = WaveVector::along_z();
    for (i, g) in [Geometry::Cube { side_um: 4.0 }, Geometry::Sphere { radius_um: 3.0 }, Geometry::Gaussian { sigma_um: 1.5 }]
        .into_iter()
        .enumerate()
    {
        for n in [20, 80, 200] {
            let e = AtomicEnsemble::generate(g, AtomCount::Count(n), 100 + i as u64, PhysicalUnits::default()).unwrap();
            let sys = TimedDicke::new(&e, k0p);
            let patch = shell_patch(&k0p, 0.6, 25).unwrap();
            let values: Vec<f64> = patch.points.iter().map(|k| sys.v_nn(1, 0, 0, k).unwrap().0.re).collect();
            let best = (0..values.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
            assert_eq!(best, patch.center(), "{g} N={n}");
            for ell in 1..n as u64 {
                assert!(sys.v_nn(1, 0, ell, &k0p).unwrap().norm() < 1e-9);
            }
        }
    }
}

#[test]
fn oracle_matrix_is_hermitian() {
    for n_atoms in 2..=8usize {
        let e = AtomicEnsemble::generate(Geometry::Cube { side_um: 0.8 }, AtomCount::Count(n_atoms), n_atoms as u64, PhysicalUnits::default())
            .unwrap();
        let sys = TimedDicke::new(&e, WaveVector::along_z());
        let k = WaveVector::new(0.3, 0.1, 0.95).unwrap();
        for n in 1..=3.min(n_atoms) {
            let m = oracle_coupling_matrix(&sys, n, &k).unwrap();
            assert!((&m - m.adjoint()).camax() < 1e-12);
        }
    }
}

#[test]
fn leading_order_error_scales_as_inverse_n() {
    // Where the symmetric coupling is not suppressed (|S|² ≥ N²/2) the
    // relative error of the factorized V^[2,2]_00 is c/N with c ≤ 2.
    let mut c_fit: f64 = 0.0;
    for n in 4..=12usize {
        let e = AtomicEnsemble::generate(Geometry::Cube { side_um: 1.0 }, AtomCount::Count(n), 3 * n as u64, PhysicalUnits::default())
            .unwrap();
        let sys = TimedDicke::new(&e, WaveVector::along_z());
        for i in 0..40 {
            let t = 0.6 * i as f64 / 39.0;
            let k = WaveVector::new(t, 0.0, (1.0 - t * t).sqrt()).unwrap();
            let s2 = sys.structure_factor(&k).norm_sqr();
            if s2 < 0.5 * (n * n) as f64 {
                continue;
            }
            let exact = oracle_matrix_element(&sys, 2, 2, 0, 0, &k).unwrap().0;
            let lead = sys.v_nn(2, 0, 0, &k).unwrap().0;
            c_fit = c_fit.max((lead - exact).norm() / exact.norm() * n as f64);
        }
    }
    assert!(c_fit > 0.0 && c_fit <= 2.0, "c = {c_fit}");
}

#[test]
fn driven_amplitude_matches_oracle_at_n_100() {
    let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 3.0 }, AtomCount::Count(100), 17, PhysicalUnits::default()).unwrap();
    let k0p = WaveVector::along_z();
    let axis = DipoleAxis::x();
    let g = gamma_n(&e, &k0p, &axis, KernelMode::RealOnly);
    let p = PulseProfile::new(PulseShape::Square, 20.0 * g.re()).unwrap();
    let v = validity_check(&p, g);
    assert!(v.ok);
    let times = linspace(0.0, 2.0 / g.re(), 9);
    let r = single_exc_ode_oracle(&e, &k0p, &axis, KernelMode::RealOnly, Some(&p), &times).unwrap();
    let closed = e0_of_t(&p, g, &times);
    for i in 0..times.len() {
        let diff = (closed.values[i] - Complex64::i() * r.projection.values[i]).norm();
        assert!(diff <= 2.0 * (v.ratio + r.leakage[i]) + 1e-9, "t = {}: {diff}", times[i]);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

#[test]
fn van_der_waals_suppression_is_monotone_in_median() {
    let c = StateAmplitudes::truncated_coherent(1.0);
    let ensembles: Vec<AtomicEnsemble> = (0..100)
        .map(|s| AtomicEnsemble::generate(Geometry::Sphere { radius_um: 3.0 }, AtomCount::Count(30), s, PhysicalUnits::default()).unwrap())
        .collect();
    let strengths: Vec<f64> = (0..21).map(|i| 10f64.powf(2.0 + 0.5 * i as f64)).collect();
    let medians: Vec<f64> = strengths
        .iter()
        .map(|&c6| {
            median(
                ensembles
                    .iter()
                    .map(|e| g2_of_t(&c, &phase_matrix(e, InteractionModel::Vdw { c6 }, 1.0, 0).unwrap()).unwrap())
                    .collect(),
            )
        })
        .collect();
    // revivals may lift the median by at most 5% of the undephased value
    let g0 = g2_zero(&c).unwrap();
    for w in medians.windows(2) {
        assert!(w[1] <= w[0] + 0.05 * g0, "{medians:?}");
    }
    assert!(medians.last().unwrap() < &(0.1 * g0), "{medians:?}");
}

#[test]
fn symmetric_overlap_decays_with_pair_count() {
    let model = InteractionModel::IidUniform { width: 2.0 * PI };
    for n in [10usize, 20, 40] {
        let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 2.0 }, AtomCount::Count(n), 1, PhysicalUnits::default()).unwrap();
        let mean: f64 = (0..300u64)
            .map(|s| overlap_symmetric(&phase_matrix(&e, model, 1.0, s).unwrap(), 2).unwrap().value.norm_sqr())
            .sum::<f64>()
            / 300.0;
        let c = mean * (n * (n - 1) / 2) as f64;
        assert!(c <= 2.0, "N = {n}: c = {c}");
    }
    // broadening the phase distribution drives the mean overlap to zero
    let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 2.0 }, AtomCount::Count(20), 1, PhysicalUnits::default()).unwrap();
    let mean_abs = |width: f64| {
        let m = InteractionModel::IidUniform { width };
        (0..100u64)
            .map(|s| overlap_symmetric(&phase_matrix(&e, m, 1.0, s).unwrap(), 2).unwrap().value)
            .sum::<Complex64>()
            .norm()
            / 100.0
    };
    let (narrow, broad) = (mean_abs(0.5), mean_abs(2.0 * PI));
    assert!(narrow > 0.9 && broad < 0.05, "{narrow} {broad}");
}

#[test]
fn asymptotic_form_tracks_full_g2_under_strong_dephasing() {
    let c = StateAmplitudes::truncated_coherent(1.0);
    let g0 = g2_zero(&c).unwrap();
    let e = AtomicEnsemble::generate(Geometry::Sphere { radius_um: 3.0 }, AtomCount::Count(100), 4, PhysicalUnits::default()).unwrap();
    let mut checked = 0;
    for s in 0..50 {
        let phi = phase_matrix(&e, InteractionModel::IidUniform { width: 2.0 * PI }, 1.0, s).unwrap();
        let full = g2_of_t(&c, &phi).unwrap();
        if full < 0.1 * g0 {
            checked += 1;
            let asym = g2_asymptotic(&c, &phi).unwrap();
            assert!((asym / full - 1.0).abs() < 0.2, "seed {s}: {asym} vs {full}");
        }
    }
    assert!(checked > 40);
}
