// temporary scale probes; removed before shipping

use mflab_core::grid::SpatialGrid;
use mflab_core::lab::reference::measured_caustic_time;
use mflab_core::lab::{n_rate_experiment, NRateConfig, SamplingMode};
use mflab_core::panel::default_test_panel;
use mflab_core::potential::TwoBodyPotential;
use mflab_core::profile::{AmplitudeProfile, DensityProfile, PhaseProfile};
use mflab_core::quantum::grenier::{evolve_grenier, wkb_fields_initialize};
use mflab_core::quantum::hartree::evolve_hartree;
use mflab_core::quantum::wave::wkb_initialize;
use mflab_core::quantum::wigner::wigner_weak_pairings;
use std::time::Instant;

const BOX_HALF: f64 = 3.0 * std::f64::consts::PI;

fn sigma() -> PhaseProfile {
    PhaseProfile::Sine { amplitude: 0.2, wavenumber: 1.0, axis: 0 }
}

fn theta() -> PhaseProfile {
    PhaseProfile::Sine { amplitude: 0.4, wavenumber: 1.0, axis: 0 }
}

#[test]
fn probe_fold_times() {
    let rho = DensityProfile::standard(1).unwrap();
    for amp in [0.4_f64, -0.4, 0.2, -0.2] {
        let phi = TwoBodyPotential::gaussian(amp, 1.5, 1).unwrap();
        let t0 = Instant::now();
        let fold = measured_caustic_time(&rho, &sigma(), &phi, 12.0, 512, 5e-3);
        eprintln!("amp {amp:+.1}: fold {fold:?} in {:.1?}", t0.elapsed());
    }
}

#[test]
fn probe_quadrature_ladder_at_full_scale() {
    for dt in [2.5e-3, 1.25e-3] {
        let cfg = NRateConfig {
            ladder: vec![64, 256, 1024, 4096],
            density: DensityProfile::standard(1).unwrap(),
            phase: sigma(),
            potential: TwoBodyPotential::gaussian(0.4, 1.5, 1).unwrap(),
            t_final: 0.4,
            dt,
            mode: SamplingMode::Quadrature,
            reference_markers: 512,
            reference_dt: 1e-3,
        };
        let t0 = Instant::now();
        let report = n_rate_experiment(&cfg).unwrap();
        eprintln!(
            "dt {dt:.2e}: ladder {:?}\nself_conv {:.3e} trusted {} slope {:?} wall {:.1?}",
            report.ladder_errors,
            report.reference.self_convergence,
            report.reference.trusted,
            report.fit.map(|f| f.slope),
            t0.elapsed()
        );
        for &n in &[256.0, 1024.0, 4096.0] {
            let mut rows: Vec<(&str, f64)> = report
                .samples
                .iter()
                .filter(|s| s.parameter == n)
                .map(|s| (s.test_function.as_str(), s.error))
                .collect();
            rows.sort_by(|a, b| b.1.total_cmp(&a.1));
            eprintln!(
                "  N={n}: {}",
                rows.iter()
                    .take(4)
                    .map(|(f, e)| format!("{f}={e:.2e}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            );
        }
    }
}

#[test]
fn probe_grenier_hartree_gap() {
    let h = 0.1;
    let rho = DensityProfile::standard(1).unwrap();
    let amp = AmplitudeProfile::new(rho, theta()).unwrap();
    let phi = TwoBodyPotential::gaussian(-0.4, 1.5, 1).unwrap();
    let t_final = 2.0;
    for (n, dt) in [(512usize, 1e-3), (1024, 5e-4), (2048, 2.5e-4)] {
        let grid = SpatialGrid::centered(1, 2.0 * BOX_HALF, n, true).unwrap();
        let t0 = Instant::now();
        let psi0 = wkb_initialize(&amp, &sigma(), h, &grid).unwrap();
        let hart = evolve_hartree(&psi0, &phi, t_final, dt).unwrap();
        let fields0 = wkb_fields_initialize(&amp, &sigma(), h, &grid).unwrap();
        let gren = evolve_grenier(&fields0, &phi, t_final, dt, true, 0).unwrap();
        let rec = gren.fields.reconstruct_wave().unwrap();
        let gap = rec.l2_distance(&hart.psi).unwrap();
        eprintln!(
            "n {n} dt {dt:.1e}: gap {gap:.3e} min_proxy {:.3} in {:.1?}",
            gren.min_caustic_proxy,
            t0.elapsed()
        );
    }
}

#[test]
fn probe_v_marginal_vs_spectrum() {
    use mflab_core::quantum::wigner::wigner_transform;
    let h = 0.1;
    let rho = DensityProfile::standard(1).unwrap();
    let amp = AmplitudeProfile::new(rho, theta()).unwrap();
    let grid = SpatialGrid::centered(1, 2.0 * BOX_HALF, 512, true).unwrap();
    let psi0 = wkb_initialize(&amp, &sigma(), h, &grid).unwrap();
    let run = evolve_hartree(&psi0, &TwoBodyPotential::gaussian(0.4, 1.5, 1).unwrap(), 0.5, 1e-3)
        .unwrap();
    let f = wigner_transform(&run.psi).unwrap();
    let marg = f.v_marginal();
    let dv = f.dv();
    let (vs, ms) = run.psi.momentum_spectrum();
    let v0 = f.v_nodes()[0];
    let mut worst = 0.0_f64;
    let mut worst_info = String::new();
    for (v, m) in vs.iter().zip(&ms) {
        let bin = ((v - v0) / dv).round() as i64;
        if bin < 0 || bin as usize >= marg.len() {
            if *m > 1e-14 {
                eprintln!("mass {m:.2e} at v {v:.3} off the lattice");
            }
            continue;
        }
        let got = marg[bin as usize] * dv;
        if (got - m).abs() > worst {
            worst = (got - m).abs();
            worst_info = format!("v {v:.3}: marginal mass {got:.6e} vs spectrum {m:.6e}");
        }
    }
    eprintln!("worst even-bin gap {worst:.3e} ({worst_info})");
    // interleaved half-quantum bins
    let odd_max = marg
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let v = v0 + *k as f64 * dv;
            let q = v / (2.0 * dv);
            (q - q.round()).abs() > 0.25
        })
        .map(|(_, &g)| (g * dv).abs())
        .fold(0.0_f64, f64::max);
    eprintln!("max odd-bin mass {odd_max:.3e}");
}

#[test]
fn probe_kac_heavy_rung() {
    let hbar = 1.0;
    let n_particles = 1024.0;
    let h = hbar / n_particles;
    let rho = DensityProfile::standard(1).unwrap();
    let amp = AmplitudeProfile::new(rho, theta()).unwrap();
    let phi = TwoBodyPotential::gaussian(0.4, 1.5, 1).unwrap();
    let points = 1usize << 16;
    let grid = SpatialGrid::centered(1, 2.0 * BOX_HALF, points, true).unwrap();
    let t0 = Instant::now();
    let psi0 = wkb_initialize(&amp, &sigma(), h, &grid).unwrap();
    eprintln!("init {:.1?}", t0.elapsed());
    let dt = 2e-3 * (h / (hbar / 64.0)).sqrt();
    let t1 = Instant::now();
    let run = evolve_hartree(&psi0, &phi, 0.3, dt).unwrap();
    eprintln!("hartree {} steps in {:.1?}", (0.3 / dt).round(), t1.elapsed());
    let panel = default_test_panel(1).unwrap();
    let t2 = Instant::now();
    let summary = wigner_weak_pairings(&run.psi, &panel).unwrap();
    eprintln!(
        "wigner pairings in {:.1?}, imag residue {:.2e}, marginal defect {:.2e}",
        t2.elapsed(),
        summary.imag_residue,
        summary.marginal_defect
    );
}
