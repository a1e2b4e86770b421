//! Plot-ready text artifacts. Every table starts with one header line
//! naming the columns in their fixed order; floats are written in the
//! shortest decimal form that parses back to the same bits.

use crate::classical::EnsembleState;
use crate::kinetic::DensityField;
use crate::lab::report::ExperimentReport;
use crate::quantum::wave::WaveField;
use crate::quantum::wigner::WignerGrid;
use crate::sensitivity::SensitivityBlocks;
use std::fmt::Write as _;

/// Full error table: one row per (parameter, test function, time) sample.
pub fn error_table_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("parameter,test_function,time,error\n");
    for s in &report.samples {
        let _ = writeln!(out, "{},{},{},{}", s.parameter, s.test_function, s.time, s.error);
    }
    out
}

/// Max-over-panel ladder series, the series the slope fit used.
pub fn ladder_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("parameter,max_error\n");
    for &(p, e) in &report.ladder_errors {
        let _ = writeln!(out, "{p},{e}");
    }
    out
}

/// Weighted phase-space points of an ensemble or marker cloud.
pub fn cloud_csv(state: &EnsembleState) -> String {
    let d = state.dimension();
    let mut out = String::new();
    for a in 0..d {
        let _ = write!(out, "x{a},");
    }
    for a in 0..d {
        let _ = write!(out, "v{a},");
    }
    out.push_str("weight\n");
    for i in 0..state.n_particles() {
        for &c in state.position(i) {
            let _ = write!(out, "{c},");
        }
        for &c in state.velocity(i) {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{}", state.weights()[i]);
    }
    out
}

/// Fluid fields on their grid; the phase column appears when the field
/// carries one.
pub fn field_csv(field: &DensityField) -> String {
    let xs = field.grid().coords(0);
    let mut out = String::new();
    match field.sigma() {
        Some(sigma) => {
            out.push_str("x,density,velocity,phase\n");
            for (((x, r), u), s) in xs
                .iter()
                .zip(field.rho())
                .zip(field.velocity_field())
                .zip(sigma)
            {
                let _ = writeln!(out, "{x},{r},{u},{s}");
            }
        }
        None => {
            out.push_str("x,density,velocity\n");
            for ((x, r), u) in xs.iter().zip(field.rho()).zip(field.velocity_field()) {
                let _ = writeln!(out, "{x},{r},{u}");
            }
        }
    }
    out
}

/// Complex wavefunction samples.
pub fn wavefunction_csv(psi: &WaveField) -> String {
    let xs = psi.grid().coords(0);
    let mut out = String::from("x,re,im\n");
    for (x, z) in xs.iter().zip(psi.values()) {
        let _ = writeln!(out, "{},{},{}", x, z.re, z.im);
    }
    out
}

/// Phase-space distribution values, row-major over the x lattice. The
/// table has one row per node pair, so it grows quadratically; export the
/// summary pairings instead when only weak data is needed.
pub fn wigner_csv(w: &WignerGrid) -> String {
    let mut out = String::from("x,v,value\n");
    for (i, &x) in w.x_nodes().iter().enumerate() {
        for (j, &v) in w.v_nodes().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", x, v, w.value(i, j));
        }
    }
    out
}

/// Tangent-response entries for every particle against every probe.
pub fn sensitivity_csv(blocks: &SensitivityBlocks) -> String {
    let d = blocks.dimension();
    let n = blocks.n_particles();
    let mut out = String::from("particle,axis,probe,probe_axis,dposition,dmomentum\n");
    for (p, &j) in blocks.probe.iter().enumerate() {
        for i in 0..n {
            for alpha in 0..d {
                for beta in 0..d {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        i,
                        alpha,
                        j,
                        beta,
                        blocks.position_entry(i, alpha, p, beta),
                        blocks.momentum_entry(i, alpha, p, beta),
                    );
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{monokinetic_init, LoadMode};
    use crate::lab::report::ErrorSample;
    use crate::profile::{DensityProfile, PhaseProfile};

    #[test]
    fn floats_survive_the_round_trip_exactly() {
        let mut report = ExperimentReport::shell("demo", &0);
        let awkward = 0.1 + 0.2; // not representable as a short decimal
        report.samples.push(ErrorSample {
            parameter: awkward,
            test_function: "one".into(),
            time: 1.0 / 3.0,
            error: f64::MIN_POSITIVE,
        });
        let text = error_table_csv(&report);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("parameter,test_function,time,error"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0].parse::<f64>().unwrap(), awkward);
        assert_eq!(row[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(row[3].parse::<f64>().unwrap(), f64::MIN_POSITIVE);
    }

    #[test]
    fn cloud_tables_have_one_row_per_particle() {
        let density = DensityProfile::standard(1).unwrap();
        let state =
            monokinetic_init(16, &density, &PhaseProfile::Zero, LoadMode::QuantileLattice)
                .unwrap();
        let text = cloud_csv(&state);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x0,v0,weight"));
        assert_eq!(lines.count(), 16);
    }

    #[test]
    fn ladder_tables_keep_the_sweep_order() {
        let mut report = ExperimentReport::shell("demo", &0);
        report.ladder_errors = vec![(64.0, 1e-2), (256.0, 2.5e-3)];
        let text = ladder_csv(&report);
        assert_eq!(text, "parameter,max_error\n64,0.01\n256,0.0025\n");
    }
}
