//! Phase-space distribution of a periodic wavefunction.
//!
//! The correlation psi(x + s/2) conj(psi)(x - s/2) is sampled at the
//! offsets s = 2 m dx that land both arguments exactly on grid nodes, so
//! no interpolation enters. A DFT over m then yields the distribution on
//! the velocity lattice v_k = pi h k / L. Two identities hold to round-off
//! by construction: summing over v recovers |psi(x)|^2 node by node, and
//! multiplying psi by exp(i w x / h) with w on the velocity lattice shifts
//! the output by a whole number of velocity bins.
//!
//! The velocity window spans |v| <= pi h / (2 dx). States carrying
//! momentum mass near that edge would wrap around, so a spectral guard
//! rejects them instead of silently folding.
//!
//! One structural feature of the periodic lattice: the output is the true
//! distribution plus an image of it displaced by half the box in x and
//! modulated by (-1)^k across velocity bins. The image cancels exactly in
//! the velocity sum and, to spectral accuracy, in pairings against smooth
//! test functions, so marginals and weak observables are unaffected; only
//! pointwise reads in the half-box opposite a packet see it. Keep the
//! support inside a quarter extent of the box center when node values
//! matter.

use crate::error::{CoreError, Result};
use crate::fft::{fft_forward, C64};
use crate::grid::SpatialGrid;
use crate::panel::{TestFunction, TestFunctionPanel};
use crate::quantum::wave::WaveField;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest wave grid the transform will materialize (n^2 doubles). Larger
/// states must go through [`wigner_weak_pairings`], which never stores the
/// full distribution.
pub const WIGNER_STORAGE_LIMIT: usize = 2048;

/// Velocity-edge mass beyond this fraction aborts instead of aliasing.
const EDGE_MASS_TOL: f64 = 1e-6;
/// Number of velocity bins counted as "the edge" by the guard.
const EDGE_BINS: usize = 2;

/// Spacing of the velocity lattice the transform produces: half the
/// momentum quantum of the box.
pub fn velocity_step(grid: &SpatialGrid, h: f64) -> f64 {
    PI * h / grid.axis(0).extent()
}

/// Distribution samples f(x_i, v_k) on the node lattice, row-major with x
/// slowest and v ascending. Carries the integrity residues measured while
/// building it: the size of the discarded imaginary part and the worst
/// deviation of the velocity sum from |psi|^2.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerGrid {
    data: Vec<f64>,
    x: Vec<f64>,
    v: Vec<f64>,
    h: f64,
    time: f64,
    imag_residue: f64,
    marginal_defect: f64,
}

impl WignerGrid {
    pub fn value(&self, ix: usize, iv: usize) -> f64 {
        self.data[ix * self.v.len() + iv]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn v_nodes(&self) -> &[f64] {
        &self.v
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn dv(&self) -> f64 {
        self.v[1] - self.v[0]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// max |Im f| / max |Re f| over all nodes, before the imaginary part
    /// was dropped. Round-off sized for any valid input.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    /// Worst node deviation of sum_k f(x, v_k) dv from |psi(x)|^2,
    /// relative to the density peak. The identity is exact in exact
    /// arithmetic.
    pub fn marginal_defect(&self) -> f64 {
        self.marginal_defect
    }

    /// sum_k f(x_i, v_k) dv for every i; equals the position density.
    pub fn x_marginal(&self) -> Vec<f64> {
        let nv = self.v.len();
        let dv = self.dv();
        (0..self.x.len())
            .map(|i| self.data[i * nv..(i + 1) * nv].iter().sum::<f64>() * dv)
            .collect()
    }

    /// sum_i f(x_i, v_k) dx for every k; the velocity distribution.
    pub fn v_marginal(&self) -> Vec<f64> {
        let nv = self.v.len();
        let dx = self.dx();
        let mut out = vec![0.0; nv];
        for i in 0..self.x.len() {
            for (o, &f) in out.iter_mut().zip(&self.data[i * nv..(i + 1) * nv]) {
                *o += f * dx;
            }
        }
        out
    }

    /// Full phase-space mass, sum f dx dv. One for a normalized state.
    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.dx() * self.dv()
    }

    /// Scale the samples by a member weight when seeding a weighted sum.
    pub(crate) fn scale_accumulate_init(&mut self, coeff: f64) {
        for d in &mut self.data {
            *d *= coeff;
        }
    }

    /// Add coeff * other into the samples; the grids must share their
    /// lattice. Residues aggregate as maxima of the member records.
    pub(crate) fn scale_accumulate(&mut self, coeff: f64, other: &WignerGrid) -> Result<()> {
        if self.x.len() != other.x.len()
            || self.v.len() != other.v.len()
            || (self.dx() - other.dx()).abs() > 1e-14
            || (self.dv() - other.dv()).abs() > 1e-14
        {
            return Err(CoreError::invalid(
                "wigner grids",
                "cannot accumulate distributions on different lattices",
            ));
        }
        for (d, &o) in self.data.iter_mut().zip(&other.data) {
            *d += coeff * o;
        }
        self.imag_residue = self.imag_residue.max(other.imag_residue);
        self.marginal_defect = self.marginal_defect.max(other.marginal_defect);
        Ok(())
    }

    pub(crate) fn set_marginal_defect(&mut self, defect: f64) {
        self.marginal_defect = defect;
    }
}

/// Pairings of the distribution against a test-function panel, accumulated
/// column by column without materializing the full grid. `pairings` is in
/// panel iteration order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerSummary {
    pub pairings: Vec<f64>,
    pub total_mass: f64,
    pub imag_residue: f64,
    pub marginal_defect: f64,
    pub h: f64,
    pub time: f64,
}

/// Reject states whose momentum distribution puts more than a trace of
/// mass within EDGE_BINS velocity bins of the window edge (or beyond it);
/// such mass would wrap around the periodic velocity lattice.
fn guard_velocity_window(psi: &WaveField) -> Result<()> {
    let n = psi.values().len();
    let dv = velocity_step(psi.grid(), psi.h());
    let threshold = dv * (n as f64 / 2.0 - EDGE_BINS as f64) - 1e-12;
    let (momenta, masses) = psi.momentum_spectrum();
    let edge_mass: f64 = momenta
        .iter()
        .zip(&masses)
        .filter(|(p, _)| p.abs() >= threshold)
        .map(|(_, m)| m)
        .sum();
    if edge_mass > EDGE_MASS_TOL {
        return Err(CoreError::Aliasing {
            edge_mass,
            bins: EDGE_BINS,
        });
    }
    Ok(())
}

/// One correlation column in DFT index order:
/// out[m] = psi[(i+m) mod n] conj(psi[(i-m) mod n]).
///
/// Hermitian by construction: out[n-m] is the exact conjugate of out[m]
/// down to the last bit, because IEEE products of swapped conjugate pairs
/// agree exactly.
fn build_correlation(values: &[C64], i: usize, out: &mut [C64]) {
    let n = values.len();
    for m in 0..n {
        let plus = values[(i + m) % n];
        let minus = values[(i + n - m) % n];
        out[m] = plus * minus.conj();
    }
}

/// One correlation column transformed in place. After the call out[k]
/// holds the unscaled column spectrum at DFT bin k.
fn correlation_spectrum(values: &[C64], i: usize, out: &mut [C64]) {
    build_correlation(values, i, out);
    fft_forward(out);
}

/// Ascending-velocity index of DFT bin k; the Nyquist bin goes to the
/// negative end so the lattice reads -n/2 .. n/2 - 1 in units of dv.
#[inline]
fn ascending_index(k: usize, n: usize) -> usize {
    (k + n / 2) % n
}

/// Materialize the full distribution of `psi` on the node lattice.
///
/// Fails with `Aliasing` when momentum mass sits at the velocity window
/// edge and with `GridRejected` when the n^2 storage would exceed the
/// materialization cap (use [`wigner_weak_pairings`] there instead).
pub fn wigner_transform(psi: &WaveField) -> Result<WignerGrid> {
    let n = psi.values().len();
    if n > WIGNER_STORAGE_LIMIT {
        return Err(CoreError::GridRejected {
            reason: format!(
                "materializing {n}^2 phase-space values exceeds the {WIGNER_STORAGE_LIMIT} cap; \
                 use the streaming pairing path"
            ),
        });
    }
    guard_velocity_window(psi)?;

    let grid = psi.grid();
    let dx = psi.spacing();
    let dv = velocity_step(grid, psi.h());
    let scale = dx / (PI * psi.h());
    let density = psi.position_density();
    let peak = density.iter().cloned().fold(0.0_f64, f64::max);

    let mut data = vec![0.0; n * n];
    let mut column = vec![C64::new(0.0, 0.0); n];
    let mut max_re = 0.0_f64;
    let mut max_im = 0.0_f64;
    let mut marginal_defect = 0.0_f64;
    for i in 0..n {
        correlation_spectrum(psi.values(), i, &mut column);
        let row = &mut data[i * n..(i + 1) * n];
        let mut sum = 0.0;
        for (k, c) in column.iter().enumerate() {
            let f = c.re * scale;
            row[ascending_index(k, n)] = f;
            sum += f;
            max_re = max_re.max(f.abs());
            max_im = max_im.max((c.im * scale).abs());
        }
        marginal_defect = marginal_defect.max((sum * dv - density[i]).abs());
    }

    Ok(WignerGrid {
        data,
        x: grid.coords(0),
        v: (0..n).map(|j| (j as f64 - n as f64 / 2.0) * dv).collect(),
        h: psi.h(),
        time: psi.time(),
        imag_residue: if max_re > 0.0 { max_im / max_re } else { 0.0 },
        marginal_defect: if peak > 0.0 { marginal_defect / peak } else { 0.0 },
    })
}

/// Pair the distribution of `psi` against every panel function without
/// storing it, at O(n) memory and with no per-column transforms.
///
/// Summing a column's spectrum against a velocity factor table equals
/// summing the raw correlation against the table's own transform (the two
/// finite sums commute), so the transform moves onto each test function
/// once and the per-column work is a plain dot product. Exactly the
/// pairings [`wigner_transform`] + [`weak_pair_wigner`] would produce.
pub fn wigner_weak_pairings(psi: &WaveField, panel: &TestFunctionPanel) -> Result<WignerSummary> {
    guard_velocity_window(psi)?;
    let n = psi.values().len();
    let grid = psi.grid();
    let dx = psi.spacing();
    let dv = velocity_step(grid, psi.h());
    let scale = dx / (PI * psi.h());
    let density = psi.position_density();
    let peak = density.iter().cloned().fold(0.0_f64, f64::max);
    let xs = grid.coords(0);
    let vs: Vec<f64> = (0..n).map(|j| (j as f64 - n as f64 / 2.0) * dv).collect();

    // per-function factor tables; the panel functions are exact products
    // of an x factor and a v factor
    let fns: Vec<&TestFunction> = panel.iter().collect();
    let x_factors: Vec<Vec<f64>> = fns
        .iter()
        .map(|f| xs.iter().map(|&x| f.factor_x(x)).collect())
        .collect();
    // velocity factors carried into correlation space, one transform each
    let v_hats: Vec<Vec<C64>> = fns
        .iter()
        .map(|f| {
            let mut g: Vec<C64> = (0..n)
                .map(|k| C64::new(f.factor_v(vs[ascending_index(k, n)]), 0.0))
                .collect();
            fft_forward(&mut g);
            g
        })
        .collect();

    let mut pairings = vec![0.0; fns.len()];
    let mut total_mass = 0.0;
    let mut column = vec![C64::new(0.0, 0.0); n];
    let mut herm_defect = 0.0_f64;
    let mut corr_peak = 0.0_f64;
    let mut marginal_defect = 0.0_f64;
    for i in 0..n {
        build_correlation(psi.values(), i, &mut column);
        // realness of the distribution is Hermitian symmetry of the
        // correlation; measure it directly (squared norms, rooted once)
        for m in 0..=n / 2 {
            let mirror = column[(n - m) % n].conj();
            let diff = column[m] - mirror;
            herm_defect = herm_defect.max(diff.norm_sqr());
            corr_peak = corr_peak.max(column[m].norm_sqr());
        }
        // summing the spectrum over all bins leaves n times the zero-lag
        // term, which is |psi_i|^2; this is the marginal identity
        let sum = n as f64 * column[0].re * scale;
        marginal_defect = marginal_defect.max((sum * dv - density[i]).abs());
        total_mass += sum;
        for (p, (fx, vh)) in pairings.iter_mut().zip(x_factors.iter().zip(&v_hats)) {
            let contracted: f64 =
                column.iter().zip(vh).map(|(c, g)| c.re * g.re - c.im * g.im).sum();
            *p += fx[i] * contracted * scale;
        }
    }
    let cell = dx * dv;
    for p in &mut pairings {
        *p *= cell;
    }
    let corr_peak = corr_peak.sqrt();
    let herm_defect = herm_defect.sqrt();

    Ok(WignerSummary {
        pairings,
        total_mass: total_mass * cell,
        imag_residue: if corr_peak > 0.0 { 0.5 * herm_defect / corr_peak } else { 0.0 },
        marginal_defect: if peak > 0.0 { marginal_defect / peak } else { 0.0 },
        h: psi.h(),
        time: psi.time(),
    })
}

/// Phase-space pairing integral f against F by node sums. On the periodic
/// x axis the node sum is the trapezoid rule exactly; on the velocity axis
/// the window edges carry no mass by the aliasing guard, so the edge
/// weighting is immaterial at the tolerances in play.
pub fn weak_pair_wigner(f: &WignerGrid, test: &TestFunction) -> f64 {
    let nv = f.v.len();
    let fx: Vec<f64> = f.x.iter().map(|&x| test.factor_x(x)).collect();
    let fv: Vec<f64> = f.v.iter().map(|&v| test.factor_v(v)).collect();
    let mut total = 0.0;
    for (i, &a) in fx.iter().enumerate() {
        let row = &f.data[i * nv..(i + 1) * nv];
        let contracted: f64 = row.iter().zip(&fv).map(|(&w, &b)| w * b).sum();
        total += a * contracted;
    }
    total * f.dx() * f.dv()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{default_test_panel, Envelope, TestFunction, WeightKind};
    use crate::profile::{AmplitudeProfile, DensityProfile, PhaseProfile};
    use crate::quantum::wave::{momentum_quantum, wkb_initialize};
    use approx::assert_abs_diff_eq;

    fn grid1(points: usize, half: f64) -> SpatialGrid {
        SpatialGrid::centered(1, 2.0 * half, points, true).unwrap()
    }

    /// Test function with an envelope so wide it is 1 to ~3e-10 on the
    /// support of the states below; lets node sums stand in for the plain
    /// moments x^a v^b.
    fn flat(weight: WeightKind) -> TestFunction {
        TestFunction::new(
            "flat",
            weight,
            Envelope {
                center_x: vec![0.0],
                center_v: vec![0.0],
                sx: 1.0e6,
                sv: 1.0e6,
            },
        )
        .unwrap()
    }

    fn ground_state(points: usize, half: f64, h: f64) -> WaveField {
        // |psi|^2 = exp(-x^2)/sqrt(pi), i.e. a Gaussian density of std 1/sqrt(2)
        let amp = AmplitudeProfile::real(
            DensityProfile::gaussian(&[0.0], &[std::f64::consts::FRAC_1_SQRT_2]).unwrap(),
        );
        wkb_initialize(&amp, &PhaseProfile::Zero, h, &grid1(points, half)).unwrap()
    }

    #[test]
    fn gaussian_state_matches_the_analytic_distribution() {
        // box of half-extent 12 so the half-box image (at distance 12 from
        // the packet) stays out of the comparison window
        let psi = ground_state(256, 12.0, 1.0);
        let f = wigner_transform(&psi).unwrap();
        // f(x, v) = exp(-x^2 - v^2) / pi for this state at h = 1
        for (ix, &x) in f.x_nodes().iter().enumerate() {
            for (iv, &v) in f.v_nodes().iter().enumerate() {
                if x.abs() <= 5.0 && v.abs() <= 5.0 {
                    let exact = (-x * x - v * v).exp() / PI;
                    assert_abs_diff_eq!(f.value(ix, iv), exact, epsilon = 1e-8);
                }
            }
        }
        assert_abs_diff_eq!(f.total_mass(), 1.0, epsilon = 1e-8);
        assert!(f.imag_residue() < 1e-10);
    }

    #[test]
    fn half_box_image_alternates_and_cancels() {
        // packet at the center of a +-8 box: the image of the peak lands on
        // the box edge x = -8, carrying (-1)^k across velocity bins
        let psi = ground_state(128, 8.0, 1.0);
        let f = wigner_transform(&psi).unwrap();
        let (ix_edge, iv_mid) = (0, 64); // x = -8, v = 0
        let peak = 1.0 / PI;
        assert_abs_diff_eq!(f.value(ix_edge, iv_mid), peak, epsilon = 1e-8);
        let dv = f.dv();
        let neighbor = -(-dv * dv).exp() / PI;
        assert_abs_diff_eq!(f.value(ix_edge, iv_mid + 1), neighbor, epsilon = 1e-8);
        assert_abs_diff_eq!(f.value(ix_edge, iv_mid - 1), neighbor, epsilon = 1e-8);
        // the alternation cancels exactly in the velocity sum and to
        // spectral accuracy in smooth pairings, so weak observables and
        // marginals never see the image
        assert!(f.x_marginal()[ix_edge].abs() < 1e-12);
        assert_abs_diff_eq!(weak_pair_wigner(&f, &flat(WeightKind::One)), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(
            weak_pair_wigner(&f, &flat(WeightKind::SquareV)),
            psi.momentum_spectrum()
                .0
                .iter()
                .zip(&psi.momentum_spectrum().1)
                .map(|(v, m)| v * v * m)
                .sum::<f64>(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn velocity_sum_recovers_the_position_density() {
        let amp = AmplitudeProfile::real(DensityProfile::gaussian(&[0.3], &[0.9]).unwrap());
        let sigma = PhaseProfile::Sine {
            amplitude: 0.4,
            wavenumber: 2.0 * PI / 16.0,
            axis: 0,
        };
        let psi = wkb_initialize(&amp, &sigma, 0.5, &grid1(256, 8.0)).unwrap();
        let f = wigner_transform(&psi).unwrap();
        // node-by-node identity, not an approximation
        assert!(f.marginal_defect() < 1e-12);
        let density = psi.position_density();
        for (m, d) in f.x_marginal().iter().zip(&density) {
            assert_abs_diff_eq!(*m, *d, epsilon = 1e-13);
        }
        assert!(f.imag_residue() < 1e-10);
    }

    #[test]
    fn modulation_shifts_velocity_bins_exactly() {
        let h = 0.5;
        let grid = grid1(256, 8.0);
        let dv = velocity_step(&grid, h);
        // carriers must sit on the box momentum lattice, which is every
        // second velocity bin
        let w = 2.0 * momentum_quantum(&grid, h);
        let shift = (w / dv).round() as usize;
        assert_eq!(shift, 4);

        let amp = AmplitudeProfile::real(DensityProfile::gaussian(&[0.0], &[0.8]).unwrap());
        let base = wkb_initialize(&amp, &PhaseProfile::Zero, h, &grid).unwrap();
        let moved = wkb_initialize(&amp, &PhaseProfile::Linear { slope: vec![w] }, h, &grid).unwrap();
        let f0 = wigner_transform(&base).unwrap();
        let f1 = wigner_transform(&moved).unwrap();
        let n = f0.v_nodes().len();
        for ix in 0..f0.x_nodes().len() {
            for iv in 0..n {
                let from = (iv + n - shift) % n;
                assert_abs_diff_eq!(f1.value(ix, iv), f0.value(ix, from), epsilon = 1e-13);
            }
        }
        // the velocity mean moves by exactly w
        let mean: f64 = f1
            .v_marginal()
            .iter()
            .zip(f1.v_nodes())
            .map(|(&g, &v)| g * v)
            .sum::<f64>()
            * f1.dv();
        assert_abs_diff_eq!(mean, w, epsilon = 1e-9);
        assert_abs_diff_eq!(mean, moved.expect_momentum(), epsilon = 1e-9);
    }

    #[test]
    fn flat_and_quadratic_pairings_match_wave_expectations() {
        let amp = AmplitudeProfile::real(DensityProfile::gaussian(&[-0.4], &[1.1]).unwrap());
        let sigma = PhaseProfile::Sine {
            amplitude: 0.3,
            wavenumber: 2.0 * PI / 16.0,
            axis: 0,
        };
        let psi = wkb_initialize(&amp, &sigma, 0.25, &grid1(512, 8.0)).unwrap();
        let f = wigner_transform(&psi).unwrap();

        // occupancy: pairing against 1
        assert_abs_diff_eq!(weak_pair_wigner(&f, &flat(WeightKind::One)), 1.0, epsilon = 1e-8);
        // x^2 moment against the quantum expectation <psi, x^2 psi>
        assert_abs_diff_eq!(
            weak_pair_wigner(&f, &flat(WeightKind::SquareX)),
            psi.expect_position_sq(),
            epsilon = 1e-8
        );
        // first velocity moment against <psi, -i h d/dx psi>
        assert_abs_diff_eq!(
            weak_pair_wigner(&f, &flat(WeightKind::CoordV { axis: 0 })),
            psi.expect_momentum(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn streaming_pairings_match_the_materialized_grid() {
        let amp = AmplitudeProfile::real(DensityProfile::gaussian(&[0.2], &[0.7]).unwrap());
        let sigma = PhaseProfile::Sine {
            amplitude: 0.2,
            wavenumber: 2.0 * PI / 16.0,
            axis: 0,
        };
        let psi = wkb_initialize(&amp, &sigma, 0.5, &grid1(128, 8.0)).unwrap();
        let panel = default_test_panel(1).unwrap();
        let summary = wigner_weak_pairings(&psi, &panel).unwrap();
        let f = wigner_transform(&psi).unwrap();
        for (func, pair) in panel.iter().zip(&summary.pairings) {
            assert_abs_diff_eq!(*pair, weak_pair_wigner(&f, func), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(summary.total_mass, f.total_mass(), epsilon = 1e-13);
        assert!(summary.marginal_defect < 1e-12);
        assert!(summary.imag_residue < 1e-10);
    }

    #[test]
    fn edge_momentum_mass_and_oversize_grids_are_rejected() {
        // coarse box: the velocity window is only +-pi/2 wide at h = 1,
        // far narrower than this state's momentum spread
        let psi = ground_state(16, 8.0, 1.0);
        match wigner_transform(&psi) {
            Err(CoreError::Aliasing { edge_mass, .. }) => assert!(edge_mass > 1e-6),
            other => panic!("expected aliasing rejection, got {other:?}"),
        }
        assert!(matches!(
            wigner_weak_pairings(&psi, &default_test_panel(1).unwrap()),
            Err(CoreError::Aliasing { .. })
        ));

        // beyond the materialization cap the full transform refuses but the
        // streaming path works
        let big = ground_state(4096, 8.0, 1.0);
        assert!(matches!(
            wigner_transform(&big),
            Err(CoreError::GridRejected { .. })
        ));
        let summary = wigner_weak_pairings(&big, &default_test_panel(1).unwrap()).unwrap();
        assert_abs_diff_eq!(summary.total_mass, 1.0, epsilon = 1e-10);
    }
}

