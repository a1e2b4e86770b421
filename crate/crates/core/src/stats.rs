//! Scalar special functions used by the initializers: the inverse normal CDF
//! (for equal-mass quantile lattices and seeded sampling) and Gauss-Legendre
//! rules (for reference-grade quadrature).

/// Inverse of the standard normal CDF, Wichura's PPND16 rational scheme.
/// Relative accuracy is near machine precision over p in (0, 1).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile argument must lie in (0,1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        const A: [f64; 8] = [
            3.387_132_872_796_366_608e0,
            1.331_416_678_917_843_774_5e2,
            1.971_590_950_306_551_442_7e3,
            1.373_169_376_550_946_112_5e4,
            4.592_195_393_154_987_145_7e4,
            6.726_577_092_700_870_085_3e4,
            3.343_057_558_358_812_810_5e4,
            2.509_080_928_730_122_672_7e3,
        ];
        const B: [f64; 8] = [
            1.0,
            4.231_333_070_160_091_125_2e1,
            6.871_870_074_920_579_083e2,
            5.394_196_021_424_751_107_7e3,
            2.121_379_430_158_659_586_7e4,
            3.930_789_580_009_271_061e4,
            2.872_908_573_572_194_267_4e4,
            5.226_495_278_852_854_561e3,
        ];
        return q * poly(&A, r) / poly(&B, r);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        const C: [f64; 8] = [
            1.423_437_110_749_683_577_34e0,
            4.630_337_846_156_545_295_9e0,
            5.769_497_221_460_691_405_5e0,
            3.647_848_324_763_204_605_04e0,
            1.270_458_252_452_368_382_58e0,
            2.417_807_251_774_506_117_7e-1,
            2.272_384_498_926_918_458_33e-2,
            7.745_450_142_783_414_076_4e-4,
        ];
        const D: [f64; 8] = [
            1.0,
            2.053_191_626_637_758_821_87e0,
            1.676_384_830_183_803_849_4e0,
            6.897_673_349_851_000_045_5e-1,
            1.481_039_764_274_800_745_9e-1,
            1.519_866_656_361_645_719_66e-2,
            5.475_938_084_995_344_946e-4,
            1.050_750_071_644_416_843_24e-9,
        ];
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        const E: [f64; 8] = [
            6.657_904_643_501_103_777_2e0,
            5.463_784_911_164_114_369_9e0,
            1.784_826_539_917_291_335_8e0,
            2.965_605_718_285_048_912_3e-1,
            2.653_218_952_657_612_309_3e-2,
            1.242_660_947_388_078_438_6e-3,
            2.711_555_568_743_487_578_15e-5,
            2.010_334_399_292_288_132_65e-7,
        ];
        const F: [f64; 8] = [
            1.0,
            5.998_322_065_558_879_376_9e-1,
            1.369_298_809_227_358_053_1e-1,
            1.487_536_129_085_061_485_25e-2,
            7.868_691_311_456_132_591e-4,
            1.846_318_317_510_054_681_8e-5,
            1.421_511_758_316_445_888_7e-7,
            2.044_263_103_389_939_785_64e-15,
        ];
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Chebyshev-flavored initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|&x| mid + half * x).collect(),
        ws.iter().map(|&w| w * half).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Standard normal CDF by brute-force composite Simpson quadrature from
    /// twelve standard deviations below the smaller of {z, 0}; the truncated
    /// tail and the quadrature error are both far below 1e-13.
    fn normal_cdf_quadrature(z: f64) -> f64 {
        let lo = (z - 12.0).min(-12.0);
        let mut n = ((z - lo) / 5e-4).ceil() as usize;
        n += n % 2;
        let h = (z - lo) / n as f64;
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut acc = pdf(lo) + pdf(z);
        for i in 1..n {
            acc += pdf(lo + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn quantile_inverts_the_cdf() {
        for &p in &[1e-9, 1e-6, 1e-3, 0.025, 0.1234, 0.5, 0.777, 0.975, 0.999999] {
            let z = inverse_normal_cdf(p);
            let back = normal_cdf_quadrature(z);
            assert!(
                (back - p).abs() <= 1e-12 + 1e-9 * p,
                "p = {p}: z = {z}, quadrature CDF = {back}"
            );
        }
        assert_abs_diff_eq!(inverse_normal_cdf(0.5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            inverse_normal_cdf(0.975),
            1.959963984540054,
            epsilon = 1e-12
        );
    }

    #[test]
    fn quantile_is_odd_and_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..400 {
            let p = i as f64 / 400.0;
            let z = inverse_normal_cdf(p);
            assert!(z > prev);
            prev = z;
            assert_abs_diff_eq!(z, -inverse_normal_cdf(1.0 - p), epsilon = 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_five_point_reference_values() {
        let (x, w) = gauss_legendre(5);
        let xr = [
            -0.906179845938664,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.906179845938664,
        ];
        let wr = [
            0.23692688505618908,
            0.47862867049936647,
            0.5688888888888889,
            0.47862867049936647,
            0.23692688505618908,
        ];
        for i in 0..5 {
            assert_abs_diff_eq!(x[i], xr[i], epsilon = 1e-13);
            assert_abs_diff_eq!(w[i], wr[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn gauss_legendre_integrates_smooth_functions() {
        // degree-9 polynomial is exact with 5 nodes
        let (x, w) = gauss_legendre(5);
        let int: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(8)).sum();
        assert_abs_diff_eq!(int, 2.0 / 9.0, epsilon = 1e-14);
        // exp on [-1,1]
        let (x, w) = gauss_legendre_on(-1.0, 1.0, 20);
        let int: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.exp()).sum();
        assert_abs_diff_eq!(int, 1.0_f64.exp() - (-1.0_f64).exp(), epsilon = 1e-13);
    }
}
