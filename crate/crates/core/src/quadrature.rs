//! Adaptive 7/15-point Gauss–Kronrod quadrature for complex integrands.

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Number of equal panels the interval is split into before adapting.
    pub panels: usize,
    /// Absolute error target for the whole interval.
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            panels: 16,
            abs_tol: 1e-13,
            max_depth: 40,
        }
    }
}

/// One Kronrod panel: (estimate, error estimate).
fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let estimate = kronrod * half;
    let err = ((kronrod - gauss) * half).norm();
    (estimate, err)
}

fn adapt<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    max_depth: u32,
) -> Complex64 {
    let (estimate, err) = kronrod(f, a, b);
    // floor so round-off cannot force endless bisection
    let floor = 50.0 * f64::EPSILON * estimate.norm();
    if err <= tol.max(floor) || depth >= max_depth {
        return estimate;
    }
    let mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1, max_depth)
        + adapt(f, mid, b, 0.5 * tol, depth + 1, max_depth)
}

/// ∫_a^b f(x) dx.
pub fn integrate<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    opts: &QuadratureOptions,
) -> Complex64 {
    let panels = opts.panels.max(1);
    let width = (b - a) / panels as f64;
    let tol = opts.abs_tol / panels as f64;
    (0..panels)
        .map(|k| {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { lo + width };
            adapt(&f, lo, hi, tol, 0, opts.max_depth)
        })
        .fold(Complex64::new(0.0, 0.0), |acc, x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(
            |x| Complex64::new(x.powi(5) - 2.0 * x, x * x),
            -1.0,
            2.0,
            &QuadratureOptions::default(),
        );
        assert_abs_diff_eq!(v.re, (64.0 - 1.0) / 6.0 - 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.im, 3.0, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_characteristic_function() {
        // ∫ N(0,1) e^{ikx} dx = e^{-k²/2}
        let k = 3.7;
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let v = integrate(
            |x| Complex64::from_polar(norm * (-0.5 * x * x).exp(), k * x),
            -12.0,
            12.0,
            &QuadratureOptions::default(),
        );
        assert_abs_diff_eq!(v.re, (-0.5 * k * k).exp(), epsilon = 1e-13);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn kinked_integrand() {
        let v = integrate(
            |x| Complex64::new(x.abs(), 0.0),
            -1.0,
            3.0,
            &QuadratureOptions {
                panels: 3,
                ..Default::default()
            },
        );
        assert_abs_diff_eq!(v.re, 5.0, epsilon = 1e-12);
    }
}
