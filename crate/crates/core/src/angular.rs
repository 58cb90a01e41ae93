//! Wigner 3j/6j symbols and hyperfine reduced dipole matrix elements.
//!
//! Angular momenta are carried as doubled integers so selection rules are
//! decided exactly. The Racah sums are evaluated in exact rational
//! arithmetic; only the final square root and product are done in `f64`.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A non-negative or signed half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(i32);

impl HalfInteger {
    pub const ZERO: HalfInteger = HalfInteger(0);
    pub const HALF: HalfInteger = HalfInteger(1);
    pub const ONE: HalfInteger = HalfInteger(2);

    pub const fn from_twice(twice_value: i32) -> Self {
        HalfInteger(twice_value)
    }

    pub const fn int(value: i32) -> Self {
        HalfInteger(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    /// `2j + 1`, the multiplicity of a level with this angular momentum.
    pub const fn multiplicity(self) -> i32 {
        self.0 + 1
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl From<i32> for HalfInteger {
    fn from(value: i32) -> Self {
        HalfInteger::int(value)
    }
}

impl std::ops::Neg for HalfInteger {
    type Output = HalfInteger;
    fn neg(self) -> HalfInteger {
        HalfInteger(-self.0)
    }
}

impl std::ops::Add for HalfInteger {
    type Output = HalfInteger;
    fn add(self, rhs: HalfInteger) -> HalfInteger {
        HalfInteger(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInteger {
    type Output = HalfInteger;
    fn sub(self, rhs: HalfInteger) -> HalfInteger {
        HalfInteger(self.0 - rhs.0)
    }
}

/// Largest factorial argument the tables cover. Symbols used here stay far
/// below it; anything larger is a programming error.
const MAX_FACTORIAL: usize = 80;

fn factorials() -> &'static [BigInt] {
    static TABLE: OnceLock<Vec<BigInt>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(MAX_FACTORIAL + 1);
        let mut acc = BigInt::one();
        table.push(acc.clone());
        for n in 1..=MAX_FACTORIAL {
            acc *= n;
            table.push(acc.clone());
        }
        table
    })
}

/// `n!` for a doubled argument that must denote a non-negative integer.
fn fact(twice_n: i32) -> &'static BigInt {
    debug_assert!(
        twice_n >= 0 && twice_n % 2 == 0,
        "factorial of 2n={twice_n}"
    );
    let n = (twice_n / 2) as usize;
    assert!(
        n <= MAX_FACTORIAL,
        "factorial argument {n} exceeds table bound {MAX_FACTORIAL}"
    );
    &factorials()[n]
}

/// Triangle rule on doubled values: |a-b| <= c <= a+b and a+b+c integer.
fn triangle(a: i32, b: i32, c: i32) -> bool {
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Triangle coefficient Δ(abc) = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!.
fn triangle_coefficient(a: i32, b: i32, c: i32) -> BigRational {
    BigRational::new(
        fact(a + b - c) * fact(a - b + c) * fact(-a + b + c),
        fact(a + b + c + 2).clone(),
    )
}

fn sign(exponent: i32) -> i32 {
    if exponent.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

fn sqrt_times(radicand: &BigRational, factor: &BigRational) -> f64 {
    if factor.is_zero() {
        return 0.0;
    }
    let r = radicand.to_f64().expect("finite radicand");
    let s = factor.to_f64().expect("finite factor");
    s * r.sqrt()
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Selection-rule violations (triangle, `m1+m2+m3 != 0`, `|m| > j`, parity
/// mismatch between `j` and `m`) give exactly zero.
pub fn wigner3j(
    j1: HalfInteger,
    j2: HalfInteger,
    j3: HalfInteger,
    m1: HalfInteger,
    m2: HalfInteger,
    m3: HalfInteger,
) -> f64 {
    let (j1, j2, j3) = (j1.0, j2.0, j3.0);
    let (m1, m2, m3) = (m1.0, m2.0, m3.0);
    if m1 + m2 + m3 != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return 0.0;
        }
    }

    let radicand = triangle_coefficient(j1, j2, j3)
        * BigRational::from_integer(
            fact(j1 + m1)
                * fact(j1 - m1)
                * fact(j2 + m2)
                * fact(j2 - m2)
                * fact(j3 + m3)
                * fact(j3 - m3),
        );

    // k runs over doubled even values keeping every factorial argument >= 0.
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    let mut k = k_min;
    while k <= k_max {
        let denom = fact(k)
            * fact(j3 - j2 + k + m1)
            * fact(j3 - j1 + k - m2)
            * fact(j1 + j2 - j3 - k)
            * fact(j1 - k - m1)
            * fact(j2 - k + m2);
        let term = BigRational::new(BigInt::from(sign(k / 2)), denom);
        sum += term;
        k += 2;
    }
    let phase = sign((j1 - j2 - m3) / 2);
    f64::from(phase) * sqrt_times(&radicand, &sum)
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}` via the Racah sum.
pub fn wigner6j(
    j1: HalfInteger,
    j2: HalfInteger,
    j3: HalfInteger,
    j4: HalfInteger,
    j5: HalfInteger,
    j6: HalfInteger,
) -> f64 {
    let (j1, j2, j3, j4, j5, j6) = (j1.0, j2.0, j3.0, j4.0, j5.0, j6.0);
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle(a, b, c)) {
        return 0.0;
    }
    let radicand = triads
        .iter()
        .map(|&(a, b, c)| triangle_coefficient(a, b, c))
        .fold(BigRational::one(), |acc, d| acc * d);

    let a = triads.map(|(a, b, c)| a + b + c);
    let b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4];
    let t_min = *a.iter().max().expect("four triads");
    let t_max = *b.iter().min().expect("three pairs");
    let mut sum = BigRational::zero();
    let mut t = t_min;
    while t <= t_max {
        let denom = a.iter().map(|&ai| fact(t - ai)).product::<BigInt>()
            * b.iter().map(|&bi| fact(bi - t)).product::<BigInt>();
        let num = fact(t + 2) * BigInt::from(sign(t / 2));
        sum += BigRational::new(num, denom);
        t += 2;
    }
    if sum.is_negative() {
        -sqrt_times(&radicand, &(-sum))
    } else {
        sqrt_times(&radicand, &sum)
    }
}

/// Hyperfine reduced dipole element `<J I F||d||J' I F'>` in units of the
/// fine-structure element `d_jj` (pass 1.0 to get the dimensionless factor).
///
/// Pairs that violate the dipole selection rules give exactly zero.
pub fn reduced_dipole(
    f: HalfInteger,
    f_prime: HalfInteger,
    j: HalfInteger,
    j_prime: HalfInteger,
    nuclear_spin: HalfInteger,
    d_jj: f64,
) -> f64 {
    let twice_phase = f_prime.0 + j.0 + 2 + nuclear_spin.0;
    if twice_phase % 2 != 0 {
        return 0.0;
    }
    let six_j = wigner6j(j, j_prime, HalfInteger::ONE, f_prime, f, nuclear_spin);
    if six_j == 0.0 {
        return 0.0;
    }
    let weight = f64::from(f_prime.multiplicity() * j.multiplicity());
    d_jj * f64::from(sign(twice_phase / 2)) * weight.sqrt() * six_j
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(twice: i32) -> HalfInteger {
        HalfInteger::from_twice(twice)
    }

    fn i(v: i32) -> HalfInteger {
        HalfInteger::int(v)
    }

    #[test]
    fn three_j_closed_forms() {
        let z = HalfInteger::ZERO;
        assert_abs_diff_eq!(
            wigner3j(i(1), i(1), z, z, z, z),
            -1.0 / 3f64.sqrt(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            wigner3j(i(2), i(2), i(2), z, z, z),
            -(2.0f64 / 35.0).sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(wigner3j(i(1), i(1), i(1), i(1), i(1), i(1)), 0.0);
    }

    #[test]
    fn three_j_selection_rules_are_exact_zeros() {
        // parity mismatch between j and m
        assert_eq!(wigner3j(i(1), h(1), h(1), h(1), h(-1), z()), 0.0);
        // |m| > j
        assert_eq!(wigner3j(i(1), i(1), i(2), i(2), i(-2), z()), 0.0);
        // triangle
        assert_eq!(wigner3j(i(1), i(1), i(3), z(), z(), z()), 0.0);
        // (1 1 1; 0 0 0) vanishes by the odd-J rule
        assert_eq!(wigner3j(i(1), i(1), i(1), z(), z(), z()), 0.0);
    }

    fn z() -> HalfInteger {
        HalfInteger::ZERO
    }

    #[test]
    fn six_j_with_zero_argument() {
        for (a, b, c) in [(2, 2, 2), (1, 3, 2), (4, 2, 2), (3, 3, 0), (2, 4, 4)] {
            let (j1, j2, j3) = (h(a), h(b), h(c));
            if !triangle(a, b, c) {
                continue;
            }
            let expected = f64::from(sign((a + b + c) / 2))
                / f64::from(j2.multiplicity() * j3.multiplicity()).sqrt();
            assert_abs_diff_eq!(wigner6j(j1, j2, j3, z(), j3, j2), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn six_j_triangle_violation_is_zero() {
        assert_eq!(wigner6j(i(1), i(1), i(3), i(1), i(1), i(1)), 0.0);
        assert_eq!(wigner6j(h(1), h(1), h(1), i(1), i(1), i(1)), 0.0);
    }

    #[test]
    fn reduced_dipole_selection_rule() {
        let half = HalfInteger::HALF;
        assert_eq!(reduced_dipole(i(2), i(4), half, half, h(5), 1.0), 0.0);
        assert_eq!(reduced_dipole(i(1), i(3), half, half, h(5), 1.0), 0.0);
    }

    #[test]
    fn rb85_d1_line_strengths() {
        // (2F'+1)(2J+1){J J' 1; F' F I}^2 for the D1 line: 2/9, 7/9, 5/9, 4/9.
        let half = HalfInteger::HALF;
        let nuc = h(5);
        let s = |f, fp| reduced_dipole(i(f), i(fp), half, half, nuc, 1.0).powi(2);
        assert_abs_diff_eq!(s(2, 2), 2.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s(2, 3), 7.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s(3, 2), 5.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s(3, 3), 4.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn reduced_dipole_f3_to_f2_matches_direct_evaluation() {
        // (-1)^(F'+J+1+I) sqrt((2F'+1)(2J+1)) {1/2 1/2 1; 2 3 5/2}
        // with {1/2 1/2 1; 2 3 5/2} = -sqrt(5/18) / sqrt(5*2)... evaluated independently:
        // phase exponent 2 + 1/2 + 1 + 5/2 = 6 -> +1
        let six_j = wigner6j(h(1), h(1), i(1), i(2), i(3), h(5));
        let direct = (5.0f64 * 2.0).sqrt() * six_j;
        let half = HalfInteger::HALF;
        assert_abs_diff_eq!(
            reduced_dipole(i(3), i(2), half, half, h(5), 1.0),
            direct,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(direct.powi(2), 5.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn display_half_integers() {
        assert_eq!(h(5).to_string(), "5/2");
        assert_eq!(i(3).to_string(), "3");
    }
}
