//! Reference Wigner symbols built without Racah sums: Clebsch–Gordan tables
//! come from lowering the stretched state and Gram–Schmidt in f64, 6j symbols
//! from contracting four 3j symbols over all projections.
#![allow(dead_code)]

use std::cell::RefCell;
use std::collections::HashMap;

use starkmem::angular::{wigner6j, HalfInteger};

/// ⟨j1 m1 j2 m2|J M⟩ for every J, M, m1, keyed by doubled values.
struct CgTable {
    coeffs: HashMap<(i32, i32, i32), f64>,
}

fn ladder(j: i32, m: i32) -> f64 {
    // J_- |j m⟩ = sqrt((j+m)(j-m+1)) |j m-1⟩, arguments doubled
    let (j, m) = (f64::from(j) / 2.0, f64::from(m) / 2.0);
    ((j + m) * (j - m + 1.0)).max(0.0).sqrt()
}

impl CgTable {
    fn build(j1: i32, j2: i32) -> Self {
        let mut coeffs = HashMap::new();
        let m1_range = |big_m: i32| -> Vec<i32> {
            (-j1..=j1)
                .step_by(2)
                .filter(|&m1| (big_m - m1).abs() <= j2)
                .collect()
        };
        let mut big_j = j1 + j2;
        while big_j >= (j1 - j2).abs() {
            let basis = m1_range(big_j);
            let mut state: HashMap<i32, f64> = basis
                .iter()
                .map(|&m1| (m1, if m1 == j1 { 1.0 } else { 0.0 }))
                .collect();
            for _ in 0..2 {
                let mut higher = j1 + j2;
                while higher > big_j {
                    let overlap: f64 = basis
                        .iter()
                        .map(|&m1| state[&m1] * coeffs[&(higher, big_j, m1)])
                        .sum();
                    for &m1 in &basis {
                        *state.get_mut(&m1).unwrap() -= overlap * coeffs[&(higher, big_j, m1)];
                    }
                    higher -= 2;
                }
            }
            let norm = state.values().map(|v| v * v).sum::<f64>().sqrt();
            let sign = if state[&j1] < 0.0 { -1.0 } else { 1.0 };
            for (&m1, v) in &state {
                coeffs.insert((big_j, big_j, m1), sign * v / norm);
            }
            let mut big_m = big_j;
            while big_m > -big_j {
                let lowered = ladder(big_j, big_m);
                let mut next: HashMap<i32, f64> = HashMap::new();
                for &m1 in &m1_range(big_m) {
                    let c = coeffs[&(big_j, big_m, m1)];
                    let m2 = big_m - m1;
                    if m1 > -j1 {
                        *next.entry(m1 - 2).or_default() += c * ladder(j1, m1);
                    }
                    if m2 > -j2 {
                        *next.entry(m1).or_default() += c * ladder(j2, m2);
                    }
                }
                for m1 in m1_range(big_m - 2) {
                    coeffs.insert(
                        (big_j, big_m - 2, m1),
                        next.get(&m1).copied().unwrap_or(0.0) / lowered,
                    );
                }
                big_m -= 2;
            }
            big_j -= 2;
        }
        CgTable { coeffs }
    }
}

thread_local! {
    static TABLES: RefCell<HashMap<(i32, i32), std::rc::Rc<CgTable>>> = RefCell::new(HashMap::new());
}

fn table(j1: i32, j2: i32) -> std::rc::Rc<CgTable> {
    TABLES.with(|t| {
        t.borrow_mut()
            .entry((j1, j2))
            .or_insert_with(|| std::rc::Rc::new(CgTable::build(j1, j2)))
            .clone()
    })
}

/// Clebsch–Gordan coefficient, doubled arguments.
pub fn clebsch_gordan(j1: i32, m1: i32, j2: i32, m2: i32, big_j: i32, big_m: i32) -> f64 {
    if m1 + m2 != big_m || m1.abs() > j1 || m2.abs() > j2 || big_m.abs() > big_j {
        return 0.0;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (big_j + big_m) % 2 != 0 {
        return 0.0;
    }
    if big_j > j1 + j2 || big_j < (j1 - j2).abs() || (j1 + j2 + big_j) % 2 != 0 {
        return 0.0;
    }
    table(j1, j2)
        .coeffs
        .get(&(big_j, big_m, m1))
        .copied()
        .unwrap_or(0.0)
}

fn parity(twice: i32) -> f64 {
    if (twice / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// 3j symbol from a Clebsch–Gordan coefficient, doubled arguments.
pub fn oracle_3j(j1: i32, j2: i32, j3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if (j1 - j2 - m3) % 2 != 0 {
        return 0.0;
    }
    parity(j1 - j2 - m3) / f64::from(j3 + 1).sqrt() * clebsch_gordan(j1, m1, j2, m2, j3, -m3)
}

fn projections(j: i32) -> impl Iterator<Item = i32> {
    (-j..=j).step_by(2)
}

/// 6j symbol as a contraction of four 3j symbols, doubled arguments.
pub fn oracle_6j(j1: i32, j2: i32, j3: i32, j4: i32, j5: i32, j6: i32) -> f64 {
    let mut sum = 0.0;
    for m1 in projections(j1) {
        for m2 in projections(j2) {
            let m3 = -m1 - m2;
            if m3.abs() > j3 || (j3 + m3) % 2 != 0 {
                continue;
            }
            let a = oracle_3j(j1, j2, j3, -m1, -m2, -m3);
            if a == 0.0 {
                continue;
            }
            for m5 in projections(j5) {
                let m6 = m5 - m1;
                if m6.abs() > j6 || (j6 + m6) % 2 != 0 {
                    continue;
                }
                let m4 = m5 + m3;
                if m4.abs() > j4 || (j4 + m4) % 2 != 0 {
                    continue;
                }
                let s = (j1 - m1) + (j2 - m2) + (j3 - m3) + (j4 - m4) + (j5 - m5) + (j6 - m6);
                sum += parity(s)
                    * a
                    * oracle_3j(j1, j5, j6, m1, -m5, m6)
                    * oracle_3j(j4, j2, j6, m4, m2, -m6)
                    * oracle_3j(j4, j5, j3, -m4, m5, m3);
            }
        }
    }
    sum
}

pub fn h(twice: i32) -> HalfInteger {
    HalfInteger::from_twice(twice)
}

pub fn triangle(a: i32, b: i32, c: i32) -> bool {
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// Σ_{j3} (2j3+1)(2j6+1) {j1 j2 j3; j4 j5 j6}{j1 j2 j3; j4 j5 j6'} = δ_{j6 j6'}
pub fn six_j_orthogonality_deviation(max_twice: i32) -> f64 {
    let mut cache: HashMap<[i32; 6], f64> = HashMap::new();
    let mut w6 = |j: [i32; 6]| {
        *cache
            .entry(j)
            .or_insert_with(|| wigner6j(h(j[0]), h(j[1]), h(j[2]), h(j[3]), h(j[4]), h(j[5])))
    };
    let mut worst: f64 = 0.0;
    for j1 in 0..=max_twice {
        for j2 in 0..=max_twice {
            for j4 in 0..=max_twice {
                for j5 in 0..=max_twice {
                    let allowed: Vec<i32> = (0..=max_twice)
                        .filter(|&j6| triangle(j1, j5, j6) && triangle(j4, j2, j6))
                        .collect();
                    for &j6 in &allowed {
                        for &j6p in &allowed {
                            let mut sum = 0.0;
                            for j3 in 0..=2 * max_twice {
                                if triangle(j1, j2, j3) && triangle(j4, j5, j3) {
                                    sum += f64::from((j3 + 1) * (j6 + 1))
                                        * w6([j1, j2, j3, j4, j5, j6])
                                        * w6([j1, j2, j3, j4, j5, j6p]);
                                }
                            }
                            let expected = if j6 == j6p { 1.0 } else { 0.0 };
                            worst = worst.max((sum - expected).abs());
                        }
                    }
                }
            }
        }
    }
    worst
}
