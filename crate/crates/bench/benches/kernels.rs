use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use starkmem::angular::{wigner6j, HalfInteger};
use starkmem::atomic::ghz_to_rad_per_us;
use starkmem::memory::LifetimeSearch;
use starkmem::slm::{simulate_farfield, PhaseMask, SlmGrid, DEFAULT_WAIST_MM};
use starkmem::stark::polarizabilities;
use starkmem::{load_rb85, EnsembleConfig, FieldProfile, MemorySimulator};

fn angular(c: &mut Criterion) {
    let j = |v: i32| HalfInteger::from_twice(v);
    c.bench_function("wigner6j {5/2 3 7/2; 2 3/2 4}", |b| {
        b.iter(|| wigner6j(black_box(j(5)), j(6), j(7), j(4), j(3), j(8)))
    });
}

fn stark(c: &mut Criterion) {
    let rb = load_rb85();
    let detuning = ghz_to_rad_per_us(25.6);
    c.bench_function("polarizabilities F=2", |b| {
        b.iter(|| polarizabilities(&rb, black_box(2), detuning).unwrap())
    });
}

fn memory(c: &mut Criterion) {
    let rb = load_rb85();
    let sim = MemorySimulator::new(&rb, EnsembleConfig::default()).unwrap();
    let field = FieldProfile::polynomial(1.0, 6.0, 4.0);
    c.bench_function("efficiency_multi curved field", |b| {
        b.iter(|| sim.efficiency_multi(&field, black_box(30.0)))
    });
    let search = LifetimeSearch::default();
    c.bench_function("lifetime curved field", |b| {
        b.iter(|| sim.lifetime(black_box(&field), &search).unwrap())
    });
}

fn slm(c: &mut Criterion) {
    let grid = SlmGrid::default();
    let incident = grid.gaussian(DEFAULT_WAIST_MM, 1.0);
    let mask = PhaseMask::new(grid, 16, grid.sample(|z| 1.2 + 0.5 * (z / 2.0).sin())).unwrap();
    c.bench_function("simulate_farfield 1920 px", |b| {
        b.iter(|| simulate_farfield(black_box(&mask), &incident).unwrap())
    });
}

criterion_group!(kernels, angular, stark, memory, slm);
criterion_main!(kernels);
