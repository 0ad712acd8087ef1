use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fdsoi_core::ddsolver::{bernoulli, electron_flux, solve_direct, solve_with, LinearMethod, LinearSystem};
use fdsoi_core::{default_device, MaterialParams, MeshDensity, Simulator, SolverSettings, TransportParams};

/// Dirichlet-bordered 2D Laplacian on an `nx` by `ny` grid.
fn laplacian(nx: usize, ny: usize) -> LinearSystem {
    let mut s = LinearSystem::new(nx * ny, ny);
    for i in 0..nx {
        for j in 0..ny {
            let k = i * ny + j;
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                s.diag[k] = 1.0;
                s.rhs[k] = i as f64 / nx as f64;
                continue;
            }
            s.diag[k] = 4.0;
            s.west[k] = -1.0;
            s.east[k] = -1.0;
            s.north[k] = -1.0;
            s.south[k] = -1.0;
        }
    }
    s
}

fn flux(c: &mut Criterion) {
    let xs: Vec<f64> = (0..1000).map(|i| -40.0 + 0.08 * i as f64).collect();
    c.bench_function("bernoulli_1k", |b| b.iter(|| xs.iter().map(|&x| bernoulli(black_box(x))).sum::<f64>()));
    c.bench_function("electron_flux_1k", |b| {
        b.iter(|| xs.iter().map(|&d| electron_flux(black_box(1e18), 1e10, d)).sum::<f64>())
    });
}

fn linear(c: &mut Criterion) {
    let sys = laplacian(120, 60);
    c.bench_function("direct_120x60", |b| b.iter(|| solve_direct(black_box(&sys)).unwrap()));
    c.bench_function("sor_120x60", |b| {
        b.iter(|| solve_with(LinearMethod::Sor, black_box(&sys), 1e-8, 20_000, 1.9).unwrap())
    });
}

fn equilibrium(c: &mut Criterion) {
    let mat = MaterialParams::default();
    let sim = Simulator::for_device(
        &default_device(),
        MeshDensity::Coarse,
        mat,
        TransportParams::from_material(&mat, 300.0),
        SolverSettings::default(),
    )
    .unwrap();
    let mut g = c.benchmark_group("device");
    g.sample_size(10);
    g.bench_function("equilibrium_coarse", |b| {
        b.iter(|| sim.solve_equilibrium().unwrap())
    });
    g.finish();
}

criterion_group!(benches, flux, linear, equilibrium);
criterion_main!(benches);
