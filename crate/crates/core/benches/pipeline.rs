//! Hot-path benchmarks comparing the rayon kernels against their
//! sequential fallbacks: per-event warping, accumulation, and one cost
//! evaluation of the calibration search.

use amiev_core::calib::{
    compensate_stream, compensate_stream_seq, cost_of_params, cost_of_params_seq,
    CompensationParams,
};
use amiev_core::events::{
    accumulate_iwe_warped, accumulate_iwe_warped_seq, Binning, Event, EventStream, Polarity,
};
use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use std::f64::consts::TAU;
use std::hint::black_box;

const WIDTH: u16 = 640;
const HEIGHT: u16 = 480;

/// Deterministic pseudo-stream; cheap LCG keeps setup out of the timings.
fn bench_stream(n: usize) -> EventStream {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        state >> 33
    };
    let mut events = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    for i in 0..n {
        events.push(Event {
            t_us: i as u64,
            x: (next() % WIDTH as u64) as u16,
            y: (next() % HEIGHT as u64) as u16,
            polarity: if next() % 2 == 0 { Polarity::Pos } else { Polarity::Neg },
        });
        theta.push((i as f64 * 0.000_754) % TAU);
    }
    let (stream, _) = EventStream::from_unsorted(WIDTH, HEIGHT, events).unwrap();
    stream.with_theta(theta).unwrap()
}

fn params() -> CompensationParams {
    CompensationParams::new(25.0, 40f64.to_radians(), (320.0, 240.0)).unwrap()
}

fn bench_compensate(c: &mut Criterion) {
    let stream = bench_stream(1_000_000);
    let p = params();
    let mut group = c.benchmark_group("compensate");
    group.throughput(Throughput::Elements(stream.len() as u64));
    group.bench_function("seq", |b| {
        b.iter(|| black_box(compensate_stream_seq(&stream, &p).unwrap()))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| black_box(compensate_stream(&stream, &p).unwrap()))
    });
    group.finish();
}

fn bench_accumulate(c: &mut Criterion) {
    let stream = bench_stream(1_000_000);
    let warped = compensate_stream_seq(&stream, &params()).unwrap();
    let mut group = c.benchmark_group("accumulate_iwe");
    group.throughput(Throughput::Elements(warped.len() as u64));
    group.bench_function("seq", |b| {
        b.iter(|| black_box(accumulate_iwe_warped_seq(&warped, Binning::Bilinear)))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| black_box(accumulate_iwe_warped(&warped, Binning::Bilinear)))
    });
    group.finish();
}

fn bench_cost_eval(c: &mut Criterion) {
    let stream = bench_stream(250_000);
    let p = params();
    let mut group = c.benchmark_group("cost_eval");
    group.throughput(Throughput::Elements(stream.len() as u64));
    group.bench_function("seq", |b| {
        b.iter(|| black_box(cost_of_params_seq(&stream, &p, 4.0, Binning::Bilinear).unwrap()))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("par", |b| {
        b.iter(|| black_box(cost_of_params(&stream, &p, 4.0, Binning::Bilinear).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_compensate, bench_accumulate, bench_cost_eval);
criterion_main!(benches);
