//! Toy-preset forward pass, on a one-thread pool versus the global pool.

use criterion::{criterion_group, criterion_main, Criterion};
use jpp_core::Planes;
use jpp_net::{JppNet, NetConfig};

fn bench(c: &mut Criterion) {
    let net = JppNet::new(NetConfig::toy(), 0).unwrap();
    let side = 128;
    let image = Planes::from_vec(3, side, side, (0..3 * side * side).map(|i| (i % 97) as f64 / 97.0).collect()).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut g = c.benchmark_group("toy_forward_128px");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| single.install(|| net.forward(&image).unwrap())));
    g.bench_function("parallel", |b| b.iter(|| net.forward(&image).unwrap()));
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
