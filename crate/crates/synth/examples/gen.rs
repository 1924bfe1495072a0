//! Generates a dataset: `gen <root> <seed> <canvas> <train> <val> <test>`.
fn main() {
    let a: Vec<String> = std::env::args().collect();
    let n = |i: usize, d: usize| a.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let cfg = jpp_synth::GenConfig {
        seed: n(2, 0) as u64,
        canvas_height: n(3, 128),
        canvas_width: n(3, 128),
        train: n(4, 10),
        val: n(5, 0),
        test: n(6, 0),
    };
    jpp_synth::generate_dataset(&cfg, std::path::Path::new(&a[1])).unwrap();
}
