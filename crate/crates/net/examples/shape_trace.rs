//! Runs one forward pass of a preset and prints every traced layer shape.
use std::time::Instant;

use jpp_core::Planes;
use jpp_net::{JppNet, NetConfig, Preset};

fn main() {
    let preset = match std::env::args().nth(1).as_deref() {
        Some("full") => Preset::Full,
        Some("tiny") => Preset::Tiny,
        _ => Preset::Toy,
    };
    let cfg = NetConfig::for_preset(preset);
    let t = Instant::now();
    let net = JppNet::new(cfg.clone(), 0).unwrap();
    println!("init: {:.1?}, {} scalars", t.elapsed(), net.params.num_scalars());
    let x = Planes::zeros(3, cfg.input_height, cfg.input_width);
    let t = Instant::now();
    let (stages, trace) = net.forward_traced(&x).unwrap();
    println!("forward: {:.1?}", t.elapsed());
    for e in trace {
        println!("{:<28} {:?}", e.name, e.shape);
    }
    for (i, s) in stages.iter().enumerate() {
        println!("stage {i}: parsing {:?}", s.parsing_scores.shape());
    }
}
