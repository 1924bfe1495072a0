//! Writes a grid of samples (image above colourised labels) to a PNG.
use jpp_synth::{generate_sample, RenderStyle, SkeletonSpec};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = args.get(1).map(String::as_str).unwrap_or("sheet.png");
    let n = 8usize;
    let s = 128usize;
    let spec = SkeletonSpec::for_canvas(s, s);
    let style = RenderStyle::for_canvas(s, s);
    let mut sheet = image::RgbImage::new((n * s) as u32, (2 * s) as u32);
    for i in 0..n {
        let rec = generate_sample(0, &format!("train_{i:05}"), (s, s), &spec, &style).unwrap();
        for y in 0..s {
            for x in 0..s {
                let p = rec.image.get(y, x);
                sheet.put_pixel((i * s + x) as u32, y as u32, image::Rgb(p));
                let l = rec.labels.get(y, x).index() as u32;
                let c = [(l * 67 % 256) as u8, (l * 149 % 256) as u8, (l * 211 % 256) as u8];
                sheet.put_pixel((i * s + x) as u32, (s + y) as u32, image::Rgb(c));
            }
        }
        println!("{} {:?}", rec.id, rec.factors);
    }
    sheet.save(out).unwrap();
}
