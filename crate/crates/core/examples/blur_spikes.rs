//! Spike trains and the two blur models: a 1-D sinc and a 2-D Gaussian mask.

use bsr::signal::{
    apply_blur, blur_image, build_convolution_matrix, make_gaussian_kernel, make_sinc_kernel, make_spike_train,
    AmplitudeLaw, Grid, Image,
};

fn main() {
    let x = make_spike_train(Grid::Line(200), 6, 0, AmplitudeLaw::Uniform { low: 1.0, high: 5.0 }).unwrap();
    for s in x.spikes() {
        println!("spike at {:3} amplitude {:.3}", s.index, s.amplitude);
    }

    let h = build_convolution_matrix(&make_sinc_kernel(101, 0.25).unwrap(), 200).unwrap();
    let z = apply_blur(&x, &h).unwrap();
    let peak = z.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap();
    println!("blurred length {} (l_x + l_h − 1), largest |z| = {:.3} at {}", z.len(), peak.1.abs(), peak.0);

    let img = make_spike_train(Grid::square(32), 4, 1, AmplitudeLaw::Fixed(1.0)).unwrap();
    let img = Image::from_spikes(&img).unwrap();
    let k = make_gaussian_kernel(5, 2.0).unwrap();
    let blurred = blur_image(&img, &k).unwrap();
    let mass: f64 = blurred.data.iter().sum();
    println!("5×5 Gaussian (σ=2, unit peak): total blurred mass {mass:.3} from 4 unit spikes");
}
