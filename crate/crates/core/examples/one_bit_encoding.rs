//! Sign measurements, noise-induced flips and the bitstream round trip.

use bsr::acquisition::{
    calibrate_sigma, encode, encode_noisy, read_bitstream, write_bitstream, NoiseSpec, SensingEnsemble, Sidecar,
};
use bsr::signal::{apply_blur, build_convolution_matrix, make_sinc_kernel, make_spike_train, AmplitudeLaw, Grid};

fn main() {
    let x = make_spike_train(Grid::Line(200), 6, 4, AmplitudeLaw::Uniform { low: 1.0, high: 5.0 }).unwrap();
    let h = build_convolution_matrix(&make_sinc_kernel(101, 0.25).unwrap(), 200).unwrap();
    let z = apply_blur(&x, &h).unwrap();
    let a = SensingEnsemble::new(450, z.len(), 1000);
    let tau = -0.1;

    let y = encode(&z, &a, tau).unwrap();
    let positives = y.signs.iter().filter(|&&s| s > 0).count();
    println!("{} signs, {positives} positive", y.len());

    let margins: Vec<f64> = a.project(&z).unwrap().iter().map(|p| p - tau).collect();
    for db in [30.0, 15.0, 5.0] {
        let noise = NoiseSpec { sigma: calibrate_sigma(&margins, db), seed: 7 };
        let yn = encode_noisy(&z, &a, tau, noise).unwrap();
        println!("input SNR {db:>4} dB: σ_w = {:.3}, {} flipped signs", noise.sigma, yn.encoder.unwrap().flips);
    }

    let mut stream = Vec::new();
    write_bitstream(&mut stream, std::slice::from_ref(&y)).unwrap();
    let back = read_bitstream(stream.as_slice()).unwrap();
    println!("bitstream: {} bytes, signs intact: {}", stream.len(), back[0].signs == y.signs);
    println!("threshold stays with the encoder: {}", serde_json::to_string(&Sidecar::from_records(&[y])).unwrap());
}
