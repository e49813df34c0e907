//! Prints the magnitude response and step response of the 7 Hz command
//! smoothing filter.

use ankle_tcn::dsp::butter2_design;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 100.0;
    let f = butter2_design(7.0, fs)?;
    println!("DC gain {:.6}, pole radius {:.4}", f.dc_gain(), f.max_pole_radius());
    for hz in [0.5, 1.0, 2.0, 5.0, 7.0, 10.0, 20.0, 40.0] {
        let m = f.magnitude_at(hz, fs);
        println!("{hz:>5.1} Hz  |H| {m:.4}  {:>7.2} dB", 20.0 * m.log10());
    }
    let mut step = f.fresh();
    let y: Vec<f64> = (0..15).map(|_| step.process(1.0)).collect();
    println!("step response: {}", y.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    Ok(())
}
