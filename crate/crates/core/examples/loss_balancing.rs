//! Feeds the loss balancer two heads whose raw losses differ by four
//! orders of magnitude and prints how the weights settle.

use ankle_tcn::loss::LossState;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut state = LossState::default();
    for step in 0..60 {
        // Torque loss shrinking as training progresses, stance loss flat.
        let torque = 0.05 * (-(step as f64) / 20.0).exp() + 0.002;
        let stance = 40.0;
        let (balanced, w) = state.step(torque, stance)?;
        if step % 6 == 0 {
            println!(
                "step {step:>2}: raw ({torque:.4}, {stance:.1}) weights ({:.1}, {:.4}) balanced {balanced:.4}",
                w[0], w[1]
            );
        }
    }
    Ok(())
}
