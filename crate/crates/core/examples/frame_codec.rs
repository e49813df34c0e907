//! Encodes sensor and command frames, shows their wire bytes and what a
//! corrupted byte does to decoding.

use ankle_tcn::runtime::{CommandFlags, CommandFrame, SensorFrame, FRAME_VERSION};

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect::<Vec<_>>().join(" ")
}

fn main() {
    let mut channels = [0f32; 16];
    for (i, c) in channels.iter_mut().enumerate() {
        *c = i as f32 * 0.5 - 4.0;
    }
    let sensor = SensorFrame::new(42, 420_000, channels);
    let bytes = sensor.encode();
    println!("sensor frame ({} bytes): {}", bytes.len(), hex(&bytes));
    assert_eq!(SensorFrame::decode(&bytes), Ok(sensor));

    let mut flags = CommandFlags::default();
    flags.set(CommandFlags::WARMUP, true);
    let cmd = CommandFrame {
        version: FRAME_VERSION,
        sequence: 42,
        timestamp_us: 420_000,
        torque_nm: 6.5,
        estimate_nmkg: 0.46,
        flags,
    };
    let cb = cmd.encode();
    println!("command frame ({} bytes): {}", cb.len(), hex(&cb));

    let mut bad = bytes.clone();
    bad[10] ^= 0x04;
    println!("one flipped bit: {:?}", SensorFrame::decode(&bad));
    println!("truncated: {:?}", SensorFrame::decode(&bytes[..40]));
}
