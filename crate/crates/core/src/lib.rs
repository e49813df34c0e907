//! Ankle torque estimation from wearable IMU streams with a temporal
//! convolutional network, healthy-to-post-stroke transfer learning, and a
//! 100 Hz estimation-to-command runtime.

pub mod app;
pub mod data;
pub mod dsp;
pub mod loss;
pub mod metrics;
pub mod nn;
pub mod runtime;
pub mod textcfg;
pub mod train;
