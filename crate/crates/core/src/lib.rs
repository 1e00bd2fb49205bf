pub mod channel;
pub mod error;
pub mod metrics;
pub mod montecarlo;
pub mod moments;
pub mod optimize;
pub mod phases;
pub mod special;
