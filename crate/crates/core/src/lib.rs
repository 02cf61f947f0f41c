//! Stochastic forecasting of 3D skeleton motion.
//!
//! A sequence-to-sequence GRU generator maps observed skeleton poses and a
//! latent vector to a future pose sequence. It is trained adversarially
//! against a Wasserstein critic with gradient penalty, together with
//! pose-gradient and bone-length losses, while a separate discriminator
//! learns to score how realistic a motion sequence is.

pub mod autodiff;
pub mod cli;
pub mod losses;
pub mod models;
pub mod skeleton;
pub mod trainer;
