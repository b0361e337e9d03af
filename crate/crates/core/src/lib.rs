//! Circuit synthesis and desk-scale verification for quantum Fourier transforms,
//! reversible arithmetic, Fourier phase estimation and order finding.

pub mod accept;
pub mod circuit;
pub mod phasest;
pub mod qft_moduli;
pub mod qft_pow2;
pub mod revarith;
pub mod shor;
pub mod sim;
