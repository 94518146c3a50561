pub mod analysis;
pub mod audio;
pub mod augment;
pub mod features;
pub mod suite;
#[cfg(any(test, feature = "oracles"))]
pub mod oracles;
