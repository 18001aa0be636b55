#[cfg(not(feature = "std"))]
pub use num_traits::Float;
