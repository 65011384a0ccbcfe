//! Numerics for a periodically curved nonlinear directional coupler.
//!
//! The crate is `no_std` (it needs `alloc`) so the same code can be embedded
//! anywhere; file formats and the command line live in `ncdt-cli`.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod averaged;
pub mod error;
pub mod floquet;
pub mod integrator;
pub mod model;
pub mod observables;

pub use error::{Error, Result};
pub use model::{Amplitudes, ModelParams, Nonlinearity};
pub use num_complex::Complex64;

/// Reduces a quasienergy to the first zone `(-w/2, w/2]`.
pub fn zone_reduce(eps: f64, w: f64) -> f64 {
    let shift = zone_index(eps, w);
    eps - shift as f64 * w
}

/// Integer `k` such that `eps - k w` lies in `(-w/2, w/2]`.
pub fn zone_index(eps: f64, w: f64) -> i64 {
    // ceil((eps - w/2) / w) puts the upper edge inside the zone.
    libm::ceil((eps - 0.5 * w) / w) as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_edges() {
        assert_eq!(zone_reduce(1.5, 3.0), 1.5);
        assert_eq!(zone_reduce(-1.5, 3.0), 1.5);
        assert!((zone_reduce(4.0, 3.0) - 1.0).abs() < 1e-15);
        assert!((zone_reduce(-2.0, 3.0) - 1.0).abs() < 1e-15);
        assert_eq!(zone_reduce(0.2, 3.0), 0.2);
    }
}
