use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

/// Atomic populations, atomic coherence and mean photon number at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// No atom present.
    pub p0: f64,
    /// Lower level.
    pub p1: f64,
    /// Upper level.
    pub p2: f64,
    /// Both modes occupied.
    pub p12: f64,
    /// `Tr(σ- ρ)` in the laboratory frame.
    pub rho12: C64,
    pub rho21: C64,
    pub nbar: f64,
}

impl Observables {
    pub fn total(&self) -> f64 {
        self.p0 + self.p1 + self.p2 + self.p12
    }

    /// Largest absolute difference over all fields.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            (self.p0 - other.p0).abs(),
            (self.p1 - other.p1).abs(),
            (self.p2 - other.p2).abs(),
            (self.p12 - other.p12).abs(),
            (self.rho12 - other.rho12).norm(),
            (self.rho21 - other.rho21).norm(),
            (self.nbar - other.nbar).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
