use std::sync::RwLock;

use serde::{Deserialize, Serialize};

/// Validation tolerances used by the type constructors and eigensolvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub herm: f64,
    pub unitary: f64,
    pub eig: f64,
    pub psd: f64,
    pub trace: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-9,
            unitary: 1e-9,
            eig: 1e-10,
            psd: 1e-9,
            trace: 1e-9,
        }
    }
}

static GLOBAL: RwLock<Tolerances> = RwLock::new(Tolerances {
    herm: 1e-9,
    unitary: 1e-9,
    eig: 1e-10,
    psd: 1e-9,
    trace: 1e-9,
});

/// Current process-wide tolerances.
pub fn tolerances() -> Tolerances {
    *GLOBAL.read().unwrap_or_else(|e| e.into_inner())
}

/// Replace the process-wide tolerances.
pub fn set_tolerances(tol: Tolerances) {
    *GLOBAL.write().unwrap_or_else(|e| e.into_inner()) = tol;
}
