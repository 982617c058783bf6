//! Certification engine for secant defectivity, tangential weak
//! defectivity and generic identifiability of classical tensor varieties.

pub mod bound;
pub mod exactla;
pub mod geometry;
pub mod inference;
pub mod secantprobe;
pub mod twdprobe;
