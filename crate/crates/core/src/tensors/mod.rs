//! Polarization-type tensors and their structural reports.
//!
//! Everything the boundary expansions consume is condensed into a few
//! tensor families: the leading volume tensor and its variable-background
//! hierarchy, the full-coefficient variant at a fixed inclusion scale, a
//! boundary-integral version for constant jump contrasts, and the moment
//! tensors of the Helmholtz potential. This module assembles them from
//! corrector solves, attaches provenance, and provides the randomized
//! property checks (symmetry, two-sided bounds, sign criteria), the
//! search for sign-changing contrasts with vanishing leading tensor, and
//! the diffusion-Helmholtz matching report.

mod equivalence;
mod layer;
mod properties;
mod tensor;
mod vanish;
mod volume;

pub use equivalence::{bohm_potential, equivalence_report, BohmPotential, EquivalenceReport};
pub use layer::{tensor_layer, transmission_density, TransmissionDensity};
pub use properties::{
    continuity_probe, property_report, quadratic_form_bounds, BoundCheck, Definiteness,
    PropertyReport,
};
pub use tensor::{PolarizationTensor, Provenance, TensorKind};
pub use vanish::{find_vanishing_inclusion, VanishingSearch};
pub use volume::{tensor_m, tensor_m2, tensor_m_eps, tensor_q, tensor_q_eta, TensorM};
