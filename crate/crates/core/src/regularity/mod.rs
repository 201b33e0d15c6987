//! Numerical diagnostics for the regularity argument: difference quotients,
//! the time lift, the oscillation cascade, Hölder fits and Lipschitz
//! certificates.

pub mod cascade;
pub mod certificate;
pub mod diff_quotient;
pub mod doubling;
pub mod holder;

pub use cascade::{
    cylinder_oscillation, oscillation_cascade, oscillation_cascade_with, scale_ratio, time_lift,
    CascadeOptions, CascadeRow, CascadeTable, RowStatus, SpaceTimeField,
};
pub use certificate::{lipschitz_certificate, LipschitzCertificate};
pub use diff_quotient::{diff_quotient, dq_residuals, DiffQuotient, DqResiduals};
pub use doubling::{doubling_max, measured_nonlocal_bound, DoublingMax, DOUBLING_POINT_CAP};
pub use holder::{holder_fit, HolderFit};
