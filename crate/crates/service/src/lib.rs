//! HTTP session service for interactive segmentation: per-session image,
//! landmarks and parameters, background solver runs, and polling endpoints
//! for state, contour, trace and overlay.

pub mod api;
pub mod session;

pub use api::{router, spawn_sweeper};
pub use session::{Session, Status, Store};
