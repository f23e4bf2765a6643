//! Persistence of limit cycles of planar autonomous systems under small
//! periodic forcing.

pub mod bifurcation;
pub mod cycle;
pub mod degree;
pub mod floquet;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod persist;
pub mod pipeline;
pub mod quadrature;
pub mod selfcheck;

pub use linalg::{Mat2, Vec2};
pub use model::{ForcingClock, PlanarSystem};
