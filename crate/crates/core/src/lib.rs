//! Numerical simulator and topological analysis toolkit for the
//! two-predator/one-prey generalized Lotka-Volterra system
//!
//! ```text
//! dX/dt = X - X*Y + C*X^2 - A*Z*X^2
//! dY/dt = -Y + X*Y
//! dZ/dt = -B*Z + A*Z*X^2          A, B, C > 0
//! ```
//!
//! together with a parametric mesh generator for dynamic and solid
//! 2-dimensional 0-surgery (the sphere-to-torus transition the system's
//! trajectories perform as `B/A` crosses 1).
//!
//! The crate splits into five subsystems:
//!
//! * [`dynamics`] — the vector field, Jacobian, and equilibria;
//! * [`integrator`] — adaptive Dormand-Prince 5(4) with dense output and
//!   section-crossing detection;
//! * [`topology`] — orbit classification (spherical shell / invariant torus /
//!   chaotic shell) from winding, Poincare loops, and slow-manifold stalls;
//! * [`sweep`] — parallel scans of the `(C, B/A)` parameter plane;
//! * [`surgery`] — the surgery morph meshes, solid layering, and the limit
//!   circle.

pub mod cubic;
pub mod dynamics;
pub mod integrator;
pub mod surgery;
pub mod sweep;
pub mod topology;

pub use dynamics::{
    eigenvalues_at, field, fixed_points, jacobian, rhs, DynamicsError, FixedPoint, Stability,
    State, SystemParams,
};
pub use integrator::{
    integrate, integrate_fixed, section_crossings, CrossingDirection, IntegrateError,
    IntegratorConfig, Plane, SectionCrossing, Trajectory,
};
pub use surgery::{
    euler_characteristic, limit_circle, morph_surface, solid_layers, MorphParams, Resolution,
    SurgeryError, SurgeryMesh, TwistSpec,
};
pub use sweep::{
    boundary_estimate, run_sweep, RangeSpec, SweepCell, SweepError, SweepResult, SweepSpec,
};
pub use topology::{
    classify, classify_with, core_segment_of_cloud, estimate_core, recurrence_distance,
    winding_number, winding_of_points, ClassifierThresholds, CoreSegment, TopologyError,
    TopologyReport, Verdict, WindingMeasure,
};
