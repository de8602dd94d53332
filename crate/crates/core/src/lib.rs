//! Randomized first-order heuristics for binary integer programs
//!
//! `min <x,Qx> + <c,x> + c0  s.t.  Ax >= b, Bx = d, x in {0,1}^n`
//!
//! The solver runs a primal-dual hybrid gradient method on a penalized
//! saddle-point form over the box `[0,1]^n`, periodically samples binary
//! candidates from the current iterate, and keeps the best feasible one.
//! Around that core sit a totally unimodular variable elimination, a
//! customized sampler for 3D assignment, success-probability bounds,
//! random instance generators and an exhaustive oracle for small `n`.

pub mod bounds;
pub mod diagnostics;
pub mod driver;
pub mod exec;
pub mod instances;
pub mod linalg;
pub mod model;
pub mod pdhg;
pub mod sampling;
pub mod schedule;
pub mod tu;

pub use exec::Execution;
pub use model::{BipInstance, InstanceMeta};
