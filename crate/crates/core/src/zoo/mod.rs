//! Canonical example generators: cyclides of characteristic (p, q), classical
//! surfaces, the Veronese surface and its frame solution, Cartan's
//! isoparametric family, and the standard reducible constructions.

mod classic;
mod cyclide;
mod pinkall;
mod registry;
mod veronese;

pub use classic::{ellipsoid, torus, torus_curvature_oracle};
pub use cyclide::{
    cyclide, cyclide_equivalence, line_membership_residual, CyclideFrames, CyclideSpec,
};
pub use pinkall::{generic_patch, pinkall_construction, PinkallKind};
pub use registry::{build_generator, generator_ids, Generated};
pub use veronese::{
    cartan_hypersurface, f_frames, parallel_transform, so3_exp, veronese_affine,
    veronese_normal_bundle, veronese_spherical, CartanFamily, FrameSolution, VeroneseFrame,
};
