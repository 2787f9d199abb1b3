//! Simplicial meshes, quadrature and piecewise-affine maps.

mod integrate;
mod io;
mod map;
mod mesh;
mod quadrature;

pub use integrate::{cell_energies, exact_det_integral, integrate_energy, weak_minor_residual, Energy, JetFunction};
pub(crate) use integrate::checked_eval;
pub use io::{read_mesh_map, write_mesh_map};

pub(crate) mod io_support {
    pub(crate) use super::io::{fmt_f64, Lines};
}
pub use map::{hat_gradients, interpolate, AnalyticMap, BoundaryTrace, JetSource, PwAffineMap};
pub use mesh::{
    build_annulus_mesh, build_box_mesh, build_disc_mesh, build_tensor_mesh, build_tensor_mesh_3d,
    inscribed_polygon_area, SimplicialMesh, MAX_CELLS,
};
pub use quadrature::QuadratureRule;
