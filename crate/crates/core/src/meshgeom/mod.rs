//! Geometry layer: multi-indices, simplicial meshes, quadrature and the
//! reference-shape generators the rest of the pipeline builds on.

pub mod generate;
pub mod io;
pub mod mesh;
pub mod multiindex;
pub mod quadrature;

pub use generate::{
    build_reference_mesh, disk_rings, inclusion_aligned_disk_mesh, polygon_mesh, scaled_mesh,
    unit_ball_mesh, unit_disk_mesh, ReferenceShape,
};
pub use io::{read_mesh, write_mesh, FieldLocation, MeshField};
pub use mesh::{BoundaryFacet, Domain, DomainKind, Point, VolumeMesh};
pub use multiindex::{factorial, multi_indices, multi_indices_range, MultiIndex};
pub use quadrature::{gauss_legendre, QuadratureRule};
