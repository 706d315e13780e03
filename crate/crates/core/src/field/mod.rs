//! Grid fields, diffuse energies, discrepancy bounds and discrete perimeters.

mod energy;
mod grid;
mod perimeter;

pub use energy::{
    boundary_term, default_poincare_constant, diffuse_energy, diffuse_energy_in, dirichlet_budget,
    discrepancy, homogenized_energy, homogenized_energy_in, poincare_bound, poincare_bound_from_budget,
    DiffuseEnergy,
};
pub(crate) use energy::corner_offsets;
pub use grid::{l1_distance, project_to_wells, GridField, Region};
pub(crate) use grid::advance_counts;
pub use perimeter::{face_perimeter, interface_segments, reconstructed_perimeter, sharp_energy, well_labels};
