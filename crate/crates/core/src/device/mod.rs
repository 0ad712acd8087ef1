//! Device description, doping and mesh generation.

mod doping;
mod mesh;
mod spec;

pub use doping::{DopingBox, DopingProfile, Junction};
pub use mesh::{
    generate_mesh, generate_mesh_with_profile, generate_resistor_mesh, Contact, Mesh, MeshDensity,
    Region,
};
pub use spec::{default_device, validate_spec, DeviceSpec, SpecViolation};
