//! Structured meshes of the unit interval and square, and the angle quantity
//! behind the nonnegative-type stiffness property.
//!
//! cargo run --example mesh_angles

use fepreint::mesh::{element_sigma, mesh_sigma, Mesh};

fn main() -> fepreint::Result<()> {
    for (dim, cells) in [(1, 8), (2, 4), (2, 16)] {
        let mesh = Mesh::structured(dim, cells)?;
        let area: f64 = (0..mesh.num_elements())
            .map(|e| mesh.element_geometry(e).map(|g| g.measure))
            .sum::<fepreint::Result<f64>>()?;
        println!(
            "{dim}D, {cells} cells/side: {} vertices ({} interior), {} elements, h = {:.4}, total measure {area:.12}, sigma = {}",
            mesh.num_vertices(),
            mesh.interior_nodes().len(),
            mesh.num_elements(),
            mesh.meshwidth(),
            mesh_sigma(&mesh)?
        );
    }

    // a graded 1D mesh works too
    let graded = Mesh::from_interval_nodes(&[0.0, 0.05, 0.15, 0.35, 0.65, 1.0])?;
    let g = graded.element_geometry(0)?;
    println!("graded mesh: first element length {}, sigma {}", g.measure, element_sigma(&g));
    Ok(())
}
