//! Free-space Poisson solves via zero-padded kernel convolution.

use crate::error::Result;
use crate::fft::C64;
use crate::grid::GridField;
use crate::kernel::FreeSpaceKernel;
use crate::spectral::SpectralSpace;

/// Solve Delta phi = source with phi -> 0 at infinity, for a compactly
/// supported source sampled on the grid.
pub fn solve_poisson_free_space(source: &GridField, kernel: &FreeSpaceKernel) -> Result<GridField> {
    kernel.matches(source)?;
    let space = SpectralSpace::padded(source.n, source.extent);
    let mut scratch = space.scratch();
    let mut hat = space.forward_component(source, 0, &mut scratch);
    kernel.apply(&mut hat);
    let mut phi = GridField::scalar(source.extent, source.n);
    space.inverse_into(hat, &mut phi, 0, &mut scratch);
    Ok(phi)
}

/// Solve the Poisson problem and return the potential together with its
/// spectral gradient, sharing one forward transform.
pub fn solve_with_gradient(
    source: &GridField,
    kernel: &FreeSpaceKernel,
) -> Result<(GridField, GridField)> {
    kernel.matches(source)?;
    let space = SpectralSpace::padded(source.n, source.extent);
    let mut scratch = space.scratch();
    let mut hat = space.forward_component(source, 0, &mut scratch);
    kernel.apply(&mut hat);
    let mut grad = GridField::vector(source.extent, source.n);
    for axis in 0..3 {
        let d = space.derivative(&hat, axis);
        space.inverse_into(d, &mut grad, axis, &mut scratch);
    }
    let mut phi = GridField::scalar(source.extent, source.n);
    space.inverse_into(hat, &mut phi, 0, &mut scratch);
    Ok((phi, grad))
}

/// Componentwise free-space solve for a vector source.
pub fn solve_vector(source: &GridField, kernel: &FreeSpaceKernel) -> Result<GridField> {
    kernel.matches(source)?;
    let space = SpectralSpace::padded(source.n, source.extent);
    let mut scratch = space.scratch();
    let mut out = GridField::vector(source.extent, source.n);
    for c in 0..3 {
        let mut hat = space.forward_component(source, c, &mut scratch);
        kernel.apply(&mut hat);
        space.inverse_into(hat, &mut out, c, &mut scratch);
    }
    Ok(out)
}

/// Mean-free spectral inverse Laplacian on the padded torus: the solve
/// used inside the projection algebra. Exactly inverted by the spectral
/// Laplacian on every nonzero mode.
pub fn inverse_laplacian_spectral(source: &GridField) -> GridField {
    let space = SpectralSpace::padded(source.n, source.extent);
    let mut scratch = space.scratch();
    let mut hat = space.forward_component(source, 0, &mut scratch);
    space.inverse_laplacian(&mut hat);
    let mut out = GridField::scalar(source.extent, source.n);
    space.inverse_into(hat, &mut out, 0, &mut scratch);
    out
}

/// Apply the spectral Laplacian (padded torus) to a grid field.
pub fn laplacian_spectral(field: &GridField) -> GridField {
    let space = SpectralSpace::padded(field.n, field.extent);
    let mut scratch = space.scratch();
    let mut out = GridField::zeros(field.extent, field.n, field.components);
    for c in 0..field.components {
        let mut hat: Vec<C64> = space.forward_component(field, c, &mut scratch);
        space.laplacian(&mut hat);
        space.inverse_into(hat, &mut out, c, &mut scratch);
    }
    out
}
