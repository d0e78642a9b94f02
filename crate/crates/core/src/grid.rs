//! Uniform cubic grid fields.
//!
//! Samples are node-centered at x_i = -extent + i*h with h = 2*extent/n,
//! stored component-major, each component row-major with axis order
//! (x, y, z) so the z index is fastest. `pad_factor` records the padding
//! used for free-space convolutions (2 doubles each axis).

use crate::math::{SignedPermutation, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub extent: f64,
    pub n: usize,
    pub components: usize,
    pub pad_factor: usize,
    data: Vec<f64>,
}

impl GridField {
    pub fn zeros(extent: f64, n: usize, components: usize) -> Self {
        GridField {
            extent,
            n,
            components,
            pad_factor: 2,
            data: vec![0.0; components * n * n * n],
        }
    }

    pub fn scalar(extent: f64, n: usize) -> Self {
        Self::zeros(extent, n, 1)
    }

    pub fn vector(extent: f64, n: usize) -> Self {
        Self::zeros(extent, n, 3)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Physical coordinate of node (i, j, k).
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let h = self.spacing();
        Vec3::new(
            -self.extent + i as f64 * h,
            -self.extent + j as f64 * h,
            -self.extent + k as f64 * h,
        )
    }

    #[inline]
    pub fn get(&self, comp: usize, node: usize) -> f64 {
        self.data[comp * self.node_count() + node]
    }

    #[inline]
    pub fn set(&mut self, comp: usize, node: usize, value: f64) {
        let nn = self.node_count();
        self.data[comp * nn + node] = value;
    }

    pub fn comp(&self, comp: usize) -> &[f64] {
        let nn = self.node_count();
        &self.data[comp * nn..(comp + 1) * nn]
    }

    pub fn comp_mut(&mut self, comp: usize) -> &mut [f64] {
        let nn = self.node_count();
        &mut self.data[comp * nn..(comp + 1) * nn]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    /// Vector value at a node (components 0..3).
    pub fn vec_at(&self, node: usize) -> Vec3 {
        debug_assert!(self.components >= 3);
        let nn = self.node_count();
        Vec3::new(self.data[node], self.data[nn + node], self.data[2 * nn + node])
    }

    /// Grid maximum of the per-node Euclidean magnitude over all components.
    pub fn sup_norm(&self) -> f64 {
        let nn = self.node_count();
        let mut best = 0.0f64;
        for node in 0..nn {
            let mut s = 0.0;
            for c in 0..self.components {
                let v = self.data[c * nn + node];
                s += v * v;
            }
            best = best.max(s);
        }
        best.sqrt()
    }

    /// Sum of all samples of one component times the cell volume, i.e. the
    /// grid quadrature of that component.
    pub fn integral(&self, comp: usize) -> f64 {
        let h = self.spacing();
        self.comp(comp).iter().sum::<f64>() * h * h * h
    }

    pub fn same_layout(&self, other: &GridField) -> bool {
        self.n == other.n && self.extent == other.extent && self.components == other.components
    }

    /// Trilinear interpolation of a vector field at a physical position.
    /// Returns None when the CIC stencil would leave the grid.
    pub fn sample_vector(&self, pos: Vec3) -> Option<Vec3> {
        let (base, w) = self.cic_stencil(pos)?;
        let nn = self.node_count();
        let mut out = [0.0f64; 3];
        for (node, weight) in Self::stencil_nodes(self.n, base, w) {
            for (c, val) in out.iter_mut().enumerate() {
                *val += weight * self.data[c * nn + node];
            }
        }
        Some(Vec3(out))
    }

    /// Trilinear interpolation of all components at a physical position.
    pub fn sample_all(&self, pos: Vec3, out: &mut [f64]) -> Option<()> {
        debug_assert_eq!(out.len(), self.components);
        let (base, w) = self.cic_stencil(pos)?;
        let nn = self.node_count();
        out.fill(0.0);
        for (node, weight) in Self::stencil_nodes(self.n, base, w) {
            for (c, val) in out.iter_mut().enumerate() {
                *val += weight * self.data[c * nn + node];
            }
        }
        Some(())
    }

    /// Base node and fractional offsets of the cloud-in-cell stencil.
    #[inline]
    pub fn cic_stencil(&self, pos: Vec3) -> Option<([usize; 3], [f64; 3])> {
        let h = self.spacing();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let u = (pos[a] + self.extent) / h;
            if !(u >= 0.0) {
                return None;
            }
            let i = u.floor() as usize;
            if i + 1 >= self.n {
                return None;
            }
            base[a] = i;
            frac[a] = u - i as f64;
        }
        Some((base, frac))
    }

    /// The 8 (node index, weight) pairs of a trilinear stencil.
    #[inline]
    pub fn stencil_nodes(
        n: usize,
        base: [usize; 3],
        frac: [f64; 3],
    ) -> impl Iterator<Item = (usize, f64)> {
        (0..8usize).map(move |corner| {
            let di = corner & 1;
            let dj = (corner >> 1) & 1;
            let dk = (corner >> 2) & 1;
            let wi = if di == 0 { 1.0 - frac[0] } else { frac[0] };
            let wj = if dj == 0 { 1.0 - frac[1] } else { frac[1] };
            let wk = if dk == 0 { 1.0 - frac[2] } else { frac[2] };
            let node = ((base[0] + di) * n + base[1] + dj) * n + base[2] + dk;
            (node, wi * wj * wk)
        })
    }

    /// Pull-back of the field under a signed permutation: scalar components
    /// transform as f(Q x); a 3-vector field additionally rotates its
    /// components, (Q^T F)(Q x). Node reflection uses the torus convention
    /// (index 0 maps to itself), exact for data supported away from the box
    /// faces.
    pub fn transform(&self, q: &SignedPermutation) -> GridField {
        let n = self.n;
        let mut out = GridField::zeros(self.extent, n, self.components);
        let reflect = |i: usize, sign: f64| -> usize {
            if sign > 0.0 {
                i
            } else {
                (n - i) % n
            }
        };
        let qinv = q.inverse();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    // Target node index of Q x where x is node (i,j,k):
                    // evaluate source at Q x by index permutation.
                    let src_ijk = [i, j, k];
                    let mut s = [0usize; 3];
                    for a in 0..3 {
                        s[a] = reflect(src_ijk[q.perm[a]], q.signs[a]);
                    }
                    let src = (s[0] * n + s[1]) * n + s[2];
                    let dst = (i * n + j) * n + k;
                    if self.components == 3 {
                        let v = self.vec_at(src);
                        let w = qinv.apply(v);
                        let nn = self.node_count();
                        out.data[dst] = w[0];
                        out.data[nn + dst] = w[1];
                        out.data[2 * nn + dst] = w[2];
                    } else {
                        for c in 0..self.components {
                            let nn = self.node_count();
                            out.data[c * nn + dst] = self.data[c * nn + src];
                        }
                    }
                }
            }
        }
        out
    }

    /// Fill from a function of position (all components at once).
    pub fn fill_with<F: Fn(Vec3) -> Vec<f64> + Sync>(&mut self, f: F) {
        let n = self.n;
        let nn = self.node_count();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let node = (i * n + j) * n + k;
                    let vals = f(self.node(i, j, k));
                    debug_assert_eq!(vals.len(), self.components);
                    for (c, v) in vals.iter().enumerate() {
                        self.data[c * nn + node] = *v;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_coordinates_are_symmetric() {
        let g = GridField::scalar(2.0, 16);
        assert_eq!(g.node(8, 8, 8), Vec3::ZERO);
        assert_eq!(g.node(0, 8, 8)[0], -2.0);
        assert!((g.spacing() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn trilinear_weights_sum_to_one() {
        let g = GridField::scalar(1.0, 16);
        let (base, frac) = g.cic_stencil(Vec3::new(0.37, -0.21, 0.55)).unwrap();
        let total: f64 = GridField::stencil_nodes(16, base, frac).map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_reproduces_linear_fields() {
        let mut g = GridField::vector(1.0, 16);
        g.fill_with(|x| vec![2.0 * x[0] - x[1], 0.5 * x[2], 1.0]);
        let p = Vec3::new(0.31, -0.44, 0.12);
        let v = g.sample_vector(p).unwrap();
        assert!((v[0] - (2.0 * p[0] - p[1])).abs() < 1e-13);
        assert!((v[1] - 0.5 * p[2]).abs() < 1e-13);
        assert!((v[2] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn sample_outside_box_is_none() {
        let g = GridField::vector(1.0, 16);
        assert!(g.sample_vector(Vec3::new(1.5, 0.0, 0.0)).is_none());
        assert!(g.sample_vector(Vec3::new(0.0, 0.99, 0.0)).is_none());
    }

    #[test]
    fn transform_by_identity_is_identity() {
        let mut g = GridField::vector(1.0, 16);
        g.fill_with(|x| vec![x[0], x[1] * x[2], -x[0] + 1.0]);
        let t = g.transform(&SignedPermutation::identity());
        assert_eq!(g, t);
    }

    #[test]
    fn scalar_transform_matches_function_composition() {
        let n = 16;
        let mut g = GridField::scalar(1.0, n);
        let f = |x: Vec3| (x[0] + 2.0 * x[1] - 0.5 * x[2]).sin();
        g.fill_with(|x| vec![f(x)]);
        let q = SignedPermutation {
            perm: [1, 2, 0],
            signs: [1.0, -1.0, 1.0],
        };
        let t = g.transform(&q);
        // Check at interior nodes (reflection wraps index 0).
        for i in 1..n {
            for j in 1..n {
                for k in 1..n {
                    let x = g.node(i, j, k);
                    let expected = f(q.apply(x));
                    let got = t.get(0, t.idx(i, j, k));
                    assert!(
                        (expected - got).abs() < 1e-14,
                        "node ({i},{j},{k}): {expected} vs {got}"
                    );
                }
            }
        }
    }
}
