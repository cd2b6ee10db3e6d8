//! Sampled fields on a periodic box and the spectral operators acting on them.
//!
//! The computational domain is the torus [0, L)^3 sampled on an N^3 lattice,
//! standing in for all of space; N must be even and at least 4. Differential
//! operators act in Fourier space (multiplication by i*k per mode), which is
//! exact for band-limited fields. The derivative wavenumber at the unmatched
//! N/2 frequency is zero, so real fields map to real fields. Quadrature is
//! the midpoint rule on the nodes, which is spectrally consistent on the
//! torus.
//!
//! Node ordering is row-major with z fastest: `idx = (ix*N + iy)*N + iz`,
//! matching the CSV field layout in [`crate::io`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{merge_components, split_components, Engine};
use crate::vec3;

/// Periodic computational box: edge length, samples per axis, and the vacuum
/// permeability used by every energy built on the grid.
///
/// Serializes to `{edge_length, resolution, mu0}`; construction goes through
/// [`GridSpec::new`] so invalid specs cannot be smuggled in from JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    edge_length: f64,
    resolution: usize,
    mu0: f64,
}

impl GridSpec {
    pub fn new(edge_length: f64, resolution: usize, mu0: f64) -> Result<Self> {
        if !(edge_length.is_finite() && edge_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "edge_length must be positive, got {edge_length}"
            )));
        }
        if !(mu0.is_finite() && mu0 > 0.0) {
            return Err(Error::InvalidGrid(format!("mu0 must be positive, got {mu0}")));
        }
        if resolution < 4 || !resolution.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "resolution must be even and >= 4, got {resolution}"
            )));
        }
        Ok(GridSpec {
            edge_length,
            resolution,
            mu0,
        })
    }

    /// Unit box with mu0 = 1 (the nondimensional setup used throughout the
    /// bundled scenarios and tests).
    pub fn unit(resolution: usize) -> Result<Self> {
        GridSpec::new(1.0, resolution, 1.0)
    }

    pub fn edge_length(&self) -> f64 {
        self.edge_length
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn node_count(&self) -> usize {
        self.resolution * self.resolution * self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.edge_length / self.resolution as f64
    }

    /// Quadrature weight of one node, (L/N)^3.
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.resolution + iy) * self.resolution + iz
    }

    pub fn position(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        let h = self.spacing();
        [ix as f64 * h, iy as f64 * h, iz as f64 * h]
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: *self,
                right: *other,
            })
        }
    }

    /// Iterate node indices as (flat, ix, iy, iz).
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> + '_ {
        let n = self.resolution;
        (0..n).flat_map(move |ix| {
            (0..n).flat_map(move |iy| {
                (0..n).map(move |iz| ((ix * n + iy) * n + iz, ix, iy, iz))
            })
        })
    }
}

/// Real scalar samples on the grid.
#[derive(Clone, Debug)]
pub struct ScalarField {
    spec: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        ScalarField {
            data: vec![0.0; spec.node_count()],
            spec,
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut data = Vec::with_capacity(spec.node_count());
        for (_, ix, iy, iz) in spec.nodes() {
            data.push(f(spec.position(ix, iy, iz)));
        }
        ScalarField { spec, data }
    }

    pub fn from_data(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.node_count() {
            return Err(Error::InvalidGrid(format!(
                "scalar data length {} does not match {} nodes",
                data.len(),
                spec.node_count()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("scalar field data"));
        }
        Ok(ScalarField { spec, data })
    }

    pub fn spec(&self) -> &GridSpec {
        self.spec_ref()
    }

    fn spec_ref(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// L2 norm with the midpoint quadrature weight.
    pub fn norm(&self) -> f64 {
        let w = self.spec.cell_volume();
        (self.data.iter().map(|x| x * x).sum::<f64>() * w).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }
}

/// Real 3-vector samples on the grid; the carrier for m, h_s, b and b_a.
#[derive(Clone, Debug)]
pub struct VectorField {
    spec: GridSpec,
    data: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn zeros(spec: GridSpec) -> Self {
        VectorField {
            data: vec![[0.0; 3]; spec.node_count()],
            spec,
        }
    }

    pub fn uniform(spec: GridSpec, v: [f64; 3]) -> Self {
        VectorField {
            data: vec![v; spec.node_count()],
            spec,
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(spec.node_count());
        for (_, ix, iy, iz) in spec.nodes() {
            data.push(f(spec.position(ix, iy, iz)));
        }
        VectorField { spec, data }
    }

    pub fn from_data(spec: GridSpec, data: Vec<[f64; 3]>) -> Result<Self> {
        if data.len() != spec.node_count() {
            return Err(Error::InvalidGrid(format!(
                "vector data length {} does not match {} nodes",
                data.len(),
                spec.node_count()
            )));
        }
        if !data.iter().all(|v| vec3::is_finite(*v)) {
            return Err(Error::NonFinite("vector field data"));
        }
        Ok(VectorField { spec, data })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.data
    }

    pub fn try_add(&self, other: &VectorField) -> Result<VectorField> {
        self.spec.check_same(&other.spec)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| vec3::add(*a, *b))
            .collect();
        Ok(VectorField {
            spec: self.spec,
            data,
        })
    }

    pub fn try_sub(&self, other: &VectorField) -> Result<VectorField> {
        self.spec.check_same(&other.spec)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| vec3::sub(*a, *b))
            .collect();
        Ok(VectorField {
            spec: self.spec,
            data,
        })
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField {
            spec: self.spec,
            data: self.data.iter().map(|v| vec3::scale(s, *v)).collect(),
        }
    }

    /// L2 norm with the midpoint quadrature weight.
    pub fn norm(&self) -> f64 {
        let w = self.spec.cell_volume();
        (self.data.iter().map(|v| vec3::norm_sq(*v)).sum::<f64>() * w).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data
            .iter()
            .fold(0.0, |acc, v| acc.max(vec3::norm(*v)))
    }

    /// Max nodewise distance to `other`.
    pub fn max_node_dist(&self, other: &VectorField) -> Result<f64> {
        self.spec.check_same(&other.spec)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max(vec3::dist(*a, *b))))
    }

    /// Zero the field outside the region (the trivial extension of m).
    pub fn masked(&self, region: &Region) -> Result<VectorField> {
        self.spec.check_same(&region.spec)?;
        let data = self
            .data
            .iter()
            .zip(region.mask.iter())
            .map(|(v, &inside)| if inside { *v } else { [0.0; 3] })
            .collect();
        Ok(VectorField {
            spec: self.spec,
            data,
        })
    }
}

/// Discrete L2 pairing: (L/N)^3 * sum of nodewise dot products.
pub fn inner_product(u: &VectorField, v: &VectorField) -> Result<f64> {
    u.spec.check_same(&v.spec)?;
    let w = u.spec.cell_volume();
    Ok(u.data
        .iter()
        .zip(&v.data)
        .map(|(a, b)| vec3::dot(*a, *b))
        .sum::<f64>()
        * w)
}

/// Spectral divergence; exact on band-limited fields.
pub fn divergence(u: &VectorField) -> ScalarField {
    let engine = Engine::new(&u.spec);
    let [cx, cy, cz] = split_components(&u.data);
    let sx = engine.forward(&cx);
    let sy = engine.forward(&cy);
    let sz = engine.forward(&cz);
    let mut out = vec![Complex64::default(); u.spec.node_count()];
    engine.for_each_mode(|idx, k| {
        let d = sx[idx] * k[0] + sy[idx] * k[1] + sz[idx] * k[2];
        out[idx] = Complex64::new(-d.im, d.re); // multiply by i
    });
    ScalarField {
        spec: u.spec,
        data: engine.inverse_real(out),
    }
}

/// Spectral curl.
pub fn curl(u: &VectorField) -> VectorField {
    let engine = Engine::new(&u.spec);
    let [cx, cy, cz] = split_components(&u.data);
    let sx = engine.forward(&cx);
    let sy = engine.forward(&cy);
    let sz = engine.forward(&cz);
    let n = u.spec.node_count();
    let mut ox = vec![Complex64::default(); n];
    let mut oy = vec![Complex64::default(); n];
    let mut oz = vec![Complex64::default(); n];
    let i = Complex64::new(0.0, 1.0);
    engine.for_each_mode(|idx, k| {
        ox[idx] = i * (sz[idx] * k[1] - sy[idx] * k[2]);
        oy[idx] = i * (sx[idx] * k[2] - sz[idx] * k[0]);
        oz[idx] = i * (sy[idx] * k[0] - sx[idx] * k[1]);
    });
    VectorField {
        spec: u.spec,
        data: merge_components(
            engine.inverse_real(ox),
            engine.inverse_real(oy),
            engine.inverse_real(oz),
        ),
    }
}

/// Spectral gradient of a scalar field.
pub fn gradient_of_scalar(phi: &ScalarField) -> VectorField {
    let engine = Engine::new(&phi.spec);
    let s = engine.forward(&phi.data);
    let n = phi.spec.node_count();
    let mut ox = vec![Complex64::default(); n];
    let mut oy = vec![Complex64::default(); n];
    let mut oz = vec![Complex64::default(); n];
    let i = Complex64::new(0.0, 1.0);
    engine.for_each_mode(|idx, k| {
        ox[idx] = i * s[idx] * k[0];
        oy[idx] = i * s[idx] * k[1];
        oz[idx] = i * s[idx] * k[2];
    });
    VectorField {
        spec: phi.spec,
        data: merge_components(
            engine.inverse_real(ox),
            engine.inverse_real(oy),
            engine.inverse_real(oz),
        ),
    }
}

/// Boolean mask for the body occupying part of the box.
#[derive(Clone, Debug)]
pub struct Region {
    spec: GridSpec,
    mask: Vec<bool>,
    count: usize,
}

impl Region {
    /// Whole torus.
    pub fn full(spec: GridSpec) -> Self {
        let count = spec.node_count();
        Region {
            spec,
            mask: vec![true; count],
            count,
        }
    }

    /// Explicitly empty body (pure vacuum problem).
    pub fn empty(spec: GridSpec) -> Self {
        Region {
            mask: vec![false; spec.node_count()],
            spec,
            count: 0,
        }
    }

    /// Axis-aligned periodic box: node is inside iff each wrapped offset from
    /// `center` lies in the half-open slab [-half_extent, half_extent).
    pub fn cuboid(spec: GridSpec, center: [f64; 3], half_extents: [f64; 3]) -> Result<Self> {
        let l = spec.edge_length();
        let inside = |p: [f64; 3]| {
            (0..3).all(|a| {
                let d = wrap_offset(p[a] - center[a], l);
                -half_extents[a] <= d && d < half_extents[a]
            })
        };
        Region::from_predicate(spec, inside)
    }

    /// Periodic ball of given radius (inclusive boundary).
    pub fn ball(spec: GridSpec, center: [f64; 3], radius: f64) -> Result<Self> {
        let l = spec.edge_length();
        let r2 = radius * radius;
        let inside = |p: [f64; 3]| {
            let d: f64 = (0..3)
                .map(|a| {
                    let d = wrap_offset(p[a] - center[a], l);
                    d * d
                })
                .sum();
            d <= r2
        };
        Region::from_predicate(spec, inside)
    }

    fn from_predicate(spec: GridSpec, pred: impl Fn([f64; 3]) -> bool) -> Result<Self> {
        let mut mask = Vec::with_capacity(spec.node_count());
        for (_, ix, iy, iz) in spec.nodes() {
            mask.push(pred(spec.position(ix, iy, iz)));
        }
        Region::from_mask(spec, mask)
    }

    /// Build from an explicit mask; rejects empty masks (use [`Region::empty`]).
    pub fn from_mask(spec: GridSpec, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != spec.node_count() {
            return Err(Error::InvalidGrid(format!(
                "mask length {} does not match {} nodes",
                mask.len(),
                spec.node_count()
            )));
        }
        let count = mask.iter().filter(|&&b| b).count();
        if count == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(Region { spec, mask, count })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn node_count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn volume(&self) -> f64 {
        self.count as f64 * self.spec.cell_volume()
    }

    /// Flat indices of the nodes inside the body.
    pub fn interior_indices(&self) -> Vec<usize> {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

fn wrap_offset(d: f64, l: f64) -> f64 {
    let mut d = d % l;
    if d >= l / 2.0 {
        d -= l;
    } else if d < -l / 2.0 {
        d += l;
    }
    d
}

/// Mode description for synthetic band-limited fields: integer frequency,
/// per-component cosine amplitudes and a phase.
#[derive(Clone, Copy, Debug)]
struct CosMode {
    freq: [i64; 3],
    amp: [f64; 3],
    phase: f64,
}

/// Seeded random band-limited vector field: a sum of a uniform offset and
/// `n_modes` random cosine modes with integer frequencies of magnitude at
/// most `max_mode` per axis. Band-limited by construction, so the spectral
/// operators act on it exactly.
pub fn random_band_limited(spec: GridSpec, seed: u64, max_mode: i64, n_modes: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_mode = max_mode.min(spec.resolution() as i64 / 2 - 1).max(1);
    let modes: Vec<CosMode> = (0..n_modes)
        .map(|_| CosMode {
            freq: [
                rng.random_range(-max_mode..=max_mode),
                rng.random_range(-max_mode..=max_mode),
                rng.random_range(-max_mode..=max_mode),
            ],
            amp: [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ],
            phase: rng.random_range(0.0..std::f64::consts::TAU),
        })
        .collect();
    let offset = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ];
    let l = spec.edge_length();
    VectorField::from_fn(spec, |p| {
        let mut v = offset;
        for m in &modes {
            let k = std::f64::consts::TAU / l;
            let arg = k * (m.freq[0] as f64 * p[0] + m.freq[1] as f64 * p[1] + m.freq[2] as f64 * p[2])
                + m.phase;
            let c = arg.cos();
            v = vec3::add(v, vec3::scale(c, m.amp));
        }
        v
    })
}

/// Seeded random band-limited scalar field (same construction).
pub fn random_band_limited_scalar(spec: GridSpec, seed: u64, max_mode: i64, n_modes: usize) -> ScalarField {
    let v = random_band_limited(spec, seed, max_mode, n_modes);
    let data = v.data().iter().map(|x| x[0]).collect();
    ScalarField { spec, data }
}
