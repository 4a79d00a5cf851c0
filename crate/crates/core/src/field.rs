//! Uniform periodic grids, sampled complex fields and the spectral operators
//! built on them.
//!
//! Layout is row-major with `y` outer and `x` inner. Node `j` along an axis
//! sits at `min + j * (max - min) / n`; `max` is the periodic wrap point and
//! is never sampled.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One periodic axis of a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::Parameter(format!(
                "axis bounds must be finite with max > min (got [{min}, {max}])"
            )));
        }
        if n < 2 {
            return Err(Error::Parameter(format!("axis needs at least 2 samples (got {n})")));
        }
        Ok(Self { min, max, n })
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.min + j as f64 * self.spacing()
    }

    /// Angular wavenumbers in transform order; the Nyquist bin of an even
    /// axis carries the negative frequency.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        let scale = 2.0 * PI / self.length();
        (0..n)
            .map(|j| {
                let signed = if 2 * j < n { j } else { j - n };
                scale * signed as f64
            })
            .collect()
    }

    /// Largest `|k|` on the lattice.
    pub fn max_wavenumber(&self) -> f64 {
        PI * (self.n / 2) as f64 * 2.0 / self.length()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x: Axis,
    y: Option<Axis>,
}

impl Grid {
    pub fn new_1d(xmin: f64, xmax: f64, nx: usize) -> Result<Self> {
        Ok(Self {
            x: Axis::new(xmin, xmax, nx)?,
            y: None,
        })
    }

    pub fn new_2d(xmin: f64, xmax: f64, nx: usize, ymin: f64, ymax: f64, ny: usize) -> Result<Self> {
        Ok(Self {
            x: Axis::new(xmin, xmax, nx)?,
            y: Some(Axis::new(ymin, ymax, ny)?),
        })
    }

    /// Square 2D grid `[-half, half)²` with `n` nodes per side.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new_2d(-half, half, n, -half, half, n)
    }

    pub fn dims(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn x_axis(&self) -> &Axis {
        &self.x
    }

    pub fn y_axis(&self) -> Option<&Axis> {
        self.y.as_ref()
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }

    /// Rows; 1 for a 1D grid.
    pub fn ny(&self) -> usize {
        self.y.map_or(1, |a| a.n)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.x.spacing()
    }

    pub fn dy(&self) -> f64 {
        self.y.map_or(1.0, |a| a.spacing())
    }

    /// Quadrature weight of one node (`dx` or `dx*dy`).
    pub fn cell_volume(&self) -> f64 {
        self.dx() * self.dy()
    }

    /// Coordinates of node `k` in row-major order; `y` is 0 on a 1D grid.
    pub fn node(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k % self.nx(), k / self.nx());
        (self.x.coord(i), self.y.map_or(0.0, |a| a.coord(j)))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    /// Is `(x, y)` inside the box (the wrap edge counts as inside)?
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x.contains(x) && self.y.is_none_or(|a| a.contains(y))
    }

    /// Largest `|k|²` on the wavenumber lattice.
    pub fn max_wavenumber_sq(&self) -> f64 {
        let kx = self.x.max_wavenumber();
        let ky = self.y.map_or(0.0, |a| a.max_wavenumber());
        kx * kx + ky * ky
    }

    /// Flat indices of the outermost ring of nodes (first/last column, and
    /// first/last row in 2D).
    pub fn boundary_indices(&self) -> Vec<usize> {
        let (nx, ny) = (self.nx(), self.ny());
        if self.dims() == 1 {
            return vec![0, nx - 1];
        }
        let mut out = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            out.push(self.index(i, 0));
            out.push(self.index(i, ny - 1));
        }
        for j in 1..ny - 1 {
            out.push(self.index(0, j));
            out.push(self.index(nx - 1, j));
        }
        out
    }

    pub(crate) fn ensure_same(&self, other: &Grid, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::Shape(format!("{what}: grids differ")));
        }
        Ok(())
    }
}

/// Complex amplitude per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "field has {} values but grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, Complex64::new(0.0, 0.0))
    }

    pub fn constant(grid: Grid, value: Complex64) -> Self {
        Self {
            values: vec![value; grid.len()],
            grid,
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.node(k);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn try_from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> Result<Complex64>) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.node(k);
                f(x, y)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: Complex64, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "add_scaled")?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + c * b)
                .collect(),
        })
    }

    /// `∫|f|² dV`.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = NeumaierSum::default();
        for v in &self.values {
            acc.add(v.norm_sqr());
        }
        acc.value() * self.grid.cell_volume()
    }

    /// `(∫|f|² dV)^½`.
    pub fn l2_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn first_non_finite(&self) -> Option<usize> {
        self.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite()))
    }

    pub(crate) fn ensure_finite(&self, what: &str) -> Result<()> {
        match self.first_non_finite() {
            None => Ok(()),
            Some(k) => {
                let (x, y) = self.grid.node(k);
                Err(Error::Domain(format!(
                    "{what}: non-finite value {} at node {k} (x = {x}, y = {y})",
                    self.values[k]
                )))
            }
        }
    }

    /// Centroid of `|f|` (weights are moduli, not squared moduli).
    pub fn modulus_centroid(&self) -> (f64, f64) {
        let (mut w, mut sx, mut sy) = (NeumaierSum::default(), NeumaierSum::default(), NeumaierSum::default());
        for (k, v) in self.values.iter().enumerate() {
            let (x, y) = self.grid.node(k);
            let m = v.norm();
            w.add(m);
            sx.add(m * x);
            sy.add(m * y);
        }
        (sx.value() / w.value(), sy.value() / w.value())
    }
}

/// Per-node complex vector: one component per grid dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVectorField {
    x: ComplexField,
    y: Option<ComplexField>,
}

impl ComplexVectorField {
    pub fn new(x: ComplexField, y: Option<ComplexField>) -> Result<Self> {
        match (&y, x.grid.dims()) {
            (None, 1) => {}
            (Some(yc), 2) => x.grid.ensure_same(&yc.grid, "vector field components")?,
            _ => {
                return Err(Error::Shape(
                    "vector field needs exactly one component per grid dimension".into(),
                ))
            }
        }
        Ok(Self { x, y })
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn x(&self) -> &ComplexField {
        &self.x
    }

    pub fn y(&self) -> Option<&ComplexField> {
        self.y.as_ref()
    }

    pub fn components(&self) -> impl Iterator<Item = &ComplexField> {
        std::iter::once(&self.x).chain(self.y.as_ref())
    }
}

/// Compensated accumulator with a fixed summation order.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Riemann/midpoint quadrature `Σ f · dV` over the periodic grid.
pub fn integrate(field: &ComplexField) -> Result<Complex64> {
    field.ensure_finite("integrate")?;
    let (mut re, mut im) = (NeumaierSum::default(), NeumaierSum::default());
    for v in &field.values {
        re.add(v.re);
        im.add(v.im);
    }
    Ok(Complex64::new(re.value(), im.value()) * field.grid.cell_volume())
}

pub fn pointwise_product(a: &ComplexField, b: &ComplexField) -> Result<ComplexField> {
    a.grid.ensure_same(&b.grid, "pointwise_product")?;
    Ok(ComplexField {
        grid: a.grid,
        values: a.values.iter().zip(&b.values).map(|(&p, &q)| p * q).collect(),
    })
}

/// Reusable forward/inverse transforms for one grid.
pub struct Spectral {
    grid: Grid,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Option<Arc<dyn Fft<f64>>>,
    inv_y: Option<Arc<dyn Fft<f64>>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx());
        let inv_x = planner.plan_fft_inverse(grid.nx());
        let (fwd_y, inv_y) = match grid.y_axis() {
            Some(a) => (Some(planner.plan_fft_forward(a.n)), Some(planner.plan_fft_inverse(a.n))),
            None => (None, None),
        };
        let scratch_len = [
            fwd_x.get_inplace_scratch_len(),
            inv_x.get_inplace_scratch_len(),
            fwd_y.as_ref().map_or(0, |f| f.get_inplace_scratch_len()),
            inv_y.as_ref().map_or(0, |f| f.get_inplace_scratch_len()),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        Self {
            grid: *grid,
            kx: grid.x_axis().wavenumbers(),
            ky: grid.y_axis().map_or_else(|| vec![0.0], |a| a.wavenumbers()),
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transposed: vec![Complex64::new(0.0, 0.0); if grid.dims() == 2 { grid.len() } else { 0 }],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Wavenumbers along x, in transform order.
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    /// Wavenumbers along y, in transform order (`[0.0]` on a 1D grid).
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// `|k|²` per transform-order node.
    pub fn k_squared(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.len());
        for &ky in &self.ky {
            for &kx in &self.kx {
                out.push(kx * kx + ky * ky);
            }
        }
        out
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    /// Inverse transform including the `1/N` normalisation.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.transform(data, false);
        let s = 1.0 / self.grid.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn transform(&mut self, data: &mut [Complex64], forward: bool) {
        debug_assert_eq!(data.len(), self.grid.len());
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let row = if forward { &self.fwd_x } else { &self.inv_x };
        row.process_with_scratch(data, &mut self.scratch);
        let col = if forward { &self.fwd_y } else { &self.inv_y };
        if let Some(col) = col {
            transpose(data, &mut self.transposed, nx, ny);
            col.process_with_scratch(&mut self.transposed, &mut self.scratch);
            transpose(&self.transposed, data, ny, nx);
        }
    }

    /// Multiplies the spectrum of `data` by `multiplier(kx, ky)` in place.
    pub fn apply_multiplier(&mut self, data: &mut [Complex64], multiplier: impl Fn(f64, f64) -> Complex64) {
        self.forward(data);
        let nx = self.grid.nx();
        for (j, &ky) in self.ky.iter().enumerate() {
            for (i, &kx) in self.kx.iter().enumerate() {
                data[j * nx + i] *= multiplier(kx, ky);
            }
        }
        self.inverse(data);
    }

    pub fn laplacian(&mut self, field: &ComplexField) -> Result<ComplexField> {
        self.check(field, "spectral_laplacian")?;
        let mut data = field.values.clone();
        self.apply_multiplier(&mut data, |kx, ky| Complex64::new(-(kx * kx + ky * ky), 0.0));
        Ok(ComplexField {
            grid: self.grid,
            values: data,
        })
    }

    pub fn gradient(&mut self, field: &ComplexField) -> Result<ComplexVectorField> {
        self.check(field, "spectral_gradient")?;
        let mut spectrum = field.values.clone();
        self.forward(&mut spectrum);
        let dx = self.multiply_spectrum(&spectrum, |kx, _| Complex64::new(0.0, kx));
        let dy = (self.grid.dims() == 2).then(|| self.multiply_spectrum(&spectrum, |_, ky| Complex64::new(0.0, ky)));
        Ok(ComplexVectorField {
            x: ComplexField {
                grid: self.grid,
                values: dx,
            },
            y: dy.map(|values| ComplexField {
                grid: self.grid,
                values,
            }),
        })
    }

    pub fn divergence(&mut self, vf: &ComplexVectorField) -> Result<ComplexField> {
        vf.grid().ensure_same(&self.grid, "divergence")?;
        for c in vf.components() {
            c.ensure_finite("divergence")?;
        }
        let mut total = vf.x.values.clone();
        self.forward(&mut total);
        let nx = self.grid.nx();
        for (j, _) in self.ky.iter().enumerate() {
            for (i, &kx) in self.kx.iter().enumerate() {
                total[j * nx + i] *= Complex64::new(0.0, kx);
            }
        }
        if let Some(yc) = &vf.y {
            let mut spec_y = yc.values.clone();
            self.forward(&mut spec_y);
            for (j, &ky) in self.ky.iter().enumerate() {
                for i in 0..nx {
                    let k = j * nx + i;
                    total[k] += Complex64::new(0.0, ky) * spec_y[k];
                }
            }
        }
        self.inverse(&mut total);
        Ok(ComplexField {
            grid: self.grid,
            values: total,
        })
    }

    fn multiply_spectrum(&mut self, spectrum: &[Complex64], m: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let nx = self.grid.nx();
        let mut out = spectrum.to_vec();
        for (j, &ky) in self.ky.iter().enumerate() {
            for (i, &kx) in self.kx.iter().enumerate() {
                out[j * nx + i] *= m(kx, ky);
            }
        }
        self.inverse(&mut out);
        out
    }

    fn check(&self, field: &ComplexField, what: &str) -> Result<()> {
        field.grid.ensure_same(&self.grid, what)?;
        field.ensure_finite(what)
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    const BLOCK: usize = 16;
    for jb in (0..rows).step_by(BLOCK) {
        for ib in (0..cols).step_by(BLOCK) {
            for j in jb..(jb + BLOCK).min(rows) {
                for i in ib..(ib + BLOCK).min(cols) {
                    dst[i * rows + j] = src[j * cols + i];
                }
            }
        }
    }
}

/// `∇²f` via `-(k²)` in spectral space.
pub fn spectral_laplacian(field: &ComplexField) -> Result<ComplexField> {
    Spectral::new(field.grid()).laplacian(field)
}

/// `∇f` via `i·k` per axis.
pub fn spectral_gradient(field: &ComplexField) -> Result<ComplexVectorField> {
    Spectral::new(field.grid()).gradient(field)
}

pub fn divergence(vf: &ComplexVectorField) -> Result<ComplexField> {
    Spectral::new(vf.grid()).divergence(vf)
}
