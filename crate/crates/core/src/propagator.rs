//! Strang split-step propagation with optional barrier and absorbing
//! potentials.
//!
//! One step is `U = K(dt/2) · P(dt) · K(dt/2)`, where `K` is the kinetic
//! phase `e^{-i dt k²/2}` applied in spectral space and `P = e^{-i dt V}` in
//! real space. A retarded field moves forward with `ψ(t + dt) = U ψ(t)`. An
//! advanced field is anchored at its final time and moves backward with
//! `φ*(t - dt) = U φ*(t)`. For real `V` this is exactly the advanced
//! equation, and because `U` is symmetric, `∫ φ* ψ` is conserved between a
//! forward retarded and a backward advanced field under the same potential,
//! absorbers included.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, Spectral};
use crate::states::Direction;

/// Default height of an obstacle barrier.
pub const DEFAULT_BARRIER_STRENGTH: f64 = 1.0e3;

/// Complex potential per node: `Re V ≥ 0` is a barrier, `Im V ≤ 0` absorbs.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    grid: Grid,
    values: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcMode {
    Barrier,
    Absorber,
}

/// Radial strength profile across an arc's thickness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcProfile {
    /// Constant strength over the whole thickness.
    Flat,
    /// `V₀ ((r - r_inner)/w)²`: zero on the inner edge, `V₀` on the outer.
    QuadraticRamp,
}

/// Annular arc `|‖r‖ - radius| ≤ thickness/2`, `θ ∈ [theta_start, theta_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSpec {
    pub radius: f64,
    pub theta_start: f64,
    pub theta_end: f64,
    pub thickness: f64,
    pub mode: ArcMode,
    pub strength: f64,
    pub profile: ArcProfile,
}

impl ArcSpec {
    /// Is the polar angle `theta` (in `[0, 2π)`) inside the arc?
    pub fn covers_angle(&self, theta: f64) -> bool {
        theta >= self.theta_start && theta <= self.theta_end
    }

    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Parameter(format!(
                "arc radius must be positive (got {})",
                self.radius
            )));
        }
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(Error::Parameter(format!(
                "arc thickness must be positive (got {})",
                self.thickness
            )));
        }
        if !(self.strength >= 0.0 && self.strength.is_finite()) {
            return Err(Error::Parameter(format!(
                "arc strength must be non-negative (got {})",
                self.strength
            )));
        }
        if self.theta_start == self.theta_end {
            return Err(Error::Parameter("arc angular interval is degenerate".into()));
        }
        if !(0.0..TAU).contains(&self.theta_start) || !(self.theta_start < self.theta_end && self.theta_end <= TAU) {
            return Err(Error::Parameter(format!(
                "arc angles must satisfy 0 <= start < end <= 2π (got [{}, {}])",
                self.theta_start, self.theta_end
            )));
        }
        Ok(())
    }
}

impl Potential {
    pub fn zero(grid: Grid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "potential has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values
            .iter()
            .position(|v| !(v.re.is_finite() && v.im.is_finite()) || v.re < 0.0 || v.im > 0.0)
        {
            return Err(Error::Parameter(format!(
                "potential at node {k} is {} (need finite, Re >= 0, Im <= 0)",
                values[k]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Constant real potential, useful for phase checks.
    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(grid, vec![Complex64::new(value, 0.0); grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Node-wise sum, e.g. an obstacle plus an absorber.
    pub fn combined(&self, other: &Potential) -> Result<Self> {
        self.grid.ensure_same(&other.grid, "potential sum")?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }
}

/// Polar angle of `(x, y)` mapped into `[0, 2π)`.
pub fn polar_angle(x: f64, y: f64) -> f64 {
    let theta = y.atan2(x);
    if theta < 0.0 {
        theta + TAU
    } else {
        theta
    }
}

/// Builds the potential of an annular arc centred on the origin.
pub fn build_arc_potential(grid: &Grid, arc: &ArcSpec) -> Result<Potential> {
    if grid.dims() != 2 {
        return Err(Error::Shape("arc potentials need a 2D grid".into()));
    }
    arc.validate()?;
    let half = arc.thickness / 2.0;
    let inner = arc.radius - half;
    let values = (0..grid.len())
        .map(|k| {
            let (x, y) = grid.node(k);
            let r = x.hypot(y);
            if (r - arc.radius).abs() > half || !arc.covers_angle(polar_angle(x, y)) {
                return Complex64::new(0.0, 0.0);
            }
            let v = match arc.profile {
                ArcProfile::Flat => arc.strength,
                ArcProfile::QuadraticRamp => {
                    let u = (r - inner) / arc.thickness;
                    arc.strength * u * u
                }
            };
            match arc.mode {
                ArcMode::Barrier => Complex64::new(v, 0.0),
                ArcMode::Absorber => Complex64::new(0.0, -v),
            }
        })
        .collect();
    Ok(Potential { grid: *grid, values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    pub dt: f64,
    pub steps: usize,
    pub direction: Direction,
    pub snapshot_stride: usize,
    /// Time attached to the input field.
    pub start_time: f64,
}

impl EvolutionParams {
    pub fn new(dt: f64, steps: usize, direction: Direction) -> Self {
        Self {
            dt,
            steps,
            direction,
            snapshot_stride: 1,
            start_time: 0.0,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn starting_at(mut self, t: f64) -> Self {
        self.start_time = t;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Parameter("evolution needs at least one step".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Parameter("snapshot stride must be >= 1".into()));
        }
        if !self.start_time.is_finite() {
            return Err(Error::Parameter("start time must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub field: ComplexField,
}

/// Precomputed split-step operator for one grid, potential and step size.
pub struct Propagator {
    spectral: Spectral,
    half_kinetic: Vec<Complex64>,
    potential_phase: Vec<Complex64>,
    dt: f64,
}

impl Propagator {
    pub fn new(pot: &Potential, dt: f64) -> Result<Self> {
        let grid = *pot.grid();
        check_dt(&grid, dt)?;
        let spectral = Spectral::new(&grid);
        let half_kinetic = spectral
            .k_squared()
            .into_iter()
            .map(|k2| Complex64::from_polar(1.0, -0.25 * dt * k2))
            .collect();
        let potential_phase = pot
            .values()
            .iter()
            .map(|&v| (Complex64::new(0.0, -dt) * v).exp())
            .collect();
        Ok(Self {
            spectral,
            half_kinetic,
            potential_phase,
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Grid {
        self.spectral.grid()
    }

    /// Applies one step in place.
    pub fn apply(&mut self, data: &mut [Complex64]) {
        self.spectral.forward(data);
        multiply(data, &self.half_kinetic);
        self.spectral.inverse(data);
        multiply(data, &self.potential_phase);
        self.spectral.forward(data);
        multiply(data, &self.half_kinetic);
        self.spectral.inverse(data);
    }

    /// Applies one step in place and adds the norm removed by the absorbing
    /// part of the potential to `losses[region[k]]` for each node `k`.
    /// Region 0 is not tallied.
    pub fn apply_tallied(&mut self, data: &mut [Complex64], region: &[usize], losses: &mut [f64]) {
        let dv = self.grid().cell_volume();
        self.spectral.forward(data);
        multiply(data, &self.half_kinetic);
        self.spectral.inverse(data);
        for ((v, m), &r) in data.iter_mut().zip(&self.potential_phase).zip(region) {
            let before = v.norm_sqr();
            *v *= m;
            if r != 0 {
                losses[r] += (before - v.norm_sqr()) * dv;
            }
        }
        self.spectral.forward(data);
        multiply(data, &self.half_kinetic);
        self.spectral.inverse(data);
    }

    pub fn step(&mut self, field: &ComplexField) -> Result<ComplexField> {
        self.grid().ensure_same(field.grid(), "split-step")?;
        let mut data = field.values().to_vec();
        self.apply(&mut data);
        let out = ComplexField::new(*field.grid(), data)?;
        out.ensure_finite("split-step result")?;
        Ok(out)
    }
}

fn multiply(data: &mut [Complex64], by: &[Complex64]) {
    for (v, m) in data.iter_mut().zip(by) {
        *v *= m;
    }
}

fn check_dt(grid: &Grid, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive (got {dt})")));
    }
    let phase = dt * grid.max_wavenumber_sq() / 2.0;
    if phase >= PI {
        return Err(Error::Parameter(format!(
            "dt = {dt} gives a kinetic phase of {phase:.3} rad per step at the largest wavenumber (must stay below π)"
        )));
    }
    Ok(())
}

/// One step of length `dt`: forward in time for a retarded field, backward
/// in time for an advanced one. Both apply the same operator.
pub fn splitstep_step(field: &ComplexField, pot: &Potential, dt: f64, direction: Direction) -> Result<ComplexField> {
    let _ = direction;
    field.grid().ensure_same(pot.grid(), "field and potential")?;
    Propagator::new(pot, dt)?.step(field)
}

/// Iterates the split step and records snapshots every `snapshot_stride`
/// steps, always including the first and last. Advanced snapshots carry
/// decreasing times.
pub fn evolve(field: &ComplexField, pot: &Potential, params: &EvolutionParams) -> Result<Vec<Snapshot>> {
    params.validate()?;
    field.grid().ensure_same(pot.grid(), "field and potential")?;
    field.ensure_finite("initial field")?;
    let mut prop = Propagator::new(pot, params.dt)?;
    let sign = match params.direction {
        Direction::Retarded => 1.0,
        Direction::Advanced => -1.0,
    };
    let time_at = |step: usize| params.start_time + sign * params.dt * step as f64;
    let mut data = field.values().to_vec();
    let mut out = vec![Snapshot {
        step: 0,
        time: time_at(0),
        field: field.clone(),
    }];
    for step in 1..=params.steps {
        prop.apply(&mut data);
        if step % params.snapshot_stride == 0 || step == params.steps {
            let snap = ComplexField::new(*field.grid(), data.clone())?;
            snap.ensure_finite(&format!("field after step {step}"))?;
            out.push(Snapshot {
                step,
                time: time_at(step),
                field: snap,
            });
        }
    }
    Ok(out)
}
