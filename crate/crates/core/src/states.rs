//! Closed-form free-particle states (m = ħ = 1): infinite-well modes and 2D
//! Gaussian packets, each in a retarded or an advanced form.
//!
//! Every advanced state is the complex conjugate of the retarded state with
//! the same anchor. For the Gaussians this makes the advanced form depend on
//! `t_anchor - t`, and it turns a solution of `i∂ψ/∂t = -½∇²ψ` into one of
//! `-i∂φ*/∂t = -½∇²φ*`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid, Spectral};

/// Wavenumber of the reference traveling packet.
pub const TRAVELING_K: f64 = 0.4;
/// Width parameter `s` of the reference traveling packet (`s² = 5000`).
pub const TRAVELING_S: f64 = 70.710_678_118_654_76;
/// Default width of the narrow packet standing in for a point event.
pub const DEFAULT_SIGMA_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl SpacetimePoint {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Anchored to initial conditions; obeys `i∂ψ/∂t = -½∇²ψ`.
    Retarded,
    /// Anchored to final conditions; obeys `-i∂φ*/∂t = -½∇²φ*`.
    Advanced,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Retarded => Direction::Advanced,
            Direction::Advanced => Direction::Retarded,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateKind {
    /// `√(2/a) sin(nπx/a) e^{-i n²π² t / 2a²}` on `[0, a]`.
    SquareWellMode { n: u32, a: f64 },
    /// Unit-width (σ = 1) spreading Gaussian anchored at a spacetime point.
    StationaryGaussian2D { anchor: SpacetimePoint },
    /// Galilean-boosted Gaussian; the packet centre moves with velocity `k`.
    TravelingGaussian2D {
        anchor: SpacetimePoint,
        k: [f64; 2],
        s: f64,
    },
    /// Stationary Gaussian rescaled to initial standard deviation `sigma`.
    NarrowGaussian2D { anchor: SpacetimePoint, sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    kind: StateKind,
    direction: Direction,
}

impl StateSpec {
    pub fn new(kind: StateKind, direction: Direction) -> Result<Self> {
        let finite = |p: &SpacetimePoint| p.x.is_finite() && p.y.is_finite() && p.t.is_finite();
        match kind {
            StateKind::SquareWellMode { n, a } => {
                if n == 0 {
                    return Err(Error::Parameter("square-well mode index must be >= 1".into()));
                }
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::Parameter(format!("well length must be positive (got {a})")));
                }
            }
            StateKind::StationaryGaussian2D { anchor } => {
                if !finite(&anchor) {
                    return Err(Error::Parameter("anchor must be finite".into()));
                }
            }
            StateKind::TravelingGaussian2D { anchor, k, s } => {
                if !finite(&anchor) || !k.iter().all(|v| v.is_finite()) {
                    return Err(Error::Parameter("anchor and wave vector must be finite".into()));
                }
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::Parameter(format!("width s must be positive (got {s})")));
                }
            }
            StateKind::NarrowGaussian2D { anchor, sigma } => {
                if !finite(&anchor) {
                    return Err(Error::Parameter("anchor must be finite".into()));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Parameter(format!("sigma_delta must be positive (got {sigma})")));
                }
            }
        }
        Ok(Self { kind, direction })
    }

    pub fn square_well(n: u32, a: f64, direction: Direction) -> Result<Self> {
        Self::new(StateKind::SquareWellMode { n, a }, direction)
    }

    pub fn stationary_gaussian(anchor: SpacetimePoint, direction: Direction) -> Result<Self> {
        Self::new(StateKind::StationaryGaussian2D { anchor }, direction)
    }

    pub fn traveling_gaussian(anchor: SpacetimePoint, k: [f64; 2], s: f64, direction: Direction) -> Result<Self> {
        Self::new(StateKind::TravelingGaussian2D { anchor, k, s }, direction)
    }

    pub fn narrow_gaussian(anchor: SpacetimePoint, sigma: f64, direction: Direction) -> Result<Self> {
        Self::new(StateKind::NarrowGaussian2D { anchor, sigma }, direction)
    }

    pub fn kind(&self) -> &StateKind {
        &self.kind
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Same state with the opposite direction (the complex-conjugate partner).
    pub fn with_direction(&self, direction: Direction) -> Self {
        Self {
            kind: self.kind,
            direction,
        }
    }

    pub fn anchor(&self) -> Option<SpacetimePoint> {
        match self.kind {
            StateKind::SquareWellMode { .. } => None,
            StateKind::StationaryGaussian2D { anchor }
            | StateKind::TravelingGaussian2D { anchor, .. }
            | StateKind::NarrowGaussian2D { anchor, .. } => Some(anchor),
        }
    }

    pub fn dims(&self) -> usize {
        match self.kind {
            StateKind::SquareWellMode { .. } => 1,
            _ => 2,
        }
    }

    /// Evaluates the closed form at `p` (for a well mode, `p.x` is the
    /// coordinate and `p.y` is ignored).
    pub fn eval(&self, p: SpacetimePoint) -> Result<Complex64> {
        let retarded = match self.kind {
            StateKind::SquareWellMode { n, a } => {
                if !(0.0..=a).contains(&p.x) {
                    return Err(Error::Domain(format!(
                        "square-well mode evaluated at x = {} outside [0, {a}]",
                        p.x
                    )));
                }
                let n = n as f64;
                let energy = n * n * PI * PI / (2.0 * a * a);
                Complex64::from_polar((2.0 / a).sqrt() * (n * PI * p.x / a).sin(), -energy * p.t)
            }
            StateKind::StationaryGaussian2D { anchor } => spreading_gaussian(p, anchor, 1.0),
            StateKind::NarrowGaussian2D { anchor, sigma } => spreading_gaussian(p, anchor, sigma),
            StateKind::TravelingGaussian2D { anchor, k, s } => traveling_gaussian(p, anchor, k, s),
        };
        Ok(match self.direction {
            Direction::Retarded => retarded,
            Direction::Advanced => retarded.conj(),
        })
    }
}

/// `(1/(√(2π)σ)) · 2σ²/(2σ² + iτ) · exp(-r²/(4σ² + 2iτ))`, τ = t - t_anchor.
fn spreading_gaussian(p: SpacetimePoint, anchor: SpacetimePoint, sigma: f64) -> Complex64 {
    let tau = p.t - anchor.t;
    let (dx, dy) = (p.x - anchor.x, p.y - anchor.y);
    let two_s2 = 2.0 * sigma * sigma;
    let denom = Complex64::new(two_s2, tau);
    let prefactor = Complex64::new(two_s2 / ((2.0 * PI).sqrt() * sigma), 0.0) / denom;
    prefactor * (-(dx * dx + dy * dy) / (2.0 * denom)).exp()
}

/// `(s/√π) · exp[i(k·Δr - |k|²τ/2) - |Δr - kτ|²/(2s² + 2iτ)] / (s² + iτ)`.
fn traveling_gaussian(p: SpacetimePoint, anchor: SpacetimePoint, k: [f64; 2], s: f64) -> Complex64 {
    let tau = p.t - anchor.t;
    let (dx, dy) = (p.x - anchor.x, p.y - anchor.y);
    let k2 = k[0] * k[0] + k[1] * k[1];
    let (ex, ey) = (dx - k[0] * tau, dy - k[1] * tau);
    let s2 = s * s;
    let denom = Complex64::new(s2, tau);
    let exponent = Complex64::new(0.0, k[0] * dx + k[1] * dy - 0.5 * k2 * tau) - (ex * ex + ey * ey) / (2.0 * denom);
    Complex64::new(s / PI.sqrt(), 0.0) * exponent.exp() / denom
}

pub fn eval_state(spec: &StateSpec, p: SpacetimePoint) -> Result<Complex64> {
    spec.eval(p)
}

/// Samples `spec` at time `t` on every node of `grid`.
pub fn sample_on_grid(spec: &StateSpec, grid: &Grid, t: f64) -> Result<ComplexField> {
    if spec.dims() != grid.dims() {
        return Err(Error::Shape(format!(
            "{}D state sampled on a {}D grid",
            spec.dims(),
            grid.dims()
        )));
    }
    ComplexField::try_from_fn(*grid, |x, y| spec.eval(SpacetimePoint::new(x, y, t)))
}

/// A grid plus a sampling rule suitable for spectral derivatives.
///
/// Well modes vanish at both walls but their periodic continuation on
/// `[0, a)` has a kink at the wall. They are sampled on the doubled box
/// `[0, 2a)` with the odd reflection `f(2a - x) = -f(x)`, which is smooth and
/// periodic and keeps every mode band-limited. Residual norms are then taken
/// over the physical half only.
pub(crate) struct DerivativeFrame {
    grid: Grid,
    /// Well length when the odd reflection is in use.
    reflect: Option<f64>,
    physical: usize,
}

impl DerivativeFrame {
    pub(crate) fn new(specs: &[&StateSpec], grid: &Grid) -> Result<Self> {
        let well = specs.iter().find_map(|s| match s.kind {
            StateKind::SquareWellMode { a, .. } => Some(a),
            _ => None,
        });
        for s in specs {
            if s.dims() != grid.dims() {
                return Err(Error::Shape(format!("{}D state on a {}D grid", s.dims(), grid.dims())));
            }
        }
        match well {
            None => Ok(Self {
                grid: *grid,
                reflect: None,
                physical: grid.len(),
            }),
            Some(a) => {
                let ax = grid.x_axis();
                let all_wells = specs
                    .iter()
                    .all(|s| matches!(s.kind, StateKind::SquareWellMode { a: other, .. } if other == a));
                if !all_wells || ax.min != 0.0 || ax.max != a {
                    return Err(Error::Shape(format!(
                        "well-mode derivatives need every state in the same well and a grid spanning exactly [0, {a}]"
                    )));
                }
                Ok(Self {
                    grid: Grid::new_1d(0.0, 2.0 * a, 2 * ax.n)?,
                    reflect: Some(a),
                    physical: ax.n,
                })
            }
        }
    }

    pub(crate) fn grid(&self) -> &Grid {
        &self.grid
    }

    pub(crate) fn sample(&self, spec: &StateSpec, t: f64) -> Result<ComplexField> {
        match self.reflect {
            None => sample_on_grid(spec, &self.grid, t),
            Some(a) => ComplexField::try_from_fn(self.grid, |x, _| {
                if x <= a {
                    spec.eval(SpacetimePoint::new(x, 0.0, t))
                } else {
                    Ok(-spec.eval(SpacetimePoint::new(2.0 * a - x, 0.0, t))?)
                }
            }),
        }
    }

    /// L² norm of `field` over the physical part of the frame.
    pub(crate) fn l2_norm(&self, field: &ComplexField) -> f64 {
        let mut acc = crate::field::NeumaierSum::default();
        for v in &field.values()[..self.physical] {
            acc.add(v.norm_sqr());
        }
        (acc.value() * self.grid.cell_volume()).sqrt()
    }
}

/// L² norm of the discretised defect of the state's own wave equation:
/// `±i(f(t+dt) - f(t-dt))/(2dt) + ½∇²f(t)`, with `+` for retarded states and
/// `-` for advanced ones.
pub fn schrodinger_residual(spec: &StateSpec, grid: &Grid, t: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive (got {dt})")));
    }
    let frame = DerivativeFrame::new(&[spec], grid)?;
    residual_with(&frame, |tt| frame.sample(spec, tt), spec.direction(), t, dt)
}

pub(crate) fn residual_with(
    frame: &DerivativeFrame,
    sample: impl Fn(f64) -> Result<ComplexField>,
    direction: Direction,
    t: f64,
    dt: f64,
) -> Result<f64> {
    let sign = match direction {
        Direction::Retarded => 1.0,
        Direction::Advanced => -1.0,
    };
    let later = sample(t + dt)?;
    let earlier = sample(t - dt)?;
    let now = sample(t)?;
    let lap = Spectral::new(frame.grid()).laplacian(&now)?;
    let factor = Complex64::new(0.0, sign / (2.0 * dt));
    let values = later
        .values()
        .iter()
        .zip(earlier.values())
        .zip(lap.values())
        .map(|((&a, &b), &l)| factor * (a - b) + 0.5 * l)
        .collect();
    let defect = ComplexField::new(*frame.grid(), values)?;
    Ok(frame.l2_norm(&defect))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ORIGIN: SpacetimePoint = SpacetimePoint::new(0.0, 0.0, 0.0);

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn stationary_gaussian_at_anchor() {
        let psi = StateSpec::stationary_gaussian(ORIGIN, Direction::Retarded).unwrap();
        let v = psi.eval(ORIGIN).unwrap();
        assert!(close(v, Complex64::new((2.0 / PI).sqrt() / 2.0, 0.0), 1e-15));
        assert!((v.re - 0.398_942).abs() < 1e-6);
    }

    #[test]
    fn stationary_gaussian_matches_printed_form() {
        let anchor = SpacetimePoint::new(1.0, -2.0, 3.0);
        let psi = StateSpec::stationary_gaussian(anchor, Direction::Retarded).unwrap();
        let phi = StateSpec::stationary_gaussian(anchor, Direction::Advanced).unwrap();
        let i = Complex64::i();
        for &(x, y, t) in &[(0.3, 0.7, 5.0), (-4.0, 1.0, 0.5), (2.0, -2.0, 3.0)] {
            let r2 = (x - anchor.x) * (x - anchor.x) + (y - anchor.y) * (y - anchor.y);
            let tau = t - anchor.t;
            let ret = (2.0 / PI).sqrt() / (i * tau + 2.0) * (-r2 / (2.0 * i * tau + 4.0)).exp();
            let u = anchor.t - t;
            let adv = (2.0 / PI).sqrt() / (i * u + 2.0) * (-r2 / (2.0 * i * u + 4.0)).exp();
            let p = SpacetimePoint::new(x, y, t);
            assert!(close(psi.eval(p).unwrap(), ret, 1e-15));
            assert!(close(phi.eval(p).unwrap(), adv, 1e-15));
        }
    }

    #[test]
    fn traveling_gaussian_matches_printed_retarded_form() {
        let anchor = SpacetimePoint::new(10.0, 5.0, 2.0);
        let psi = StateSpec::traveling_gaussian(anchor, [TRAVELING_K, 0.0], TRAVELING_S, Direction::Retarded).unwrap();
        let i = Complex64::i();
        for &(x, y, t) in &[(10.0, 5.0, 2.0), (40.0, -3.0, 90.0), (-60.0, 20.0, 300.0)] {
            let (dx, dy, tau) = (x - anchor.x, y - anchor.y, t - anchor.t);
            let num = 50.0
                * (2.0 / PI).sqrt()
                * (0.4 * i * (-0.2 * tau + dx) - ((-0.4 * tau + dx).powi(2) + dy * dy) / (10000.0 + 2.0 * i * tau))
                    .exp();
            let expected = num / (5000.0 + i * tau);
            let got = psi.eval(SpacetimePoint::new(x, y, t)).unwrap();
            assert!(
                close(got, expected, 1e-15 * expected.norm().max(1e-3)),
                "{got} vs {expected}"
            );
        }
        let at_anchor = psi.eval(anchor).unwrap();
        assert!(close(
            at_anchor,
            Complex64::new(50.0 * (2.0 / PI).sqrt() / 5000.0, 0.0),
            1e-16
        ));
    }

    #[test]
    fn square_well_mode_values() {
        let xi1 = StateSpec::square_well(1, 1.0, Direction::Retarded).unwrap();
        let v = xi1.eval(SpacetimePoint::new(0.5, 0.0, 0.0)).unwrap();
        assert!(close(v, Complex64::new(2f64.sqrt(), 0.0), 1e-15));
        let xi2 = StateSpec::square_well(2, 1.0, Direction::Retarded).unwrap();
        let t = 0.37;
        let v = xi2.eval(SpacetimePoint::new(0.25, 0.0, t)).unwrap();
        assert!((v.norm() - 2f64.sqrt()).abs() < 1e-14);
        assert!(close(
            v / v.norm(),
            Complex64::from_polar(1.0, -4.0 * PI * PI * t / 2.0),
            1e-14
        ));
    }

    #[test]
    fn square_well_outside_interval_is_domain_error() {
        let xi = StateSpec::square_well(1, 2.0, Direction::Retarded).unwrap();
        assert!(matches!(
            xi.eval(SpacetimePoint::new(2.5, 0.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            xi.eval(SpacetimePoint::new(-0.1, 0.0, 0.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(StateSpec::square_well(0, 1.0, Direction::Retarded).is_err());
        assert!(StateSpec::square_well(1, -1.0, Direction::Retarded).is_err());
        assert!(StateSpec::narrow_gaussian(ORIGIN, 0.0, Direction::Advanced).is_err());
        assert!(StateSpec::traveling_gaussian(ORIGIN, [0.4, 0.0], -1.0, Direction::Advanced).is_err());
    }

    #[test]
    fn advanced_is_conjugate_of_retarded() {
        let anchor = SpacetimePoint::new(0.0, -60.0, 28.0);
        let specs = [
            StateKind::StationaryGaussian2D { anchor },
            StateKind::NarrowGaussian2D { anchor, sigma: 0.3 },
            StateKind::TravelingGaussian2D {
                anchor,
                k: [0.3, -0.1],
                s: 4.0,
            },
        ];
        for kind in specs {
            let r = StateSpec::new(kind, Direction::Retarded).unwrap();
            let a = StateSpec::new(kind, Direction::Advanced).unwrap();
            for &(x, y, t) in &[(1.0, -55.0, 3.0), (-2.0, -61.0, 27.5)] {
                let p = SpacetimePoint::new(x, y, t);
                assert_eq!(a.eval(p).unwrap(), r.eval(p).unwrap().conj());
            }
        }
    }

    #[test]
    fn narrow_gaussian_with_unit_sigma_is_stationary_gaussian() {
        let a = SpacetimePoint::new(1.0, 2.0, 3.0);
        let n = StateSpec::narrow_gaussian(a, 1.0, Direction::Retarded).unwrap();
        let s = StateSpec::stationary_gaussian(a, Direction::Retarded).unwrap();
        let p = SpacetimePoint::new(2.5, 0.5, 7.0);
        assert!(close(n.eval(p).unwrap(), s.eval(p).unwrap(), 1e-16));
    }

    #[test]
    fn time_mirror_of_stationary_pair() {
        // With coincident positions, φ*(t_f - τ) = ψ(t_i + τ).
        let psi = StateSpec::stationary_gaussian(SpacetimePoint::new(3.0, 1.0, 0.0), Direction::Retarded).unwrap();
        let phi = StateSpec::stationary_gaussian(SpacetimePoint::new(3.0, 1.0, 28.0), Direction::Advanced).unwrap();
        for tau in [0.0, 0.5, 7.0, 14.0, 28.0] {
            for &(x, y) in &[(3.0, 1.0), (0.0, 0.0), (-4.0, 9.0)] {
                let a = phi.eval(SpacetimePoint::new(x, y, 28.0 - tau)).unwrap();
                let b = psi.eval(SpacetimePoint::new(x, y, tau)).unwrap();
                assert!(close(a, b, 1e-12));
            }
        }
    }

    #[test]
    fn sample_rejects_dimension_mismatch() {
        let psi = StateSpec::stationary_gaussian(ORIGIN, Direction::Retarded).unwrap();
        let g1 = Grid::new_1d(-5.0, 5.0, 32).unwrap();
        assert!(matches!(sample_on_grid(&psi, &g1, 0.0), Err(Error::Shape(_))));
        let well = StateSpec::square_well(1, 1.0, Direction::Retarded).unwrap();
        assert!(matches!(
            sample_on_grid(&well, &Grid::square(1.0, 8).unwrap(), 0.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn square_well_norm_is_time_independent() {
        let g = Grid::new_1d(0.0, 1.0, 2048).unwrap();
        let xi2 = StateSpec::square_well(2, 1.0, Direction::Retarded).unwrap();
        for t in [0.0, 0.3, 11.0] {
            let f = sample_on_grid(&xi2, &g, t).unwrap();
            assert!((f.norm_sq() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn well_residual_uses_odd_reflection() {
        let g = Grid::new_1d(0.0, 1.0, 256).unwrap();
        for dir in [Direction::Retarded, Direction::Advanced] {
            let xi = StateSpec::square_well(2, 1.0, dir).unwrap();
            assert!(schrodinger_residual(&xi, &g, 0.4, 1e-4).unwrap() < 1e-4);
        }
        let shifted = Grid::new_1d(0.0, 0.5, 256).unwrap();
        let xi = StateSpec::square_well(1, 1.0, Direction::Retarded).unwrap();
        assert!(matches!(
            schrodinger_residual(&xi, &shifted, 0.0, 1e-3),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn residual_flags_wrong_direction() {
        // A retarded state fails the advanced equation.
        let g = Grid::square(40.0, 128).unwrap();
        let psi = StateSpec::stationary_gaussian(ORIGIN, Direction::Retarded).unwrap();
        let frame = DerivativeFrame::new(&[&psi], &g).unwrap();
        let wrong = residual_with(&frame, |t| sample_on_grid(&psi, &g, t), Direction::Advanced, 2.0, 1e-3).unwrap();
        assert!(wrong > 1e-2);
    }
}
