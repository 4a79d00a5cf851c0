//! Transition amplitude density `ρ_s = φ*ψ`, its current
//! `j_s = (φ*∇ψ - ψ∇φ*)/2i`, the conserved amplitude `A_s = ∫ρ_s` and the
//! Born-rule limit of a point-like final state.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{integrate, pointwise_product, ComplexField, ComplexVectorField, Grid, NeumaierSum, Spectral};
use crate::states::{sample_on_grid, DerivativeFrame, Direction, SpacetimePoint, StateSpec};

/// Largest `|ρ_s|` tolerated on the outermost ring of a 2D grid.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// Default time step for centred time differences.
pub const DEFAULT_RESIDUAL_DT: f64 = 1e-3;

pub fn amplitude_density(psi: &ComplexField, phi_star: &ComplexField) -> Result<ComplexField> {
    pointwise_product(phi_star, psi)
}

pub fn current_density(psi: &ComplexField, phi_star: &ComplexField) -> Result<ComplexVectorField> {
    psi.grid().ensure_same(phi_star.grid(), "current density")?;
    let mut spectral = Spectral::new(psi.grid());
    current_with(&mut spectral, psi, phi_star)
}

fn current_with(spectral: &mut Spectral, psi: &ComplexField, phi: &ComplexField) -> Result<ComplexVectorField> {
    let grad_psi = spectral.gradient(psi)?;
    let grad_phi = spectral.gradient(phi)?;
    let half_over_i = Complex64::new(0.0, -0.5);
    let component = |dpsi: &ComplexField, dphi: &ComplexField| {
        let values = (0..psi.values().len())
            .map(|k| half_over_i * (phi.values()[k] * dpsi.values()[k] - psi.values()[k] * dphi.values()[k]))
            .collect();
        ComplexField::new(*psi.grid(), values)
    };
    let jx = component(grad_psi.x(), grad_phi.x())?;
    let jy = match (grad_psi.y(), grad_phi.y()) {
        (Some(a), Some(b)) => Some(component(a, b)?),
        _ => None,
    };
    ComplexVectorField::new(jx, jy)
}

/// `A_s` sampled at several times and summarised.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub amplitude_samples: Vec<(f64, Complex64)>,
    /// Mean of the samples.
    pub amplitude: Complex64,
    /// `|amplitude|²`.
    pub probability: f64,
    /// `max_j |A_s(t_j) - amplitude|`.
    pub drift: f64,
    pub continuity_residuals: Vec<(f64, f64)>,
}

impl TransitionRecord {
    /// Builds a record from amplitude samples (at least three distinct times).
    pub fn from_samples(samples: Vec<(f64, Complex64)>) -> Result<Self> {
        let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        if times.len() < 3 {
            return Err(Error::Parameter(format!(
                "need at least 3 distinct sample times (got {})",
                times.len()
            )));
        }
        if let Some((t, a)) = samples
            .iter()
            .find(|(t, a)| !(t.is_finite() && a.re.is_finite() && a.im.is_finite()))
        {
            return Err(Error::Domain(format!("non-finite amplitude {a} at t = {t}")));
        }
        let (mut re, mut im) = (NeumaierSum::default(), NeumaierSum::default());
        for (_, a) in &samples {
            re.add(a.re);
            im.add(a.im);
        }
        let n = samples.len() as f64;
        let amplitude = Complex64::new(re.value() / n, im.value() / n);
        let drift = samples.iter().map(|(_, a)| (a - amplitude).norm()).fold(0.0, f64::max);
        Ok(Self {
            amplitude_samples: samples,
            amplitude,
            probability: amplitude.norm_sqr(),
            drift,
            continuity_residuals: Vec::new(),
        })
    }

    /// Drift relative to `|A_s|`, floored at 1e-12 for vanishing amplitudes.
    pub fn relative_drift(&self) -> f64 {
        self.drift / self.amplitude.norm().max(1e-12)
    }

    pub fn max_continuity_residual(&self) -> Option<f64> {
        self.continuity_residuals.iter().map(|r| r.1).reduce(f64::max)
    }
}

fn check_pair(psi: &StateSpec, phi: &StateSpec, grid: &Grid) -> Result<()> {
    if psi.direction() != Direction::Retarded || phi.direction() != Direction::Advanced {
        return Err(Error::Parameter(
            "expected a retarded initial state and an advanced final state".into(),
        ));
    }
    for s in [psi, phi] {
        if s.dims() != grid.dims() {
            return Err(Error::Shape(format!("{}D state on a {}D grid", s.dims(), grid.dims())));
        }
    }
    Ok(())
}

/// Rejects a density that is not negligible on the edge of a 2D box.
pub fn check_support(rho: &ComplexField, t: f64) -> Result<()> {
    let grid = rho.grid();
    if grid.dims() != 2 {
        return Ok(());
    }
    let (k, worst) = grid
        .boundary_indices()
        .into_iter()
        .map(|k| (k, rho.values()[k].norm()))
        .fold((0, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
    if worst > BOUNDARY_TOLERANCE {
        let (x, y) = grid.node(k);
        return Err(Error::Truncation {
            time: t,
            detail: format!("|rho_s| = {worst:.3e} at boundary node ({x}, {y}) exceeds {BOUNDARY_TOLERANCE:e}"),
        });
    }
    Ok(())
}

/// Evaluates `A_s(t) = ∫ φ*ψ` at each sample time.
pub fn transition_amplitude(
    psi_spec: &StateSpec,
    phi_spec: &StateSpec,
    grid: &Grid,
    sample_times: &[f64],
) -> Result<TransitionRecord> {
    Ok(amplitude_series(psi_spec, phi_spec, grid, sample_times)?.0)
}

/// Like [`transition_amplitude`] but also returns `ρ_s` at each sample time.
pub fn amplitude_series(
    psi_spec: &StateSpec,
    phi_spec: &StateSpec,
    grid: &Grid,
    sample_times: &[f64],
) -> Result<(TransitionRecord, Vec<ComplexField>)> {
    check_pair(psi_spec, phi_spec, grid)?;
    if let (Some(a), Some(b)) = (psi_spec.anchor(), phi_spec.anchor()) {
        let (lo, hi) = (a.t.min(b.t), a.t.max(b.t));
        if let Some(t) = sample_times.iter().find(|t| !(lo..=hi).contains(*t)) {
            return Err(Error::Parameter(format!("sample time {t} lies outside [{lo}, {hi}]")));
        }
    }
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut densities = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let rho = amplitude_density(&sample_on_grid(psi_spec, grid, t)?, &sample_on_grid(phi_spec, grid, t)?)?;
        samples.push((t, checked_integral(&rho, t)?));
        densities.push(rho);
    }
    Ok((TransitionRecord::from_samples(samples)?, densities))
}

/// `∫ρ_s` after checking that `ρ_s` is negligible on the box edge.
pub fn checked_integral(rho: &ComplexField, t: f64) -> Result<Complex64> {
    check_support(rho, t)?;
    integrate(rho)
}

/// Closed-form `A_s` between unit-width stationary Gaussians emitted at
/// `source` and absorbed at `detector`: `4/(4 + iT) · exp(-R²/(8 + 2iT))`.
pub fn stationary_pair_amplitude(source: SpacetimePoint, detector: SpacetimePoint) -> Complex64 {
    let span = detector.t - source.t;
    let r2 = (detector.x - source.x).powi(2) + (detector.y - source.y).powi(2);
    let denom = Complex64::new(8.0, 2.0 * span);
    Complex64::new(4.0, 0.0) / Complex64::new(4.0, span) * (-r2 / denom).exp()
}

/// L² norm of `∂ρ_s/∂t + ∇·j_s` at `t`, with a centred difference in time
/// and spectral derivatives in space.
pub fn continuity_residual(psi_spec: &StateSpec, phi_spec: &StateSpec, grid: &Grid, t: f64, dt: f64) -> Result<f64> {
    check_pair(psi_spec, phi_spec, grid)?;
    let frame = DerivativeFrame::new(&[psi_spec, phi_spec], grid)?;
    continuity_in_frame(
        &frame,
        |tt| frame.sample(psi_spec, tt),
        |tt| frame.sample(phi_spec, tt),
        t,
        dt,
    )
}

/// Same residual for arbitrary samplers on a periodic 2D grid, e.g.
/// perturbed or numerically evolved states.
pub fn continuity_residual_from(
    grid: &Grid,
    psi_at: impl Fn(f64) -> Result<ComplexField>,
    phi_at: impl Fn(f64) -> Result<ComplexField>,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if grid.dims() != 2 {
        return Err(Error::Shape("sampler-based residuals need a 2D grid".into()));
    }
    let probe = StateSpec::stationary_gaussian(SpacetimePoint::new(0.0, 0.0, 0.0), Direction::Retarded)?;
    let frame = DerivativeFrame::new(&[&probe], grid)?;
    continuity_in_frame(&frame, psi_at, phi_at, t, dt)
}

fn continuity_in_frame(
    frame: &DerivativeFrame,
    psi_at: impl Fn(f64) -> Result<ComplexField>,
    phi_at: impl Fn(f64) -> Result<ComplexField>,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter(format!("dt must be positive (got {dt})")));
    }
    let rho_at = |tt: f64| amplitude_density(&psi_at(tt)?, &phi_at(tt)?);
    let later = rho_at(t + dt)?;
    let earlier = rho_at(t - dt)?;
    let mut spectral = Spectral::new(frame.grid());
    let j = current_with(&mut spectral, &psi_at(t)?, &phi_at(t)?)?;
    let div = spectral.divergence(&j)?;
    let inv = 1.0 / (2.0 * dt);
    let values = (0..div.values().len())
        .map(|k| (later.values()[k] - earlier.values()[k]) * inv + div.values()[k])
        .collect();
    Ok(frame.l2_norm(&ComplexField::new(*frame.grid(), values)?))
}

/// `transition_amplitude` plus continuity residuals at the given times.
pub fn transition_record_with_continuity(
    psi_spec: &StateSpec,
    phi_spec: &StateSpec,
    grid: &Grid,
    sample_times: &[f64],
    residual_times: &[f64],
    dt: f64,
) -> Result<TransitionRecord> {
    let mut record = transition_amplitude(psi_spec, phi_spec, grid, sample_times)?;
    for &t in residual_times {
        record
            .continuity_residuals
            .push((t, continuity_residual(psi_spec, phi_spec, grid, t, dt)?));
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornStep {
    pub sigma_delta: f64,
    /// `∫|φ*|²|ψ|² / ∫|φ*|²` at the event time.
    pub estimate: f64,
    /// `|estimate - |ψ(event)|²|`.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BornReduction {
    /// `|ψ(event)|²`.
    pub target: f64,
    pub steps: Vec<BornStep>,
    /// Richardson extrapolation of the last two estimates to zero width,
    /// assuming an `O(σ²)` leading error.
    pub extrapolated: f64,
}

impl BornReduction {
    pub fn strictly_decreasing(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].discrepancy < w[0].discrepancy)
    }
}

/// Replaces the point-like final state by ever narrower advanced Gaussians
/// centred on `event` and checks that `∫ρ_s* ρ_s` approaches `|ψ(event)|²`.
pub fn born_rule_reduction(
    psi_spec: &StateSpec,
    event: SpacetimePoint,
    sigma_deltas: &[f64],
    grid: &Grid,
) -> Result<BornReduction> {
    if psi_spec.direction() != Direction::Retarded || psi_spec.dims() != 2 || grid.dims() != 2 {
        return Err(Error::Parameter(
            "Born reduction needs a retarded 2D state on a 2D grid".into(),
        ));
    }
    if sigma_deltas.len() < 2 {
        return Err(Error::Parameter("need at least two widths".into()));
    }
    if !sigma_deltas.iter().all(|s| *s > 0.0 && s.is_finite()) || !sigma_deltas.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::Parameter(
            "widths must be positive and strictly decreasing".into(),
        ));
    }
    let finest = *sigma_deltas.last().unwrap_or(&0.0);
    let resolution = grid.dx().max(grid.dy());
    if finest < 2.0 * resolution {
        return Err(Error::Resolution(format!(
            "sigma_delta = {finest} is below two grid spacings ({})",
            2.0 * resolution
        )));
    }
    let margin = 6.0 * sigma_deltas[0];
    let (ax, ay) = (grid.x_axis(), grid.y_axis().expect("2D grid"));
    if event.x - margin < ax.min || event.x + margin > ax.max || event.y - margin < ay.min || event.y + margin > ay.max
    {
        return Err(Error::Truncation {
            time: event.t,
            detail: format!(
                "event ({}, {}) is not at least {margin} inside the grid box",
                event.x, event.y
            ),
        });
    }
    let target = psi_spec.eval(event)?.norm_sqr();
    let psi_density = sample_on_grid(psi_spec, grid, event.t)?.map(|v| Complex64::new(v.norm_sqr(), 0.0));
    let mut steps = Vec::with_capacity(sigma_deltas.len());
    for &sigma in sigma_deltas {
        let phi = StateSpec::narrow_gaussian(event, sigma, Direction::Advanced)?;
        let phi_density = sample_on_grid(&phi, grid, event.t)?.map(|v| Complex64::new(v.norm_sqr(), 0.0));
        let overlap = integrate(&pointwise_product(&phi_density, &psi_density)?)?.re;
        let estimate = overlap / integrate(&phi_density)?.re;
        steps.push(BornStep {
            sigma_delta: sigma,
            estimate,
            discrepancy: (estimate - target).abs(),
        });
    }
    let (big, small) = (steps[steps.len() - 2], steps[steps.len() - 1]);
    let r2 = (big.sigma_delta / small.sigma_delta).powi(2);
    let extrapolated = (r2 * small.estimate - big.estimate) / (r2 - 1.0);
    Ok(BornReduction {
        target,
        steps,
        extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    const SOURCE: SpacetimePoint = SpacetimePoint::new(0.0, 0.0, 0.0);
    const DETECTOR: SpacetimePoint = SpacetimePoint::new(0.0, -60.0, 28.0);

    fn pair() -> (StateSpec, StateSpec) {
        (
            StateSpec::stationary_gaussian(SOURCE, Direction::Retarded).unwrap(),
            StateSpec::stationary_gaussian(DETECTOR, Direction::Advanced).unwrap(),
        )
    }

    fn well(n: u32, dir: Direction) -> StateSpec {
        StateSpec::square_well(n, 1.0, dir).unwrap()
    }

    #[test]
    fn density_of_matching_well_modes() {
        let g = Grid::new_1d(0.0, 1.0, 256).unwrap();
        let psi = sample_on_grid(&well(1, Direction::Retarded), &g, 0.0).unwrap();
        let phi = sample_on_grid(&well(1, Direction::Advanced), &g, 0.0).unwrap();
        let rho = amplitude_density(&psi, &phi).unwrap();
        for (k, v) in rho.values().iter().enumerate() {
            let (x, _) = g.node(k);
            assert!((v - Complex64::new(2.0 * (PI * x).sin().powi(2), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn born_density_is_real_and_non_negative() {
        let g = Grid::square(20.0, 64).unwrap();
        let spec =
            StateSpec::traveling_gaussian(SpacetimePoint::new(1.0, 2.0, 0.0), [0.5, 0.3], 3.0, Direction::Retarded)
                .unwrap();
        let psi = sample_on_grid(&spec, &g, 1.5).unwrap();
        let rho = amplitude_density(&psi, &psi.conj()).unwrap();
        assert!(rho.values().iter().all(|v| v.im.abs() <= 1e-14 && v.re >= 0.0));
    }

    #[test]
    fn plane_wave_current() {
        let g = Grid::square(10.0, 32).unwrap();
        let k = TAU * 3.0 / 20.0;
        let psi = ComplexField::from_fn(g, |x, _| Complex64::from_polar(1.0, k * x));
        let j = current_density(&psi, &psi.conj()).unwrap();
        assert!(j
            .x()
            .values()
            .iter()
            .all(|v| (v - Complex64::new(k, 0.0)).norm() < 1e-12));
        assert!(j.y().unwrap().values().iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn real_field_carries_no_current() {
        let g = Grid::square(10.0, 64).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new((-(x * x + y * y) / 4.0).exp(), 0.0));
        let j = current_density(&f, &f).unwrap();
        for c in j.components() {
            assert!(c.max_abs() < 1e-14);
        }
    }

    #[test]
    fn midpoint_density_and_current() {
        let (psi, phi) = pair();
        let g = Grid::square(80.0, 256).unwrap();
        let p = sample_on_grid(&psi, &g, 14.0).unwrap();
        let f = sample_on_grid(&phi, &g, 14.0).unwrap();
        let (cx, cy) = amplitude_density(&p, &f).unwrap().modulus_centroid();
        assert!(cx.abs() < 1.0 && (cy + 30.0).abs() < 1.0, "({cx}, {cy})");
        let j = current_density(&p, &f).unwrap();
        assert!(integrate(j.y().unwrap()).unwrap().re < 0.0);
    }

    #[test]
    fn matching_well_modes_have_unit_amplitude() {
        let g = Grid::new_1d(0.0, 1.0, 2048).unwrap();
        let rec = transition_amplitude(
            &well(1, Direction::Retarded),
            &well(1, Direction::Advanced),
            &g,
            &[0.0, 0.3, 0.9],
        )
        .unwrap();
        assert!((rec.amplitude - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(rec.drift < 1e-12);
        let rec = transition_amplitude(
            &well(1, Direction::Retarded),
            &well(2, Direction::Advanced),
            &g,
            &[0.0, 0.3, 0.9],
        )
        .unwrap();
        assert!(rec.amplitude.norm() < 1e-10);
    }

    #[test]
    fn record_needs_three_distinct_times() {
        let one = Complex64::new(1.0, 0.0);
        assert!(TransitionRecord::from_samples(vec![(0.0, one), (0.0, one), (1.0, one)]).is_err());
        let rec = TransitionRecord::from_samples(vec![(0.0, one), (1.0, one * 1.5), (2.0, one * 0.5)]).unwrap();
        assert_eq!(rec.amplitude, one);
        assert_eq!(rec.probability, rec.amplitude.norm_sqr());
        assert!((rec.drift - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wrong_directions_and_times_are_rejected() {
        let (psi, phi) = pair();
        let g = Grid::square(80.0, 64).unwrap();
        assert!(transition_amplitude(&phi, &psi, &g, &[0.0, 1.0, 2.0]).is_err());
        assert!(transition_amplitude(&psi, &phi, &g, &[0.0, 14.0, 30.0]).is_err());
    }

    #[test]
    fn small_box_is_truncation_error() {
        let (psi, phi) = pair();
        let g = Grid::square(20.0, 64).unwrap();
        assert!(matches!(
            transition_amplitude(&psi, &phi, &g, &[0.0, 14.0, 28.0]),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn swapping_roles_conjugates_the_amplitude() {
        let (psi, phi) = pair();
        let g = Grid::square(80.0, 512).unwrap();
        let times = [0.0, 14.0, 28.0];
        let fwd = transition_amplitude(&psi, &phi, &g, &times).unwrap();
        let back = transition_amplitude(
            &phi.with_direction(Direction::Retarded),
            &psi.with_direction(Direction::Advanced),
            &g,
            &times,
        )
        .unwrap();
        assert!((back.amplitude - fwd.amplitude.conj()).norm() <= 1e-12 * fwd.amplitude.norm());
        assert!((back.probability - fwd.probability).abs() <= 1e-12 * fwd.probability);
    }

    #[test]
    fn well_pair_satisfies_continuity() {
        let g = Grid::new_1d(0.0, 1.0, 256).unwrap();
        let r = continuity_residual(
            &well(1, Direction::Retarded),
            &well(2, Direction::Advanced),
            &g,
            0.5,
            1e-5,
        )
        .unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn noisy_state_breaks_continuity() {
        let (psi, phi) = pair();
        let g = Grid::square(128.0, 256).unwrap();
        let clean = continuity_residual(&psi, &phi, &g, 14.0, 1e-3).unwrap();
        assert!(clean < 1e-5, "{clean}");
        let noisy_psi = |t: f64| {
            let mut f = sample_on_grid(&psi, &g, t)?;
            let mut state = 0x2545_f491_4f6c_dd1du64;
            for v in f.values_mut() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                *v += 0.1 * (2.0 * (state >> 11) as f64 / (1u64 << 53) as f64 - 1.0);
            }
            Ok(f)
        };
        let noisy = continuity_residual_from(&g, noisy_psi, |t| sample_on_grid(&phi, &g, t), 14.0, 1e-3).unwrap();
        assert!(noisy > 1e-2, "{noisy}");
    }

    #[test]
    fn born_reduction_at_anchor() {
        let (psi, _) = pair();
        let g = Grid::square(8.0, 256).unwrap();
        let born = born_rule_reduction(&psi, SOURCE, &[0.8, 0.4, 0.2], &g).unwrap();
        assert!(born.strictly_decreasing());
        for s in &born.steps {
            let exact = 1.0 / (TAU * (1.0 + s.sigma_delta * s.sigma_delta));
            assert!((s.estimate - exact).abs() < 1e-9, "{} vs {exact}", s.estimate);
        }
        assert!((born.extrapolated / born.target - 1.0).abs() < 0.01);
    }

    #[test]
    fn born_reduction_preconditions() {
        let (psi, _) = pair();
        let g = Grid::square(8.0, 64).unwrap();
        assert!(matches!(
            born_rule_reduction(&psi, SOURCE, &[0.8, 0.2], &g),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            born_rule_reduction(
                &psi,
                SpacetimePoint::new(50.0, 0.0, 0.0),
                &[0.8, 0.4],
                &Grid::square(8.0, 256).unwrap()
            ),
            Err(Error::Truncation { .. })
        ));
        assert!(born_rule_reduction(&psi, SOURCE, &[0.4, 0.8], &g).is_err());
    }
}
