//! Scenario execution: builds states from a validated configuration,
//! computes the transition quantities and collects `ρ_s` snapshots.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Grid};
use crate::interferometer::{
    handshake_paths, mach_zehnder, path_density_snapshots, propagate_modes, MziLayout, PathGraph,
};
use crate::propagator::{build_arc_potential, ArcMode, ArcSpec, Propagator};
use crate::scenario::config::{RunMode, ScenarioConfig, ScenarioKind};
use crate::scenario::emit::emit_outputs;
use crate::states::{sample_on_grid, Direction, SpacetimePoint, StateSpec};
use crate::transition::{
    amplitude_density, amplitude_series, checked_integral, continuity_residual, stationary_pair_amplitude,
    TransitionRecord,
};

/// Summary of one run. Optional quantities are omitted from the report
/// file when a scenario does not produce them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub scenario: String,
    pub amplitude: Option<Complex64>,
    pub probability: Option<f64>,
    pub drift: Option<f64>,
    pub continuity_residual_max: Option<f64>,
    /// `(variant.label, probability)` for interferometer runs.
    pub detector_probabilities: Vec<(String, f64)>,
    pub absorbed_fraction: Option<f64>,
    /// Scenario-specific numbers, in a fixed order.
    pub metrics: Vec<(String, f64)>,
    /// Scenario-specific text entries, in a fixed order.
    pub notes: Vec<(String, String)>,
    /// Seconds spent computing and writing (kept out of the report file).
    pub wall_time: f64,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

impl RunReport {
    fn new(kind: ScenarioKind) -> Self {
        Self {
            scenario: kind.name().to_string(),
            ..Self::default()
        }
    }

    fn record(&mut self, rec: &TransitionRecord) {
        self.amplitude = Some(rec.amplitude);
        self.probability = Some(rec.probability);
        self.drift = Some(rec.drift);
        self.continuity_residual_max = rec.max_continuity_residual();
        self.metric("relative_drift", rec.relative_drift());
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.push((key.to_string(), value));
    }

    pub fn metric_value(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == key).map(|m| m.1)
    }

    pub fn detector_probability(&self, key: &str) -> Option<f64> {
        self.detector_probabilities.iter().find(|m| m.0 == key).map(|m| m.1)
    }

    /// Every number in the report, with its key.
    pub fn numbers(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        if let Some(a) = self.amplitude {
            out.push(("amplitude_re".to_string(), a.re));
            out.push(("amplitude_im".to_string(), a.im));
        }
        for (key, v) in [
            ("probability", self.probability),
            ("drift", self.drift),
            ("continuity_residual_max", self.continuity_residual_max),
            ("absorbed_fraction", self.absorbed_fraction),
        ] {
            if let Some(v) = v {
                out.push((key.to_string(), v));
            }
        }
        for (k, v) in &self.detector_probabilities {
            out.push((format!("detector_probability.{k}"), *v));
        }
        out.extend(self.metrics.iter().cloned());
        out
    }

    fn ensure_finite(&self) -> Result<()> {
        match self.numbers().into_iter().find(|(_, v)| !v.is_finite()) {
            Some((k, v)) => Err(Error::Domain(format!("report value {k} = {v} is not finite"))),
            None => Ok(()),
        }
    }
}

/// `ρ_s` at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub time: f64,
    pub density: ComplexField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: RunReport,
    pub snapshots: Vec<DensitySnapshot>,
}

/// Runs a scenario without touching the file system.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let out = match cfg.scenario {
        ScenarioKind::Renninger1960 => match cfg.run.mode {
            RunMode::Analytic => renninger1960_analytic(cfg),
            RunMode::Diffraction => renninger1960_diffraction(cfg),
        },
        ScenarioKind::Renninger1953 => renninger1953(cfg),
        ScenarioKind::SquareWell => square_well(cfg),
        ScenarioKind::AngularEnsemble => angular_ensemble(cfg),
    }?;
    out.report.ensure_finite()?;
    Ok(out)
}

/// Runs a scenario and writes its outputs into the configured directory.
pub fn execute(cfg: &ScenarioConfig) -> Result<RunReport> {
    let start = Instant::now();
    let RunOutput { mut report, snapshots } = run_scenario(cfg)?;
    emit_outputs(&mut report, &snapshots, cfg)?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

fn snapshots(times: &[f64], densities: Vec<ComplexField>) -> Vec<DensitySnapshot> {
    times
        .iter()
        .zip(densities)
        .map(|(&time, density)| DensitySnapshot { time, density })
        .collect()
}

fn gaussian_pair(cfg: &ScenarioConfig) -> Result<(StateSpec, StateSpec)> {
    Ok((
        StateSpec::stationary_gaussian(cfg.source, Direction::Retarded)?,
        StateSpec::stationary_gaussian(cfg.detector, Direction::Advanced)?,
    ))
}

fn renninger1960_analytic(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let (psi, phi) = gaussian_pair(cfg)?;
    let times = &cfg.run.sample_times;
    let (mut record, densities) = amplitude_series(&psi, &phi, &cfg.grid, times)?;
    for &t in times {
        record
            .continuity_residuals
            .push((t, continuity_residual(&psi, &phi, &cfg.grid, t, cfg.run.residual_dt)?));
    }
    let mut report = RunReport::new(cfg.scenario);
    report.record(&record);
    report.metric(
        "closed_form_probability",
        stationary_pair_amplitude(cfg.source, cfg.detector).norm_sqr(),
    );
    for (t, rho) in times.iter().zip(&densities) {
        let (cx, cy) = rho.modulus_centroid();
        report.metric(&format!("centroid_x.t{t}"), cx);
        report.metric(&format!("centroid_y.t{t}"), cy);
    }
    Ok(RunOutput {
        report,
        snapshots: snapshots(times, densities),
    })
}

/// Evolves `field` by `steps` split steps and keeps copies after the
/// requested step counts (in any order).
fn evolve_keeping(prop: &mut Propagator, field: &ComplexField, keep: &[usize]) -> Result<Vec<ComplexField>> {
    let last = keep.iter().copied().max().unwrap_or(0);
    let mut kept: Vec<Option<ComplexField>> = vec![None; keep.len()];
    let mut data = field.values().to_vec();
    for step in 0..=last {
        if step > 0 {
            prop.apply(&mut data);
        }
        for (slot, _) in keep.iter().enumerate().filter(|(_, &k)| k == step) {
            let snap = ComplexField::new(*field.grid(), data.clone())?;
            snap.ensure_finite(&format!("field after {step} steps"))?;
            kept[slot] = Some(snap);
        }
    }
    Ok(kept
        .into_iter()
        .map(|f| f.expect("every requested step is reached"))
        .collect())
}

fn renninger1960_diffraction(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let obstacle = cfg
        .obstacle
        .ok_or_else(|| Error::Parameter("diffraction mode needs an obstacle".into()))?;
    let (psi, phi) = gaussian_pair(cfg)?;
    let pot = build_arc_potential(&cfg.grid, &obstacle.arc)?;
    let dt = cfg.run.dt;
    let steps_to = |t: f64| ((t - cfg.source.t) / dt).round() as usize;
    let total = steps_to(cfg.detector.t);
    let times = &cfg.run.sample_times;
    let forward: Vec<usize> = times.iter().map(|&t| steps_to(t)).collect();
    let backward: Vec<usize> = forward.iter().map(|&s| total - s).collect();

    let mut prop = Propagator::new(&pot, dt)?;
    let psi_fields = evolve_keeping(&mut prop, &sample_on_grid(&psi, &cfg.grid, cfg.source.t)?, &forward)?;
    let phi_fields = evolve_keeping(&mut prop, &sample_on_grid(&phi, &cfg.grid, cfg.detector.t)?, &backward)?;

    let mut samples = Vec::with_capacity(times.len());
    let mut densities = Vec::with_capacity(times.len());
    for ((&t, p), f) in times.iter().zip(&psi_fields).zip(&phi_fields) {
        let rho = amplitude_density(p, f)?;
        samples.push((t, checked_integral(&rho, t)?));
        densities.push(rho);
    }
    let record = TransitionRecord::from_samples(samples)?;
    let mut report = RunReport::new(cfg.scenario);
    report.record(&record);
    report.metric(
        "free_closed_form_probability",
        stationary_pair_amplitude(cfg.source, cfg.detector).norm_sqr(),
    );
    report.metric("steps", total as f64);
    Ok(RunOutput {
        report,
        snapshots: snapshots(times, densities),
    })
}

fn mzi_layout(cfg: &ScenarioConfig, block_upper: bool) -> Result<MziLayout> {
    let m = cfg
        .mzi
        .as_ref()
        .ok_or_else(|| Error::Parameter("missing interferometer settings".into()))?;
    Ok(MziLayout {
        block_upper,
        ..MziLayout::new(m.arm, m.k)
    })
}

fn record_modes(report: &mut RunReport, variant: &str, graph: &PathGraph) -> Result<()> {
    let modes = propagate_modes(graph)?;
    for sink in &modes.sinks {
        report
            .detector_probabilities
            .push((format!("{variant}.{}", sink.label), sink.probability));
    }
    report.metric(&format!("{variant}.total_probability"), modes.total_probability);
    Ok(())
}

fn renninger1953(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let m = cfg
        .mzi
        .clone()
        .ok_or_else(|| Error::Parameter("missing interferometer settings".into()))?;
    let mut report = RunReport::new(cfg.scenario);
    record_modes(&mut report, "calibration", &mach_zehnder(&mzi_layout(cfg, false)?)?)?;
    let graph = mach_zehnder(&mzi_layout(cfg, m.block_upper)?)?;
    if m.block_upper {
        record_modes(&mut report, "blocked", &graph)?;
    }
    let paths = handshake_paths(&graph)?;
    let (mut open, mut closed) = (0, 0);
    for p in &paths {
        let key = if p.open { "open_path" } else { "closed_path" };
        let n = if p.open { &mut open } else { &mut closed };
        report.notes.push((format!("{key}.{n}"), p.labels(&graph).join(" -> ")));
        *n += 1;
    }
    report.metric("open_paths", open as f64);
    report.metric("closed_paths", closed as f64);

    let target = graph.find(&m.render_detector).expect("validated detector label");
    let lower = graph.find("M1").expect("layout has M1");
    let path = paths
        .iter()
        .find(|p| p.open && p.detector() == target && p.nodes.contains(&lower))
        .ok_or_else(|| Error::Path(format!("no open lower-arm path to {}", m.render_detector)))?;
    let length: f64 = path
        .nodes
        .windows(2)
        .map(|w| {
            let (a, b) = (graph.node(w[0]).position, graph.node(w[1]).position);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum();
    let t_start = cfg.source.t;
    let t_end = t_start + length / m.k;
    let n = cfg.run.sample_times.len();
    let times: Vec<f64> = (0..n)
        .map(|j| t_start + (t_end - t_start) * j as f64 / (n - 1) as f64)
        .collect();
    let rendered = path_density_snapshots(&graph, path, m.k, m.width, &cfg.grid, t_start, &times)?;
    report
        .notes
        .push(("rendered_path".into(), path.labels(&graph).join(" -> ")));
    report.metric("path_length", length);
    report.metric("transit_time", t_end - t_start);
    let snapshots = rendered
        .into_iter()
        .map(|(time, density)| DensitySnapshot { time, density })
        .collect();
    Ok(RunOutput { report, snapshots })
}

fn square_well(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let a = cfg.grid.x_axis().max;
    let mode = |n, dir| StateSpec::square_well(n, a, dir);
    let xi1 = mode(1, Direction::Retarded)?;
    let times = &cfg.run.sample_times;
    let (same, _) = amplitude_series(&xi1, &mode(1, Direction::Advanced)?, &cfg.grid, times)?;
    let xi2_adv = mode(2, Direction::Advanced)?;
    let (mut cross, densities) = amplitude_series(&xi1, &xi2_adv, &cfg.grid, times)?;
    for &t in times {
        cross.continuity_residuals.push((
            t,
            continuity_residual(&xi1, &xi2_adv, &cfg.grid, t, cfg.run.residual_dt)?,
        ));
    }

    // ρ_s(x, t) = ρ_s(x, 0) e^{i(E₂ - E₁)t} for the cross pair.
    let gap = 3.0 * PI * PI / (2.0 * a * a);
    let at_zero = amplitude_density(
        &sample_on_grid(&xi1, &cfg.grid, 0.0)?,
        &sample_on_grid(&xi2_adv, &cfg.grid, 0.0)?,
    )?;
    let mut phase_error: f64 = 0.0;
    for (&t, rho) in times.iter().zip(&densities) {
        let rotation = Complex64::from_polar(1.0, gap * t);
        for (v, v0) in rho.values().iter().zip(at_zero.values()) {
            phase_error = phase_error.max((v - v0 * rotation).norm());
        }
    }

    let mut report = RunReport::new(cfg.scenario);
    report.record(&same);
    report.continuity_residual_max = cross.max_continuity_residual();
    report.metric("orthogonal_amplitude_re", cross.amplitude.re);
    report.metric("orthogonal_amplitude_im", cross.amplitude.im);
    report.metric("orthogonal_probability", cross.probability);
    report.metric("orthogonal_drift", cross.drift);
    report.metric("density_phase_error", phase_error);
    Ok(RunOutput {
        report,
        snapshots: snapshots(times, densities),
    })
}

/// Outcome of the ring-of-detectors isotropy check.
#[derive(Debug, Clone, PartialEq)]
pub struct RingResult {
    /// `(angle, P_s)` per detector, counter-clockwise from the +x axis.
    pub probabilities: Vec<(f64, f64)>,
    /// `(max - min) / mean` of the ring probabilities.
    pub relative_spread: f64,
    /// Largest drift relative to `|A_s|` over the ring.
    pub max_relative_drift: f64,
}

impl RingResult {
    /// Share of the ring's total probability held by detectors with angles
    /// in `[theta_start, theta_end)`.
    pub fn arc_share(&self, theta_start: f64, theta_end: f64) -> f64 {
        let total: f64 = self.probabilities.iter().map(|p| p.1).sum();
        let arc: f64 = self
            .probabilities
            .iter()
            .filter(|p| p.0 >= theta_start && p.0 < theta_end)
            .map(|p| p.1)
            .sum();
        arc / total
    }
}

/// `P_s` for `count` detectors evenly spaced on a circle of `radius` around
/// the source, all absorbing at `detector_time`.
pub fn ring_probabilities(
    grid: &Grid,
    source: SpacetimePoint,
    detector_time: f64,
    radius: f64,
    count: usize,
    sample_times: &[f64],
) -> Result<RingResult> {
    let psi = StateSpec::stationary_gaussian(source, Direction::Retarded)?;
    let psi_fields = sample_times
        .iter()
        .map(|&t| sample_on_grid(&psi, grid, t))
        .collect::<Result<Vec<_>>>()?;
    let mut probabilities = Vec::with_capacity(count);
    let mut max_relative_drift: f64 = 0.0;
    for j in 0..count {
        let theta = TAU * j as f64 / count as f64;
        let anchor = SpacetimePoint::new(
            source.x + radius * theta.cos(),
            source.y + radius * theta.sin(),
            detector_time,
        );
        let phi = StateSpec::stationary_gaussian(anchor, Direction::Advanced)?;
        let mut samples = Vec::with_capacity(sample_times.len());
        for (&t, p) in sample_times.iter().zip(&psi_fields) {
            let rho = amplitude_density(p, &sample_on_grid(&phi, grid, t)?)?;
            samples.push((t, checked_integral(&rho, t)?));
        }
        let rec = TransitionRecord::from_samples(samples)?;
        max_relative_drift = max_relative_drift.max(rec.relative_drift());
        probabilities.push((theta, rec.probability));
    }
    let (lo, hi, sum) = probabilities
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(lo, hi, s), p| {
            (lo.min(p.1), hi.max(p.1), s + p.1)
        });
    let relative_spread = (hi - lo) / (sum / count as f64);
    Ok(RingResult {
        probabilities,
        relative_spread,
        max_relative_drift,
    })
}

/// Norm captured by an absorbing arc (and an optional outer ring) while a
/// retarded packet spreads from the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionResult {
    pub arc_fraction: f64,
    pub outer_fraction: f64,
    pub remaining_fraction: f64,
}

pub fn absorbed_fractions(
    grid: &Grid,
    source: SpacetimePoint,
    arc: &ArcSpec,
    outer_radius: Option<f64>,
    dt: f64,
    duration: f64,
) -> Result<AbsorptionResult> {
    if arc.mode != ArcMode::Absorber {
        return Err(Error::Parameter("absorbed fractions need an absorbing arc".into()));
    }
    let inner = build_arc_potential(grid, arc)?;
    let mut region: Vec<usize> = inner.values().iter().map(|v| usize::from(v.im < 0.0)).collect();
    let mut pot = inner;
    if let Some(r) = outer_radius {
        let ring = build_arc_potential(
            grid,
            &ArcSpec {
                radius: r,
                theta_start: 0.0,
                theta_end: TAU,
                ..*arc
            },
        )?;
        for (slot, v) in region.iter_mut().zip(ring.values()) {
            if v.im < 0.0 {
                *slot = 2;
            }
        }
        pot = pot.combined(&ring)?;
    }
    let psi = StateSpec::stationary_gaussian(source, Direction::Retarded)?;
    let start = sample_on_grid(&psi, grid, source.t)?;
    let n0 = start.norm_sq();
    let steps = (duration / dt).round() as usize;
    let mut prop = Propagator::new(&pot, dt)?;
    let mut data = start.into_values();
    let mut losses = [0.0; 3];
    for _ in 0..steps {
        prop.apply_tallied(&mut data, &region, &mut losses);
    }
    let end = ComplexField::new(*grid, data)?;
    end.ensure_finite("absorber run")?;
    Ok(AbsorptionResult {
        arc_fraction: losses[1] / n0,
        outer_fraction: losses[2] / n0,
        remaining_fraction: end.norm_sq() / n0,
    })
}

fn angular_ensemble(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let obstacle = cfg
        .obstacle
        .ok_or_else(|| Error::Parameter("the ensemble needs an absorbing arc".into()))?;
    let arc = obstacle.arc;
    let ring = ring_probabilities(
        &cfg.grid,
        cfg.source,
        cfg.detector.t,
        cfg.run.ring_radius,
        cfg.run.ring_count,
        &cfg.run.sample_times,
    )?;
    let absorbed = absorbed_fractions(
        &cfg.grid,
        cfg.source,
        &arc,
        obstacle.outer_radius,
        cfg.run.dt,
        cfg.run.duration,
    )?;

    let mut report = RunReport::new(cfg.scenario);
    report.absorbed_fraction = Some(absorbed.arc_fraction);
    report.metric("ring_detectors", ring.probabilities.len() as f64);
    report.metric("ring_relative_spread", ring.relative_spread);
    report.metric("ring_max_relative_drift", ring.max_relative_drift);
    report.metric(
        "ring_mean_probability",
        ring.probabilities.iter().map(|p| p.1).sum::<f64>() / ring.probabilities.len() as f64,
    );
    report.metric("arc_probability_share", ring.arc_share(arc.theta_start, arc.theta_end));
    report.metric("arc_angular_fraction", (arc.theta_end - arc.theta_start) / TAU);
    report.metric("outer_absorbed_fraction", absorbed.outer_fraction);
    report.metric("remaining_norm", absorbed.remaining_fraction);
    Ok(RunOutput {
        report,
        snapshots: Vec::new(),
    })
}
