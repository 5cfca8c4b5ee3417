//! Batch scenario runner: build the configured objects, execute one
//! pipeline, and emit CSV/PGM/JSON artifacts plus a manifest with content
//! hashes. Every output is a pure function of (config, seed).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{Figure3Spec, GateSpec, Scenario, ScenarioConfig};
use crate::error::{ChronoError, Result};
use crate::grid::{Axis, FrequencyGrid};
use crate::interferometer::{
    coincidence_map, cx_reference_decomposition, Gate,
};
use crate::io::{
    curve_to_csv, fmt_f64, map_to_csv, map_to_pgm, write_artifact, ManifestEntry,
};
use crate::phase_space::{
    default_axes, pseudo_wigner, pseudo_wigner_lag, reconstruct_from_wigner,
    spectrogram, wigner, PhaseSpaceMap,
};
use crate::retrieval::{extract_cpw_from_cx, phase_retrieve};
use crate::state::{
    hamming_window, qudit_comb_state, PureState, SpectralFunction, State, Window,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    pub config: ScenarioConfig,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

/// Execute one scenario end to end. `check` additionally runs the
/// applicable two-path (or self-consistency) property and fails with
/// [`ChronoError::CheckFailed`] on violation.
pub fn run(cfg: &ScenarioConfig, check: bool) -> Result<RunSummary> {
    cfg.validate()?;
    let out_dir = PathBuf::from(cfg.out_dir.as_deref().unwrap_or("out"));
    let mut entries: Vec<ManifestEntry> = Vec::new();

    match cfg.scenario {
        Scenario::Wigner => run_wigner(cfg, &out_dir, check, &mut entries)?,
        Scenario::PseudoWigner => run_pseudo_wigner(cfg, &out_dir, check, &mut entries)?,
        Scenario::Spectrogram => run_spectrogram(cfg, &out_dir, check, &mut entries)?,
        Scenario::HomMap => run_hom_map(cfg, &out_dir, check, &mut entries)?,
        Scenario::Retrieve => run_retrieve(cfg, &out_dir, check, &mut entries)?,
        Scenario::Reconstruct => run_reconstruct(cfg, &out_dir, check, &mut entries)?,
        Scenario::Figure3 => {
            let spec = cfg.figure3.as_ref().expect("validated");
            let report = run_figure3(spec, &out_dir, &mut entries)?;
            if check && report.ridge_mu.len() != 2 * spec.half_d + 1 {
                return Err(ChronoError::CheckFailed(format!(
                    "expected {} ridges, detected {}",
                    2 * spec.half_d + 1,
                    report.ridge_mu.len()
                )));
            }
        }
    }

    entries.sort_by(|a, b| a.name.cmp(&b.name));
    // the echoed config omits the output path so the manifest bytes depend
    // only on (config, seed), not on where the artifacts were written
    let mut echo = cfg.clone();
    echo.out_dir = None;
    let manifest = Manifest {
        scenario: cfg.scenario.to_string(),
        seed: cfg.seed,
        config: echo,
        files: entries,
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| ChronoError::Config(format!("manifest serialization: {e}")))?;
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("manifest.json"), &manifest_bytes)?;
    Ok(RunSummary { out_dir, manifest })
}

fn built_grid(cfg: &ScenarioConfig) -> Result<FrequencyGrid> {
    cfg.grid
        .as_ref()
        .expect("validated")
        .build()
}

fn built_state(cfg: &ScenarioConfig, grid: FrequencyGrid) -> Result<State> {
    cfg.state.as_ref().expect("validated").build(grid)
}

fn map_axes(cfg: &ScenarioConfig, grid: FrequencyGrid) -> Result<(Axis, Axis)> {
    match &cfg.axes {
        Some(a) => Ok((a.tau.build("tau")?, a.mu.build("mu")?)),
        None => Ok(default_axes(grid)),
    }
}

fn emit_map(
    dir: &Path,
    stem: &str,
    map: &PhaseSpaceMap,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    entries.push(write_artifact(
        dir,
        &format!("{stem}.csv"),
        map_to_csv(map).as_bytes(),
    )?);
    let (pgm, sidecar) = map_to_pgm(map);
    entries.push(write_artifact(dir, &format!("{stem}.pgm"), &pgm)?);
    let sidecar_bytes = serde_json::to_vec_pretty(&sidecar)
        .map_err(|e| ChronoError::Config(format!("sidecar serialization: {e}")))?;
    entries.push(write_artifact(
        dir,
        &format!("{stem}.pgm.json"),
        &sidecar_bytes,
    )?);
    Ok(())
}

fn state_to_csv(state: &PureState) -> String {
    let mut out = String::from("# columns: omega,re,im\n");
    for (w, a) in state.grid().points().zip(state.amplitudes()) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(w), fmt_f64(a.re), fmt_f64(a.im));
    }
    out
}

/// Subsampled index pairs (at most 7 per axis) for the bundled checks.
fn check_points(ta: Axis, fa: Axis) -> Vec<(usize, usize)> {
    let st = (ta.count / 7).max(1);
    let sf = (fa.count / 7).max(1);
    let mut pts = Vec::new();
    let mut it = 0;
    while it < ta.count {
        let mut ifr = 0;
        while ifr < fa.count {
            pts.push((it, ifr));
            ifr += sf;
        }
        it += st;
    }
    pts
}

fn check_sup(
    label: &str,
    pairs: impl Iterator<Item = (f64, f64)>,
    tol: f64,
) -> Result<()> {
    let mut sup = 0.0f64;
    for (a, b) in pairs {
        sup = sup.max((a - b).abs());
    }
    if sup > tol {
        return Err(ChronoError::CheckFailed(format!(
            "{label}: sup deviation {sup:.3e} exceeds {tol:.1e}"
        )));
    }
    Ok(())
}

fn run_wigner(
    cfg: &ScenarioConfig,
    dir: &Path,
    check: bool,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    let grid = built_grid(cfg)?;
    let state = built_state(cfg, grid)?;
    let (ta, fa) = map_axes(cfg, grid)?;
    let map = wigner(&state, ta, fa)?;
    emit_map(dir, "wigner", &map, entries)?;
    if check {
        let total = map.integral();
        if (total - 1.0).abs() > 1e-6 {
            return Err(ChronoError::CheckFailed(format!(
                "Wigner normalization {total} deviates from 1 beyond 1e-6"
            )));
        }
        let bound = 1.0 / std::f64::consts::PI + 1e-6;
        if map.max_abs() > bound {
            return Err(ChronoError::CheckFailed(format!(
                "Wigner magnitude {} exceeds 1/pi",
                map.max_abs()
            )));
        }
    }
    Ok(())
}

fn run_pseudo_wigner(
    cfg: &ScenarioConfig,
    dir: &Path,
    check: bool,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    let grid = built_grid(cfg)?;
    let state = built_state(cfg, grid)?;
    let window = cfg.window.as_ref().expect("validated").build(grid)?;
    let (ta, fa) = map_axes(cfg, grid)?;
    let map = pseudo_wigner(&state, &window, ta, fa)?;
    emit_map(dir, "pseudo_wigner", &map, entries)?;
    if check {
        // two-path: shift-then-filter interferometer reproduces the map
        let State::Pure(psi) = &state else {
            return Err(ChronoError::Config(
                "the pseudo-Wigner two-path check needs a pure state".into(),
            ));
        };
        let pts = check_points(ta, fa);
        let mut pairs = Vec::with_capacity(pts.len());
        for (it, ifr) in pts {
            let tau1 = Axis {
                start: ta.value(it),
                step: 1.0,
                count: 1,
            };
            let mu1 = Axis {
                start: fa.value(ifr),
                step: 1.0,
                count: 1,
            };
            let i_map = coincidence_map(
                psi,
                &state,
                &Gate::FreqBs,
                Some(&window),
                true,
                tau1,
                mu1,
            )?;
            pairs.push((i_map.value(0, 0), 0.5 * (1.0 - map.value(it, ifr))));
        }
        check_sup("pseudo-Wigner two-path", pairs.into_iter(), 1e-4)?;
    }
    Ok(())
}

fn run_spectrogram(
    cfg: &ScenarioConfig,
    dir: &Path,
    check: bool,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    let grid = built_grid(cfg)?;
    let state = built_state(cfg, grid)?;
    let window = cfg.window.as_ref().expect("validated").build(grid)?;
    let (ta, fa) = map_axes(cfg, grid)?;
    let map = spectrogram(&state, &window, ta, fa)?;
    emit_map(dir, "spectrogram", &map, entries)?;
    if check {
        // two-path: no-gate interferometer with the normalized window as
        // the reference photon gives I = (1 - S)/2
        let samples: Vec<Complex64> = grid.points().map(|w| window.function().eval(w)).collect();
        let phi = PureState::from_samples(grid, samples)?;
        let wnorm2 = window.function().norm_sq();
        let pts = check_points(ta, fa);
        let mut pairs = Vec::with_capacity(pts.len());
        for (it, ifr) in pts {
            let tau1 = Axis {
                start: ta.value(it),
                step: 1.0,
                count: 1,
            };
            let mu1 = Axis {
                start: fa.value(ifr),
                step: 1.0,
                count: 1,
            };
            let i_map =
                coincidence_map(&phi, &state, &Gate::None, None, true, tau1, mu1)?;
            pairs.push((
                i_map.value(0, 0),
                0.5 * (1.0 - map.value(it, ifr) / wnorm2),
            ));
        }
        check_sup("spectrogram two-path", pairs.into_iter(), 1e-4)?;
    }
    Ok(())
}

fn run_hom_map(
    cfg: &ScenarioConfig,
    dir: &Path,
    check: bool,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    let grid = built_grid(cfg)?;
    let state = built_state(cfg, grid)?;
    let reference = cfg.reference.as_ref().expect("validated").build(grid)?;
    let gate_spec = cfg.gate.as_ref().expect("validated");
    let gate = gate_spec.build();
    let (ta, fa) = match &cfg.axes {
        Some(a) => (a.tau.build("tau")?, a.mu.build("mu")?),
        None => {
            let dual = grid.dual_time_grid();
            (
                Axis::symmetric(0.0, dual.span() / 4.0, 21),
                Axis::symmetric(grid.center(), grid.span() / 4.0, 21),
            )
        }
    };
    let map = coincidence_map(&reference, &state, &gate, None, true, ta, fa)?;
    emit_map(dir, "hom_map", &map, entries)?;
    if check {
        check_hom_closed_form(&map, &state, &reference, gate_spec, ta, fa)?;
    }
    Ok(())
}

/// Compare a coincidence map against the matching phase-space closed form
/// on a subsample of points.
fn check_hom_closed_form(
    map: &PhaseSpaceMap,
    state: &State,
    reference: &PureState,
    gate_spec: &GateSpec,
    ta: Axis,
    fa: Axis,
) -> Result<()> {
    let grid = state.grid();
    let pts = check_points(ta, fa);
    match gate_spec {
        GateSpec::FreqBs => {
            let w = wigner(state, ta, fa)?;
            check_sup(
                "freq_bs vs (1 - pi W)/2",
                pts.iter().map(|&(it, ifr)| {
                    (
                        map.value(it, ifr),
                        0.5 * (1.0 - std::f64::consts::PI * w.value(it, ifr)),
                    )
                }),
                1e-4,
            )
        }
        GateSpec::None => {
            let win = Window::from_samples(grid, reference.amplitudes().to_vec(), false)?;
            let s = spectrogram(state, &win, ta, fa)?;
            check_sup(
                "no-gate vs (1 - S)/2",
                pts.iter()
                    .map(|&(it, ifr)| (map.value(it, ifr), 0.5 * (1.0 - s.value(it, ifr)))),
                1e-4,
            )
        }
        GateSpec::Cx => {
            let dec = cx_reference_decomposition(reference)?;
            let extracted = extract_cpw_from_cx(map, &dec.s, &[dec.alpha[0].re])?;
            // the Schmidt factor is the lag kernel itself, not a window to
            // be squared
            let c2 = dec.c2[0].clone();
            let pw = pseudo_wigner_lag(state, Arc::new(move |w| c2.eval(w)), ta, fa)?;
            check_sup(
                "cx extraction vs pseudo-Wigner",
                pts.iter()
                    .map(|&(it, ifr)| (extracted.value(it, ifr), pw.value(it, ifr))),
                1e-3,
            )
        }
        GateSpec::SeparableKernel { .. } => {
            let State::Pure(psi) = state else {
                return Err(ChronoError::Config(
                    "the separable-kernel check needs a pure state".into(),
                ));
            };
            let u_minus = gate_spec.u_minus().expect("separable kernel");
            let filtered: Vec<Complex64> = grid
                .points()
                .zip(psi.amplitudes())
                .map(|(w, a)| a * u_minus(w))
                .collect();
            let f = SpectralFunction::from_samples(grid, filtered)?;
            let w_state = State::Pure(PureState::from_samples(grid, f.samples().to_vec())?);
            let w_map = wigner(&w_state, ta, fa)?;
            // scale fitted by least squares; the shape must then agree
            let beta = beta_from(map, &w_map);
            check_sup(
                "separable kernel vs (1 - beta pi W)/2",
                pts.iter().map(|&(it, ifr)| {
                    (
                        map.value(it, ifr),
                        0.5 * (1.0 - beta * std::f64::consts::PI * w_map.value(it, ifr)),
                    )
                }),
                1e-4,
            )
        }
    }
}

/// Fit the scalar beta between a coincidence map and the filtered state's
/// Wigner map by least squares over all points: 1 - 2I = beta * pi * W.
fn beta_from(map: &PhaseSpaceMap, w_map: &PhaseSpaceMap) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, w) in map.values().iter().zip(w_map.values()) {
        let y = 1.0 - 2.0 * i;
        let x = std::f64::consts::PI * w;
        num += x * y;
        den += x * x;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalSidecar {
    pub iterations: usize,
    pub converged: bool,
    pub self_consistency_error: f64,
    pub ambiguities: Vec<String>,
    pub seed: u64,
}

fn run_retrieve(
    cfg: &ScenarioConfig,
    dir: &Path,
    check: bool,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    let grid = built_grid(cfg)?;
    let state = built_state(cfg, grid)?;
    let window = cfg.window.as_ref().expect("validated").build(grid)?;
    let (ta, fa) = default_axes(grid);
    let smap = spectrogram(&state, &window, ta, fa)?;
    emit_map(dir, "spectrogram", &smap, entries)?;
    let result = phase_retrieve(&smap, &window, cfg.seed, 200, 1e-6)?;
    entries.push(write_artifact(
        dir,
        "estimate.csv",
        state_to_csv(&result.estimate).as_bytes(),
    )?);
    let sidecar = RetrievalSidecar {
        iterations: result.iterations,
        converged: result.converged,
        self_consistency_error: result.self_consistency_error,
        ambiguities: result
            .ambiguities
            .iter()
            .map(|a| format!("{a:?}"))
            .collect(),
        seed: cfg.seed,
    };
    let bytes = serde_json::to_vec_pretty(&sidecar)
        .map_err(|e| ChronoError::Config(format!("sidecar serialization: {e}")))?;
    entries.push(write_artifact(dir, "retrieval.json", &bytes)?);
    if check && result.self_consistency_error > 1e-2 {
        return Err(ChronoError::CheckFailed(format!(
            "retrieval self-consistency error {:.3e} above 1e-2",
            result.self_consistency_error
        )));
    }
    Ok(())
}

fn run_reconstruct(
    cfg: &ScenarioConfig,
    dir: &Path,
    check: bool,
    entries: &mut Vec<ManifestEntry>,
) -> Result<()> {
    let grid = built_grid(cfg)?;
    let state = built_state(cfg, grid)?;
    let State::Pure(psi) = &state else {
        return Err(ChronoError::Config(
            "reconstruction from the Wigner map is defined for pure states".into(),
        ));
    };
    let (ta, fa) = crate::phase_space::reconstruction_axes(grid, grid.center());
    let map = wigner(&state, ta, fa)?;
    emit_map(dir, "wigner", &map, entries)?;
    let recovered = reconstruct_from_wigner(&map, None)?;
    entries.push(write_artifact(
        dir,
        "reconstructed.csv",
        state_to_csv(&recovered).as_bytes(),
    )?);
    if check {
        // the recovered state lives on a grid assembled from the map axes;
        // compare against the input resampled there
        let rg = recovered.grid();
        let input: Vec<Complex64> = rg.points().map(|w| psi.function().eval(w)).collect();
        let resampled = PureState::from_samples(rg, input)?;
        let fid = resampled.fidelity(&recovered);
        if fid < 1.0 - 1e-6 {
            return Err(ChronoError::CheckFailed(format!(
                "reconstruction fidelity {fid} below 1 - 1e-6"
            )));
        }
    }
    Ok(())
}

/// Ridge statistics extracted from the comb-state spectrogram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Figure3Report {
    pub resolution: usize,
    pub comb_spacing: f64,
    pub window_span: f64,
    /// Detected ridge centers (frequency units).
    pub ridge_mu: Vec<f64>,
    /// Same positions on the normalized axis (mu / comb spacing).
    pub ridge_normalized: Vec<f64>,
    /// Frequency FWHM of the central ridge in the mu-marginal.
    pub ridge_fwhm_mu: f64,
    /// FWHM in tau of the spectrogram along the central ridge.
    pub temporal_extent: f64,
    /// Marginal peak ratio between the outermost (n = half_d) and central
    /// ridges.
    pub edge_to_center_ratio: f64,
}

/// Reproduce the comb-state resolution study: spectral intensity on the
/// normalized frequency axis plus the windowed spectrogram at the given
/// resolution, with ridge detection on the frequency marginal.
pub fn run_figure3(
    spec: &Figure3Spec,
    dir: &Path,
    entries: &mut Vec<ManifestEntry>,
) -> Result<Figure3Report> {
    let n = spec.resolution;
    if n != 256 && n != 1024 {
        return Err(ChronoError::Config(format!(
            "figure3 resolution must be 256 or 1024, got {n}"
        )));
    }
    let span = 32.0;
    let grid = FrequencyGrid::new(n, 0.0, span)?;
    let delta = spec.comb_spacing.unwrap_or(span / 16.0);
    let peak_width = delta / 6.5;
    let state = State::Pure(qudit_comb_state(
        grid,
        spec.half_d,
        delta,
        spec.kappa,
        peak_width,
    )?);
    // the window narrows with resolution: finer frequency ridges at the
    // cost of a longer temporal footprint
    let window_span = spec
        .window_span
        .unwrap_or(2.0 * delta * 256.0 / n as f64);
    let window = hamming_window(grid, window_span)?;
    let (ta, fa) = default_axes(grid);
    let smap = spectrogram(&state, &window, ta, fa)?;

    // spectral intensity on the normalized frequency axis
    let State::Pure(psi) = &state else { unreachable!() };
    let intensity: Vec<(f64, f64)> = grid
        .points()
        .zip(psi.amplitudes())
        .map(|(w, a)| (w / delta, a.norm_sqr()))
        .collect();
    entries.push(write_artifact(
        dir,
        &format!("intensity_{n}.csv"),
        curve_to_csv("normalized_frequency", "intensity", &intensity).as_bytes(),
    )?);
    emit_map(dir, &format!("spectrogram_{n}"), &smap, entries)?;

    // mu-marginal and ridge analysis
    let marginal: Vec<f64> = (0..fa.count)
        .map(|ifr| (0..ta.count).map(|it| smap.value(it, ifr)).sum::<f64>() * ta.step)
        .collect();
    let peak = marginal.iter().cloned().fold(0.0, f64::max);
    let min_sep_bins = ((delta / 2.0) / fa.step).round() as usize;
    let mut ridges: Vec<usize> = Vec::new();
    for i in 1..fa.count - 1 {
        if marginal[i] > marginal[i - 1]
            && marginal[i] >= marginal[i + 1]
            && marginal[i] > 0.3 * peak
            && ridges.last().map_or(true, |&p| i - p >= min_sep_bins)
        {
            ridges.push(i);
        }
    }
    let ridge_mu: Vec<f64> = ridges.iter().map(|&i| fa.value(i)).collect();
    let ridge_normalized: Vec<f64> = ridge_mu.iter().map(|m| m / delta).collect();

    // central ridge: FWHM in the marginal above the neighboring valley
    let center_idx = *ridges
        .iter()
        .min_by(|&&a, &&b| {
            fa.value(a)
                .abs()
                .partial_cmp(&fa.value(b).abs())
                .unwrap()
        })
        .ok_or_else(|| ChronoError::CheckFailed("no ridges detected".into()))?;
    let ridge_fwhm_mu = marginal_fwhm(&marginal, center_idx, fa.step, min_sep_bins);

    // temporal extent: FWHM of the spectrogram column at the central ridge
    let column: Vec<f64> = (0..ta.count).map(|it| smap.value(it, center_idx)).collect();
    let t_peak_idx = column
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let temporal_extent = marginal_fwhm(&column, t_peak_idx, ta.step, ta.count);

    // marginal peak ratio between the outermost and central ridges
    let edge_idx = *ridges
        .iter()
        .max_by(|&&a, &&b| fa.value(a).partial_cmp(&fa.value(b)).unwrap())
        .unwrap();
    let edge_to_center_ratio = marginal[edge_idx] / marginal[center_idx];

    let report = Figure3Report {
        resolution: n,
        comb_spacing: delta,
        window_span,
        ridge_mu,
        ridge_normalized,
        ridge_fwhm_mu,
        temporal_extent,
        edge_to_center_ratio,
    };
    let bytes = serde_json::to_vec_pretty(&report)
        .map_err(|e| ChronoError::Config(format!("report serialization: {e}")))?;
    entries.push(write_artifact(dir, &format!("ridges_{n}.json"), &bytes)?);
    Ok(report)
}

/// Width at half height between a local peak and its surrounding valley
/// floor, with linear interpolation at the crossings. `reach` bounds the
/// valley search distance in bins.
fn marginal_fwhm(values: &[f64], peak_idx: usize, step: f64, reach: usize) -> f64 {
    let peak = values[peak_idx];
    let mut valley = peak;
    for d in 1..=reach {
        if peak_idx >= d {
            valley = valley.min(values[peak_idx - d]);
        }
        if peak_idx + d < values.len() {
            valley = valley.min(values[peak_idx + d]);
        }
    }
    let level = 0.5 * (peak + valley);
    let cross = |mut i: usize, dir: isize| -> f64 {
        loop {
            let next = i as isize + dir;
            if next < 0 || next as usize >= values.len() {
                return i as f64;
            }
            let next = next as usize;
            if values[next] < level {
                // linear interpolation between i and next
                let frac = (values[i] - level) / (values[i] - values[next]);
                return i as f64 + dir as f64 * frac;
            }
            i = next;
        }
    };
    let left = cross(peak_idx, -1);
    let right = cross(peak_idx, 1);
    (right - left) * step
}
