//! Single-photon spectral states: pure amplitudes, mixed-state kernels,
//! spectral windows and the Fourier bridge to the time-of-arrival domain.
//!
//! All states live on a shared [`FrequencyGrid`] and are normalized in the
//! discrete-Riemann sense: `sum |psi(w_n)|^2 * dw = 1`. Built-in families
//! carry an analytic evaluator so off-grid samples (needed by the rotated
//! coordinates of the entangling gates and by the Wigner quadrature) are
//! exact; sample-only states fall back to band-limited (trigonometric)
//! interpolation.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{ChronoError, Result};
use crate::grid::{FrequencyGrid, TimeGrid};

pub type Eval = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Fraction of state mass allowed outside the grid.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// A complex function of frequency sampled on a grid, with an optional
/// closed-form evaluator. This is the shared machinery behind [`PureState`]
/// and [`Window`]; it carries no normalization convention of its own.
#[derive(Clone)]
pub struct SpectralFunction {
    grid: FrequencyGrid,
    samples: Vec<Complex64>,
    analytic: Option<Eval>,
    // centered DFT coefficients for band-limited interpolation, built lazily
    interp: Arc<OnceLock<Vec<Complex64>>>,
}

impl std::fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("grid", &self.grid)
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl SpectralFunction {
    pub fn from_samples(grid: FrequencyGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.count() {
            return Err(ChronoError::InvalidGrid(format!(
                "got {} samples for a grid of {} points",
                samples.len(),
                grid.count()
            )));
        }
        Ok(Self {
            grid,
            samples,
            analytic: None,
            interp: Arc::new(OnceLock::new()),
        })
    }

    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        let samples = grid.points().map(&f).collect();
        Self {
            grid,
            samples,
            analytic: Some(Arc::new(f)),
            interp: Arc::new(OnceLock::new()),
        }
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn analytic(&self) -> Option<&Eval> {
        self.analytic.as_ref()
    }

    /// Evaluate at arbitrary frequency: analytic when available, otherwise
    /// band-limited interpolation of the grid samples (exact at grid points,
    /// periodic trigonometric extension elsewhere).
    pub fn eval(&self, omega: f64) -> Complex64 {
        if let Some(f) = &self.analytic {
            return f(omega);
        }
        let n = self.grid.count();
        let coeffs = self.interp.get_or_init(|| centered_dft(&self.samples));
        let x = self.grid.index_of(omega);
        // outside the grid the samples carry negligible mass; return 0 rather
        // than the periodic alias
        if x < -0.5 || x > n as f64 - 0.5 {
            return Complex64::new(0.0, 0.0);
        }
        let half = n as i64 / 2;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in coeffs.iter().enumerate() {
            let k = j as i64 - half;
            let phase = 2.0 * PI * k as f64 * x / n as f64;
            acc += c * Complex64::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Discrete-Riemann squared norm `sum |f|^2 * dw`.
    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Pointwise product with another function on the same grid.
    pub fn product(&self, other: &SpectralFunction) -> Result<SpectralFunction> {
        check_same_grid(self.grid, other.grid)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .collect();
        let analytic = match (self.analytic.clone(), other.analytic.clone()) {
            (Some(f), Some(g)) => {
                Some(Arc::new(move |w: f64| f(w) * g(w)) as Eval)
            }
            _ => None,
        };
        Ok(SpectralFunction {
            grid: self.grid,
            samples,
            analytic,
            interp: Arc::new(OnceLock::new()),
        })
    }

    pub fn scale(&self, c: Complex64) -> SpectralFunction {
        let samples = self.samples.iter().map(|s| s * c).collect();
        let analytic = self.analytic.clone().map(|f| {
            Arc::new(move |w: f64| f(w) * c) as Eval
        });
        SpectralFunction {
            grid: self.grid,
            samples,
            analytic,
            interp: Arc::new(OnceLock::new()),
        }
    }
}

fn centered_dft(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let half = n as i64 / 2;
    (0..n)
        .map(|j| {
            let k = j as i64 - half;
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, s) in samples.iter().enumerate() {
                let phase = -2.0 * PI * k as f64 * m as f64 / n as f64;
                acc += s * Complex64::new(phase.cos(), phase.sin());
            }
            acc / n as f64
        })
        .collect()
}

pub fn check_same_grid(a: FrequencyGrid, b: FrequencyGrid) -> Result<()> {
    if a != b {
        return Err(ChronoError::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// Normalized pure spectral amplitude `psi(w)`.
#[derive(Debug, Clone)]
pub struct PureState {
    f: SpectralFunction,
}

impl PureState {
    /// Normalize an analytic amplitude and attach the rescaled evaluator.
    /// Errors when the mass outside the grid exceeds [`TRUNCATION_TOL`].
    pub fn from_fn(
        grid: FrequencyGrid,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let raw = SpectralFunction::from_fn(grid, f);
        Self::normalize(raw, true)
    }

    /// Normalize explicit samples; no analytic evaluator attached.
    pub fn from_samples(grid: FrequencyGrid, samples: Vec<Complex64>) -> Result<Self> {
        let raw = SpectralFunction::from_samples(grid, samples)?;
        Self::normalize(raw, false)
    }

    fn normalize(raw: SpectralFunction, check_truncation: bool) -> Result<Self> {
        let n2 = raw.norm_sq();
        if !(n2 > 0.0) {
            return Err(ChronoError::ZeroNormOutput);
        }
        if check_truncation {
            let lost = truncation_mass(&raw) / n2;
            if lost > TRUNCATION_TOL {
                return Err(ChronoError::Truncation {
                    lost_mass: lost,
                    tolerance: TRUNCATION_TOL,
                    hint: "enlarge the grid span or recenter it on the state".into(),
                });
            }
        }
        let scale = Complex64::new(1.0 / n2.sqrt(), 0.0);
        Ok(PureState {
            f: raw.scale(scale),
        })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.f.grid()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.f.samples()
    }

    pub fn function(&self) -> &SpectralFunction {
        &self.f
    }

    pub fn has_analytic(&self) -> bool {
        self.f.analytic().is_some()
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        self.f.eval(omega)
    }

    pub fn norm_sq(&self) -> f64 {
        self.f.norm_sq()
    }

    /// Discrete-Riemann inner product `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.f
            .samples()
            .iter()
            .zip(other.f.samples())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid().spacing()
    }

    /// `|<self|other>|`, the overlap modulus (fidelity up to global phase).
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm()
    }
}

/// Estimate of the state mass lying outside the grid, from the tail samples.
/// The two outermost samples on each side stand in for the exterior integral;
/// for the smooth rapidly-decaying built-in families this over-counts rather
/// than under-counts the lost mass only when the tails are still falling,
/// so we scale by the span-to-sample ratio conservatively.
fn truncation_mass(f: &SpectralFunction) -> f64 {
    let s = f.samples();
    let n = s.len();
    let dw = f.grid().spacing();
    // tail estimate: sum of the outer 2 samples each side, times a decay
    // factor assuming at-worst-Gaussian falloff continues outside
    let edge: f64 = s[0].norm_sqr() + s[1].norm_sqr() + s[n - 1].norm_sqr() + s[n - 2].norm_sqr();
    edge * dw * 4.0
}

/// Gaussian amplitude `psi(w) ~ exp(-(w-center)^2 / (2 sigma^2))`.
pub fn gaussian_state(grid: FrequencyGrid, center: f64, width: f64) -> Result<PureState> {
    if !(width > 0.0) {
        return Err(ChronoError::InvalidGrid(format!(
            "gaussian width must be positive, got {width}"
        )));
    }
    let norm = (PI * width * width).powf(-0.25);
    PureState::from_fn(grid, move |w| {
        let x = (w - center) / width;
        Complex64::new(norm * (-0.5 * x * x).exp(), 0.0)
    })
}

/// Gaussian with quadratic spectral phase `exp(i a (w-center)^2)`.
pub fn chirped_gaussian_state(
    grid: FrequencyGrid,
    center: f64,
    width: f64,
    chirp: f64,
) -> Result<PureState> {
    if !(width > 0.0) {
        return Err(ChronoError::InvalidGrid(format!(
            "gaussian width must be positive, got {width}"
        )));
    }
    let norm = (PI * width * width).powf(-0.25);
    PureState::from_fn(grid, move |w| {
        let x = w - center;
        let mag = norm * (-0.5 * (x / width) * (x / width)).exp();
        Complex64::from_polar(mag, chirp * x * x)
    })
}

/// n-th Hermite-Gaussian mode. Order 0 reduces to [`gaussian_state`].
pub fn hermite_gauss_state(
    grid: FrequencyGrid,
    order: usize,
    center: f64,
    width: f64,
) -> Result<PureState> {
    if !(width > 0.0) {
        return Err(ChronoError::InvalidGrid(format!(
            "hermite-gauss width must be positive, got {width}"
        )));
    }
    // physicists' Hermite polynomials, normalized so <HG_n|HG_m> = delta_nm
    let mut log_fact = 0.0f64;
    for k in 1..=order {
        log_fact += (k as f64).ln();
    }
    let norm = (PI * width * width).powf(-0.25)
        * (-(0.5 * (order as f64) * std::f64::consts::LN_2 + 0.5 * log_fact)).exp();
    PureState::from_fn(grid, move |w| {
        let x = (w - center) / width;
        Complex64::new(norm * hermite(order, x) * (-0.5 * x * x).exp(), 0.0)
    })
}

fn hermite(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let mut hm = 1.0;
            let mut h = 2.0 * x;
            for k in 1..n {
                let next = 2.0 * x * h - 2.0 * k as f64 * hm;
                hm = h;
                h = next;
            }
            h
        }
    }
}

/// Frequency comb of `2*half_d + 1` Gaussian peaks at `n * spacing`
/// (n = -half_d..=half_d) around the grid center, with coefficients
/// `c_n = exp(-n^2 kappa^2 / 2)`.
pub fn qudit_comb_state(
    grid: FrequencyGrid,
    half_d: usize,
    spacing: f64,
    kappa: f64,
    peak_width: f64,
) -> Result<PureState> {
    if !(spacing > 0.0) || !(peak_width > 0.0) {
        return Err(ChronoError::InvalidGrid(
            "comb spacing and peak width must be positive".into(),
        ));
    }
    if peak_width >= spacing / 6.0 {
        return Err(ChronoError::OverlappingPeaks {
            peak_width,
            limit: spacing / 6.0,
        });
    }
    let comb_extent = half_d as f64 * spacing + 8.0 * peak_width;
    if comb_extent > grid.span() / 2.0 {
        return Err(ChronoError::Truncation {
            lost_mass: 1.0,
            tolerance: TRUNCATION_TOL,
            hint: format!(
                "comb extent {comb_extent} does not fit inside half-span {}",
                grid.span() / 2.0
            ),
        });
    }
    let center = grid.center();
    let g_norm = (PI * peak_width * peak_width).powf(-0.25);
    let half = half_d as i64;
    PureState::from_fn(grid, move |w| {
        let x = w - center;
        // only peaks within 16 widths contribute above rounding level
        let lo = (((x - 16.0 * peak_width) / spacing).ceil() as i64).max(-half);
        let hi = (((x + 16.0 * peak_width) / spacing).floor() as i64).min(half);
        let mut acc = 0.0;
        let mut n = lo;
        while n <= hi {
            let c = (-(n as f64 * n as f64) * kappa * kappa / 2.0).exp();
            let u = (x - n as f64 * spacing) / peak_width;
            acc += c * g_norm * (-0.5 * u * u).exp();
            n += 1;
        }
        Complex64::new(acc, 0.0)
    })
}

/// Spectral window: same sampled shape as a state but not L2-normalized.
#[derive(Debug, Clone)]
pub struct Window {
    f: SpectralFunction,
    even_real: bool,
}

impl Window {
    /// Wrap an analytic window. `even_real` asserts `f(-w) = f(w)` real,
    /// which is verified on the grid samples to 1e-12.
    pub fn from_fn(
        grid: FrequencyGrid,
        f: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        even_real: bool,
    ) -> Result<Self> {
        let sf = SpectralFunction::from_fn(grid, f);
        Self::validate(sf, even_real)
    }

    pub fn from_samples(grid: FrequencyGrid, samples: Vec<Complex64>, even_real: bool) -> Result<Self> {
        let sf = SpectralFunction::from_samples(grid, samples)?;
        Self::validate(sf, even_real)
    }

    fn validate(sf: SpectralFunction, even_real: bool) -> Result<Self> {
        let max = sf.samples().iter().map(|c| c.norm()).fold(0.0, f64::max);
        if !(max > 0.0) {
            return Err(ChronoError::ZeroNormOutput);
        }
        if even_real {
            for (i, s) in sf.samples().iter().enumerate() {
                if s.im.abs() > 1e-12 * max {
                    return Err(ChronoError::Config(format!(
                        "window flagged even-real has imaginary part {} at sample {i}",
                        s.im
                    )));
                }
                let mirror = sf.eval(-sf.grid().point(i));
                if (mirror.re - s.re).abs() > 1e-12 * max {
                    return Err(ChronoError::Config(format!(
                        "window flagged even-real is asymmetric at sample {i}"
                    )));
                }
            }
        }
        Ok(Window { f: sf, even_real })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.f.grid()
    }

    pub fn even_real(&self) -> bool {
        self.even_real
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        self.f.eval(omega)
    }

    pub fn function(&self) -> &SpectralFunction {
        &self.f
    }
}

/// The compact-support cos^2 (Hann-shaped) window of the spectrogram scheme:
/// `phi(w) = cos^2(pi w / span)` for `|w| <= span/2`, zero outside.
/// The window is centered at 0 (frequencies act as detunings).
pub fn hamming_window(grid: FrequencyGrid, span: f64) -> Result<Window> {
    if !(span > 0.0) {
        return Err(ChronoError::InvalidGrid(format!(
            "window span must be positive, got {span}"
        )));
    }
    if span > grid.span() {
        return Err(ChronoError::InvalidGrid(format!(
            "window span {span} exceeds grid span {}",
            grid.span()
        )));
    }
    Window::from_fn(
        grid,
        move |w| {
            if w.abs() <= span / 2.0 {
                let c = (PI * w / span).cos();
                Complex64::new(c * c, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        },
        true,
    )
}

/// Unnormalized Gaussian window `exp(-w^2 / (2 width^2))` centered at 0.
pub fn gaussian_window(grid: FrequencyGrid, width: f64) -> Result<Window> {
    if !(width > 0.0) {
        return Err(ChronoError::InvalidGrid(format!(
            "window width must be positive, got {width}"
        )));
    }
    Window::from_fn(
        grid,
        move |w| Complex64::new((-0.5 * (w / width) * (w / width)).exp(), 0.0),
        true,
    )
}

/// Constant window `f = 1` (wide-open filter).
pub fn constant_window(grid: FrequencyGrid) -> Result<Window> {
    Window::from_fn(grid, |_| Complex64::new(1.0, 0.0), true)
}

/// Discretized density kernel `rho(w_n, w_m)`: Hermitian, PSD, unit trace
/// in the Riemann sense `sum rho(w_n, w_n) dw = 1`.
#[derive(Clone)]
pub struct MixedState {
    grid: FrequencyGrid,
    kernel: DMatrix<Complex64>,
    branches: Arc<OnceLock<Vec<(f64, PureState)>>>,
}

impl std::fmt::Debug for MixedState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixedState").field("grid", &self.grid).finish()
    }
}

impl MixedState {
    pub fn from_kernel(grid: FrequencyGrid, kernel: DMatrix<Complex64>) -> Result<Self> {
        let n = grid.count();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(ChronoError::InvalidGrid(format!(
                "kernel is {}x{}, grid has {n} points",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        let mut herm_err: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                herm_err = herm_err.max((kernel[(i, j)] - kernel[(j, i)].conj()).norm());
            }
        }
        if herm_err > 1e-12 {
            return Err(ChronoError::InvalidWeights(format!(
                "kernel is not Hermitian (max deviation {herm_err:.3e})"
            )));
        }
        let trace: f64 = (0..n).map(|i| kernel[(i, i)].re).sum::<f64>() * grid.spacing();
        if (trace - 1.0).abs() > 1e-10 {
            return Err(ChronoError::InvalidWeights(format!(
                "kernel trace is {trace}, expected 1"
            )));
        }
        Ok(MixedState {
            grid,
            kernel,
            branches: Arc::new(OnceLock::new()),
        })
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    /// `Tr(rho^2)` in the Riemann convention.
    pub fn purity(&self) -> f64 {
        let dw = self.grid.spacing();
        self.kernel.iter().map(|c| c.norm_sqr()).sum::<f64>() * dw * dw
    }

    /// Eigen-decompose into pure branches with probabilities summing to 1,
    /// truncated at cumulative weight `1 - 1e-10`, sorted descending.
    pub fn branches(&self) -> &[(f64, PureState)] {
        self.branches.get_or_init(|| {
            let dw = self.grid.spacing();
            let scaled = self.kernel.clone() * Complex64::new(dw, 0.0);
            let eig = nalgebra::SymmetricEigen::new(scaled);
            let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| {
                eig.eigenvalues[b]
                    .partial_cmp(&eig.eigenvalues[a])
                    .unwrap()
            });
            let mut out = Vec::new();
            let mut cum = 0.0;
            for &i in &order {
                let w = eig.eigenvalues[i];
                if w <= 0.0 || cum >= 1.0 - 1e-10 {
                    break;
                }
                // eigenvector has plain-sum norm 1; rescale to Riemann norm
                let samples: Vec<Complex64> = eig
                    .eigenvectors
                    .column(i)
                    .iter()
                    .map(|c| c / Complex64::new(dw.sqrt(), 0.0))
                    .collect();
                if let Ok(state) = PureState::from_samples(self.grid, samples) {
                    out.push((w, state));
                    cum += w;
                }
            }
            out
        })
    }

    /// Smallest eigenvalue of the Riemann-scaled kernel.
    pub fn min_eigenvalue(&self) -> f64 {
        let dw = self.grid.spacing();
        let scaled = self.kernel.clone() * Complex64::new(dw, 0.0);
        let eig = nalgebra::SymmetricEigen::new(scaled);
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Statistical mixture of pure states on one grid.
pub fn mix_states(weights: &[f64], states: &[PureState]) -> Result<MixedState> {
    if weights.len() != states.len() || states.is_empty() {
        return Err(ChronoError::InvalidWeights(
            "weights and states must be non-empty and of equal length".into(),
        ));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(ChronoError::InvalidWeights("negative weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(ChronoError::InvalidWeights(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let grid = states[0].grid();
    for s in states {
        check_same_grid(grid, s.grid())?;
    }
    let n = grid.count();
    let mut kernel = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (w, s) in weights.iter().zip(states) {
        let a = s.amplitudes();
        for i in 0..n {
            for j in 0..n {
                kernel[(i, j)] += Complex64::new(*w, 0.0) * a[i] * a[j].conj();
            }
        }
    }
    MixedState::from_kernel(grid, kernel)
}

/// Either a pure amplitude or a mixed kernel; most pipeline entry points
/// accept both.
#[derive(Debug, Clone)]
pub enum State {
    Pure(PureState),
    Mixed(MixedState),
}

impl State {
    pub fn grid(&self) -> FrequencyGrid {
        match self {
            State::Pure(p) => p.grid(),
            State::Mixed(m) => m.grid(),
        }
    }

    /// Weighted pure branches: a single unit-weight branch for pure input,
    /// the eigen-branches for mixed input.
    pub fn branches(&self) -> Vec<(f64, PureState)> {
        match self {
            State::Pure(p) => vec![(1.0, p.clone())],
            State::Mixed(m) => m.branches().to_vec(),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            State::Pure(_) => 1.0,
            State::Mixed(m) => m.purity(),
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<MixedState> for State {
    fn from(m: MixedState) -> Self {
        State::Mixed(m)
    }
}

/// Time-of-arrival amplitude on the dual grid.
#[derive(Debug, Clone)]
pub struct TimeAmplitude {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl TimeAmplitude {
    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn norm_sq(&self) -> f64 {
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }
}

/// Fourier transform to the time-of-arrival representation with the
/// creation-operator kernel `e^{+i w t}`, unitary normalization
/// `1/sqrt(2 pi)` so Parseval holds exactly on the dual grid.
pub fn to_time_domain(state: &PureState) -> TimeAmplitude {
    let grid = state.grid();
    let tg = grid.dual_time_grid();
    let dw = grid.spacing();
    let amps = state.amplitudes();
    let pref = dw / (2.0 * PI).sqrt();
    let samples: Vec<Complex64> = tg
        .points()
        .map(|t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (n, a) in amps.iter().enumerate() {
                let phase = grid.point(n) * t;
                acc += a * Complex64::new(phase.cos(), phase.sin());
            }
            acc * pref
        })
        .collect();
    TimeAmplitude { grid: tg, samples }
}

/// Inverse bridge: time samples on the dual grid back to the frequency grid
/// (kernel `e^{-i w t}`, same unitary normalization).
pub fn to_frequency_domain(time: &TimeAmplitude, grid: FrequencyGrid) -> Result<PureState> {
    let tg = time.grid();
    if tg.count() != grid.count()
        || (tg.spacing() - grid.dual_time_grid().spacing()).abs() > 1e-12 * tg.spacing()
    {
        return Err(ChronoError::GridMismatch(
            "time grid is not the dual of the frequency grid".into(),
        ));
    }
    let dt = tg.spacing();
    let pref = dt / (2.0 * PI).sqrt();
    let samples: Vec<Complex64> = grid
        .points()
        .map(|w| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, s) in time.samples.iter().enumerate() {
                let phase = -w * tg.point(m);
                acc += s * Complex64::new(phase.cos(), phase.sin());
            }
            acc * pref
        })
        .collect();
    PureState::from_samples(grid, samples)
}
