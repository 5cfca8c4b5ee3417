//! Inverse problems: phase retrieval from spectrograms, recovery of the
//! target amplitude from lossy-gate coincidence maps, correlation-function
//! recovery for general finite-bandwidth kernels, and pseudo-Wigner
//! extraction from frequency-shear coincidence maps.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ChronoError, Result};
use crate::grid::FrequencyGrid;
use crate::interferometer::GateKernel;
use crate::phase_space::{
    lattice_evaluator, reconstruct_from_wigner, MapKind, PhaseSpaceMap,
};
use crate::state::{Eval, PureState, Window};

/// Ambiguities inherent to magnitude-only retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambiguity {
    GlobalPhase,
    ConjugateTimeReversal,
}

/// Output of [`phase_retrieve`].
#[derive(Debug, Clone)]
pub struct RetrievalResult {
    pub estimate: PureState,
    /// Self-consistency per iteration (1 - relative magnitude residual).
    pub fidelity_history: Vec<f64>,
    pub ambiguities: Vec<Ambiguity>,
    pub iterations: usize,
    pub converged: bool,
    /// Final relative L2 error between |STFT(estimate)| and the target
    /// magnitudes.
    pub self_consistency_error: f64,
}

impl RetrievalResult {
    /// Overlap with a known state, maximized over the declared ambiguity
    /// branches (global phase is implicit in the modulus).
    pub fn aligned_fidelity(&self, truth: &PureState) -> f64 {
        let direct = truth.fidelity(&self.estimate);
        if self.ambiguities.contains(&Ambiguity::ConjugateTimeReversal) {
            direct.max(truth.fidelity(&conj_time_reversal(&self.estimate)))
        } else {
            direct
        }
    }
}

/// Conjugate + reflection about the grid center: the classic invariance of
/// spectrogram magnitudes under even-real windows.
pub fn conj_time_reversal(state: &PureState) -> PureState {
    let g = state.grid();
    let n = g.count();
    let a = state.amplitudes();
    let samples: Vec<Complex64> = (0..n).map(|i| a[(n - i) % n].conj()).collect();
    PureState::from_samples(g, samples).expect("reflection preserves the norm")
}

/// Infer the state grid a spectrogram was computed on and check the map
/// axes carry the redundancy the retrieval needs (time axis = the grid's
/// dual, i.e. window hop equals the map axis step).
fn spectrogram_grid(map: &PhaseSpaceMap) -> Result<FrequencyGrid> {
    let fa = map.freq_axis;
    let grid = FrequencyGrid::from_spacing(fa.count, fa.value(fa.count / 2), fa.step)?;
    let dual = grid.dual_time_grid();
    let ta = map.time_axis;
    if ta.count != dual.count() || (ta.step - dual.spacing()).abs() > 1e-12 * dual.spacing() {
        return Err(ChronoError::Config(format!(
            "spectrogram time axis (step {}, count {}) is not the dual of its \
             frequency axis (need step {}, count {})",
            ta.step,
            ta.count,
            dual.spacing(),
            dual.count()
        )));
    }
    Ok(grid)
}

/// Alternating-projection (Gerchberg-Saxton style) phase retrieval from a
/// spectrogram with a fully known window. Five seeded random restarts run in
/// parallel; the best self-consistency wins, ties broken by lowest seed.
/// Non-convergence is reported in the result, never as an error.
pub fn phase_retrieve(
    spec: &PhaseSpaceMap,
    window: &Window,
    init_seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<RetrievalResult> {
    spec.expect_kind(MapKind::Spectrogram)?;
    let grid = spectrogram_grid(spec)?;
    let n = grid.count();
    let ta = spec.time_axis;
    let fa = spec.freq_axis;
    let we = lattice_evaluator(window.function());

    // window samples phi(w_n - mu_m) and the diagonal normal operator
    let phi_nm: Vec<Complex64> = (0..n * fa.count)
        .map(|idx| we(grid.point(idx / fa.count) - fa.value(idx % fa.count)))
        .collect();
    let v_diag: Vec<f64> = (0..n)
        .map(|i| {
            (0..fa.count)
                .map(|m| phi_nm[i * fa.count + m].norm_sqr())
                .sum::<f64>()
                * fa.step
        })
        .collect();
    let v_max = v_diag.iter().cloned().fold(0.0, f64::max);
    if !(v_max > 0.0) {
        return Err(ChronoError::DivisionFloor(
            "window never overlaps the frequency axis".into(),
        ));
    }
    // Fourier kernel between the grid and its dual time axis
    let kernel: Vec<Complex64> = (0..n * ta.count)
        .map(|idx| {
            let phase = grid.point(idx / ta.count) * ta.value(idx % ta.count);
            Complex64::new(phase.cos(), phase.sin())
        })
        .collect();
    let target_mag: Vec<f64> = spec.values().iter().map(|v| v.max(0.0).sqrt()).collect();
    let target_norm: f64 = target_mag.iter().map(|m| m * m).sum::<f64>().sqrt();
    if !(target_norm > 0.0) {
        return Err(ChronoError::ZeroNormOutput);
    }

    let restarts: Vec<RetrievalResult> = (0..5u64)
        .into_par_iter()
        .map(|r| {
            run_restart(
                grid,
                ta.count,
                fa,
                &phi_nm,
                &v_diag,
                v_max,
                &kernel,
                &target_mag,
                target_norm,
                init_seed + r,
                max_iter,
                tol,
            )
        })
        .collect();
    let mut best = 0;
    for (i, r) in restarts.iter().enumerate() {
        if r.self_consistency_error < restarts[best].self_consistency_error - 1e-15 {
            best = i;
        }
    }
    let mut result = restarts[best].clone();

    // declare the conjugate-time-reversal ambiguity when the flipped
    // estimate explains the data equally well
    let flipped = conj_time_reversal(&result.estimate);
    let err_flip = magnitude_residual(
        &flipped, ta.count, fa, &phi_nm, &kernel, &target_mag, target_norm,
    );
    if (err_flip - result.self_consistency_error).abs() < 1e-6 + 0.1 * result.self_consistency_error
    {
        result.ambiguities.push(Ambiguity::ConjugateTimeReversal);
    }
    Ok(result)
}

fn stft_forward(
    amps: &[Complex64],
    nt: usize,
    fa: crate::grid::Axis,
    phi_nm: &[Complex64],
    kernel: &[Complex64],
    dw: f64,
) -> Vec<Complex64> {
    let n = amps.len();
    let rows: Vec<Vec<Complex64>> = (0..nt)
        .into_par_iter()
        .map(|k| {
            (0..fa.count)
                .map(|m| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..n {
                        acc += phi_nm[i * fa.count + m] * amps[i] * kernel[i * nt + k];
                    }
                    acc * dw
                })
                .collect()
        })
        .collect();
    rows.into_iter().flatten().collect()
}

fn magnitude_residual(
    state: &PureState,
    nt: usize,
    fa: crate::grid::Axis,
    phi_nm: &[Complex64],
    kernel: &[Complex64],
    target_mag: &[f64],
    target_norm: f64,
) -> f64 {
    let x = stft_forward(
        state.amplitudes(),
        nt,
        fa,
        phi_nm,
        kernel,
        state.grid().spacing(),
    );
    let mut num = 0.0;
    for (c, m) in x.iter().zip(target_mag) {
        let d = c.norm() - m;
        num += d * d;
    }
    num.sqrt() / target_norm
}

#[allow(clippy::too_many_arguments)]
fn run_restart(
    grid: FrequencyGrid,
    nt: usize,
    fa: crate::grid::Axis,
    phi_nm: &[Complex64],
    v_diag: &[f64],
    v_max: f64,
    kernel: &[Complex64],
    target_mag: &[f64],
    target_norm: f64,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> RetrievalResult {
    let n = grid.count();
    let dw = grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            Complex64::new(re, im)
        })
        .collect();
    normalize(&mut amps, dw);

    let mut history = Vec::with_capacity(max_iter);
    let mut err = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..max_iter {
        iterations = it + 1;
        let x = stft_forward(&amps, nt, fa, phi_nm, kernel, dw);
        // magnitude residual of the current estimate
        let mut num = 0.0;
        for (c, m) in x.iter().zip(target_mag) {
            let d = c.norm() - m;
            num += d * d;
        }
        err = num.sqrt() / target_norm;
        history.push(1.0 - err);
        if err < tol {
            converged = true;
            break;
        }
        // impose the measured magnitudes, keep the phases
        let x_proj: Vec<Complex64> = x
            .iter()
            .zip(target_mag)
            .map(|(c, m)| {
                if c.norm() > 0.0 {
                    c / c.norm() * m
                } else {
                    Complex64::new(*m, 0.0)
                }
            })
            .collect();
        // exact least-squares backprojection (diagonal normal operator)
        for i in 0..n {
            if v_diag[i] < 1e-12 * v_max {
                amps[i] = Complex64::new(0.0, 0.0);
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..nt {
                let ker = kernel[i * nt + k].conj();
                for m in 0..fa.count {
                    acc += phi_nm[i * fa.count + m].conj() * ker * x_proj[k * fa.count + m];
                }
            }
            let dt = 2.0 * PI / (nt as f64 * dw);
            amps[i] = acc * dt * fa.step / (2.0 * PI * v_diag[i]);
        }
        normalize(&mut amps, dw);
    }
    let estimate = PureState::from_samples(grid, amps).expect("normalized estimate");
    RetrievalResult {
        estimate,
        fidelity_history: history,
        ambiguities: vec![Ambiguity::GlobalPhase],
        iterations,
        converged,
        self_consistency_error: err,
    }
}

fn normalize(amps: &mut [Complex64], dw: f64) {
    let n2: f64 = amps.iter().map(|c| c.norm_sqr()).sum::<f64>() * dw;
    if n2 > 0.0 {
        let s = 1.0 / n2.sqrt();
        for a in amps.iter_mut() {
            *a *= s;
        }
    }
}

/// Invert a separable finite-bandwidth coincidence map to the target state:
/// the map encodes `I = (1 - beta * pi W_w)/2` with `w = psi * U_minus`, so
/// `W_w = (1 - 2I)/(beta pi)`; reconstruct w, divide by `U_minus` where it
/// exceeds the floor (1e-3 of its max), renormalize.
pub fn recover_separable(
    coinc: &PhaseSpaceMap,
    u_minus: &Eval,
    beta: f64,
) -> Result<PureState> {
    coinc.expect_kind(MapKind::CoincidenceMap)?;
    if !(beta > 0.0) {
        return Err(ChronoError::Config(format!("beta must be positive, got {beta}")));
    }
    let values: Vec<f64> = coinc
        .values()
        .iter()
        .map(|i| (1.0 - 2.0 * i) / (beta * PI))
        .collect();
    let w_map = PhaseSpaceMap::new(MapKind::Cw, coinc.time_axis, coinc.freq_axis, values)?;
    let w_state = reconstruct_from_wigner(&w_map, None)?;
    let g = w_state.grid();
    let u_vals: Vec<Complex64> = g.points().map(|w| u_minus(w)).collect();
    let u_max = u_vals.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let floor = 1e-3 * u_max;
    let w_max = w_state
        .amplitudes()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let mut samples = Vec::with_capacity(g.count());
    let mut bad: Vec<f64> = Vec::new();
    for (i, (a, u)) in w_state.amplitudes().iter().zip(&u_vals).enumerate() {
        if u.norm() < floor {
            if a.norm() > 1e-3 * w_max {
                bad.push(g.point(i));
            }
            samples.push(Complex64::new(0.0, 0.0));
        } else {
            samples.push(a / u);
        }
    }
    if let (Some(lo), Some(hi)) = (bad.first(), bad.last()) {
        return Err(ChronoError::DivisionFloor(format!(
            "gate kernel U_minus is below the division floor over [{lo:.4}, {hi:.4}] \
             where the recovered amplitude is non-negligible"
        )));
    }
    PureState::from_samples(g, samples)
}

/// Extract the dominant pseudo-Wigner term from a frequency-shear (cx)
/// coincidence map: `PW_{C2_1 psi} = (1 - 2I) / (p_1 alpha_1)`.
pub fn extract_cpw_from_cx(
    coinc: &PhaseSpaceMap,
    p: &[f64],
    alpha: &[f64],
) -> Result<PhaseSpaceMap> {
    coinc.expect_kind(MapKind::CoincidenceMap)?;
    if p.is_empty() || alpha.is_empty() {
        return Err(ChronoError::Config("empty decomposition weights".into()));
    }
    let scale = p[0] * alpha[0];
    if scale.abs() < 1e-10 {
        return Err(ChronoError::DivisionFloor(format!(
            "dominant decomposition weight p1*alpha1 = {scale} is below floor"
        )));
    }
    let values: Vec<f64> = coinc
        .values()
        .iter()
        .map(|i| (1.0 - 2.0 * i) / scale)
        .collect();
    PhaseSpaceMap::new(MapKind::Cpw, coinc.time_axis, coinc.freq_axis, values)
}

/// Result of [`recover_correlation_general`]: the two-frequency correlation
/// `C(w, w') = psi(w) psi*(w')` (or its mixed-state generalization) on the
/// product grid, with a mask of points where every kernel-factor divisor
/// fell below the floor.
#[derive(Debug, Clone)]
pub struct CorrelationRecovery {
    pub grid: FrequencyGrid,
    pub c: DMatrix<Complex64>,
    pub unmasked: DMatrix<bool>,
    pub masked_fraction: f64,
}

/// Recover the correlation function from `M >= J(J+1)/2` coincidence maps
/// taken with known real calibration weights `x_vectors[m][j]` scaling the
/// kernel terms. Per map point, `1 - 2I_m = sum_j x_j^2 A_jj +
/// 2 sum_{j<k} x_j x_k Re A_jk` with `A_jk = beta_jk W_jk` (cross-Wigner
/// terms); the symmetric unknowns are solved by least squares, the
/// cross-Wigners Fourier-transformed back to symmetrized products
/// `g_j(w) g_k*(w') + g_k(w) g_j*(w')`, and the known factor products
/// divided out above a floor (1e-3 of each divisor's max).
///
/// The map frequency axis must be the half-step lattice covering the grid
/// (so every pairwise mean `(w_n + w_m)/2` is an axis point). Frequency
/// separations beyond the Nyquist limit of the map's time-delay sampling
/// are masked rather than recovered; with real
/// calibration weights the imaginary parts of off-diagonal `A_jk` are
/// unobservable, which is invisible exactly when kernel and state are real.
pub fn recover_correlation_general(
    maps: &[PhaseSpaceMap],
    x_vectors: &[Vec<f64>],
    kernel: &GateKernel,
    reference: &PureState,
) -> Result<CorrelationRecovery> {
    let GateKernel::General {
        grid,
        weights: _,
        p1,
        p2,
    } = kernel
    else {
        return Err(ChronoError::Config(
            "general-kernel recovery needs a rank-decomposed kernel".into(),
        ));
    };
    let grid = *grid;
    let j_rank = p1.len();
    let n_sym = j_rank * (j_rank + 1) / 2;
    if maps.len() != x_vectors.len() || maps.len() < n_sym {
        return Err(ChronoError::RankDeficient(format!(
            "{} calibration maps for {n_sym} symmetric unknowns (rank {j_rank})",
            maps.len()
        )));
    }
    for m in maps {
        m.expect_kind(MapKind::CoincidenceMap)?;
        if m.time_axis != maps[0].time_axis || m.freq_axis != maps[0].freq_axis {
            return Err(ChronoError::GridMismatch(
                "calibration maps must share axes".into(),
            ));
        }
    }
    let ta = maps[0].time_axis;
    let fa = maps[0].freq_axis;
    let n = grid.count();
    // the frequency axis must hold all pairwise means (w_n + w_m)/2
    if fa.count != 2 * n - 1
        || (fa.step - grid.spacing() / 2.0).abs() > 1e-12 * grid.spacing()
        || (fa.start - grid.min()).abs() > 1e-9 * grid.spacing()
    {
        return Err(ChronoError::Config(
            "map frequency axis must be the half-step lattice over the state grid".into(),
        ));
    }

    // least-squares design matrix over the calibration weights
    let design = DMatrix::from_fn(maps.len(), n_sym, |m, col| {
        let (j, k) = sym_index(col, j_rank);
        if j == k {
            x_vectors[m][j] * x_vectors[m][j]
        } else {
            2.0 * x_vectors[m][j] * x_vectors[m][k]
        }
    });
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if svd.singular_values.iter().filter(|s| **s > 1e-10 * s_max).count() < n_sym {
        return Err(ChronoError::RankDeficient(
            "calibration weight vectors do not span the symmetric unknowns".into(),
        ));
    }
    let pinv = svd.pseudo_inverse(1e-12 * s_max).map_err(|e| {
        ChronoError::RankDeficient(format!("design matrix pseudo-inverse failed: {e}"))
    })?;

    // per map point: A-values for each symmetric pair
    let npts = ta.count * fa.count;
    let mut a_maps: Vec<Vec<f64>> = vec![vec![0.0; npts]; n_sym];
    for idx in 0..npts {
        let y = nalgebra::DVector::from_fn(maps.len(), |m, _| 1.0 - 2.0 * maps[m].values()[idx]);
        let a = &pinv * y;
        for (col, am) in a_maps.iter_mut().enumerate() {
            am[idx] = a[col];
        }
    }

    // beta_{jk} = Int |phi|^2 p1_j p1_k* by quadrature on the grid
    let dw = grid.spacing();
    let phi2: Vec<f64> = reference.amplitudes().iter().map(|c| c.norm_sqr()).collect();
    let beta = |j: usize, k: usize| -> Complex64 {
        (0..n)
            .map(|i| Complex64::new(phi2[i], 0.0) * p1[j].samples()[i] * p1[k].samples()[i].conj())
            .sum::<Complex64>()
            * Complex64::new(dw, 0.0)
    };

    // Fourier transform each Re(A_jk) map along tau and divide out the
    // symmetrized factor product
    let p2v: Vec<&[Complex64]> = p2.iter().map(|f| f.samples()).collect();
    let mut c = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let mut unmasked = DMatrix::from_element(n, n, false);
    let mut masked_count = 0usize;
    for wn in 0..n {
        for wm in 0..n {
            // mu = (w_n + w_m)/2 is axis point wn + wm; x = (w_m - w_n)/2
            let mu_idx = wn + wm;
            let x = (grid.point(wm) - grid.point(wn)) / 2.0;
            // the tau sampling cannot resolve separations past its Nyquist
            // limit; past it the transform aliases near-diagonal content
            if 2.0 * x.abs() * ta.step > PI * (1.0 + 1e-9) {
                masked_count += 1;
                continue;
            }
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = 0.0;
            for col in 0..n_sym {
                let (j, k) = sym_index(col, j_rank);
                let b = beta(j, k);
                if b.norm() < 1e-12 {
                    continue;
                }
                // FT of Re(W-bar_jk) at lag x: (pi/2) * symmetrized product
                let mut ft = Complex64::new(0.0, 0.0);
                for it in 0..ta.count {
                    let phase = -2.0 * x * ta.value(it);
                    // a_maps holds Re(beta_jk W_jk); take beta out after FT
                    ft += Complex64::new(phase.cos(), phase.sin())
                        * a_maps[col][it * fa.count + mu_idx];
                }
                ft *= Complex64::new(ta.step, 0.0);
                let sym = (ft / b) * Complex64::new(2.0 / PI, 0.0);
                // divisor: p2_j(w_n) p2_k*(w_m) + p2_k(w_n) p2_j*(w_m)
                let d = p2v[j][wn] * p2v[k][wm].conj() + p2v[k][wn] * p2v[j][wm].conj();
                let d_floor = 1e-3
                    * (0..n)
                        .map(|i| (p2v[j][i] * p2v[k][i].conj()).norm() * 2.0)
                        .fold(0.0, f64::max);
                if d.norm() < d_floor {
                    continue;
                }
                let weight = d.norm_sqr();
                num += (sym / d) * Complex64::new(weight, 0.0);
                den += weight;
            }
            if den > 0.0 {
                c[(wn, wm)] = num / Complex64::new(den, 0.0);
                unmasked[(wn, wm)] = true;
            } else {
                masked_count += 1;
            }
        }
    }
    let masked_fraction = masked_count as f64 / (n * n) as f64;
    // the anti-aliasing mask alone removes a quarter of the square and the
    // division floor removes everything outside the factor support, so only
    // a near-total mask indicates degenerate input
    if masked_fraction > 0.95 {
        return Err(ChronoError::DivisionFloor(format!(
            "{:.0}% of the correlation domain is masked by the division floor",
            100.0 * masked_fraction
        )));
    }
    Ok(CorrelationRecovery {
        grid,
        c,
        unmasked,
        masked_fraction,
    })
}

/// Column -> (j, k) with j <= k for the symmetric unknown layout.
fn sym_index(col: usize, rank: usize) -> (usize, usize) {
    let mut c = col;
    for j in 0..rank {
        let row_len = rank - j;
        if c < row_len {
            return (j, j + c);
        }
        c -= row_len;
    }
    unreachable!("symmetric index out of range")
}
