//! Two-photon interferometry: entangling gates acting on a reference/target
//! photon pair, per-port time and frequency shifts, and the balanced
//! beam-splitter coincidence probability for non-resolved detectors.
//!
//! Joint amplitudes are kept as closures over continuous frequencies, so the
//! sqrt(2)-rotated coordinates of the frequency beam-splitter are evaluated
//! exactly (analytically when the inputs carry evaluators, band-limited
//! otherwise) rather than resampled.
//!
//! Coincidence pipelines and their closed forms (each verified by the test
//! suites against the direct phase-space computation):
//! * `freq_bs`: shift the idler axis by sqrt(2)·mu and phase the signal by
//!   e^{-i sqrt(2) tau w}; the swap overlap is exactly pi·W(mu, tau), so
//!   I = (1 - pi W)/2.
//! * `freq_bs` + pre-filter: frequency-shift the target by mu *before*
//!   filtering, then gate and phase the signal by e^{+i sqrt(2) tau w};
//!   the overlap is the windowed pseudo-Wigner PW(tau, mu).
//! * `none`: reference detuned by mu on one port, target phased by
//!   e^{i w tau} on the other; the overlap is |X(tau,mu)|², the spectrogram.
//! * `cx`: frequency shifts (-mu on the reference port, -2mu on the target
//!   port) and phase e^{-2i tau w} on the reference port; the overlap is
//!   sum_j s_j alpha_j PW_{C2_j psi}(tau, mu) over the reference-kernel
//!   Schmidt terms.
//! * `kernel`: as freq_bs with the (generally lossy) kernel folded into the
//!   joint amplitude; the lost norm is the gate success probability.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ChronoError, Result};
use crate::grid::{Axis, FrequencyGrid};
use crate::phase_space::{lattice_evaluator, MapKind, PhaseSpaceMap};
use crate::state::{check_same_grid, Eval, PureState, SpectralFunction, State, Window};

/// Joint spectral amplitude as a function of (signal, idler) frequencies.
pub type JointFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// Which port of the interferometer a shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Port {
    Signal,
    Idler,
}

/// Entangling gate selection for [`coincidence_map`].
#[derive(Debug, Clone)]
pub enum Gate {
    FreqBs,
    Cx,
    None,
    Kernel(GateKernel),
}

/// Two-photon state after a gate: a weighted list of joint-amplitude
/// branches (rank decomposition for mixed inputs). `success_probability`
/// is the squared norm kept by a lossy gate (1 for unitary gates).
#[derive(Clone)]
pub struct TwoPhotonAmplitude {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    branches: Vec<(f64, JointFn)>,
    success_probability: f64,
}

impl std::fmt::Debug for TwoPhotonAmplitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoPhotonAmplitude")
            .field("grid_s", &self.grid_s)
            .field("grid_i", &self.grid_i)
            .field("branches", &self.branches.len())
            .field("success_probability", &self.success_probability)
            .finish()
    }
}

impl TwoPhotonAmplitude {
    pub fn grid_s(&self) -> FrequencyGrid {
        self.grid_s
    }

    pub fn grid_i(&self) -> FrequencyGrid {
        self.grid_i
    }

    pub fn success_probability(&self) -> f64 {
        self.success_probability
    }

    pub fn branches(&self) -> &[(f64, JointFn)] {
        &self.branches
    }

    /// Weighted joint norm `sum_k w_k IntInt |Psi_k|^2` by product-grid
    /// quadrature.
    pub fn norm_sq(&self) -> f64 {
        let pts_s: Vec<f64> = self.grid_s.points().collect();
        let pts_i: Vec<f64> = self.grid_i.points().collect();
        let dd = self.grid_s.spacing() * self.grid_i.spacing();
        self.branches
            .iter()
            .map(|(w, psi)| {
                // parallel rows, sequential reduction for determinism
                let rows: Vec<f64> = pts_s
                    .par_iter()
                    .map(|&a| pts_i.iter().map(|&b| psi(a, b).norm_sqr()).sum::<f64>())
                    .collect();
                w * rows.iter().sum::<f64>() * dd
            })
            .sum()
    }

    /// Sample one branch on the product grid.
    pub fn branch_matrix(&self, k: usize) -> DMatrix<Complex64> {
        let psi = &self.branches[k].1;
        DMatrix::from_fn(self.grid_s.count(), self.grid_i.count(), |n, m| {
            psi(self.grid_s.point(n), self.grid_i.point(m))
        })
    }
}

/// Mass of the state lying farther than `radius` from the grid center.
fn mass_outside(p: &PureState, radius: f64) -> f64 {
    let g = p.grid();
    let c = g.center();
    p.amplitudes()
        .iter()
        .enumerate()
        .filter(|(n, _)| (g.point(*n) - c).abs() > radius)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        * g.spacing()
}

fn check_rotated_containment(label: &str, p: &PureState) -> Result<()> {
    let radius = p.grid().span() / (2.0 * SQRT_2);
    let lost = mass_outside(p, radius);
    if lost > 1e-9 {
        return Err(ChronoError::Truncation {
            lost_mass: lost,
            tolerance: 1e-9,
            hint: format!(
                "{label} extends beyond the sqrt(2)-rotated safe radius {radius:.4}; \
                 enlarge the grid span by a factor of at least sqrt(2)"
            ),
        });
    }
    Ok(())
}

/// Frequency beam-splitter gate on a reference/target pair:
/// `Psi(ws, wi) = phi((ws+wi)/sqrt2) * psi((ws-wi)/sqrt2)`.
/// Mixed targets propagate branch by branch.
pub fn frequency_beam_splitter(reference: &PureState, target: &State) -> Result<TwoPhotonAmplitude> {
    apply_kernel_gate(reference, target, None)
}

/// Frequency beam-splitter with a finite-bandwidth kernel folded in:
/// the joint amplitude gains the factor `U(w_+, w_-)`, and the norm it
/// loses is recorded as the gate success probability.
pub fn finite_bandwidth_apply(
    reference: &PureState,
    target: &State,
    kernel: &GateKernel,
) -> Result<TwoPhotonAmplitude> {
    apply_kernel_gate(reference, target, Some(kernel))
}

fn apply_kernel_gate(
    reference: &PureState,
    target: &State,
    kernel: Option<&GateKernel>,
) -> Result<TwoPhotonAmplitude> {
    check_same_grid(reference.grid(), target.grid())?;
    check_rotated_containment("reference", reference)?;
    let grid = reference.grid();
    let phi = lattice_evaluator(reference.function());
    let kernel_fn: Option<Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>> =
        kernel.map(|k| k.evaluator());

    let mut branches = Vec::new();
    for (w, branch) in target.branches() {
        check_rotated_containment("target", &branch)?;
        let psi = lattice_evaluator(branch.function());
        let phi = phi.clone();
        let kf = kernel_fn.clone();
        let joint: JointFn = Arc::new(move |ws: f64, wi: f64| {
            let u = (ws + wi) / SQRT_2;
            let v = (ws - wi) / SQRT_2;
            let base = phi(u) * psi(v);
            match &kf {
                Some(k) => base * k(u, v),
                None => base,
            }
        });
        branches.push((w, joint));
    }
    let mut out = TwoPhotonAmplitude {
        grid_s: grid,
        grid_i: grid,
        branches,
        success_probability: 1.0,
    };
    let norm = out.norm_sq();
    match kernel {
        None => {
            if (norm - 1.0).abs() > 1e-8 {
                return Err(ChronoError::Truncation {
                    lost_mass: (norm - 1.0).abs(),
                    tolerance: 1e-8,
                    hint: "rotated joint amplitude is not norm-preserving on this grid".into(),
                });
            }
            out.success_probability = 1.0;
        }
        Some(_) => {
            if !(norm > 0.0) {
                return Err(ChronoError::ZeroNormOutput);
            }
            out.success_probability = norm;
        }
    }
    Ok(out)
}

/// Frequency-shear gate: `|w>|w'> -> |w>|w' + w>` on the product state, so
/// `Psi(ws, wi) = phi(ws) * psi(wi - ws)`. A point-like reference at w0
/// therefore puts the idler spectrum at `psi` shifted by +w0.
pub fn cx_gate(reference: &PureState, target: &PureState) -> Result<TwoPhotonAmplitude> {
    check_same_grid(reference.grid(), target.grid())?;
    let grid = reference.grid();
    let phi = lattice_evaluator(reference.function());
    let psi = lattice_evaluator(target.function());
    let joint: JointFn = Arc::new(move |ws: f64, wi: f64| phi(ws) * psi(wi - ws));
    let out = TwoPhotonAmplitude {
        grid_s: grid,
        grid_i: grid,
        branches: vec![(1.0, joint)],
        success_probability: 1.0,
    };
    let norm = out.norm_sq();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(ChronoError::Truncation {
            lost_mass: (norm - 1.0).abs(),
            tolerance: 1e-8,
            hint: "sheared joint amplitude leaks off the grid; recenter or enlarge".into(),
        });
    }
    Ok(out)
}

/// Per-port shifts: a time shift multiplies the port's axis by `e^{i w tau}`;
/// a frequency shift translates that axis by `mu`.
pub fn apply_shifts(
    psi: &TwoPhotonAmplitude,
    tau: f64,
    mu: f64,
    port: Port,
) -> TwoPhotonAmplitude {
    let branches = psi
        .branches
        .iter()
        .map(|(w, f)| {
            let f = f.clone();
            let joint: JointFn = match port {
                Port::Signal => Arc::new(move |ws: f64, wi: f64| {
                    let phase = ws * tau;
                    f(ws - mu, wi) * Complex64::new(phase.cos(), phase.sin())
                }),
                Port::Idler => Arc::new(move |ws: f64, wi: f64| {
                    let phase = wi * tau;
                    f(ws, wi - mu) * Complex64::new(phase.cos(), phase.sin())
                }),
            };
            (*w, joint)
        })
        .collect();
    TwoPhotonAmplitude {
        grid_s: psi.grid_s,
        grid_i: psi.grid_i,
        branches,
        success_probability: psi.success_probability,
    }
}

/// Swap overlap `IntInt Psi(a,b) Psi*(b,a) da db` on the product grid.
fn swap_overlap(points: &[f64], dw: f64, psi: &JointFn) -> Complex64 {
    let rows: Vec<Complex64> = points
        .par_iter()
        .map(|&a| {
            let mut row = Complex64::new(0.0, 0.0);
            for &b in points {
                row += psi(a, b) * psi(b, a).conj();
            }
            row
        })
        .collect();
    rows.iter().sum::<Complex64>() * Complex64::new(dw * dw, 0.0)
}

/// Coincidence probability of non-resolved detectors after the balanced
/// beam-splitter: `I = (1 - Re sum_k w_k IntInt Psi_k(a,b) Psi_k*(b,a))/2`.
/// The amplitude norm must equal the recorded success probability.
pub fn hom_coincidence(psi: &TwoPhotonAmplitude) -> Result<f64> {
    if psi.grid_s != psi.grid_i {
        return Err(ChronoError::GridMismatch(
            "swap overlap needs identical signal/idler grids".into(),
        ));
    }
    let norm = psi.norm_sq();
    if (norm - psi.success_probability).abs() > 1e-6 {
        return Err(ChronoError::InvalidWeights(format!(
            "two-photon amplitude norm {norm} does not match the recorded success \
             probability {}",
            psi.success_probability
        )));
    }
    let points: Vec<f64> = psi.grid_s.points().collect();
    let dw = psi.grid_s.spacing();
    let overlap: Complex64 = psi
        .branches
        .iter()
        .map(|(w, f)| swap_overlap(&points, dw, f) * Complex64::new(*w, 0.0))
        .sum();
    let i = 0.5 * (1.0 - overlap.re);
    if !(-1e-10..=1.0 + 1e-10).contains(&i) {
        return Err(ChronoError::InvalidWeights(format!(
            "coincidence probability {i} outside [0, 1]"
        )));
    }
    Ok(i.clamp(0.0, 1.0))
}

/// Finite-bandwidth gate kernel over the rotated variables `(w_+, w_-)`.
#[derive(Clone)]
pub enum GateKernel {
    /// `U(w_+, w_-) = U_plus(w_+) * U_minus(w_-)`.
    Separable { u_plus: Eval, u_minus: Eval },
    /// Rank decomposition `U(w, w') = sum_j p_j p1_j(w) p2_j(w')` with
    /// `p_j >= 0` summing to 1 (descending) and each factor family
    /// orthonormal in the Riemann sense.
    General {
        grid: FrequencyGrid,
        weights: Vec<f64>,
        p1: Vec<SpectralFunction>,
        p2: Vec<SpectralFunction>,
    },
}

impl std::fmt::Debug for GateKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GateKernel::Separable { .. } => f.write_str("GateKernel::Separable"),
            GateKernel::General { weights, .. } => f
                .debug_struct("GateKernel::General")
                .field("weights", weights)
                .finish(),
        }
    }
}

impl GateKernel {
    pub fn separable(
        u_plus: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
        u_minus: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        GateKernel::Separable {
            u_plus: Arc::new(u_plus),
            u_minus: Arc::new(u_minus),
        }
    }

    /// Build a general kernel from an explicit matrix `U[n,m] = U(w_n, w_m)`
    /// on the product grid via singular value decomposition, rescaled so the
    /// weights sum to 1. Continuum scaling: factors carry `1/sqrt(dw)` so
    /// they are Riemann-orthonormal, weights absorb `dw`.
    pub fn general_from_matrix(grid: FrequencyGrid, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = grid.count();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(ChronoError::InvalidGrid(format!(
                "kernel matrix is {}x{} on a grid of {n} points",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dw = grid.spacing();
        let svd = matrix.clone().svd(true, true);
        let u = svd.u.as_ref().ok_or_else(|| {
            ChronoError::RankDeficient("SVD did not return left singular vectors".into())
        })?;
        let vt = svd.v_t.as_ref().ok_or_else(|| {
            ChronoError::RankDeficient("SVD did not return right singular vectors".into())
        })?;
        let mut raw: Vec<(f64, usize)> = svd
            .singular_values
            .iter()
            .cloned()
            .enumerate()
            .map(|(j, s)| (s * dw, j))
            .collect();
        raw.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let total: f64 = raw.iter().map(|(s, _)| s).sum();
        if !(total > 0.0) {
            return Err(ChronoError::ZeroNormOutput);
        }
        let mut weights = Vec::new();
        let mut p1 = Vec::new();
        let mut p2 = Vec::new();
        for (s, j) in raw {
            let w = s / total;
            if w < 1e-12 {
                break;
            }
            // fix the SVD sign freedom: rotate the pair so p2 is real
            // positive at its largest entry
            let col2: Vec<Complex64> = (0..n).map(|m| vt[(j, m)].conj() / dw.sqrt()).collect();
            let lead = col2
                .iter()
                .cloned()
                .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
                .unwrap();
            let phase = if lead.norm() > 0.0 {
                lead.conj() / lead.norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let col1: Vec<Complex64> = (0..n)
                .map(|i| u[(i, j)] / dw.sqrt() * phase.conj())
                .collect();
            let col2: Vec<Complex64> = col2.into_iter().map(|c| c * phase).collect();
            weights.push(w);
            p1.push(SpectralFunction::from_samples(grid, col1)?);
            p2.push(SpectralFunction::from_samples(grid, col2)?);
        }
        let k = GateKernel::General {
            grid,
            weights,
            p1,
            p2,
        };
        k.verify_general(Some(&(matrix / Complex64::new(total, 0.0))))?;
        Ok(k)
    }

    /// Build a general kernel directly from known factor families; weights
    /// are normalized to sum to 1 and orthonormality is verified.
    pub fn general_from_factors(
        grid: FrequencyGrid,
        weights: Vec<f64>,
        p1: Vec<SpectralFunction>,
        p2: Vec<SpectralFunction>,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != p1.len() || weights.len() != p2.len() {
            return Err(ChronoError::InvalidWeights(
                "kernel factor lists must be non-empty and of equal length".into(),
            ));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(ChronoError::InvalidWeights("negative kernel weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(ChronoError::ZeroNormOutput);
        }
        let mut idx: Vec<usize> = (0..weights.len()).collect();
        idx.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap());
        let weights: Vec<f64> = idx.iter().map(|&j| weights[j] / total).collect();
        let p1: Vec<SpectralFunction> = idx.iter().map(|&j| p1[j].clone()).collect();
        let p2: Vec<SpectralFunction> = idx.iter().map(|&j| p2[j].clone()).collect();
        for f in p1.iter().chain(&p2) {
            check_same_grid(grid, f.grid())?;
        }
        let k = GateKernel::General {
            grid,
            weights,
            p1,
            p2,
        };
        k.verify_general(None)?;
        Ok(k)
    }

    fn verify_general(&self, reference_matrix: Option<&DMatrix<Complex64>>) -> Result<()> {
        let GateKernel::General {
            grid,
            weights,
            p1,
            p2,
        } = self
        else {
            return Ok(());
        };
        let dw = grid.spacing();
        for fam in [p1, p2] {
            for j in 0..fam.len() {
                for k in 0..=j {
                    let ip: Complex64 = fam[j]
                        .samples()
                        .iter()
                        .zip(fam[k].samples())
                        .map(|(a, b)| a.conj() * b)
                        .sum::<Complex64>()
                        * Complex64::new(dw, 0.0);
                    let expect = if j == k { 1.0 } else { 0.0 };
                    if (ip - expect).norm() > 1e-10 {
                        return Err(ChronoError::InvalidWeights(format!(
                            "kernel factor family not orthonormal: <{j}|{k}> = {ip}"
                        )));
                    }
                }
            }
        }
        if let Some(m) = reference_matrix {
            let n = grid.count();
            let mut sup: f64 = 0.0;
            for i in 0..n {
                for l in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, w) in weights.iter().enumerate() {
                        acc += Complex64::new(*w, 0.0) * p1[j].samples()[i] * p2[j].samples()[l];
                    }
                    sup = sup.max((acc - m[(i, l)]).norm());
                }
            }
            if sup > 1e-8 {
                return Err(ChronoError::RankDeficient(format!(
                    "kernel decomposition fails to reconstruct the matrix (sup {sup:.3e})"
                )));
            }
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        match self {
            GateKernel::Separable { .. } => 1,
            GateKernel::General { weights, .. } => weights.len(),
        }
    }

    /// Continuous evaluator `(w_+, w_-) -> U`.
    pub fn evaluator(&self) -> Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync> {
        match self {
            GateKernel::Separable { u_plus, u_minus } => {
                let up = u_plus.clone();
                let um = u_minus.clone();
                Arc::new(move |u: f64, v: f64| up(u) * um(v))
            }
            GateKernel::General {
                weights, p1, p2, ..
            } => {
                let terms: Vec<(f64, Eval, Eval)> = weights
                    .iter()
                    .zip(p1.iter().zip(p2))
                    .map(|(w, (a, b))| (*w, lattice_evaluator(a), lattice_evaluator(b)))
                    .collect();
                Arc::new(move |u: f64, v: f64| {
                    terms
                        .iter()
                        .map(|(w, a, b)| a(u) * b(v) * *w)
                        .sum::<Complex64>()
                })
            }
        }
    }
}

/// Schmidt decomposition of the reference kernel
/// `K(x, y) = phi(x + y/2) phi*(x - y/2) = sum_j s_j C1_j(x) C2_j(y)`
/// entering the frequency-shear (cx) coincidence closed form
/// `overlap = sum_j s_j alpha_j PW_{C2_j psi}` with `alpha_j = Int C1_j dx`.
#[derive(Debug, Clone)]
pub struct CxDecomposition {
    pub s: Vec<f64>,
    pub c1: Vec<SpectralFunction>,
    pub c2: Vec<SpectralFunction>,
    pub alpha: Vec<Complex64>,
}

pub fn cx_reference_decomposition(reference: &PureState) -> Result<CxDecomposition> {
    let grid = reference.grid();
    let n = grid.count();
    let dw = grid.spacing();
    let phi = lattice_evaluator(reference.function());
    let k = DMatrix::from_fn(n, n, |i, m| {
        let x = grid.point(i);
        let y = grid.point(m);
        phi(x + y / 2.0) * phi(x - y / 2.0).conj()
    });
    // Schmidt factors via the Hermitian eigenproblem of K K^H; the direct
    // complex SVD with vectors is not numerically trustworthy here
    let gram = &k * k.adjoint();
    let eig = gram.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap()
    });
    let smax = eig.eigenvalues[order[0]].max(0.0).sqrt() * dw;
    let mut out = CxDecomposition {
        s: Vec::new(),
        c1: Vec::new(),
        c2: Vec::new(),
        alpha: Vec::new(),
    };
    for &j in &order {
        let s_mat = eig.eigenvalues[j].max(0.0).sqrt();
        let s = s_mat * dw;
        // the eigenvalue noise floor is machine epsilon relative to the
        // leading eigenvalue, so singular values are trustworthy down to
        // sqrt(eps) relative only
        if s < 1e-7 * smax {
            break;
        }
        let u = eig.eigenvectors.column(j);
        // K = sum_j s_mat u_j v_j^H, so v_j = K^H u_j / s_mat and the
        // unconjugated right factor is C2_j(m) = v_j(m)* / sqrt(dw)
        let v = k.adjoint() * u;
        let col2: Vec<Complex64> = (0..n)
            .map(|m| (v[m] / s_mat).conj() / dw.sqrt())
            .collect();
        let lead = col2
            .iter()
            .cloned()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())
            .unwrap();
        let phase = lead.conj() / lead.norm();
        let col1: Vec<Complex64> = (0..n)
            .map(|i| u[i] / dw.sqrt() * phase.conj())
            .collect();
        let col2: Vec<Complex64> = col2.into_iter().map(|c| c * phase).collect();
        let alpha = col1.iter().sum::<Complex64>() * Complex64::new(dw, 0.0);
        out.s.push(s);
        out.c1.push(SpectralFunction::from_samples(grid, col1)?);
        out.c2.push(SpectralFunction::from_samples(grid, col2)?);
        out.alpha.push(alpha);
    }
    Ok(out)
}

/// Raw swap overlap for one configured map point (no per-point norm audit;
/// the pipeline closures keep the success factor folded in).
fn point_overlap(points: &[f64], dw: f64, branches: &[(f64, JointFn)]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (w, f) in branches {
        let mut o = Complex64::new(0.0, 0.0);
        for &a in points {
            for &b in points {
                o += f(a, b) * f(b, a).conj();
            }
        }
        acc += o * Complex64::new(*w, 0.0);
    }
    (acc * Complex64::new(dw * dw, 0.0)).re
}

/// Coincidence probability map over shift settings (tau, mu).
///
/// * `gate = FreqBs | Kernel`: the map equals `(1 - overlap)/2` with the
///   overlap pi·W (times the kernel's beta factor) at map point (tau, mu).
/// * `gate = FreqBs` with `pre_filter`: the target is frequency-shifted by
///   mu first (when `pre_shift_mu_first`), filtered, gated; the map is
///   `(1 - PW(tau,mu))/2` with the filter as pseudo-Wigner window.
/// * `gate = None`: reference detuned by mu, target phased by tau; the map
///   is `(1 - S(tau,mu))/2`.
/// * `gate = Cx`: shear pipeline; the map is
///   `(1 - sum_j s_j alpha_j PW_{C2_j psi})/2`.
pub fn coincidence_map(
    reference: &PureState,
    target: &State,
    gate: &Gate,
    pre_filter: Option<&Window>,
    pre_shift_mu_first: bool,
    tau_axis: Axis,
    mu_axis: Axis,
) -> Result<PhaseSpaceMap> {
    check_same_grid(reference.grid(), target.grid())?;
    let grid = reference.grid();
    if pre_filter.is_some() && !matches!(gate, Gate::FreqBs) {
        return Err(ChronoError::Config(
            "pre-filtering is defined for the frequency beam-splitter pipeline".into(),
        ));
    }
    if pre_filter.is_some() && !pre_shift_mu_first {
        return Err(ChronoError::Config(
            "the frequency shift must be applied before the filter; set pre_shift_mu_first".into(),
        ));
    }
    match gate {
        Gate::FreqBs | Gate::Kernel(_) if pre_filter.is_none() => {
            check_rotated_containment("reference", reference)?;
            for (_, b) in target.branches() {
                check_rotated_containment("target", &b)?;
            }
        }
        _ => {}
    }

    let phi = lattice_evaluator(reference.function());
    let branches: Vec<(f64, Eval)> = target
        .branches()
        .iter()
        .map(|(w, p)| (*w, lattice_evaluator(p.function())))
        .collect();
    let filter = pre_filter.map(|f| lattice_evaluator(f.function()));
    let kernel_fn = match gate {
        Gate::Kernel(k) => Some(k.evaluator()),
        _ => None,
    };
    let points: Vec<f64> = grid.points().collect();
    let dw = grid.spacing();

    let values: Vec<f64> = (0..tau_axis.count * mu_axis.count)
        .into_par_iter()
        .map(|idx| {
            let tau = tau_axis.value(idx / mu_axis.count);
            let mu = mu_axis.value(idx % mu_axis.count);
            let configured: Vec<(f64, JointFn)> = branches
                .iter()
                .map(|(w, psi)| {
                    let phi = phi.clone();
                    let psi = psi.clone();
                    let joint: JointFn = match gate {
                        Gate::FreqBs | Gate::Kernel(_) => {
                            let kf = kernel_fn.clone();
                            match &filter {
                                Some(f) => {
                                    // shift target by mu, filter, gate, then
                                    // phase the signal by e^{+i sqrt2 tau w}
                                    let f = f.clone();
                                    Arc::new(move |a: f64, b: f64| {
                                        let u = (a + b) / SQRT_2;
                                        let v = (a - b) / SQRT_2;
                                        let phase = SQRT_2 * tau * a;
                                        phi(u)
                                            * psi(v + mu)
                                            * f(v)
                                            * Complex64::new(phase.cos(), phase.sin())
                                    })
                                }
                                None => {
                                    // idler translated by sqrt2 mu, signal
                                    // phased by e^{-i sqrt2 tau w}
                                    let mu0 = SQRT_2 * mu;
                                    Arc::new(move |a: f64, b: f64| {
                                        let u = (a + b - mu0) / SQRT_2;
                                        let v = (a - b + mu0) / SQRT_2;
                                        let phase = -SQRT_2 * tau * a;
                                        let base = phi(u)
                                            * psi(v)
                                            * Complex64::new(phase.cos(), phase.sin());
                                        match &kf {
                                            Some(k) => base * k(u, v),
                                            None => base,
                                        }
                                    })
                                }
                            }
                        }
                        Gate::None => {
                            // reference detuned by mu on the signal port,
                            // target phased by e^{i w tau} on the idler port
                            Arc::new(move |a: f64, b: f64| {
                                let phase = b * tau;
                                phi(a - mu) * psi(b) * Complex64::new(phase.cos(), phase.sin())
                            })
                        }
                        Gate::Cx => {
                            // reference port: frequency shift -mu and phase
                            // e^{-2 i tau w}; target port: frequency shift -2mu
                            Arc::new(move |a: f64, b: f64| {
                                let phase = -2.0 * tau * a;
                                phi(a + mu)
                                    * psi(b - a + mu)
                                    * Complex64::new(phase.cos(), phase.sin())
                            })
                        }
                    };
                    (*w, joint)
                })
                .collect();
            let overlap = point_overlap(&points, dw, &configured);
            let i = 0.5 * (1.0 - overlap);
            debug_assert!(
                (-1e-10..=1.0 + 1e-10).contains(&i),
                "coincidence {i} at tau={tau}, mu={mu}"
            );
            i.clamp(0.0, 1.0)
        })
        .collect();
    PhaseSpaceMap::new(MapKind::CoincidenceMap, tau_axis, mu_axis, values)
}
