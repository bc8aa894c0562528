//! ADMM reconstruction over a tight frame and the end-to-end pipeline.
//!
//! The solver works on k-space data normalized by the peak magnitude of the
//! zero-filled image, so thresholds and the stopping tolerance are scale-free.
//! The result is mapped back to the input scale.

use std::time::Instant;

use crate::dictionary::{hard_threshold, train_bank, TrainConfig};
use crate::direction::{build_direction_set, classify_patches, DirectionMode};
use crate::error::{dims_mismatch, Error, Result};
use crate::frame::{check_frame_dims, AnalysisOperator, FrameCoefficients, TightFrame};
use crate::image::{Image, PatchConfig};
use crate::metrics::rlne;
use crate::sampling::{FourierEncoding, KSpace, SamplingMask};
use crate::scalar::{czero, Cx, Real};
use crate::sidwt::SidwtFrame;

/// `S_t(v) = max(|v| − t, 0)·v/|v|`, zero at `v = 0`.
#[inline]
pub fn soft_threshold<T: Real>(v: Cx<T>, t: T) -> Cx<T> {
    let m = v.norm();
    if m <= t || m == T::zero() {
        czero()
    } else {
        v * ((m - t) / m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Penalty {
    #[default]
    L1,
    L0,
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Penalty::L1 => "l1",
            Penalty::L0 => "l0",
        })
    }
}

impl std::str::FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Penalty::L1),
            "l0" => Ok(Penalty::L0),
            other => Err(Error::InvalidConfig(format!("unknown penalty '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    /// Data-fidelity weight `λ`.
    pub lambda: f64,
    /// Frame-penalty weight `β`.
    pub beta: f64,
    pub delta_h: f64,
    pub delta_d: f64,
    /// Stopping tolerance on `‖y − F_U x‖₂` for peak-normalized data.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub penalty: Penalty,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lambda: 1e3,
            beta: Self::default_beta(Penalty::L1),
            delta_h: 1.0,
            delta_d: 1.0,
            epsilon: 1e-4,
            max_iterations: 200,
            penalty: Penalty::L1,
        }
    }
}

impl SolverConfig {
    /// Default `β` for each penalty. Hard thresholding at `√(2/β)` removes far
    /// more than soft thresholding at `1/β`, so l0 uses a larger `β`.
    pub fn default_beta(penalty: Penalty) -> f64 {
        match penalty {
            Penalty::L1 => 1e2,
            Penalty::L0 => 1e3,
        }
    }

    /// Defaults with `penalty` and its default `β`.
    pub fn for_penalty(penalty: Penalty) -> Self {
        Self {
            beta: Self::default_beta(penalty),
            penalty,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.lambda)
            || !positive(self.beta)
            || !positive(self.delta_h)
            || !positive(self.delta_d)
            || !positive(self.epsilon)
            || self.max_iterations == 0
        {
            return Err(Error::InvalidConfig(format!(
                "solver needs positive lambda, beta, step sizes, epsilon and max_iterations >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Coefficient threshold applied in the `a`-update.
    pub fn threshold(&self) -> f64 {
        match self.penalty {
            Penalty::L1 => 1.0 / self.beta,
            Penalty::L0 => (2.0 / self.beta).sqrt(),
        }
    }
}

/// One row of the per-iteration trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    /// `‖y − F_U x‖₂` on normalized data.
    pub data_residual: f64,
    /// `‖Φx − a‖₂`.
    pub primal_residual: f64,
    /// Augmented Lagrangian in l1 mode, `‖a‖₀` in l0 mode.
    pub objective: f64,
    pub seconds: f64,
}

/// Iterates and multipliers of one ADMM run, in normalized units.
#[derive(Clone, Debug)]
pub struct AdmmState<T: Real> {
    pub x: Image<T>,
    pub a: FrameCoefficients<T>,
    pub d: FrameCoefficients<T>,
    pub h: KSpace<T>,
    pub iteration: usize,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
    /// Factor that maps normalized images back to the input scale.
    pub scale: f64,
}

impl<T: Real> AdmmState<T> {
    /// Starting point `x = F_Uᴴy`, `a = Φx`, `d = 0`, `h = 0`.
    pub fn initial<F: TightFrame<T> + ?Sized>(
        y: &KSpace<T>,
        enc: &FourierEncoding<T>,
        op: &F,
    ) -> Result<Self> {
        let x = enc.adjoint(y)?;
        let a = op.analyze(&x)?;
        let d = FrameCoefficients::zeros(a.len(), a.block_len());
        let (rows, cols) = y.dims();
        Ok(Self {
            x,
            a,
            d,
            h: KSpace::zeros(rows, cols),
            iteration: 0,
            trace: Vec::new(),
            converged: false,
            scale: 1.0,
        })
    }

    pub fn data_residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.trace.iter().map(|r| r.data_residual)
    }
}

fn threshold_coefficients<T: Real>(
    ax: &FrameCoefficients<T>,
    d: &FrameCoefficients<T>,
    cfg: &SolverConfig,
) -> FrameCoefficients<T> {
    let t = T::lit(cfg.threshold());
    let data = ax
        .data()
        .iter()
        .zip(d.data())
        .map(|(&p, &q)| match cfg.penalty {
            Penalty::L1 => soft_threshold(p - q, t),
            Penalty::L0 => hard_threshold(p - q, t),
        })
        .collect();
    FrameCoefficients::new(data, ax.block_len()).expect("same layout as input")
}

/// `a = S_{1/β}(Φx − d)` (l1) or `H_{√(2/β)}(Φx − d)` (l0).
pub fn update_a<T: Real, F: TightFrame<T> + ?Sized>(
    state: &AdmmState<T>,
    op: &F,
    cfg: &SolverConfig,
) -> Result<FrameCoefficients<T>> {
    let ax = op.analyze(&state.x)?;
    if ax.len() != state.d.len() {
        return Err(Error::InvalidInput(format!(
            "multiplier has {} coefficients, frame produces {}",
            state.d.len(),
            ax.len()
        )));
    }
    Ok(threshold_coefficients(&ax, &state.d, cfg))
}

/// Closed-form x-update; also returns the k-space grid of the new iterate.
fn solve_x<T: Real, F: TightFrame<T> + ?Sized>(
    a: &FrameCoefficients<T>,
    d: &FrameCoefficients<T>,
    h: &KSpace<T>,
    enc: &FourierEncoding<T>,
    y: &KSpace<T>,
    op: &F,
    cfg: &SolverConfig,
) -> Result<(Image<T>, Vec<Cx<T>>)> {
    if a.len() != d.len() {
        return Err(Error::InvalidInput(format!(
            "coefficient lengths differ: {} vs {}",
            a.len(),
            d.len()
        )));
    }
    let sum: Vec<Cx<T>> = a.data().iter().zip(d.data()).map(|(p, q)| p + q).collect();
    let sum = FrameCoefficients::new(sum, a.block_len())?;
    let z = op.synthesize(&sum)?;
    let mut k = enc.dft(&z);
    let lambda = T::lit(cfg.lambda);
    let beta = T::lit(cfg.beta);
    let denom = T::one() / (lambda + beta);
    for (((kv, &kept), yv), hv) in k
        .iter_mut()
        .zip(enc.mask().kept())
        .zip(y.data())
        .zip(h.data())
    {
        if kept {
            *kv = ((yv + hv) * lambda + *kv * beta) * denom;
        }
    }
    let x = enc.idft(&k);
    Ok((x, k))
}

/// `x = F⁻¹[(λU(y + h) + βFΦᴴ(a + d)) / (λu + β)]`, a diagonal solve in k-space.
pub fn update_x<T: Real, F: TightFrame<T> + ?Sized>(
    state: &AdmmState<T>,
    enc: &FourierEncoding<T>,
    y: &KSpace<T>,
    op: &F,
    cfg: &SolverConfig,
) -> Result<Image<T>> {
    check_problem(y, enc, op)?;
    if state.h.dims() != y.dims() {
        return Err(dims_mismatch(y.dims(), state.h.dims()));
    }
    solve_x(&state.a, &state.d, &state.h, enc, y, op, cfg).map(|(x, _)| x)
}

fn check_problem<T: Real, F: TightFrame<T> + ?Sized>(
    y: &KSpace<T>,
    enc: &FourierEncoding<T>,
    op: &F,
) -> Result<()> {
    if y.dims() != enc.dims() {
        return Err(dims_mismatch(enc.dims(), y.dims()));
    }
    check_frame_dims(op, y.dims())
}

fn augmented_lagrangian<T: Real>(
    state: &AdmmState<T>,
    ax: &FrameCoefficients<T>,
    residual: &[Cx<T>],
    cfg: &SolverConfig,
) -> f64 {
    let l1: f64 = state.a.data().iter().map(|c| c.norm().as_f64()).sum();
    // h·(y − F_U x) and d·(Φx − a) as real inner products.
    let h_term: f64 = state
        .h
        .data()
        .iter()
        .zip(residual)
        .map(|(h, r)| -(h.conj() * r).re.as_f64())
        .sum();
    let fit: f64 = residual.iter().map(|r| r.norm_sqr().as_f64()).sum();
    let mut d_term = 0.0;
    let mut primal = 0.0;
    for ((d, p), a) in state.d.data().iter().zip(ax.data()).zip(state.a.data()) {
        let diff = p - a;
        d_term += (d.conj() * diff).re.as_f64();
        primal += diff.norm_sqr().as_f64();
    }
    l1 + h_term + 0.5 * cfg.lambda * fit + d_term + 0.5 * cfg.beta * primal
}

/// Peak magnitude of the zero-filled image; the normalization divisor.
pub fn zero_filled_peak<T: Real>(y: &KSpace<T>, enc: &FourierEncoding<T>) -> Result<T> {
    Ok(enc.adjoint(y)?.peak())
}

/// Solves `min ‖Φx‖_p s.t. ‖y − F_U x‖₂ ≤ ε` by ADMM.
///
/// Returns the reconstruction at the input scale together with the final
/// state. When the tolerance is not reached the iterate with the smallest data
/// residual is returned and `converged` is false.
pub fn admm_reconstruct<T: Real, F: TightFrame<T> + ?Sized>(
    y: &KSpace<T>,
    mask: &SamplingMask,
    op: &F,
    cfg: &SolverConfig,
) -> Result<(Image<T>, AdmmState<T>)> {
    cfg.validate()?;
    let enc = FourierEncoding::new(mask.clone());
    check_problem(y, &enc, op)?;
    let mut y = y.clone();
    y.apply_mask(mask)?;
    let peak = zero_filled_peak(&y, &enc)?;
    let (rows, cols) = y.dims();
    if peak == T::zero() {
        let mut state = AdmmState::initial(&y, &enc, op)?;
        state.converged = true;
        return Ok((Image::zeros(rows, cols), state));
    }
    let y = y.scaled(T::one() / peak);
    let mut state = AdmmState::initial(&y, &enc, op)?;
    state.scale = peak.as_f64();
    let mut ax = state.a.clone();
    let mut best: Option<(f64, Image<T>)> = None;
    let start = Instant::now();
    let dd = T::lit(cfg.delta_d);
    let dh = T::lit(cfg.delta_h);
    for k in 1..=cfg.max_iterations {
        state.a = threshold_coefficients(&ax, &state.d, cfg);
        let (x, grid) = solve_x(&state.a, &state.d, &state.h, &enc, &y, op, cfg)?;
        state.x = x;
        ax = op.analyze(&state.x)?;
        for ((d, p), a) in state
            .d
            .data_mut()
            .iter_mut()
            .zip(ax.data())
            .zip(state.a.data())
        {
            *d -= (p - a) * dd;
        }
        let residual: Vec<Cx<T>> = grid
            .iter()
            .zip(mask.kept())
            .zip(y.data())
            .map(|((g, &kept), yv)| if kept { g - yv } else { czero() })
            .collect();
        for (h, r) in state.h.data_mut().iter_mut().zip(&residual) {
            *h -= r * dh;
        }
        let data_residual = crate::scalar::norm(&residual).as_f64();
        let primal_residual = crate::scalar::distance(ax.data(), state.a.data()).as_f64();
        let objective = match cfg.penalty {
            Penalty::L1 => augmented_lagrangian(&state, &ax, &residual, cfg),
            Penalty::L0 => state
                .a
                .data()
                .iter()
                .filter(|c| c.re != T::zero() || c.im != T::zero())
                .count() as f64,
        };
        state.iteration = k;
        state.trace.push(TraceRow {
            iteration: k,
            data_residual,
            primal_residual,
            objective,
            seconds: start.elapsed().as_secs_f64(),
        });
        if data_residual <= cfg.epsilon {
            state.converged = true;
            break;
        }
        if best.as_ref().is_none_or(|(r, _)| data_residual < *r) {
            best = Some((data_residual, state.x.clone()));
        }
    }
    let x = if state.converged {
        state.x.clone()
    } else {
        best.map(|(_, x)| x).unwrap_or_else(|| state.x.clone())
    };
    Ok((x.scaled(peak), state))
}

/// Reference reconstruction with the undecimated wavelet frame.
pub fn sidwt_reference<T: Real>(
    y: &KSpace<T>,
    mask: &SamplingMask,
    levels: usize,
    cfg: &SolverConfig,
) -> Result<(Image<T>, AdmmState<T>)> {
    let (rows, cols) = y.dims();
    let frame = SidwtFrame::new(rows, cols, levels)?;
    admm_reconstruct(y, mask, &frame, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Number of reference-image updates `T`; the pipeline runs `T + 1` passes.
    pub updates: usize,
    pub sidwt_levels: usize,
    pub patch: PatchConfig,
    pub train: TrainConfig,
    pub solver: SolverConfig,
    /// Solver settings for the wavelet reference; defaults to `solver` with l1.
    pub reference_solver: SolverConfig,
    pub direction_mode: DirectionMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            updates: 1,
            sidwt_levels: 3,
            patch: PatchConfig::default(),
            train: TrainConfig::default(),
            solver: SolverConfig::default(),
            reference_solver: SolverConfig::default(),
            direction_mode: DirectionMode::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sidwt_levels == 0 {
            return Err(Error::InvalidConfig(
                "SIDWT needs at least one level".into(),
            ));
        }
        self.train.validate()?;
        self.solver.validate()?;
        self.reference_solver.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    /// `sidwt`, then `pass0`, `pass1`, ...
    pub name: String,
    pub classify_seconds: f64,
    pub train_seconds: f64,
    pub solve_seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub populated_classes: usize,
    pub rlne: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineReport {
    pub stages: Vec<StageReport>,
}

impl PipelineReport {
    pub fn converged(&self) -> bool {
        self.stages.last().is_some_and(|s| s.converged)
    }

    pub fn total_seconds(&self) -> f64 {
        self.stages
            .iter()
            .map(|s| s.classify_seconds + s.train_seconds + s.solve_seconds)
            .sum()
    }
}

/// Wavelet reference, then `T + 1` rounds of classify, train and reconstruct.
/// Returns the final image, the report and the last solver state.
pub fn fdlcp_pipeline<T: Real>(
    y: &KSpace<T>,
    mask: &SamplingMask,
    cfg: &PipelineConfig,
    truth: Option<&Image<T>>,
) -> Result<(Image<T>, PipelineReport, AdmmState<T>)> {
    cfg.validate()?;
    let dims = y.dims();
    cfg.patch.validate(dims)?;
    if let Some(t) = truth {
        t.check_dims(dims)?;
    }
    let ds = build_direction_set(cfg.patch.size)?;
    let score = |x: &Image<T>| truth.map(|t| rlne(x, t)).transpose();
    let mut stages = Vec::with_capacity(cfg.updates + 2);

    let clock = Instant::now();
    let (mut reference, mut state) =
        sidwt_reference(y, mask, cfg.sidwt_levels, &cfg.reference_solver)?;
    stages.push(StageReport {
        name: "sidwt".into(),
        classify_seconds: 0.0,
        train_seconds: 0.0,
        solve_seconds: clock.elapsed().as_secs_f64(),
        iterations: state.iteration,
        converged: state.converged,
        populated_classes: 0,
        rlne: score(&reference)?,
    });

    for pass in 0..=cfg.updates {
        let clock = Instant::now();
        let classes = classify_patches(&reference, &cfg.patch, &ds, cfg.direction_mode)?;
        let classify_seconds = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let bank = train_bank(&reference, &classes, &cfg.patch, &cfg.train)?;
        let train_seconds = clock.elapsed().as_secs_f64();
        let clock = Instant::now();
        let op = AnalysisOperator::new(&bank, &classes, cfg.patch, dims)?;
        let (x, s) = admm_reconstruct(y, mask, &op, &cfg.solver)?;
        stages.push(StageReport {
            name: format!("pass{pass}"),
            classify_seconds,
            train_seconds,
            solve_seconds: clock.elapsed().as_secs_f64(),
            iterations: s.iteration,
            converged: s.converged,
            populated_classes: classes.populated().count(),
            rlne: score(&x)?,
        });
        reference = x;
        state = s;
    }
    Ok((reference, PipelineReport { stages }, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::DictionaryBank;
    use crate::direction::ClassMap;
    use crate::scalar::cx;

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(cx(2.0, 0.0), 0.5), cx(1.5, 0.0));
        let v = Cx::from_polar(0.3, 1.1);
        assert_eq!(soft_threshold(v, 0.5), cx(0.0, 0.0));
        assert_eq!(soft_threshold(cx(0.0, 0.0), 0.0), cx(0.0, 0.0));
        let w: Cx<f64> = soft_threshold(Cx::from_polar(2.0, -0.7), 0.5);
        assert!((w.arg() + 0.7).abs() < 1e-15);
        assert!((w.norm() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn penalty_thresholds() {
        let l1 = SolverConfig {
            beta: 4.0,
            ..Default::default()
        };
        assert_eq!(l1.threshold(), 0.25);
        let l0 = SolverConfig {
            beta: 2.0,
            penalty: Penalty::L0,
            ..Default::default()
        };
        assert_eq!(l0.threshold(), 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        assert!(SolverConfig {
            beta: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SolverConfig {
            max_iterations: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!("l2".parse::<Penalty>().is_err());
    }

    fn setup(dims: (usize, usize)) -> (DictionaryBank<f64>, ClassMap, PatchConfig) {
        let cfg = PatchConfig::new(2, 1);
        let bank = DictionaryBank::haar(2, 1).unwrap();
        let classes = ClassMap::uniform(cfg.patch_count(dims), 1);
        (bank, classes, cfg)
    }

    #[test]
    fn zero_data_gives_zero_image() {
        let (bank, classes, cfg) = setup((8, 8));
        let op = AnalysisOperator::new(&bank, &classes, cfg, (8, 8)).unwrap();
        let mask = SamplingMask::full(8, 8);
        let (x, state) =
            admm_reconstruct(&KSpace::zeros(8, 8), &mask, &op, &SolverConfig::default()).unwrap();
        assert!(x.data().iter().all(|c| *c == cx(0.0, 0.0)));
        assert!(state.converged);
    }
}
