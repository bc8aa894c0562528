//! Batch front end: phantoms, masks, simulated acquisitions, reconstruction,
//! evaluation and sparsity sweeps. Every command writes a [`RunManifest`]
//! next to its primary output so the run can be replayed.

pub mod args;
pub mod manifest;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use fdlcp::io::{load_cimg, save_cimg};
use fdlcp::metrics::METRIC_CSV_HEADER;
use fdlcp::sampling::{adjoint, encode};
use fdlcp::solver::TraceRow;
use fdlcp::sweep::{sparsity_sweep, Transform, SWEEP_CSV_HEADER};
use fdlcp::{
    build_direction_set, fdlcp_pipeline, make_cartesian_mask, make_phantom, make_radial_mask,
    make_random2d_mask, sidwt_reference, DirectionMode, Image64, KSpace64, MetricReport,
    PatchConfig, Penalty, PhantomKind, PipelineConfig, RadialSpec, SamplingMask, SolverConfig,
    TrainConfig,
};
use serde_json::{json, Value};

pub use args::{Cli, Command};
pub use manifest::RunManifest;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

pub const TRACE_CSV_HEADER: &str = "iteration,data_residual,primal_residual,objective,seconds";

/// A command failure and the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    pub fn io(message: impl Display) -> Self {
        Self {
            code: EXIT_IO,
            message: message.to_string(),
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<fdlcp::Error> for Failure {
    fn from(e: fdlcp::Error) -> Self {
        Self::usage(e)
    }
}

/// What a successful command produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub inputs: Vec<PathBuf>,
    /// Primary output first.
    pub outputs: Vec<PathBuf>,
    pub config: BTreeMap<String, Value>,
    /// False when an iterative solver stopped at its iteration limit.
    pub converged: bool,
    /// Lines for standard output.
    pub report: Vec<String>,
}

impl Outcome {
    fn new(inputs: &[&Path], out: &Path) -> Self {
        Self {
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: vec![out.to_path_buf()],
            converged: true,
            ..Self::default()
        }
    }

    fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.into(), value.into());
    }

    pub fn exit_code(&self) -> u8 {
        if self.converged {
            0
        } else {
            EXIT_NOT_CONVERGED
        }
    }
}

/// Resolves `replay` into the recorded command and its thread count.
/// Other commands pass through with `threads`.
pub fn resolve(command: Command, threads: Option<usize>) -> Result<(Command, usize), Failure> {
    match command {
        Command::Replay(r) => {
            let m = RunManifest::load(&r.manifest)?;
            let mut cmd = m.invocation;
            if let Some(out) = r.out {
                redirect(&mut cmd, out);
            }
            Ok((cmd, threads.unwrap_or(m.threads)))
        }
        other => Ok((other, threads.unwrap_or(0))),
    }
}

/// Points the primary output (and any explicit secondary outputs) at `out`.
fn redirect(command: &mut Command, out: PathBuf) {
    match command {
        Command::Phantom(a) => a.out = out,
        Command::Mask(a) => a.out = out,
        Command::Simulate(a) => a.out = out,
        Command::Recon(a) => {
            if a.trace.is_some() {
                a.trace = Some(manifest::sibling(&out, "trace.csv"));
            }
            a.metrics = None;
            a.out = out;
        }
        Command::SweepSparsity(a) => a.out = out,
        Command::Eval(a) => a.out = out,
        Command::Replay(_) => {}
    }
}

/// Runs one command and writes its manifest.
pub fn execute(command: &Command) -> Result<Outcome, Failure> {
    let outcome = match command {
        Command::Phantom(a) => phantom(a)?,
        Command::Mask(a) => mask(a)?,
        Command::Simulate(a) => simulate(a)?,
        Command::Recon(a) => recon(a)?,
        Command::SweepSparsity(a) => sweep(a)?,
        Command::Eval(a) => eval(a)?,
        Command::Replay(_) => return Err(Failure::usage("replay must be resolved first")),
    };
    let mut recorded = command.clone();
    absolutize(&mut recorded);
    let mut m = RunManifest::new(&recorded, rayon::current_num_threads(), &outcome);
    m.inputs.iter_mut().chain(&mut m.outputs).for_each(absolute);
    if let Some(dir) = m.outputs[0].parent() {
        m.output_dir = dir.to_path_buf();
    }
    m.save(&manifest::manifest_path(&outcome.outputs[0]))?;
    Ok(outcome)
}

fn absolute(p: &mut PathBuf) {
    if let Ok(a) = std::path::absolute(&*p) {
        *p = a;
    }
}

fn absolutize(command: &mut Command) {
    match command {
        Command::Phantom(a) => absolute(&mut a.out),
        Command::Mask(a) => absolute(&mut a.out),
        Command::Simulate(a) => [&mut a.image, &mut a.mask, &mut a.out]
            .into_iter()
            .for_each(absolute),
        Command::Recon(a) => {
            [&mut a.kspace, &mut a.mask, &mut a.out]
                .into_iter()
                .for_each(absolute);
            [&mut a.truth, &mut a.metrics, &mut a.trace]
                .into_iter()
                .flatten()
                .for_each(absolute);
        }
        Command::SweepSparsity(a) => [&mut a.image, &mut a.out].into_iter().for_each(absolute),
        Command::Eval(a) => {
            [&mut a.recon, &mut a.truth, &mut a.out]
                .into_iter()
                .for_each(absolute);
            a.mask.iter_mut().for_each(absolute);
        }
        Command::Replay(_) => {}
    }
}

fn read_image(path: &Path) -> Result<Image64, Failure> {
    load_cimg(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn read_mask(path: &Path) -> Result<SamplingMask, Failure> {
    Ok(SamplingMask::from_image(&read_image(path)?)?)
}

fn write_image(path: &Path, image: &Image64) -> Result<(), Failure> {
    save_cimg(path, image).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn phantom(a: &args::PhantomArgs) -> Result<Outcome, Failure> {
    let kind = match a.kind {
        args::Kind::SheppLogan => PhantomKind::SheppLogan,
        args::Kind::DirectionalGrid => PhantomKind::DirectionalGrid,
    };
    let image: Image64 = make_phantom(a.size, kind)?;
    write_image(&a.out, &image)?;
    let mut o = Outcome::new(&[], &a.out);
    o.set("size", a.size);
    o.set("kind", kind.to_string());
    Ok(o)
}

fn mask(a: &args::MaskArgs) -> Result<Outcome, Failure> {
    let mut o = Outcome::new(&[], &a.out);
    let m = match a.pattern {
        args::Pattern::Cartesian => {
            let center = a.center.unwrap_or((a.rate / 2.0).min(0.04));
            o.set("center", center);
            make_cartesian_mask(a.size, a.size, a.rate, center, a.seed)?
        }
        args::Pattern::Random2d => make_random2d_mask(a.size, a.size, a.rate, a.seed)?,
        args::Pattern::Radial => make_radial_mask(a.size, a.size, RadialSpec::Rate(a.rate))?,
    };
    write_image(&a.out, &m.to_image::<f64>())?;
    o.set("pattern", json!(a.pattern));
    o.set("rate", a.rate);
    o.set("seed", a.seed);
    o.set("size", a.size);
    o.set("achieved_rate", m.rate());
    o.report.push(format!("achieved rate {}", m.rate()));
    Ok(o)
}

fn simulate(a: &args::SimulateArgs) -> Result<Outcome, Failure> {
    let image = read_image(&a.image)?;
    let m = read_mask(&a.mask)?;
    let y = encode(&image, &m)?;
    write_image(&a.out, &y.to_image())?;
    Ok(Outcome::new(&[&a.image, &a.mask], &a.out))
}

fn recon(a: &args::ReconArgs) -> Result<Outcome, Failure> {
    let mut inputs = vec![a.kspace.as_path(), a.mask.as_path()];
    inputs.extend(a.truth.as_deref());
    let mut o = Outcome::new(&inputs, &a.out);

    let y = KSpace64::from_image(&read_image(&a.kspace)?);
    let m = read_mask(&a.mask)?;
    let truth = a.truth.as_deref().map(read_image).transpose()?;
    let penalty = match a.penalty {
        args::PenaltyArg::L1 => Penalty::L1,
        args::PenaltyArg::L0 => Penalty::L0,
    };
    let solver = SolverConfig {
        lambda: a.lambda,
        beta: a.beta.unwrap_or(SolverConfig::default_beta(penalty)),
        epsilon: a.eps,
        max_iterations: a.max_iter,
        penalty,
        ..SolverConfig::default()
    };
    let reference_solver = SolverConfig {
        beta: a
            .beta
            .filter(|_| penalty == Penalty::L1)
            .unwrap_or(SolverConfig::default_beta(Penalty::L1)),
        penalty: Penalty::L1,
        ..solver
    };

    let method = match a.method {
        args::Method::Zerofill => "zerofill",
        args::Method::Sidwt => "sidwt",
        args::Method::Fdlcp => "fdlcp",
    };
    o.set("method", method);
    let (x, trace, iterations) = match a.method {
        args::Method::Zerofill => (adjoint(&y), Vec::new(), 0),
        args::Method::Sidwt => {
            solver_settings(&mut o, &solver);
            o.set("sidwt_levels", a.levels);
            let (x, s) = sidwt_reference(&y, &m, a.levels, &solver)?;
            o.converged = s.converged;
            (x, s.trace, s.iteration)
        }
        args::Method::Fdlcp => {
            let cfg = PipelineConfig {
                updates: a.updates,
                sidwt_levels: a.levels,
                patch: PatchConfig::new(a.patch_size, 1),
                train: TrainConfig {
                    eta: a.eta,
                    ..TrainConfig::default()
                },
                solver,
                reference_solver,
                direction_mode: DirectionMode::Complex,
            };
            solver_settings(&mut o, &solver);
            o.set("reference_beta", reference_solver.beta);
            o.set("sidwt_levels", a.levels);
            o.set("patch_size", a.patch_size);
            o.set("directions", build_direction_set(a.patch_size)?.len());
            o.set("eta", a.eta);
            o.set("updates", a.updates);
            let (x, report, s) = fdlcp_pipeline(&y, &m, &cfg, truth.as_ref())?;
            for st in &report.stages {
                let rlne = st.rlne.map(|r| format!(" rlne {r:.6}")).unwrap_or_default();
                o.report.push(format!(
                    "{}: {} iterations, converged {}{rlne}",
                    st.name, st.iterations, st.converged
                ));
            }
            o.converged = report.converged();
            (x, s.trace, s.iteration)
        }
    };
    write_image(&a.out, &x)?;
    o.set("iterations", iterations);

    if let Some(path) = &a.trace {
        write_text(path, &trace_csv(&trace))?;
        o.outputs.push(path.clone());
    }
    if let (Some(t), Some(tpath)) = (&truth, &a.truth) {
        let penalty_label = if a.method == args::Method::Zerofill {
            String::new()
        } else {
            penalty.to_string()
        };
        let r = MetricReport::evaluate(
            &x,
            t,
            &stem(tpath),
            &stem(&a.mask),
            m.rate(),
            method,
            &penalty_label,
        )?;
        let path = a
            .metrics
            .clone()
            .unwrap_or_else(|| manifest::sibling(&a.out, "metrics.csv"));
        write_text(&path, &format!("{METRIC_CSV_HEADER}\n{}\n", r.csv_row()))?;
        o.outputs.push(path);
        o.report
            .push(format!("rlne {} ssim {}", r.rlne, r.ssim_windowed));
    }
    if !o.converged {
        o.report.push(format!(
            "warning: stopped at the iteration limit ({}) before reaching eps",
            a.max_iter
        ));
    }
    Ok(o)
}

fn solver_settings(o: &mut Outcome, s: &SolverConfig) {
    o.set("penalty", s.penalty.to_string());
    o.set("lambda", s.lambda);
    o.set("beta", s.beta);
    o.set("epsilon", s.epsilon);
    o.set("max_iterations", s.max_iterations);
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = format!("{TRACE_CSV_HEADER}\n");
    for r in trace {
        s += &format!(
            "{},{},{},{},{}\n",
            r.iteration, r.data_residual, r.primal_residual, r.objective, r.seconds
        );
    }
    s
}

fn sweep(a: &args::SweepArgs) -> Result<Outcome, Failure> {
    let image = read_image(&a.image)?;
    let transforms = a
        .transforms
        .iter()
        .map(|t| t.parse::<Transform>())
        .collect::<fdlcp::Result<Vec<_>>>()?;
    let train = TrainConfig {
        eta: a.eta,
        ..TrainConfig::default()
    };
    let rows = sparsity_sweep(
        &image,
        &transforms,
        &a.fractions,
        &PatchConfig::new(a.patch_size, 1),
        &train,
        DirectionMode::Complex,
    )?;
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for r in &rows {
        csv += &r.csv_row();
        csv.push('\n');
    }
    write_text(&a.out, &csv)?;
    let mut o = Outcome::new(&[&a.image], &a.out);
    o.set("patch_size", a.patch_size);
    o.set("eta", a.eta);
    o.set("transforms", json!(a.transforms));
    o.set("fractions", json!(a.fractions));
    Ok(o)
}

fn eval(a: &args::EvalArgs) -> Result<Outcome, Failure> {
    let mut inputs = vec![a.recon.as_path(), a.truth.as_path()];
    inputs.extend(a.mask.as_deref());
    let recon = read_image(&a.recon)?;
    let truth = read_image(&a.truth)?;
    let rate = a
        .mask
        .as_deref()
        .map(read_mask)
        .transpose()?
        .map(|m| m.rate());
    let r = MetricReport::evaluate(
        &recon,
        &truth,
        &stem(&a.recon),
        &a.pattern,
        rate.unwrap_or(f64::NAN),
        &a.method,
        &a.penalty,
    )?;
    let row = format!(
        "{},{},{},{},{},{},{}",
        r.case,
        r.pattern,
        rate.map(|v| v.to_string()).unwrap_or_default(),
        r.method,
        r.penalty,
        r.rlne,
        r.ssim_windowed
    );

    let existing = match fs::read_to_string(&a.out) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(Failure::io(format!("cannot read {}: {e}", a.out.display()))),
    };
    if !existing.is_empty() && existing.lines().next() != Some(METRIC_CSV_HEADER) {
        return Err(Failure::usage(format!(
            "{} exists with a different header",
            a.out.display()
        )));
    }
    let mut text = String::new();
    if existing.is_empty() {
        text += METRIC_CSV_HEADER;
        text.push('\n');
    } else if !existing.ends_with('\n') {
        text.push('\n');
    }
    text += &row;
    text.push('\n');
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(&a.out)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Failure::io(format!("cannot write {}: {e}", a.out.display())))?;

    let mut o = Outcome::new(&inputs, &a.out);
    o.report
        .push(format!("rlne {} ssim {}", r.rlne, r.ssim_windowed));
    Ok(o)
}
