//! Shepp-Logan 128×128, Cartesian rate 0.33: zero-filling, wavelet reference
//! and the learned-dictionary pipeline in both penalties.

use std::time::Instant;

use fdlcp::sampling::{adjoint, encode};
use fdlcp::solver::sidwt_reference;
use fdlcp::{
    fdlcp_pipeline, make_cartesian_mask, make_phantom, rlne, Image64, Penalty, PhantomKind,
    PipelineConfig, SolverConfig,
};

fn main() -> fdlcp::Result<()> {
    let truth: Image64 = make_phantom(128, PhantomKind::SheppLogan)?;
    let mask = make_cartesian_mask(128, 128, 0.33, 0.04, 7)?;
    let y = encode(&truth, &mask)?;
    println!("zerofill rlne {:.4}", rlne(&adjoint(&y), &truth)?);

    let clock = Instant::now();
    let (reference, state) = sidwt_reference(&y, &mask, 3, &SolverConfig::default())?;
    println!(
        "sidwt    rlne {:.4}  iterations {} converged {} ({:.1}s)",
        rlne(&reference, &truth)?,
        state.iteration,
        state.converged,
        clock.elapsed().as_secs_f64()
    );

    for penalty in [Penalty::L1, Penalty::L0] {
        let cfg = PipelineConfig {
            solver: SolverConfig::for_penalty(penalty),
            ..Default::default()
        };
        let (_, report, _) = fdlcp_pipeline(&y, &mask, &cfg, Some(&truth))?;
        for s in &report.stages {
            println!(
                "{penalty} {:6} rlne {:.4}  iterations {:3} converged {:5} classes {:2}  classify {:.1}s train {:.1}s solve {:.1}s",
                s.name,
                s.rlne.unwrap_or(f64::NAN),
                s.iterations,
                s.converged,
                s.populated_classes,
                s.classify_seconds,
                s.train_seconds,
                s.solve_seconds
            );
        }
    }
    Ok(())
}
