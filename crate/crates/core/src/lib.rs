//! Compressed-sensing MRI reconstruction with orthogonal dictionaries learned
//! on direction-classified image patches.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the precision for common uses.

pub mod dictionary;
pub mod direction;
pub mod error;
pub mod fft;
pub mod frame;
pub mod haar;
pub mod image;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod phantom;
pub mod sampling;
pub mod scalar;
pub mod sidwt;
pub mod solver;
pub mod sweep;

pub use dictionary::{
    haar2d_dictionary, hard_threshold, sparse_code, train_bank, train_class_dictionary,
    update_dictionary, DictionaryBank, OrthoDictionary, TrainConfig,
};
pub use direction::{
    build_direction_set, classify_patches, estimate_direction, ClassMap, DirectionMode,
    DirectionSet,
};
pub use error::{Error, Result};
pub use frame::{AnalysisOperator, FrameCoefficients, TightFrame};
pub use image::{assemble_adjoint, extract_patches, Image, Patch, PatchConfig};
pub use metrics::{rlne, ssim, MetricReport, SsimMode};
pub use phantom::{make_phantom, PhantomKind};
pub use sampling::{
    make_cartesian_mask, make_radial_mask, make_random2d_mask, FourierEncoding, KSpace, RadialSpec,
    SamplingMask, SamplingPattern,
};
pub use scalar::{Cx, Real};
pub use sidwt::SidwtFrame;
pub use solver::{
    admm_reconstruct, fdlcp_pipeline, sidwt_reference, soft_threshold, AdmmState, Penalty,
    PipelineConfig, PipelineReport, SolverConfig,
};

pub type C64 = Cx<f64>;
pub type C32 = Cx<f32>;
pub type Image64 = Image<f64>;
pub type Image32 = Image<f32>;
pub type KSpace64 = KSpace<f64>;
pub type KSpace32 = KSpace<f32>;
pub type DictionaryBank64 = DictionaryBank<f64>;
pub type DictionaryBank32 = DictionaryBank<f32>;
