//! Artificial-microsaccade event streams: synthesis, calibration,
//! compensation, and texture-quality metrics for an event camera behind a
//! rotating wedge prism.
//!
//! The crate is organized around the pipeline:
//! [`optics`] models the prism geometrically; [`translate`] synthesizes
//! event streams (from analytic scenes, frame sequences, or existing
//! streams); [`calib`] recovers the circular displacement model from data
//! and removes it; [`metrics`] quantifies the resulting texture quality.
//!
//! Data-parallel kernels run on rayon when the default `parallel` feature
//! is enabled and fall back to sequential loops otherwise; chunking is
//! fixed either way, so results are identical across worker counts.

pub mod calib;
pub mod config;
pub mod events;
pub mod geometry;
pub mod metrics;
pub mod optics;
pub mod pgm;
pub mod translate;

mod par;

pub use calib::{
    calibrate, compensate_stream, compensation_error, sharpness_cost, warp_event, CalibError,
    CompensationParams, CostReport, SearchConfig,
};
pub use events::{
    accumulate_iwe, accumulate_iwe_warped, read_events, sync_theta, write_events, Binning,
    EncoderSample, Event, EventError, EventFormat, EventStream, Iwe, Polarity, WarpedEvent,
    WarpedStream,
};
pub use geometry::{EdgeCircle, EdgeSegment, GroundTruthEdges};
pub use metrics::{
    binarized_entropy, kde_density_variance, ods_f, DensityReport, EdgeMap, KdeBandwidth,
    MetricsError, MetricsReport, OdsScore,
};
pub use optics::{Intrinsics, OpticsError, PrismConfig, UnitVec3};
pub use translate::{
    generate_scene, synth_ami_from_events, synth_ami_from_frames_plus_events,
    synth_events_from_frames, synth_events_from_scene, FrameSequence, Motion, Pattern, SceneSpec,
    SynthConfig, TranslateError,
};
