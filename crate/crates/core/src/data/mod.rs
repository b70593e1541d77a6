//! Dataset manifest, frame I/O, input normalization and the synthetic scene
//! generator.

mod dataset;
mod synth;

pub use dataset::{
    load_dataset, normalize_inputs, save_frame, Dataset, DatasetManifest, Frame, FrameImages, FrameRecord, Sample,
    FORMAT_VERSION, MANIFEST_FILE,
};
pub use synth::{
    default_scene_specs, generate_dataset, generate_synthetic_scene, render_frame, render_scene, CameraSpec,
    ColorSpec, NamedColor, ObjectSpec, PlacedObject, RenderedFrame, Role, SceneSpec, SynthSpec,
};
