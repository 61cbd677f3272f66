//! B-mode-like frames from scatterer fields by separable, axially
//! modulated Gaussian point-spread-function summation.

mod render;

pub use render::{
    compress, envelope, quantize, render_complex, render_frame, render_sequence, BModeFrame, ComplexImage,
    GridConfig, PsfSpec, RenderConfig, RenderMode,
};
