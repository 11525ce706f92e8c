pub mod scalar;
pub mod special;

pub use scalar::Real;
pub mod eden;
pub mod layers;
pub mod model;
pub mod oracle;
pub mod peel;
pub mod sampler;

pub use model::{make_special_model, DerivedConstants, ModelError, ModelParams, Phase};

pub type Model = ModelParams<f64>;
pub type ModelF32 = ModelParams<f32>;
