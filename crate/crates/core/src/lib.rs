pub mod backends;
pub mod corrupt;
pub mod detect;
pub mod eval;
pub mod ingest;
pub mod model;
pub mod quantify;
pub mod rng;
pub mod synth;
