pub use fairgsa_core as core;
