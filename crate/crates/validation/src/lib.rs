//! Holds the `acceptance` test target, which checks the model end to end
//! against the figures it reproduces. Run with `cargo test -p rvo-validation`.
