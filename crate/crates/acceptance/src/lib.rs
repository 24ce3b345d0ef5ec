//! Acceptance run for the data lab. The checks live in `tests/acceptance.rs`
//! and run with `cargo test -p gcl-datalab-acceptance`.
