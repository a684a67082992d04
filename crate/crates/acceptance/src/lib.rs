//! Acceptance checks for the blueprint pipeline live in `tests/acceptance.rs`.
