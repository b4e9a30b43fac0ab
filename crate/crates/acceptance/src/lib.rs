//! Acceptance checks live under `tests/`. Run them with
//! `cargo test -p flexshare-tests --test acceptance -- --test-threads=1` for ordered output.
