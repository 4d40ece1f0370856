//! Bench-only crate; see benches/engines.rs.
