//! Regenerates the bundled evaluation fixture.
//!
//! `cargo run -p hfpc-core --example make_fixture -- crates/cli/tests/fixtures/hfpc12`

use std::path::PathBuf;

use hfpc_core::synthetic::{write_fixture, FIXTURE_SEED};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "hfpc12".into()));
    std::fs::create_dir_all(&dir)?;
    let (records, truth) = write_fixture(&dir, FIXTURE_SEED)?;
    println!("{}: {} records, {} generated images", dir.display(), records.len(), truth.len());
    Ok(())
}
