//! Command-line front end and HTTP service for the marketplace solver.

pub mod service;
pub mod solve;

use std::path::Path;

use anyhow::{Context, Result};
use marketvrp_core::{parse_cordeau, pr01, Instance};

/// Loads an instance from a Cordeau file, or the bundled `pr01`.
pub fn load_instance(source: &str) -> Result<Instance> {
    if source == "pr01" && !Path::new(source).exists() {
        return Ok(pr01());
    }
    let text = std::fs::read_to_string(source)
        .with_context(|| format!("cannot read instance file {source}"))?;
    parse_cordeau(&text).with_context(|| format!("cannot parse {source}"))
}
