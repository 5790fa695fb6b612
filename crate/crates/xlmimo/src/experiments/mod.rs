//! Named parameter sweeps driven by a TOML scenario file.
//!
//! A scenario picks an experiment from [`EXPERIMENTS`], fixes its
//! parameters in `[params]` and sweeps any of them with `[[sweep]]` tables.
//! Every grid point gets its own random stream derived from the seed and the
//! point's index, so results do not depend on thread scheduling.
//!
//! ```
//! use xlmimo::experiments::{parse_config, run};
//!
//! let cfg = parse_config(r#"
//! name = "demo"
//! experiment = "rayleigh_vs_M"
//! frequency_hz = 2.4e9
//!
//! [layout]
//! kind = "collocated_ula"
//! elements = 64
//!
//! [[sweep]]
//! parameter = "elements"
//! values = [64, 256]
//! "#).unwrap();
//! let table = run(&cfg).unwrap();
//! assert_eq!(table.headers, ["frequency_hz", "elements", "aperture_m", "rayleigh_m", "reactive_m"]);
//! assert_eq!(table.rows.len(), 2);
//! ```

mod catalog;
mod config;
mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use catalog::{
    facing_array, find_experiment, Experiment, LayoutNeed, ParamDefault, ParamKind, ParamSpec, EXPERIMENTS,
};
pub use config::{
    config_hash, grid, parse_config, point_layout, resolved_params, validate, with_elements, Diagnostics, Issue,
    Placement, Point, Scale, ScattererPlacement, ScenarioConfig, SweepAxis,
};
pub use output::ResultTable;

use crate::{Error, Result};

/// Random stream for grid point `index`.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Validates `config` and evaluates every grid point in parallel.
pub fn run(config: &ScenarioConfig) -> Result<ResultTable> {
    let diagnostics = validate(config);
    if let Some(first) = diagnostics.errors.first() {
        return Err(Error::param("config", first.to_string()));
    }
    let experiment = find_experiment(&config.experiment)
        .ok_or_else(|| Error::param("experiment", format!("unknown experiment {:?}", config.experiment)))?;
    let points = grid(config, experiment)?;
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = point_rng(config.seed, i);
            let mut row = p.values().to_vec();
            row.extend((experiment.eval)(config, p, &mut rng)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultTable {
        experiment: experiment.name.to_string(),
        scenario: config.name.clone(),
        config_hash: config_hash(config),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        headers: experiment.header().iter().map(|h| h.to_string()).collect(),
        rows,
    })
}
