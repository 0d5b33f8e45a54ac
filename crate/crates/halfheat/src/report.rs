//! Report envelope and plot-ready table helpers shared by the CLI and the
//! acceptance suite. Serialized documents carry a schema version tag and
//! keep a stable field order (struct order under serde).

use serde::Serialize;

pub const SCHEMA_VERSION: &str = "halfheat/1";

/// Machine-readable outcome, mapped to process exit codes by the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Work completed; no obstruction/divergence verdict.
    Completed,
    /// A check returned an obstruction or the solver diverged.
    ObstructedOrDiverged,
}

#[derive(Clone, Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub schema_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub payload: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, seed: u64, outcome: Outcome, payload: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            outcome,
            payload,
        }
    }
}

/// Flat CSV of `(z, σ, value)` functional samples.
pub fn condition_samples_csv(samples: &[(Vec<f64>, f64, f64)]) -> String {
    let mut out = String::from("z,sigma,value\n");
    for (z, sigma, value) in samples {
        let zs: Vec<String> = z.iter().map(|c| format!("{c:.12e}")).collect();
        out.push_str(&format!("\"{}\",{sigma:.12e},{value:.12e}\n", zs.join(" ")));
    }
    out
}

/// Flat CSV of `(x, value)` pairs.
pub fn pair_samples_csv(header: (&str, &str), samples: &[(f64, f64)]) -> String {
    let mut out = format!("{},{}\n", header.0, header.1);
    for (a, b) in samples {
        out.push_str(&format!("{a:.12e},{b:.12e}\n"));
    }
    out
}
