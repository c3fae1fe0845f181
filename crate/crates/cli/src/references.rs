//! The bundled reference configurations (copies of the files in `configs/`).

use crate::config::{parse_str, RunConfig};

pub const MARANGONI: &str = include_str!("../../../configs/marangoni.toml");
pub const SPINODAL: &str = include_str!("../../../configs/spinodal.toml");
pub const DECOUPLED: &str = include_str!("../../../configs/decoupled.toml");
pub const SMOOTH: &str = include_str!("../../../configs/smooth.toml");
pub const TWIN: &str = include_str!("../../../configs/twin.toml");

fn load(text: &str) -> RunConfig {
    parse_str(text).expect("bundled configuration is valid")
}

/// Drop in a temperature gradient with Marangoni forcing and gravity.
pub fn marangoni() -> RunConfig {
    load(MARANGONI)
}

/// Spinodal decomposition on 32 x 32 cells.
pub fn spinodal() -> RunConfig {
    load(SPINODAL)
}

/// Isothermal limit without Marangoni forcing or gravity.
pub fn decoupled() -> RunConfig {
    load(DECOUPLED)
}

/// Smooth data for temporal self-convergence.
pub fn smooth() -> RunConfig {
    load(SMOOTH)
}

/// Matched densities for twin runs.
pub fn twin() -> RunConfig {
    load(TWIN)
}

#[cfg(test)]
mod tests {
    #[test]
    fn bundled_configs_parse() {
        for c in [super::marangoni(), super::spinodal(), super::decoupled(), super::smooth(), super::twin()] {
            assert!(c.scheme.n_steps > 0);
        }
    }
}
