//! Method specifications for benchmark runs.

use serde::{Deserialize, Serialize};

use crate::ransac::SampleGrid;

use super::CliError;

/// The default method matrix: four λ grids, each with and without local
/// optimization, for both the equal and the different distortion track.
pub const DEFAULT_METHODS_JSON: &str = include_str!("../../data/methods.json");

/// Which non-minimal solver the method refines with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTrack {
    /// 7-point hypotheses only; no refinement.
    Pinhole7pt,
    /// Equal distortion: shared grid, 9-point refit.
    Equal9pt,
    /// Different distortion: product grid, 12-point refit.
    Two12pt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub name: String,
    pub track: SolverTrack,
    pub grid: SampleGrid,
    pub lo: bool,
}

impl MethodSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("method name must not be empty".into());
        }
        self.grid.validate().map_err(|e| format!("{}: {e}", self.name))?;
        match (self.track, self.lo) {
            (SolverTrack::Pinhole7pt, true) => Err(format!("{}: pinhole7pt has no refit solver for lo", self.name)),
            (SolverTrack::Equal9pt, _) if !self.grid.shared => {
                Err(format!("{}: equal9pt requires a shared grid", self.name))
            }
            (SolverTrack::Two12pt, _) if self.grid.shared => {
                Err(format!("{}: two12pt requires a non-shared grid", self.name))
            }
            _ => Ok(()),
        }
    }
}

/// Parses and validates a JSON array of methods. Names must be unique and the
/// list nonempty.
pub fn parse_methods(json: &str) -> Result<Vec<MethodSpec>, CliError> {
    let methods: Vec<MethodSpec> =
        serde_json::from_str(json).map_err(|e| CliError::Parse(format!("methods: {e}")))?;
    validate_methods(&methods)?;
    Ok(methods)
}

pub fn validate_methods(methods: &[MethodSpec]) -> Result<(), CliError> {
    if methods.is_empty() {
        return Err(CliError::Parse("methods: list is empty".into()));
    }
    for (i, m) in methods.iter().enumerate() {
        m.validate().map_err(|e| CliError::Parse(format!("methods: {e}")))?;
        if methods[..i].iter().any(|o| o.name == m.name) {
            return Err(CliError::Parse(format!("methods: duplicate name {}", m.name)));
        }
    }
    Ok(())
}

pub fn default_methods() -> Vec<MethodSpec> {
    parse_methods(DEFAULT_METHODS_JSON).expect("bundled methods file is valid")
}

/// Builds the default method matrix programmatically.
pub fn method_matrix() -> Vec<MethodSpec> {
    let grids: [&[f64]; 4] = [&[0.0], &[-0.9], &[0.0, -0.6, -1.2], &[-0.6, -0.9, -1.2]];
    let label = |g: &[f64]| g.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(",");
    let mut out = Vec::new();
    for g in grids {
        let l = label(g);
        out.push(MethodSpec {
            name: format!("7pt{{{l}}}"),
            track: SolverTrack::Equal9pt,
            grid: SampleGrid::shared(g),
            lo: false,
        });
        out.push(MethodSpec {
            name: format!("7pt{{{l}}}+9pt"),
            track: SolverTrack::Equal9pt,
            grid: SampleGrid::shared(g),
            lo: true,
        });
    }
    for g in grids {
        let l = label(g);
        out.push(MethodSpec {
            name: format!("7pt{{{l}}}x{{{l}}}"),
            track: SolverTrack::Two12pt,
            grid: SampleGrid::different(g, g),
            lo: false,
        });
        out.push(MethodSpec {
            name: format!("7pt{{{l}}}x{{{l}}}+12pt"),
            track: SolverTrack::Two12pt,
            grid: SampleGrid::different(g, g),
            lo: true,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_file_matches_matrix() {
        let methods = default_methods();
        assert_eq!(methods.len(), 16);
        assert_eq!(methods, method_matrix());
    }

    #[test]
    fn empty_list_is_parse_error() {
        assert!(matches!(parse_methods("[]"), Err(CliError::Parse(_))));
        assert!(matches!(parse_methods("{"), Err(CliError::Parse(_))));
    }

    #[test]
    fn track_compatibility() {
        let mut m = MethodSpec {
            name: "x".into(),
            track: SolverTrack::Equal9pt,
            grid: SampleGrid::different(&[0.0], &[0.0]),
            lo: true,
        };
        assert!(m.validate().is_err());
        m.track = SolverTrack::Two12pt;
        assert!(m.validate().is_ok());
        m.track = SolverTrack::Pinhole7pt;
        assert!(m.validate().is_err());
        m.lo = false;
        assert!(m.validate().is_ok());
    }

    #[test]
    fn duplicate_names() {
        let m = method_matrix();
        let dup = vec![m[0].clone(), m[0].clone()];
        assert!(validate_methods(&dup).is_err());
    }
}
