//! Scenario documents: a versioned TOML description of the outcome tree,
//! the ordered space, exponents, payoffs, densities and utilities.
//!
//! ```toml
//! version = 1
//! dimension = 1
//! numeraire = [1.0]
//! exponent = [2.0, 4.0]
//!
//! [[outcomes]]
//! label = "up"
//! probability = 0.5
//!
//! [[outcomes]]
//! label = "down"
//! probability = 0.5
//!
//! [payoffs]
//! f = [0.0, 1.0]
//!
//! [utilities.entropic]
//! family = "exponential"
//! rate = 1.0
//! ```
//!
//! `filtration` lists the atoms of every level by outcome label and defaults
//! to the one-period tree. Payoffs and densities are `n x d` arrays; a flat
//! list is accepted when `d = 1`.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oce::{Core, Utility};
use crate::ordered::{DualDensity, OrderedSpace, RandomVector};
use crate::space::{Filtration, FiniteMeasureSpace};
use crate::varexp::ExponentFunction;

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable naming the directory searched for relative scenario paths.
pub const SCENARIO_DIR_ENV: &str = "VARISK_SCENARIO_DIR";

/// Scenarios shipped with the crate, addressable by name.
pub const FIXTURES: &[(&str, &str)] = &[
    ("minimal", include_str!("../fixtures/minimal.toml")),
    ("constant", include_str!("../fixtures/constant.toml")),
    ("two_point", include_str!("../fixtures/two_point.toml")),
    ("two_asset", include_str!("../fixtures/two_asset.toml")),
    ("four_leaf", include_str!("../fixtures/four_leaf.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub label: String,
    pub probability: f64,
}

/// `n x d` array, or a flat list of `n` values for `d = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Array {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Array {
    fn rows(&self) -> Vec<Vec<f64>> {
        match self {
            Array::Flat(v) => v.iter().map(|&x| vec![x]).collect(),
            Array::Rows(r) => r.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    /// `exponential`, `cvar` or `piecewise`.
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_slope: Option<f64>,
    /// Defaults to `z / |z|^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DefaultsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
}

/// The document as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub numeraire: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtration: Option<Vec<Vec<Vec<String>>>>,
    pub outcomes: Vec<OutcomeSpec>,
    #[serde(default)]
    pub payoffs: BTreeMap<String, Array>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub densities: BTreeMap<String, Array>,
    #[serde(default)]
    pub utilities: BTreeMap<String, UtilitySpec>,
    #[serde(default)]
    pub defaults: DefaultsSpec,
}

/// Resolved numerical settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub norm_tol: f64,
    pub gap_tol: f64,
    pub audit_tol: f64,
    pub trials: usize,
    pub seed: u64,
    pub grid_resolution: usize,
}

impl Default for Settings {
    fn default() -> Self {
        Self { tol: 1e-8, norm_tol: 1e-10, gap_tol: 1e-3, audit_tol: 1e-6, trials: 1000, seed: 0, grid_resolution: 1000 }
    }
}

/// A validated scenario ready for computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub space: FiniteMeasureSpace,
    pub order: OrderedSpace,
    pub exponent: Option<ExponentFunction>,
    pub payoffs: BTreeMap<String, RandomVector>,
    pub densities: BTreeMap<String, DualDensity>,
    pub utilities: BTreeMap<String, Utility>,
    pub settings: Settings,
}

impl Scenario {
    pub fn payoff(&self, name: Option<&str>) -> Result<(&str, &RandomVector)> {
        pick(&self.payoffs, name, "payoff")
    }

    pub fn utility(&self, name: Option<&str>) -> Result<(&str, &Utility)> {
        pick(&self.utilities, name, "utility")
    }

    pub fn density(&self, name: Option<&str>) -> Result<(&str, &DualDensity)> {
        pick(&self.densities, name, "density")
    }

    /// Atom names at level `t`, outcome labels joined by `+`.
    pub fn atom_labels(&self, t: usize) -> Result<Vec<String>> {
        let labels = self.space.labels();
        Ok(self
            .space
            .filtration()
            .partition(t)?
            .iter()
            .map(|m| m.iter().map(|&i| labels[i].as_str()).collect::<Vec<_>>().join("+"))
            .collect())
    }
}

/// Looks an entry up by name; without a name, a sole entry is used.
fn pick<'a, T>(map: &'a BTreeMap<String, T>, name: Option<&str>, kind: &str) -> Result<(&'a str, &'a T)> {
    match name {
        Some(n) => map.get_key_value(n).map(|(k, v)| (k.as_str(), v)).ok_or_else(|| Error::Invalid {
            location: format!("--{kind}"),
            message: format!("no {kind} named '{n}' (available: {})", names(map)),
        }),
        None if map.len() == 1 => Ok(map.iter().next().map(|(k, v)| (k.as_str(), v)).unwrap()),
        None => Err(Error::Invalid {
            location: format!("--{kind}"),
            message: format!("a {kind} name is required (available: {})", names(map)),
        }),
    }
}

fn names<T>(map: &BTreeMap<String, T>) -> String {
    if map.is_empty() {
        "none".into()
    } else {
        map.keys().cloned().collect::<Vec<_>>().join(", ")
    }
}

fn invalid(location: impl Into<String>, message: impl ToString) -> Error {
    Error::Invalid { location: location.into(), message: message.to_string() }
}

/// Parses a document. In strict mode any unrecognized key is an error;
/// otherwise unrecognized keys are returned for reporting.
pub fn parse_document(text: &str, strict: bool) -> Result<(ScenarioDocument, Vec<String>)> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut ignored = Vec::new();
    let doc: ScenarioDocument =
        serde_ignored::deserialize(de, |path| ignored.push(path.to_string())).map_err(|e| Error::Parse(e.to_string()))?;
    if strict {
        if let Some(first) = ignored.first() {
            return Err(invalid(first.clone(), "unknown field"));
        }
    }
    Ok((doc, ignored))
}

impl ScenarioDocument {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Re-validates every construction invariant, naming the first violation.
    pub fn validate(&self) -> Result<Scenario> {
        if self.version != SCHEMA_VERSION {
            return Err(invalid("version", format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.version)));
        }
        if self.dimension == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if self.numeraire.len() != self.dimension {
            return Err(invalid("numeraire", format!("has {} entries, dimension is {}", self.numeraire.len(), self.dimension)));
        }
        let order = OrderedSpace::new(self.numeraire.clone()).map_err(|e| invalid("numeraire", e))?;
        if self.outcomes.is_empty() {
            return Err(invalid("outcomes", Error::EmptySpace));
        }
        let n = self.outcomes.len();
        let mut index = HashMap::new();
        for (i, o) in self.outcomes.iter().enumerate() {
            if index.insert(o.label.as_str(), i).is_some() {
                return Err(invalid(format!("outcomes[{i}].label"), format!("duplicate label '{}'", o.label)));
            }
        }
        let filtration = match &self.filtration {
            None => Filtration::one_period(n),
            Some(levels) => {
                let mut resolved = Vec::with_capacity(levels.len());
                for (t, atoms) in levels.iter().enumerate() {
                    let mut level = Vec::with_capacity(atoms.len());
                    for (k, atom) in atoms.iter().enumerate() {
                        let mut members = Vec::with_capacity(atom.len());
                        for label in atom {
                            members.push(*index.get(label.as_str()).ok_or_else(|| {
                                invalid(format!("filtration[{t}][{k}]"), format!("unknown outcome label '{label}'"))
                            })?);
                        }
                        level.push(members);
                    }
                    resolved.push(level);
                }
                Filtration::new(n, resolved).map_err(|e| invalid("filtration", e))?
            }
        };
        let labels = self.outcomes.iter().map(|o| o.label.clone()).collect();
        let weights = self.outcomes.iter().map(|o| o.probability).collect();
        let space = FiniteMeasureSpace::new(labels, weights, filtration).map_err(|e| match e {
            Error::NonPositiveProbability { index, .. } => invalid(format!("outcomes[{index}].probability"), e),
            other => invalid("outcomes", other),
        })?;

        let exponent = match &self.exponent {
            None => None,
            Some(p) if p.len() != n => {
                return Err(invalid("exponent", format!("has {} entries for {n} outcomes", p.len())));
            }
            Some(p) => Some(ExponentFunction::new(p.clone()).map_err(|e| match e {
                Error::ExponentOutOfRange { index, .. } => invalid(format!("exponent[{index}]"), e),
                other => invalid("exponent", other),
            })?),
        };

        let shaped = |kind: &str, name: &str, a: &Array| -> Result<Vec<Vec<f64>>> {
            let rows = a.rows();
            let location = format!("{kind}.{name}");
            if rows.len() != n {
                return Err(invalid(location, format!("has {} rows for {n} outcomes", rows.len())));
            }
            for (i, r) in rows.iter().enumerate() {
                if r.len() != self.dimension {
                    return Err(invalid(
                        format!("{location}[{i}]"),
                        format!("has {} entries, dimension is {}", r.len(), self.dimension),
                    ));
                }
                if let Some(j) = r.iter().position(|x| !x.is_finite()) {
                    return Err(invalid(format!("{location}[{i}][{j}]"), "not finite"));
                }
            }
            Ok(rows)
        };
        let mut payoffs = BTreeMap::new();
        for (name, a) in &self.payoffs {
            let rows = shaped("payoffs", name, a)?;
            payoffs.insert(name.clone(), RandomVector::from_rows(&rows).map_err(|e| invalid(format!("payoffs.{name}"), e))?);
        }
        let mut densities = BTreeMap::new();
        for (name, a) in &self.densities {
            let rows = shaped("densities", name, a)?;
            densities.insert(name.clone(), DualDensity::from_rows(&rows).map_err(|e| invalid(format!("densities.{name}"), e))?);
        }

        let mut utilities = BTreeMap::new();
        for (name, entry) in &self.utilities {
            let location = format!("utilities.{name}");
            let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(format!("{location}.{key}"), "missing parameter"));
            let core = match entry.family.as_str() {
                "exponential" => Core::Exponential { rate: need(entry.rate, "rate")? },
                "cvar" => Core::Cvar { level: need(entry.level, "level")? },
                "piecewise" => Core::PiecewiseLinear {
                    loss_slope: need(entry.loss_slope, "loss_slope")?,
                    gain_slope: need(entry.gain_slope, "gain_slope")?,
                },
                other => {
                    return Err(invalid(
                        format!("{location}.family"),
                        format!("unknown family '{other}' (expected exponential, cvar or piecewise)"),
                    ))
                }
            };
            let u = match &entry.weight {
                Some(w) => Utility::new(core, w.clone(), &order),
                None => Utility::with_default_weight(core, &order),
            }
            .map_err(|e| invalid(location.clone(), e))?;
            utilities.insert(name.clone(), u);
        }

        let base = Settings::default();
        let d = &self.defaults;
        let settings = Settings {
            tol: d.tol.unwrap_or(base.tol),
            norm_tol: d.norm_tol.unwrap_or(base.norm_tol),
            gap_tol: d.gap_tol.unwrap_or(base.gap_tol),
            audit_tol: d.audit_tol.unwrap_or(base.audit_tol),
            trials: d.trials.unwrap_or(base.trials),
            seed: d.seed.unwrap_or(base.seed),
            grid_resolution: d.grid_resolution.unwrap_or(base.grid_resolution),
        };
        for (key, value) in [
            ("tol", settings.tol),
            ("norm_tol", settings.norm_tol),
            ("gap_tol", settings.gap_tol),
            ("audit_tol", settings.audit_tol),
        ] {
            if !(value > 0.0) {
                return Err(invalid(format!("defaults.{key}"), Error::NonPositiveTolerance(value)));
            }
        }
        if settings.grid_resolution == 0 {
            return Err(invalid("defaults.grid_resolution", "must be positive"));
        }

        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "unnamed".into()),
            space,
            order,
            exponent,
            payoffs,
            densities,
            utilities,
            settings,
        })
    }
}

/// Parses and validates.
pub fn parse_scenario(text: &str, strict: bool) -> Result<(ScenarioDocument, Scenario)> {
    let (doc, _) = parse_document(text, strict)?;
    let scenario = doc.validate()?;
    Ok((doc, scenario))
}

/// Reads a scenario from `path`.
pub fn load_scenario(path: &Path, strict: bool) -> Result<(ScenarioDocument, Scenario)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text, strict)
}

/// Scenario text located by a command-line argument.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSource {
    pub origin: String,
    pub text: String,
}

/// Resolves `arg` as a file path, then relative to the directory in
/// [`SCENARIO_DIR_ENV`] (also trying a `.toml` suffix), then as the name of
/// a built-in fixture.
pub fn resolve_scenario(arg: &str) -> Result<ScenarioSource> {
    let mut candidates = vec![PathBuf::from(arg)];
    if let Some(dir) = std::env::var_os(SCENARIO_DIR_ENV) {
        let dir = PathBuf::from(dir);
        candidates.push(dir.join(arg));
        candidates.push(dir.join(format!("{arg}.toml")));
    }
    for path in candidates {
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            return Ok(ScenarioSource { origin: path.display().to_string(), text });
        }
    }
    if let Some((_, text)) = FIXTURES.iter().find(|(name, _)| *name == arg) {
        return Ok(ScenarioSource { origin: format!("builtin:{arg}"), text: text.to_string() });
    }
    Err(Error::Io(format!("scenario '{arg}' not found")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_load() {
        for (name, text) in FIXTURES {
            let (_, s) = parse_scenario(text, true).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(s.name, *name);
        }
    }

    #[test]
    fn minimal_document_has_trivial_horizon() {
        let (_, s) = parse_scenario(FIXTURES[0].1, true).unwrap();
        assert_eq!(s.space.len(), 1);
        assert_eq!(s.space.horizon(), 0);
    }

    #[test]
    fn short_probabilities_are_rejected() {
        let text = FIXTURES[2].1.replacen("probability = 0.5", "probability = 0.48", 1);
        let err = parse_scenario(&text, false).unwrap_err();
        assert!(err.to_string().contains("weights sum"), "{err}");
        assert!(matches!(err, Error::Invalid { ref location, .. } if location == "outcomes"));
    }

    #[test]
    fn strict_mode_rejects_unknown_keys() {
        let text = format!("colour = \"red\"\n{}", FIXTURES[2].1);
        assert!(parse_scenario(&text, false).is_ok());
        let err = parse_scenario(&text, true).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref location, .. } if location == "colour"), "{err}");
    }

    #[test]
    fn diagnostics_name_the_location() {
        let text = FIXTURES[2].1.replace("rate = 1.0", "rate = -1.0");
        let err = parse_scenario(&text, true).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref location, .. } if location == "utilities.entropic"), "{err}");
        let text = FIXTURES[4].1.replacen("[\"a\", \"b\"]", "[\"a\", \"zz\"]", 1);
        let err = parse_scenario(&text, true).unwrap_err();
        assert!(matches!(err, Error::Invalid { ref location, .. } if location.starts_with("filtration")), "{err}");
    }
}
