use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Green,
    Equidist,
    Schwarzian,
    Fekete,
    Height,
    Henon,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Green => "green",
            Kind::Equidist => "equidist",
            Kind::Schwarzian => "schwarzian",
            Kind::Fekete => "fekete",
            Kind::Height => "height",
            Kind::Henon => "henon",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Ascending coefficient list, e.g. `"[0.3, 0, 1]"` for `z^2 + 0.3`.
    pub coeffs: String,
    /// Jacobian constant of a Hénon map.
    pub delta: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSpec {
    pub base: [String; 2],
    pub dir: [String; 2],
}

fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    500
}
fn default_precision() -> u32 {
    256
}
fn default_max_sweeps() -> usize {
    400
}
fn default_samples() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Inclusive range `[first, last]` of iterate counts.
    pub n: Option<[u32; 2]>,
    pub m: Option<usize>,
    pub a: Option<String>,
    pub seed: Option<u64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Starting precision of multiprecision root polishing, in bits.
    #[serde(default = "default_precision")]
    pub precision: u32,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
    /// Complex points `[re, im]`.
    pub points: Option<Vec<[f64; 2]>>,
    /// Points `[re z, im z, re w, im w]` of the plane for Hénon maps.
    pub henon_points: Option<Vec<[f64; 4]>>,
    /// `A = λ I₂`.
    pub lambda: Option<String>,
    /// `A = [[a1, a2], [a3, a4]]` as `[a1, a2, a3, a4]`.
    pub shift: Option<[String; 4]>,
    pub line: Option<LineSpec>,
    /// Radius of the circle of slice test parameters.
    pub test_radius: Option<f64>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: None,
            m: None,
            a: None,
            seed: None,
            samples: default_samples(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            precision: default_precision(),
            max_sweeps: default_max_sweeps(),
            points: None,
            henon_points: None,
            lambda: None,
            shift: None,
            line: None,
            test_radius: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub output_dir: PathBuf,
    pub map: MapSpec,
    #[serde(default)]
    pub params: Params,
}

/// A rejected configuration field.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn bad(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            bad("config", msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level checks beyond what the types enforce.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        if !(p.tol > 0.0) {
            return Err(bad("params.tol", "must be positive"));
        }
        if p.max_iter == 0 {
            return Err(bad("params.max_iter", "must be positive"));
        }
        if p.max_sweeps == 0 {
            return Err(bad("params.max_sweeps", "must be positive"));
        }
        if p.samples == 0 {
            return Err(bad("params.samples", "must be positive"));
        }
        if dynpot::Precision::new(p.precision).is_err() {
            return Err(bad("params.precision", "must lie between 53 and 1024 bits"));
        }
        if let Some(r) = p.test_radius {
            if !(r > 0.0) {
                return Err(bad("params.test_radius", "must be positive"));
            }
        }
        if let Some([lo, hi]) = p.n {
            if lo > hi {
                return Err(bad("params.n", "range must be [first, last] with first <= last"));
            }
            if lo == 0 {
                return Err(bad("params.n", "iterate counts start at 1"));
            }
        }
        let needs_n = !matches!(self.kind, Kind::Green);
        if needs_n && p.n.is_none() {
            return Err(bad("params.n", format!("required for {} experiments", self.kind.name())));
        }
        if matches!(self.kind, Kind::Equidist | Kind::Fekete | Kind::Height) {
            if p.m.is_none() {
                return Err(bad("params.m", format!("required for {} experiments", self.kind.name())));
            }
            if p.a.is_none() {
                return Err(bad("params.a", format!("required for {} experiments", self.kind.name())));
            }
        }
        if self.kind == Kind::Schwarzian && p.points.as_ref().is_none_or(Vec::is_empty) {
            return Err(bad("params.points", "required for schwarzian experiments"));
        }
        if self.kind == Kind::Height {
            if let Some(a) = &p.a {
                if a.trim().parse::<rug::Integer>().is_err() {
                    return Err(bad("params.a", "must be an integer for height experiments"));
                }
            }
        }
        if self.kind == Kind::Fekete && p.seed.is_none() {
            return Err(bad("params.seed", "required whenever sampling is used"));
        }
        match self.kind {
            Kind::Henon => {
                if self.map.delta.is_none() {
                    return Err(bad("map.delta", "required for Hénon maps"));
                }
                match (&p.lambda, &p.shift) {
                    (None, None) => return Err(bad("params.lambda", "one of lambda or shift is required")),
                    (Some(_), Some(_)) => return Err(bad("params.shift", "give either lambda or shift, not both")),
                    _ => {}
                }
                self.shift_matrix()?;
                if p.henon_points.is_none() && p.line.is_none() {
                    return Err(bad("params.henon_points", "give henon_points, line, or both"));
                }
            }
            _ if self.map.delta.is_some() => {
                return Err(bad("map.delta", "only Hénon experiments take delta"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn shift_matrix(&self) -> Result<dynpot::henon::ShiftMatrix, ConfigError> {
        use dynpot::henon::ShiftMatrix;
        let parse = |field: &str, s: &str| s.parse::<dynpot::CRational>().map_err(|e| bad(field, e.to_string()));
        match (&self.params.lambda, &self.params.shift) {
            (Some(l), _) => {
                let l = parse("params.lambda", l)?;
                ShiftMatrix::scalar(l).map_err(|_| bad("params.lambda", "a4 = λ must be nonzero"))
            }
            (None, Some([a1, a2, a3, a4])) => ShiftMatrix::new(
                parse("params.shift", a1)?,
                parse("params.shift", a2)?,
                parse("params.shift", a3)?,
                parse("params.shift", a4)?,
            )
            .map_err(|_| bad("params.shift", "a4 must be nonzero so that det(D(f^n) - A) has degree d^n - 1")),
            (None, None) => Err(bad("params.lambda", "one of lambda or shift is required")),
        }
    }

    /// Hash input: the parsed configuration in canonical JSON form.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Annotated template printed by `schema`.
pub const SCHEMA: &str = r#"# dynpot experiment configuration (TOML)
kind = "equidist"            # green | equidist | schwarzian | fekete | height | henon
output_dir = "out/equidist"  # overridden by DYNPOT_OUTPUT_DIR

[map]
coeffs = "[0.3, 0, 1]"       # ascending coefficients of p; z^2 + 0.3
# delta = "0.3"              # Hénon only: f(z, w) = (p(z) - delta w, z)

[params]
n = [4, 10]                  # inclusive range of iterates (all kinds but green)
m = 1                        # derivative order (equidist, fekete, height)
a = "1"                      # target value (equidist, fekete, height; integer for height)
# seed = 7                   # required for fekete
# samples = 100000           # Brolin samples (fekete)
# tol = 1e-12                # certified tolerance, > 0
# max_iter = 500             # Green-function iteration budget, > 0
# precision = 256            # starting bits of root polishing, 53..=1024
# max_sweeps = 400           # multiprecision Aberth sweeps, > 0
# points = [[2.0, 0.0]]      # complex points (green, schwarzian)
# henon_points = [[3.0, 0.0, 0.0, 0.0]]   # [re z, im z, re w, im w] (henon)
# lambda = "1"               # henon: A = lambda I
# shift = ["1", "0", "0", "1"]            # henon: A = [[a1, a2], [a3, a4]], a4 != 0
# line = { base = ["0", "0"], dir = ["1", "0"] }   # henon slice line
# test_radius = 10.0         # henon slice test circle
"#;

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
kind = "equidist"
output_dir = "out"
[map]
coeffs = "[0.3, 0, 1]"
[params]
n = [4, 6]
m = 1
a = "1"
"#;

    #[test]
    fn parses_and_defaults() {
        let cfg = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(cfg.kind, Kind::Equidist);
        assert_eq!(cfg.params.tol, 1e-12);
        assert_eq!(cfg.params.samples, 100_000);
    }

    #[test]
    fn schema_template_parses() {
        let cfg = ExperimentConfig::parse(SCHEMA).unwrap();
        assert_eq!(cfg.params.n, Some([4, 10]));
    }

    #[test]
    fn field_level_errors() {
        let err = ExperimentConfig::parse(&BASE.replace("m = 1", "m = 1\ntol = -1.0")).unwrap_err();
        assert_eq!(err.field, "params.tol");
        let err = ExperimentConfig::parse(&BASE.replace("n = [4, 6]", "n = [6, 4]")).unwrap_err();
        assert_eq!(err.field, "params.n");
        let err = ExperimentConfig::parse(&BASE.replace("a = \"1\"", "")).unwrap_err();
        assert_eq!(err.field, "params.a");
        let err = ExperimentConfig::parse(&BASE.replace("kind = \"equidist\"", "kind = \"fekete\"")).unwrap_err();
        assert_eq!(err.field, "params.seed");
        let err = ExperimentConfig::parse(&BASE.replace("m = 1", "m = 1\nbogus = 3")).unwrap_err();
        assert!(err.message.contains("bogus"));
    }

    #[test]
    fn henon_shift_needs_nonzero_a4() {
        let text = r#"
kind = "henon"
output_dir = "out"
[map]
coeffs = "[-1.1, 0, 1]"
delta = "0.3"
[params]
n = [1, 3]
shift = ["1", "0", "0", "0"]
"#;
        let err = ExperimentConfig::parse(text).unwrap_err();
        assert_eq!(err.field, "params.shift");
        assert!(err.message.contains("a4 must be nonzero"));
    }
}
