//! Run configuration: one JSON document, unknown keys rejected.

use std::fmt;

use bergman_cmcd::family::DEFAULT_CAP;
use bergman_cmcd::geometry::{CircularDomain, Disk, GeometryError};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A real number kept as the decimal text it was written in. JSON numbers are
/// accepted too and stored by their shortest round-trip text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal(String);

impl Decimal {
    pub fn new(text: &str) -> Result<Self, String> {
        let t = text.trim();
        match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Self(t.to_string())),
            _ => Err(format!("'{text}' is not a finite decimal")),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.parse().expect("checked on construction")
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

struct DecimalVisitor;

impl Visitor<'_> for DecimalVisitor {
    type Value = Decimal;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or a decimal string")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
        Decimal::new(v).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
        Decimal::new(&format!("{v:?}")).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
        Ok(Decimal(v.to_string()))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
        Ok(Decimal(v.to_string()))
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(DecimalVisitor)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    pub cx: Decimal,
    pub cy: Decimal,
    pub r: Decimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilySpec {
    pub max_len: usize,
    pub prune_tol: Decimal,
    pub cap: usize,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self { max_len: 14, prune_tol: Decimal("0".into()), cap: DEFAULT_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSpec {
    /// `null` picks the default radius for the domain.
    pub radius: Option<Decimal>,
    pub m_init: usize,
    pub m_max: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        Self { radius: None, m_init: 256, m_max: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpansionSpec {
    #[serde(rename = "K")]
    pub k: usize,
}

impl Default for ExpansionSpec {
    fn default() -> Self {
        Self { k: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub directory: String,
    pub formats: Vec<Format>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { directory: ".".into(), formats: vec![Format::Csv] }
    }
}

fn default_degrees() -> Vec<usize> {
    vec![20]
}

fn default_precision() -> u32 {
    256
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Vec<DiskSpec>,
    #[serde(default = "default_degrees")]
    pub degrees: Vec<usize>,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default)]
    pub contour: ContourSpec,
    #[serde(default)]
    pub expansion: ExpansionSpec,
    #[serde(default)]
    pub outputs: OutputSpec,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if cfg.degrees.is_empty() {
            return Err("degrees must not be empty".into());
        }
        if cfg.precision_bits < 64 {
            return Err(format!("precision_bits {} is below 64", cfg.precision_bits));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization, output section excluded, so the
    /// same computation hashes alike wherever it is written.
    pub fn hash(&self) -> String {
        let computation = Self { outputs: OutputSpec::default(), ..self.clone() };
        let canonical = serde_json::to_string(&computation).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn domain(&self) -> Result<CircularDomain, GeometryError> {
        let disks = self
            .domain
            .iter()
            .map(|d| Disk::from_decimal(d.cx.as_str(), d.cy.as_str(), d.r.as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        CircularDomain::validate(disks)
    }

    pub fn wants_svg(&self) -> bool {
        self.outputs.formats.contains(&Format::Svg)
    }
}
