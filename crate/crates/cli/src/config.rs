use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zygmund::czoperator::{Kernel, Scheme};
use zygmund::geometry::{Domain, PolygonDomain};
use zygmund::growth::{GrowthFunction, Modulus};
use zygmund::polyapprox::{Grid, Norm};

/// Problems with the configuration itself; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<toml::de::Error> for ConfigError {
    fn from(e: toml::de::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `square`, `disc`, `sawtooth`, or a path to a closed polyline file.
    pub domain: String,
    /// Edges of the `disc` preset.
    pub segments: usize,
    /// `power s=..`, `powerlog s=.. q=..`, or `table:<path>`.
    pub growth: String,
    /// Comma-separated kernel names.
    pub kernel: String,
    /// Grid cells per unit length; a power of two.
    pub resolution: usize,
    /// Coarsest cube level in profiles.
    pub min_level: i32,
    /// Finest cube level in seminorms, profiles and coverings.
    pub max_level: i32,
    /// Input function for `seminorm`, `extend` and `apply`.
    pub function: String,
    /// `L1`, `L2` or `Linf`.
    pub norm: String,
    /// `corrected` or `midpoint`.
    pub scheme: String,
    /// Largest exterior cube carrying a polynomial in `extend`.
    pub cutoff: f64,
    /// Write grid fields as text next to the tables.
    pub fields: bool,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: "square".into(),
            segments: 4096,
            growth: "power s=1".into(),
            kernel: "beurling_real".into(),
            resolution: 256,
            min_level: 2,
            max_level: 6,
            function: "abs_x1".into(),
            norm: "L1".into(),
            scheme: "corrected".into(),
            cutoff: 1.0 / 16.0,
            fields: false,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }
}

/// Sets `key` from a TOML value literal, falling back to a bare string.
fn set_key(table: &mut toml::Table, key: &str, raw: &str) -> Result<(), ConfigError> {
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    table.insert(key.to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Defaults, then the file, then `key=value` overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
                .parse::<toml::Table>()?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("expected key=value, got `{o}`")))?;
            set_key(&mut table, k.trim(), v.trim())?;
        }
        let cfg: RunConfig = table.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.resolution.is_power_of_two() {
            return Err(ConfigError(format!(
                "resolution {} is not a power of two",
                self.resolution
            )));
        }
        if self.min_level > self.max_level {
            return Err(ConfigError("min_level exceeds max_level".into()));
        }
        if (self.resolution as f64) < 2.0 * 2f64.powi(self.max_level) {
            return Err(ConfigError(format!(
                "max_level {} needs at least {} cells per unit length",
                self.max_level,
                2u64 << self.max_level
            )));
        }
        if !(self.cutoff > 0.0) {
            return Err(ConfigError("cutoff must be positive".into()));
        }
        self.norm()?;
        self.scheme()?;
        self.kernels()?;
        Ok(())
    }

    pub fn h(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// `log2(resolution)`, the level of a single grid cell.
    pub fn grid_level(&self) -> i32 {
        self.resolution.trailing_zeros() as i32
    }

    pub fn domain(&self) -> Result<PolygonDomain, ConfigError> {
        match self.domain.as_str() {
            "square" => Ok(PolygonDomain::unit_square()),
            "disc" => {
                if self.segments < 3 {
                    return Err(ConfigError("disc needs at least 3 segments".into()));
                }
                Ok(PolygonDomain::disc(self.segments))
            }
            "sawtooth" => Ok(PolygonDomain::sawtooth()),
            path => PolygonDomain::load(Path::new(path)).map_err(|e| ConfigError(format!("domain {path}: {e}"))),
        }
    }

    pub fn grid(&self, domain: &dyn Domain) -> Result<Grid, ConfigError> {
        Grid::aligned(&domain.bounding_box(), self.h()).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn growth(&self) -> Result<GrowthFunction, ConfigError> {
        let m = match self.growth.strip_prefix("table:") {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{path}: {e}")))?;
                Modulus::parse_table(&text)
            }
            None => Modulus::parse(&self.growth),
        }
        .map_err(|e| ConfigError(e.to_string()))?;
        GrowthFunction::new(m).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn kernels(&self) -> Result<Vec<Kernel>, ConfigError> {
        // commas also separate riesz2 indices, so split on names instead
        let mut out = Vec::new();
        let mut rest = self.kernel.trim();
        while !rest.is_empty() {
            let end = if rest.starts_with("riesz2(") {
                rest.find(')').map_or(rest.len(), |i| i + 1)
            } else {
                rest.find(',').unwrap_or(rest.len())
            };
            let name = &rest[..end];
            out.push(Kernel::parse(name).map_err(|e| ConfigError(e.to_string()))?);
            rest = rest[end..].trim_start_matches([',', ' ']);
        }
        if out.is_empty() {
            return Err(ConfigError("no kernel given".into()));
        }
        Ok(out)
    }

    pub fn norm(&self) -> Result<Norm, ConfigError> {
        Norm::parse(&self.norm).ok_or_else(|| ConfigError(format!("unknown norm `{}`", self.norm)))
    }

    pub fn scheme(&self) -> Result<Scheme, ConfigError> {
        Scheme::parse(&self.scheme).ok_or_else(|| ConfigError(format!("unknown scheme `{}`", self.scheme)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_take_typed_values() {
        let c = RunConfig::load(
            None,
            &["resolution=512".into(), "growth=power s=2".into(), "fields=true".into()],
        )
        .unwrap();
        assert_eq!(c.resolution, 512);
        assert_eq!(c.growth, "power s=2");
        assert!(c.fields);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::load(None, &["resolution=300".into()]).is_err());
        assert!(RunConfig::load(None, &["max_level=9".into()]).is_err());
        assert!(RunConfig::load(None, &["colour=red".into()]).is_err());
        assert!(RunConfig::load(None, &["kernel=hilbert".into()]).is_err());
    }

    #[test]
    fn kernel_lists() {
        let c = RunConfig {
            kernel: "riesz2(1,1), riesz2(1,2),beurling_imag".into(),
            ..Default::default()
        };
        assert_eq!(
            c.kernels().unwrap(),
            vec![
                Kernel::Riesz2 { i: 1, j: 1 },
                Kernel::Riesz2 { i: 1, j: 2 },
                Kernel::BeurlingImag
            ]
        );
    }
}
