use std::path::Path;

use conekernel::cone::{BVariant, ConeParams, Gauge};
use conekernel::estimates::ScanGrid;
use conekernel::propagator::KernelOptions;
use conekernel::quadrature::QuadratureSpec;
use conekernel::selftest::SelftestOptions;
use conekernel::specfun::SpecFunAccuracy;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConeSection {
    pub rho: f64,
    pub alpha: f64,
    pub gauge: Gauge,
    pub variant: BVariant,
}

impl Default for ConeSection {
    fn default() -> Self {
        Self {
            rho: 1.0,
            alpha: 0.5,
            gauge: Gauge::Constant,
            variant: BVariant::DerivationConsistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub samples: usize,
    pub seed: u64,
    pub t_min: f64,
    pub t_max: f64,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            samples: 20,
            seed: 1,
            t_min: 0.2,
            t_max: 3.0,
            r_min: 0.2,
            r_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSection {
    pub j_min: i32,
    pub j_max: i32,
    pub grid: ScanGrid,
}

impl Default for WaveSection {
    fn default() -> Self {
        Self {
            j_min: -2,
            j_max: 4,
            grid: ScanGrid::wave(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrichartzSection {
    pub samples: usize,
    pub seed: u64,
    pub modes: Vec<i64>,
    pub refinement: u32,
}

impl Default for StrichartzSection {
    fn default() -> Self {
        Self {
            samples: 20,
            seed: 1,
            modes: vec![-1, 0, 1],
            refinement: 0,
        }
    }
}

/// Everything a run depends on. Flags override values read from the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub cone: ConeSection,
    pub quadrature: QuadratureSpec,
    pub specfun: SpecFunAccuracy,
    pub scan: ScanGrid,
    pub compare: CompareSection,
    pub wave: WaveSection,
    pub strichartz: StrichartzSection,
    pub selftest: SelftestOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Cone parameters; `alpha = 0` selects the flux-free cone.
    pub fn params(&self) -> Result<ConeParams, CliError> {
        let c = &self.cone;
        let p = if c.alpha == 0.0 {
            ConeParams::baseline(c.rho)
        } else {
            ConeParams::new(c.rho, c.alpha)
        };
        let p = p.and_then(|p| p.with_gauge(c.gauge.clone()));
        p.map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            quadrature: self.quadrature.clone(),
            specfun: self.specfun,
            variant: self.cone.variant,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = |e: String| CliError::Validation(e);
        self.params()?;
        self.quadrature.validate().map_err(|e| v(e.to_string()))?;
        self.specfun.validate().map_err(|e| v(e.to_string()))?;
        self.scan.validate().map_err(|e| v(e.to_string()))?;
        self.wave.grid.validate().map_err(|e| v(e.to_string()))?;
        if self.wave.j_min > self.wave.j_max {
            return Err(v("wave.j_min must not exceed wave.j_max".into()));
        }
        let c = &self.compare;
        if !(c.t_min > 0.0 && c.t_max >= c.t_min && c.r_min > 0.0 && c.r_max >= c.r_min) {
            return Err(v("compare ranges must be positive and ordered".into()));
        }
        if self.strichartz.modes.is_empty() {
            return Err(v("strichartz.modes must not be empty".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_default_matches_builtin() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.toml");
        assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[cone]\nrh = 2.0\n").is_err());
        assert!(toml::from_str::<RunConfig>("[conee]\n").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.cone.alpha = 0.25;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn zero_flux_selects_flux_free_cone() {
        let mut c = RunConfig::default();
        c.cone.alpha = 0.0;
        assert_eq!(c.params().unwrap().alpha, 0.0);
        c.cone.alpha = 1.5;
        assert!(c.validate().is_err());
    }
}
