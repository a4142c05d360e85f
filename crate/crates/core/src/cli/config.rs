//! Run configuration: one TOML file with a table per command. Every field
//! has a default, so an empty file (or none) runs the standard instances.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::asymptotics::SweepConfig;
use crate::error::{Error, Result};
use crate::geom::{check_odd, Point};
use crate::grid::DomainSpec;
use crate::profile::ProfileProblem;
use crate::slit::SlitProblem;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub eig: EigConfig,
    pub sweep: SweepSection,
    pub mk: MkConfig,
    pub profile: ProfileConfig,
    pub falpha: FAlphaConfig,
    pub fit: FitConfig,
    pub identities: IdentitiesConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Applies a `--k` override to every section that has an order.
    pub fn set_k(&mut self, k: usize) {
        self.mk.k = k;
        self.profile.k = k;
        self.falpha.k = k;
        self.fit.k = k;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainConfig {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
    },
    Rectangle {
        min: [f64; 2],
        max: [f64; 2],
    },
    HalfDisk {
        radius: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for DomainConfig {
    fn default() -> Self {
        DomainConfig::Disk {
            center: [0.0, 0.0],
            radius: 1.0,
        }
    }
}

impl DomainConfig {
    pub fn spec(&self) -> Result<DomainSpec> {
        let spec = match *self {
            DomainConfig::Disk { center, radius } => DomainSpec::disk(point(center), radius),
            DomainConfig::Rectangle { min, max } => DomainSpec::rectangle(point(min), point(max)),
            DomainConfig::HalfDisk { radius } => DomainSpec::half_disk(radius),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

/// Either a count of equispaced angles starting at 0 or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angles {
    Count(usize),
    List(Vec<f64>),
}

impl Angles {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Angles::Count(n) => (0..*n).map(|j| TAU * j as f64 / *n as f64).collect(),
            Angles::List(v) => v.clone(),
        }
    }
}

fn check_spacings(name: &str, h: &[f64]) -> Result<()> {
    if h.is_empty() || h.iter().any(|x| !(*x > 0.0)) || h.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config(format!("{name}: spacings must be positive and strictly decreasing")));
    }
    Ok(())
}

fn check_increasing(name: &str, r: &[f64]) -> Result<()> {
    if r.len() < 2 || r.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name}: need at least two strictly increasing radii")));
    }
    Ok(())
}

fn config_err(section: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config(m) => Error::Config(m),
        other => Error::Config(format!("[{section}] {other}")),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigConfig {
    pub domain: DomainConfig,
    pub pole: [f64; 2],
    pub h_seq: Vec<f64>,
    pub count: usize,
    pub tol: f64,
}

impl Default for EigConfig {
    fn default() -> Self {
        EigConfig {
            domain: DomainConfig::default(),
            pole: [0.0, 0.0],
            h_seq: vec![1.0 / 64.0, 1.0 / 128.0],
            count: 3,
            tol: 1e-8,
        }
    }
}

impl EigConfig {
    pub fn validate(&self) -> Result<()> {
        let spec = self.domain.spec().map_err(config_err("eig"))?;
        check_spacings("[eig] h_seq", &self.h_seq)?;
        if self.count == 0 {
            return Err(Error::Config("[eig] count must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("[eig] tol must be positive".into()));
        }
        if !spec.contains(point(self.pole)) {
            return Err(Error::Config(format!("[eig] pole {:?} lies outside the domain", self.pole)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub domain: DomainConfig,
    pub base: [f64; 2],
    pub index: usize,
    pub radii: Vec<f64>,
    pub angles: Angles,
    pub h_seq: Vec<f64>,
    /// Circle radii for the local expansion at the base pole.
    pub expansion_radii: Vec<f64>,
    pub tol: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            domain: DomainConfig::default(),
            base: [0.3, 0.0],
            index: 1,
            radii: vec![0.02, 0.03, 0.045, 0.0675],
            angles: Angles::Count(16),
            h_seq: vec![1.0 / 128.0, 1.0 / 256.0],
            expansion_radii: vec![0.1, 0.15, 0.2, 0.25],
            tol: 1e-8,
        }
    }
}

impl SweepSection {
    pub fn sweep_config(&self) -> Result<SweepConfig> {
        check_spacings("[sweep] h_seq", &self.h_seq)?;
        let cfg = SweepConfig {
            domain: self.domain.spec().map_err(config_err("sweep"))?,
            base: point(self.base),
            index: self.index,
            radii: self.radii.clone(),
            angles: self.angles.values(),
            h_seq: self.h_seq.clone(),
        };
        cfg.validate().map_err(config_err("sweep"))?;
        if self.expansion_radii.len() < 3 {
            return Err(Error::Config("[sweep] expansion_radii needs at least three radii".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("[sweep] tol must be positive".into()));
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MkConfig {
    pub k: usize,
    pub h_seq: Vec<f64>,
    pub r_seq: Vec<f64>,
}

impl Default for MkConfig {
    fn default() -> Self {
        MkConfig {
            k: 1,
            h_seq: vec![1.0 / 16.0, 1.0 / 32.0],
            r_seq: vec![4.0, 8.0, 16.0],
        }
    }
}

impl MkConfig {
    pub fn validate(&self) -> Result<()> {
        check_odd(self.k).map_err(config_err("mk"))?;
        check_spacings("[mk] h_seq", &self.h_seq)?;
        if self.h_seq.len() < 2 {
            return Err(Error::Config("[mk] need at least two spacings".into()));
        }
        check_increasing("[mk] r_seq", &self.r_seq)?;
        for &h in &self.h_seq {
            for &r in &self.r_seq {
                SlitProblem::new(self.k, r, h).map_err(config_err("mk"))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub k: usize,
    pub alpha: f64,
    pub r_trunc: f64,
    pub h: f64,
    /// Number of equispaced radii in `[1, R]` where `υ_R` is sampled.
    pub samples: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            k: 1,
            alpha: 0.0,
            r_trunc: 8.0,
            h: 1.0 / 32.0,
            samples: 25,
        }
    }
}

impl ProfileConfig {
    pub fn problem(&self) -> Result<ProfileProblem> {
        if self.samples < 3 {
            return Err(Error::Config("[profile] samples must be at least 3".into()));
        }
        ProfileProblem::new(self.k, self.alpha, self.r_trunc, self.h).map_err(config_err("profile"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FAlphaConfig {
    pub k: usize,
    pub angles: Angles,
    pub r_seq: Vec<f64>,
    pub h_seq: Vec<f64>,
}

impl Default for FAlphaConfig {
    fn default() -> Self {
        FAlphaConfig {
            k: 1,
            angles: Angles::Count(12),
            r_seq: vec![4.0, 8.0, 16.0],
            h_seq: vec![1.0 / 16.0, 1.0 / 32.0],
        }
    }
}

impl FAlphaConfig {
    pub fn validate(&self) -> Result<()> {
        check_spacings("[falpha] h_seq", &self.h_seq)?;
        if self.h_seq.len() < 2 {
            return Err(Error::Config("[falpha] need at least two spacings".into()));
        }
        check_increasing("[falpha] r_seq", &self.r_seq)?;
        for a in self.angles.values() {
            for &r in &self.r_seq {
                for &h in &self.h_seq {
                    ProfileProblem::new(self.k, a, r, h).map_err(config_err("falpha"))?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub k: usize,
    /// Sweep table to fit; defaults to `sweep.csv` in the output directory.
    pub sweep_csv: Option<PathBuf>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { k: 1, sweep_csv: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub ks: Vec<usize>,
    /// Random angles per order for the product formula.
    pub samples: usize,
    /// Random base angles per `(h, k)` for the rank check.
    pub rank_trials: usize,
    pub tol: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig {
            ks: vec![1, 3, 5, 7, 9],
            samples: 1000,
            rank_trials: 20,
            tol: 1e-12,
        }
    }
}

impl IdentitiesConfig {
    pub fn validate(&self) -> Result<()> {
        for &k in &self.ks {
            check_odd(k).map_err(config_err("identities"))?;
        }
        if self.ks.is_empty() {
            return Err(Error::Config("[identities] ks must not be empty".into()));
        }
        Ok(())
    }
}
