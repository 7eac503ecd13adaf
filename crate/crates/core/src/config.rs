//! Run configuration shared by the command-line front end.
//!
//! A config is one JSON object. Every key can also be given as a command-line flag of the same
//! name; flags win. Relative paths inside a config file resolve against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuum::Perturbation;
use crate::error::{Error, Result};
use crate::gl::DiagonalConvention;
use crate::recovery::Method;
use crate::spectral::Orientation;
use crate::tolerances::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Forward,
    Invert,
    Roundtrip,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Invert => "invert",
            Command::Roundtrip => "roundtrip",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// Operator to forward-solve.
    pub operator: Option<PathBuf>,
    /// Orientation of the weights written by `forward`.
    pub orientation: Option<Orientation>,
    /// Reference operator for `invert` and `roundtrip`.
    pub reference: Option<PathBuf>,
    /// Reference spectral data; derived from `reference` when absent.
    pub reference_data: Option<PathBuf>,
    /// Target spectral data for `invert`.
    pub target_data: Option<PathBuf>,
    /// Known target operator for `roundtrip`.
    pub target: Option<PathBuf>,
    /// Applied to the reference data when no target is given, and by `sweep`.
    pub perturbation: Perturbation,
    pub sizes: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    /// Agreement tolerance: round-trip error and recursion-synthesis gap.
    pub tol: Option<f64>,
    pub tolerances: Option<Tolerances>,
    pub method: Option<Method>,
    pub convention: Option<DiagonalConvention>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for slot in [
            &mut cfg.operator,
            &mut cfg.reference,
            &mut cfg.reference_data,
            &mut cfg.target_data,
            &mut cfg.target,
            &mut cfg.out,
        ] {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    /// Keys set in `flags` replace those here; perturbation and tolerance maps merge per key.
    pub fn merge(mut self, flags: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        take!(
            command,
            operator,
            orientation,
            reference,
            reference_data,
            target_data,
            target,
            sizes,
            out,
            tol,
            method,
            convention
        );
        self.perturbation
            .level_shifts
            .extend(flags.perturbation.level_shifts);
        self.perturbation
            .weight_factors
            .extend(flags.perturbation.weight_factors);
        if let Some(t) = flags.tolerances {
            self.tolerances = Some(t);
        }
        self
    }

    /// Checks that the config is meant for `command`.
    pub fn check_command(&self, command: Command) -> Result<()> {
        match self.command {
            Some(c) if c != command => Err(Error::Config(format!(
                "config is for `{}` but `{}` was run",
                c.as_str(),
                command.as_str()
            ))),
            _ => Ok(()),
        }
    }

    /// Effective thresholds: defaults, then the `tolerances` table, then `tol`.
    pub fn effective_tolerances(&self) -> Result<Tolerances> {
        let mut t = self.tolerances.unwrap_or_default();
        if let Some(tol) = self.tol {
            t.set("roundtrip", tol)?;
            t.set("recursion_gap", tol)?;
        }
        Ok(t)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Parses `key=value`.
pub fn parse_pair<K: std::str::FromStr, V: std::str::FromStr>(
    s: &str,
) -> std::result::Result<(K, V), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let k = k.trim().parse().map_err(|_| format!("bad key in {s:?}"))?;
    let v = v
        .trim()
        .parse()
        .map_err(|_| format!("bad value in {s:?}"))?;
    Ok((k, v))
}
