//! `key=value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hypergrid::flux::FluxFunction;
use hypergrid::measure::{synthesize, ExtractParams};
use hypergrid::solver::{perturb, project_initial, InitialData, SolveConfig};
use hypergrid::test_fields::sample;
use hypergrid::{Grid, GridDomain, GridFunction, Omega};

use crate::error::{CliError, Result};
use crate::format::{
    parse_bump, parse_f64, parse_list, parse_omega, read_gridfn, read_text, read_young_spec,
};

const KEYS: &[&str] = &[
    "flux",
    "j",
    "omega",
    "box",
    "T",
    "u0",
    "eta",
    "sigma",
    "snapshots",
    "perturb",
    "seed",
    "window",
    "cutoff",
    "bins",
    "diagnostics_every",
];

/// Source of the initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Const(f64),
    File(PathBuf),
    Young(PathBuf),
    /// `base + bump`.
    Bump {
        bump: String,
        base: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub path: PathBuf,
    /// Entries in file order, for echoing.
    pub entries: Vec<(String, String)>,
    pub flux: FluxFunction,
    pub level: u32,
    pub omega: Omega,
    pub bounds: Vec<(f64, f64)>,
    pub t_final: f64,
    pub u0: InitialSpec,
    pub eta: f64,
    pub sigma: f64,
    pub snapshots: Vec<f64>,
    pub perturb: f64,
    pub seed: u64,
    pub window: Option<f64>,
    pub cutoff: Option<f64>,
    pub bins: Option<usize>,
    pub diagnostics_every: usize,
}

/// Box enclosing `omega` with endpoints on the dyadic lattice.
pub fn snapped_box(omega: &Omega, level: u32) -> Vec<(f64, f64)> {
    let eps = 0.5f64.powi(level as i32);
    omega
        .bounding_box()
        .into_iter()
        .map(|(a, b)| ((a / eps).floor() * eps, (b / eps).ceil() * eps))
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::parse(&read_text(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<RunConfig> {
        let mut map: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::parse(path, n + 1, format!("expected key=value, found {line:?}"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::parse(path, n + 1, format!("unknown key: {key}")));
            }
            if map
                .insert(key.to_string(), (n + 1, value.to_string()))
                .is_some()
            {
                return Err(CliError::parse(
                    path,
                    n + 1,
                    format!("duplicate key: {key}"),
                ));
            }
            entries.push((key.to_string(), value.to_string()));
        }
        let required = |key: &str| -> Result<(usize, &str)> {
            map.get(key)
                .map(|(l, v)| (*l, v.as_str()))
                .ok_or_else(|| CliError::Config(format!("missing key: {key}")))
        };
        let bad = |line: usize, m: String| CliError::parse(path, line, m);
        let num = |key: &str, default: f64| -> Result<f64> {
            map.get(key)
                .map_or(Ok(default), |(l, v)| parse_f64(v).map_err(|m| bad(*l, m)))
        };
        let int = |key: &str| -> Result<Option<u64>> {
            map.get(key)
                .map(|(l, v)| {
                    v.parse::<u64>()
                        .map_err(|_| bad(*l, format!("{key} must be a nonnegative integer")))
                })
                .transpose()
        };

        let (l, v) = required("flux")?;
        let flux = FluxFunction::from_name(v).map_err(|e| bad(l, e.to_string()))?;
        let (l, v) = required("j")?;
        let level = v
            .parse::<u32>()
            .map_err(|_| bad(l, format!("bad level {v:?}")))?;
        let (l, v) = required("omega")?;
        let omega = parse_omega(v).map_err(|m| bad(l, m))?;
        let (l, v) = required("T")?;
        let t_final = parse_f64(v).map_err(|m| bad(l, m))?;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(bad(l, format!("T must be positive, got {t_final}")));
        }
        let (l, v) = required("u0")?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let u0 = if let Some(c) = v.strip_prefix("const:") {
            InitialSpec::Const(parse_f64(c).map_err(|m| bad(l, m))?)
        } else if let Some(p) = v.strip_prefix("file:") {
            InitialSpec::File(dir.join(p))
        } else if let Some(p) = v.strip_prefix("young:") {
            InitialSpec::Young(dir.join(p))
        } else if v.starts_with("bump") {
            let (bump, base) = match v.split_once(" base=") {
                Some((b, rest)) => (b.to_string(), parse_f64(rest).map_err(|m| bad(l, m))?),
                None => (v.to_string(), 0.0),
            };
            parse_bump(&bump, &omega).map_err(|m| bad(l, m))?;
            InitialSpec::Bump { bump, base }
        } else {
            return Err(bad(
                l,
                format!("u0 must be const:, file:, young: or bump, got {v:?}"),
            ));
        };
        let bounds = match map.get("box") {
            Some((l, v)) => crate::format::parse_box(v).map_err(|m| bad(*l, m))?,
            None => snapped_box(&omega, level),
        };
        let snapshots = match map.get("snapshots") {
            Some((l, v)) if v.starts_with("uniform:") => {
                let n = v["uniform:".len()..]
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n > 0)
                    .ok_or_else(|| bad(*l, format!("bad snapshot count in {v:?}")))?;
                (0..=n).map(|i| t_final * i as f64 / n as f64).collect()
            }
            Some((l, v)) => {
                let mut s = parse_list(v).map_err(|m| bad(*l, m))?;
                if s.iter().any(|&t| !(0.0..=t_final).contains(&t))
                    || s.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(bad(*l, "snapshots must increase within [0, T]".into()));
                }
                if s.first() != Some(&0.0) {
                    s.insert(0, 0.0);
                }
                s
            }
            None => vec![0.0, t_final],
        };
        let eta = num("eta", 0.0)?;
        if !(eta >= 0.0) {
            return Err(bad(map["eta"].0, "eta must be nonnegative".into()));
        }
        let sigma = num("sigma", 0.9)?;
        Ok(RunConfig {
            path: path.to_path_buf(),
            entries,
            flux,
            level,
            omega,
            bounds,
            t_final,
            u0,
            eta,
            sigma,
            snapshots,
            perturb: num("perturb", 0.0)?,
            seed: int("seed")?.unwrap_or(0),
            window: map
                .get("window")
                .map(|(l, v)| parse_f64(v).map_err(|m| bad(*l, m)))
                .transpose()?,
            cutoff: map
                .get("cutoff")
                .map(|(l, v)| parse_f64(v).map_err(|m| bad(*l, m)))
                .transpose()?,
            bins: int("bins")?.map(|b| b as usize),
            diagnostics_every: int("diagnostics_every")?.unwrap_or(1).max(1) as usize,
        })
    }

    pub fn domain(&self) -> Result<Arc<GridDomain>> {
        let grid = Grid::new(self.level, &self.bounds)?;
        Ok(Arc::new(GridDomain::new(grid, self.omega.clone())?))
    }

    pub fn extract_params(&self, domain: &GridDomain) -> ExtractParams {
        let mut p = ExtractParams::for_domain(domain);
        if let Some(w) = self.window {
            p.window = w;
        }
        if let Some(c) = self.cutoff {
            p.cutoff = c;
        }
        if let Some(b) = self.bins {
            p.bins = b;
        }
        p
    }

    pub fn initial_data(&self, domain: &Arc<GridDomain>) -> Result<GridFunction> {
        let u = match &self.u0 {
            InitialSpec::Const(c) => project_initial(&InitialData::Constant(*c), domain)?,
            InitialSpec::File(p) => {
                let f = read_gridfn(&read_text(p)?, p)?;
                if f.grid() != domain.grid() || f.domain().omega() != domain.omega() {
                    return Err(CliError::Config(format!(
                        "{}: initial data lives on a different grid",
                        p.display()
                    )));
                }
                project_initial(
                    &InitialData::Values(GridFunction::new(domain.clone(), f.into_values())?),
                    domain,
                )?
            }
            InitialSpec::Young(p) => {
                let (spec, atoms) = read_young_spec(&read_text(p)?, p)?;
                project_initial(
                    &InitialData::Values(synthesize(domain, &spec, &atoms)?),
                    domain,
                )?
            }
            InitialSpec::Bump { bump, base } => {
                let field = parse_bump(bump, domain.omega()).map_err(CliError::Config)?;
                let values = sample(&field, domain).map(|v| v + base);
                project_initial(&InitialData::Values(values), domain)?
            }
        };
        Ok(if self.perturb > 0.0 {
            perturb(&u, self.perturb, self.seed)
        } else {
            u
        })
    }

    pub fn solve_config(&self, domain: Arc<GridDomain>) -> SolveConfig {
        let mut c = SolveConfig::new(domain, self.flux.clone(), self.t_final);
        c.sigma = self.sigma;
        c.eta = self.eta;
        c.snapshots = self.snapshots.clone();
        c.diagnostics_every = self.diagnostics_every;
        c
    }
}
