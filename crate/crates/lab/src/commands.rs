//! The five driver commands. Each returns the text printed on success.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hypergrid::calculus::lp_norm;
use hypergrid::flux::FluxFunction;
use hypergrid::measure::{extract, realize_sequence, ExtractParams, Extraction};
use hypergrid::solver::{solve, solve_pseudoparabolic, Trajectory};
use hypergrid::test_fields::{canonical_bump, pair};
use hypergrid::verify::{verify, MvSolutionBundle, VerifyOptions};
use hypergrid::{Error as CoreError, Grid, GridDomain, GridFunction, Omega};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::format::{
    atomic_write, format_box, format_omega, read_atoms, read_extraction, read_gridfn, read_text,
    snapshot_name, write_atoms, write_extraction, write_gridfn,
};

pub const RUN_FILE: &str = "run.txt";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const REPORT_FILE: &str = "report.txt";

/// Overrides of extraction parameters from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractOverrides {
    pub window: Option<f64>,
    pub cutoff: Option<f64>,
    pub bins: Option<usize>,
}

impl ExtractOverrides {
    fn apply(&self, mut p: ExtractParams) -> ExtractParams {
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
}

fn load_config(path: &Path, level: Option<u32>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(j) = level {
        cfg.level = j;
        cfg.bounds = crate::config::snapped_box(&cfg.omega, j);
    }
    Ok(cfg)
}

fn write_extraction_files(snapshot: &Path, e: &Extraction) -> Result<()> {
    atomic_write(&snapshot.with_extension("nu"), &write_extraction(e))?;
    atomic_write(&snapshot.with_extension("atoms"), &write_atoms(&e.atoms))
}

fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from("step,t,mass,min,max,grad_phi_norm\n");
    for d in &traj.diagnostics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.step, d.t, d.mass, d.min, d.max, d.grad_phi_norm
        );
    }
    out
}

/// Runs the configured problem, writing snapshots, their extractions,
/// `diagnostics.csv` and the `run.txt` header into `out`.
pub fn simulate(
    config: &Path,
    out: &Path,
    level: Option<u32>,
    overrides: ExtractOverrides,
) -> Result<String> {
    let cfg = load_config(config, level)?;
    let domain = cfg.domain()?;
    let u0 = cfg.initial_data(&domain)?;
    let sc = cfg.solve_config(domain.clone());
    let cfl = sc.stable_dt(&u0) / sc.sigma;
    let traj = if cfg.eta > 0.0 {
        solve_pseudoparabolic(&sc, &u0)?
    } else {
        solve(&sc, &u0)?
    };
    let params = overrides.apply(cfg.extract_params(&domain));

    let mut header = String::from("# hypergrid run\n");
    for (k, v) in &cfg.entries {
        let _ = writeln!(header, "config.{k}={v}");
    }
    let s = &traj.summary;
    let _ = writeln!(header, "flux={}", traj.flux.name());
    let _ = writeln!(header, "j={}", s.level);
    let _ = writeln!(header, "k={}", s.dim);
    let _ = writeln!(header, "box={}", format_box(&domain.grid().bounds()));
    let _ = writeln!(header, "omega={}", format_omega(domain.omega()));
    let _ = writeln!(header, "nodes={}", s.nodes);
    let _ = writeln!(header, "T={}", s.t_final);
    let _ = writeln!(header, "eta={}", s.eta);
    let _ = writeln!(header, "sigma={}", s.sigma);
    let _ = writeln!(header, "dt={}", s.dt);
    let _ = writeln!(header, "dt_cfl={cfl}");
    let _ = writeln!(header, "steps={}", s.steps);
    let _ = writeln!(header, "window={}", params.window);
    let _ = writeln!(header, "cutoff={}", params.cutoff);
    let _ = writeln!(header, "bins={}", params.bins);
    for (i, (t, u)) in traj.snapshots.iter().enumerate() {
        let name = snapshot_name(i);
        let path = out.join(&name);
        atomic_write(&path, &write_gridfn(u))?;
        write_extraction_files(&path, &extract(u, &params)?)?;
        let _ = writeln!(header, "snapshot.{i}={t} {name}");
    }
    atomic_write(&out.join(DIAGNOSTICS_FILE), &diagnostics_csv(&traj))?;
    atomic_write(&out.join(RUN_FILE), &header)?;

    let first = traj.diagnostics.first().map_or(0.0, |d| d.mass);
    let drift = traj
        .diagnostics
        .iter()
        .map(|d| (d.mass - first).abs())
        .fold(0.0, f64::max);
    Ok(format!(
        "simulate: flux={} j={} nodes={} dt={:.6e} steps={} snapshots={} mass drift={:.3e} -> {}\n",
        traj.flux.name(),
        s.level,
        s.nodes,
        s.dt,
        s.steps,
        traj.snapshots.len(),
        drift,
        out.display()
    ))
}

/// Extracts one snapshot file into `<stem>.nu` and `<stem>.atoms` under `out`.
pub fn extract_snapshot(
    snapshot: &Path,
    out: Option<&Path>,
    overrides: ExtractOverrides,
) -> Result<String> {
    let f = read_gridfn(&read_text(snapshot)?, snapshot)?;
    let params = overrides.apply(ExtractParams::for_domain(f.domain()));
    let e = extract(&f, &params)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| snapshot.parent().unwrap_or(Path::new(".")).to_path_buf());
    let target = dir.join(snapshot.file_name().unwrap_or_default());
    write_extraction_files(&target, &e)?;
    let mut msg = format!(
        "extract: {} cells, {} atoms (total mass {:.6}) -> {}\n",
        e.nu.len(),
        e.atoms.len(),
        e.atoms.total_mass(),
        target.with_extension("nu").display()
    );
    for a in &e.atoms.atoms {
        let _ = writeln!(msg, "  atom at {:?} mass {:.6}", a.location, a.mass);
    }
    Ok(msg)
}

/// Parsed `run.txt`.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub flux: FluxFunction,
    pub snapshots: Vec<(f64, PathBuf)>,
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(RUN_FILE);
    let text = read_text(&path)
        .map_err(|_| CliError::MissingInput(format!("missing run header {}", path.display())))?;
    let mut flux = None;
    let mut snapshots = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        if key == "flux" {
            flux = Some(
                FluxFunction::from_name(value)
                    .map_err(|e| CliError::parse(&path, n + 1, e.to_string()))?,
            );
        } else if key.starts_with("snapshot.") {
            let (t, file) = value
                .split_once(' ')
                .ok_or_else(|| CliError::parse(&path, n + 1, "expected `<t> <file>`"))?;
            let t = t
                .parse::<f64>()
                .map_err(|_| CliError::parse(&path, n + 1, format!("bad time {t:?}")))?;
            snapshots.push((t, dir.join(file)));
        }
    }
    let flux = flux.ok_or_else(|| CliError::parse(&path, 0, "missing flux"))?;
    Ok(RunManifest { flux, snapshots })
}

/// Loads a run directory into a bundle; missing files are reported by name.
pub fn load_bundle(dir: &Path) -> Result<MvSolutionBundle> {
    let manifest = read_manifest(dir)?;
    let mut u0 = None;
    let mut times = Vec::new();
    let mut extractions = Vec::new();
    for (t, snap) in &manifest.snapshots {
        if u0.is_none() {
            let text = read_text(snap).map_err(|_| {
                CliError::MissingInput(format!("missing snapshot {}", snap.display()))
            })?;
            u0 = Some(read_gridfn(&text, snap)?);
        }
        let nu_path = snap.with_extension("nu");
        let atoms_path = snap.with_extension("atoms");
        let (Ok(nu), Ok(atoms)) = (read_text(&nu_path), read_text(&atoms_path)) else {
            return Err(CliError::MissingInput(format!(
                "missing extraction for {}",
                snap.display()
            )));
        };
        extractions.push(Some(read_extraction(
            &nu,
            &nu_path,
            read_atoms(&atoms, &atoms_path)?,
        )?));
        times.push(*t);
    }
    let u0 = u0.ok_or_else(|| CliError::MissingInput("run header lists no snapshots".into()))?;
    Ok(MvSolutionBundle {
        domain: u0.domain().clone(),
        flux: manifest.flux,
        u0,
        times,
        extractions,
    })
}

/// Verifies a run directory and writes `report.txt`.
pub fn verify_run(dir: &Path, out: Option<&Path>, seed: u64) -> Result<String> {
    let bundle = load_bundle(dir)?;
    let opts = VerifyOptions {
        seed,
        ..VerifyOptions::default()
    };
    let report = verify(&bundle, &opts)?;
    let text = format!("{}\n{}", report.to_text(), report.to_key_value());
    atomic_write(&out.unwrap_or(dir).join(REPORT_FILE), &text)?;
    Ok(text)
}

/// The oscillating fixture with a spike of mass 2 at the origin on `(-1, 1)`:
/// `n - 1` at index -1, `n + 1` at index 0, `(-1)^i` elsewhere.
pub fn worked_fixture(level: u32) -> Result<GridFunction> {
    let grid = Grid::new(level, &[(-1.0, 1.0)])?;
    let domain = Arc::new(GridDomain::new(grid, Omega::interval(-1.0, 1.0))?);
    let n = 1.0 / domain.eps();
    Ok(GridFunction::from_index_fn(domain, |i| match i[0] {
        -1 => n - 1.0,
        0 => n + 1.0,
        k if k.rem_euclid(2) == 0 => 1.0,
        _ => -1.0,
    }))
}

/// One row of the worked-example table.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleRow {
    pub level: u32,
    pub pairing: f64,
    pub expected_pairing: f64,
    /// Mean weight of the bins near -1 and near +1 over interior cells.
    pub weights: (f64, f64),
    pub atom_mass: f64,
    pub atom_location: f64,
    pub zn_n: usize,
    pub zn_norm: f64,
}

pub fn example_row(level: u32, n: usize) -> Result<(ExampleRow, Extraction, GridFunction)> {
    let f = worked_fixture(level)?;
    let domain = f.domain().clone();
    let e = extract(&f, &ExtractParams::for_domain(&domain))?;
    let phi = canonical_bump(domain.omega())?;
    let (mut lo, mut hi, mut count) = (0.0, 0.0, 0usize);
    for c in &e.nu.cells {
        if c.mass() < 1.0 {
            continue;
        }
        lo += c
            .bins
            .iter()
            .filter(|b| b.0 < 0.0)
            .map(|b| b.1)
            .sum::<f64>();
        hi += c
            .bins
            .iter()
            .filter(|b| b.0 > 0.0)
            .map(|b| b.1)
            .sum::<f64>();
        count += 1;
    }
    let (atom_mass, atom_location) = e
        .atoms
        .atoms
        .first()
        .map_or((0.0, f64::NAN), |a| (a.mass, a.location[0]));
    let z = realize_sequence(&e, n)?.sample(&domain);
    let row = ExampleRow {
        level,
        pairing: pair(&f, &phi),
        expected_pairing: 2.0 * phi.eval(&[0.0]),
        weights: (lo / count.max(1) as f64, hi / count.max(1) as f64),
        atom_mass,
        atom_location,
        zn_n: n,
        zn_norm: lp_norm(&z, 1.0)?,
    };
    Ok((row, e, z))
}

/// Reproduces the worked example at `j = 8, 10, 12` and writes plot data.
pub fn example(out: &Path) -> Result<String> {
    let n = 64;
    let mut table = String::from(
        "j,pairing,expected_pairing,weight_minus,weight_plus,atom_mass,atom_location,n,zn_l1\n",
    );
    let mut text = format!(
        "{:>3}  {:>12} {:>12}  {:>8} {:>8}  {:>9} {:>10}  {:>12}\n",
        "j",
        "<f,phi>",
        "2phi(0)",
        "w(-1)",
        "w(+1)",
        "atom mass",
        "atom at",
        format!("|z_{n}|_1 (4)")
    );
    for level in [8, 10, 12] {
        let (row, e, z) = example_row(level, n)?;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{},{},{},{}",
            row.level,
            row.pairing,
            row.expected_pairing,
            row.weights.0,
            row.weights.1,
            row.atom_mass,
            row.atom_location,
            row.zn_n,
            row.zn_norm
        );
        let _ = writeln!(
            text,
            "{:>3}  {:>12.6} {:>12.6}  {:>8.4} {:>8.4}  {:>9.5} {:>10.3e}  {:>12.6}",
            row.level,
            row.pairing,
            row.expected_pairing,
            row.weights.0,
            row.weights.1,
            row.atom_mass,
            row.atom_location,
            row.zn_norm
        );
        let mut cells = String::from("x,barycenter,mass\n");
        for (c, b) in e.nu.cells.iter().zip(&e.barycenter.values) {
            let _ = writeln!(cells, "{},{},{}", c.center[0], b, c.mass());
        }
        atomic_write(&out.join(format!("example_cells_j{level}.csv")), &cells)?;
        let d = z.domain();
        let mut zn = String::from("x,z\n");
        for s in 0..d.len() {
            let _ = writeln!(zn, "{},{}", d.point(s)[0], z.values()[s]);
        }
        atomic_write(&out.join(format!("example_zn_j{level}.csv")), &zn)?;
    }
    atomic_write(&out.join("example_table.csv"), &table)?;
    Ok(text)
}

/// `sum_c |b_c - b'_c| vol_c` over matching cells.
pub fn barycenter_distance(a: &Extraction, b: &Extraction) -> Result<f64> {
    if a.nu.layout != b.nu.layout || a.nu.len() != b.nu.len() {
        return Err(CoreError::IncompatibleGrids.into());
    }
    Ok(a.barycenter
        .values
        .iter()
        .zip(&b.barycenter.values)
        .zip(&a.nu.cells)
        .map(|((x, y), c)| (x - y).abs() * c.volume)
        .sum())
}

/// Per-time barycenter distance and atom-mass difference between the
/// grid run and each pseudoparabolic run.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub eta: f64,
    pub rows: Vec<(f64, f64, f64)>,
}

impl Comparison {
    pub fn final_distance(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.1)
    }
}

pub fn compare_runs(
    cfg: &RunConfig,
    etas: &[f64],
    params: Option<ExtractParams>,
) -> Result<Vec<Comparison>> {
    if etas.is_empty() {
        return Err(CliError::Usage(
            "compare needs a nonempty --eta list".into(),
        ));
    }
    if let Some(e) = etas.iter().find(|&&e| !(e > 0.0)) {
        return Err(CliError::Usage(format!(
            "eta values must be positive, got {e}"
        )));
    }
    let domain = cfg.domain()?;
    let u0 = cfg.initial_data(&domain)?;
    let mut base_cfg = cfg.solve_config(domain.clone());
    base_cfg.eta = 0.0;
    base_cfg.diagnostics_every = usize::MAX;
    let base = solve(&base_cfg, &u0)?;
    let params = params.unwrap_or_else(|| cfg.extract_params(&domain));
    let base_ex = base
        .snapshots
        .iter()
        .map(|(_, u)| extract(u, &params))
        .collect::<hypergrid::Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &eta in etas {
        let mut c = base_cfg.clone();
        c.eta = eta;
        c.dt_override = Some(base.dt());
        let run = solve_pseudoparabolic(&c, &u0)?;
        let mut rows = Vec::new();
        for ((t, u), eb) in run.snapshots.iter().zip(&base_ex) {
            let e = extract(u, &params)?;
            rows.push((
                *t,
                barycenter_distance(eb, &e)?,
                (e.atoms.total_mass() - eb.atoms.total_mass()).abs(),
            ));
        }
        out.push(Comparison { eta, rows });
    }
    Ok(out)
}

/// Writes `compare.csv` for the configured problem over `etas`.
pub fn compare(
    config: &Path,
    etas: &[f64],
    out: &Path,
    level: Option<u32>,
    overrides: ExtractOverrides,
) -> Result<String> {
    if etas.is_empty() {
        return Err(CliError::Usage(
            "compare needs a nonempty --eta list".into(),
        ));
    }
    let cfg = load_config(config, level)?;
    let domain = cfg.domain()?;
    let params = overrides.apply(cfg.extract_params(&domain));
    let results = compare_runs(&cfg, etas, Some(params))?;
    let mut csv = String::from(
        "# EXPLORATORY: pseudoparabolic runs against the grid formulation; agreement is conjectural\neta,t,barycenter_l1,atom_mass_diff\n",
    );
    let mut text = String::from("EXPLORATORY comparison (grid run vs pseudoparabolic runs)\n");
    for c in &results {
        for (t, d, m) in &c.rows {
            let _ = writeln!(csv, "{},{},{},{}", c.eta, t, d, m);
        }
        let _ = writeln!(
            text,
            "eta={:<8} final barycenter L1 distance {:.6e}",
            c.eta,
            c.final_distance()
        );
    }
    atomic_write(&out.join("compare.csv"), &csv)?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_matches_definition() {
        let f = worked_fixture(4).unwrap();
        let d = f.domain();
        assert_eq!(f.values()[d.slot(&[0]).unwrap()], 17.0);
        assert_eq!(f.values()[d.slot(&[-1]).unwrap()], 15.0);
        assert_eq!(f.values()[d.slot(&[3]).unwrap()], -1.0);
        assert_eq!(f.values()[d.slot(&[-4]).unwrap()], 1.0);
    }

    #[test]
    fn empty_eta_list_is_usage_error() {
        let cfg = RunConfig::parse(
            "flux=heat\nj=6\nomega=interval:0,1\nT=0.01\nu0=const:1\n",
            Path::new("c"),
        )
        .unwrap();
        let e = compare_runs(&cfg, &[], None).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(matches!(e, CliError::Usage(_)));
    }
}
