//! Plain-text persistence: open-set descriptors, grid-function snapshots,
//! extraction and atom files, Young specifications and bump lines.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hypergrid::measure::{
    Atom, AtomicMeasure, BarycenterField, CellLayout, CellMeasure, ExtractParams, Extraction,
    LocalMeasureField, Mixture, YoungSpec,
};
use hypergrid::test_fields::TestField;
use hypergrid::{Grid, GridDomain, GridFunction, Omega};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a sibling temporary file and a rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("not a number: {s:?}"))
}

pub fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(parse_f64).collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn join_i(values: &[i64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// `a1,b1;a2,b2;...`
pub fn parse_box(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    s.split(';')
        .map(|axis| match parse_list(axis)?.as_slice() {
            &[a, b] => Ok((a, b)),
            _ => Err(format!("box axis needs two endpoints: {axis:?}")),
        })
        .collect()
}

pub fn format_box(b: &[(f64, f64)]) -> String {
    b.iter()
        .map(|(a, b)| format!("{a},{b}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// `interval:a,b`, `box:a1,b1;a2,b2` or `ball:c1,c2;r`.
pub fn parse_omega(s: &str) -> std::result::Result<Omega, String> {
    let (kind, rest) = s
        .trim()
        .split_once(':')
        .ok_or_else(|| format!("bad open set {s:?}"))?;
    match kind {
        "interval" => match parse_list(rest)?.as_slice() {
            &[a, b] => Ok(Omega::interval(a, b)),
            _ => Err(format!("interval needs two endpoints: {rest:?}")),
        },
        "box" => Ok(Omega::Box(parse_box(rest)?)),
        "ball" => {
            let (c, r) = rest
                .split_once(';')
                .ok_or_else(|| format!("ball needs center;radius: {rest:?}"))?;
            Ok(Omega::Ball {
                center: parse_list(c)?,
                radius: parse_f64(r)?,
            })
        }
        _ => Err(format!("unknown open set kind {kind:?}")),
    }
}

pub fn format_omega(omega: &Omega) -> String {
    match omega {
        Omega::Box(b) if b.len() == 1 => format!("interval:{},{}", b[0].0, b[0].1),
        Omega::Box(b) => format!("box:{}", format_box(b)),
        Omega::Ball { center, radius } => format!("ball:{};{radius}", join(center)),
        Omega::Custom { label, .. } => format!("custom:{label}"),
    }
}

/// Header line followed by `i_1 ... i_k value` in lexicographic index order.
pub fn write_gridfn(f: &GridFunction) -> String {
    let d = f.domain();
    let g = d.grid();
    let mut out = format!(
        "gridfn v1; k={}; j={}; box={}; omega={}\n",
        g.dim(),
        g.level(),
        format_box(&g.bounds()),
        format_omega(d.omega())
    );
    let mut slots: Vec<usize> = (0..d.len()).collect();
    slots.sort_by(|&a, &b| d.index(a).cmp(d.index(b)));
    for s in slots {
        for i in d.index(s) {
            let _ = write!(out, "{i} ");
        }
        let _ = writeln!(out, "{}", f.values()[s]);
    }
    out
}

pub fn read_gridfn(text: &str, path: &Path) -> Result<GridFunction> {
    let err = |line: usize, m: String| CliError::parse(path, line, m);
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "empty snapshot file".into()))?;
    let body = header
        .strip_prefix("gridfn v1")
        .ok_or_else(|| err(1, "expected `gridfn v1` header".into()))?;
    let (mut k, mut j, mut bx, mut omega) = (None, None, None, None);
    for field in body.split("; ").map(str::trim).filter(|f| !f.is_empty()) {
        let field = field.trim_start_matches(';').trim();
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| err(1, format!("bad header field {field:?}")))?;
        match key {
            "k" => {
                k = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| err(1, format!("bad k {value:?}")))?,
                )
            }
            "j" => {
                j = Some(
                    value
                        .parse::<u32>()
                        .map_err(|_| err(1, format!("bad j {value:?}")))?,
                )
            }
            "box" => bx = Some(parse_box(value).map_err(|m| err(1, m))?),
            "omega" => omega = Some(parse_omega(value).map_err(|m| err(1, m))?),
            _ => {}
        }
    }
    let missing = |name: &str| err(1, format!("missing header field {name}"));
    let (k, j, bx, omega) = (
        k.ok_or_else(|| missing("k"))?,
        j.ok_or_else(|| missing("j"))?,
        bx.ok_or_else(|| missing("box"))?,
        omega.ok_or_else(|| missing("omega"))?,
    );
    if bx.len() != k {
        return Err(err(1, format!("box has {} axes, k = {k}", bx.len())));
    }
    let domain = Arc::new(GridDomain::new(Grid::new(j, &bx)?, omega)?);
    let mut values = vec![f64::NAN; domain.len()];
    let mut seen = 0usize;
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != k + 1 {
            return Err(err(
                line_no,
                format!("expected {} fields, found {}", k + 1, fields.len()),
            ));
        }
        let index = fields[..k]
            .iter()
            .map(|s| {
                s.parse::<i64>()
                    .map_err(|_| err(line_no, format!("bad index {s:?}")))
            })
            .collect::<Result<Vec<i64>>>()?;
        let value = parse_f64(fields[k]).map_err(|m| err(line_no, m))?;
        let slot = domain
            .slot(&index)
            .ok_or_else(|| err(line_no, format!("node {index:?} is not in the domain")))?;
        if !values[slot].is_nan() {
            return Err(err(line_no, format!("duplicate node {index:?}")));
        }
        values[slot] = value;
        seen += 1;
    }
    if seen != domain.len() {
        return Err(err(
            0,
            format!("{} of {} domain nodes present", seen, domain.len()),
        ));
    }
    Ok(GridFunction::new(domain, values)?)
}

pub fn write_atoms(atoms: &AtomicMeasure) -> String {
    let mut out = String::new();
    for a in &atoms.atoms {
        let _ = writeln!(out, "atom p={} mass={}", join(&a.location), a.mass);
    }
    out
}

fn fields_of(line: &str) -> std::result::Result<Vec<(&str, &str)>, String> {
    line.split_whitespace()
        .map(|f| {
            f.split_once('=')
                .ok_or_else(|| format!("expected key=value, found {f:?}"))
        })
        .collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str) -> std::result::Result<&'a str, String> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| format!("missing {key}="))
}

fn parse_atom(rest: &str) -> std::result::Result<Atom, String> {
    let f = fields_of(rest)?;
    Ok(Atom {
        location: parse_list(field(&f, "p")?)?,
        mass: parse_f64(field(&f, "mass")?)?,
    })
}

pub fn read_atoms(text: &str, path: &Path) -> Result<AtomicMeasure> {
    let mut atoms = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rest = line
            .strip_prefix("atom ")
            .ok_or_else(|| CliError::parse(path, n + 1, "expected `atom`"))?;
        atoms.push(parse_atom(rest).map_err(|m| CliError::parse(path, n + 1, m))?);
    }
    Ok(AtomicMeasure::new(atoms))
}

fn format_pairs(pairs: &[(f64, f64)]) -> String {
    pairs
        .iter()
        .map(|(b, w)| format!("{b}:{w}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_pairs(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| {
            let (b, w) = p
                .split_once(':')
                .ok_or_else(|| format!("expected value:weight, found {p:?}"))?;
            Ok((parse_f64(b)?, parse_f64(w)?))
        })
        .collect()
}

/// One `x=<coords> mass=<m> bins=<b:w,...>` line per cell, after a
/// `#` header carrying the extraction parameters and cell layout.
pub fn write_extraction(e: &Extraction) -> String {
    let nu = &e.nu;
    let p = &nu.params;
    let mut out = format!(
        "# extraction k={} j={} window={} cutoff={} bins={} atom_tol={} width={} origin={}\n",
        nu.dim(),
        nu.level,
        p.window,
        p.cutoff,
        p.bins,
        p.atom_tol,
        nu.layout.width,
        join_i(&nu.layout.origin)
    );
    for (c, b) in nu.cells.iter().zip(&e.barycenter.values) {
        let _ = writeln!(
            out,
            "x={} mass={} bins={} key={} vol={} width={} b={}",
            join(&c.center),
            c.mass(),
            format_pairs(&c.bins),
            join_i(&c.key),
            c.volume,
            c.bin_width,
            b
        );
    }
    out
}

pub fn read_extraction(nu_text: &str, nu_path: &Path, atoms: AtomicMeasure) -> Result<Extraction> {
    let err = |line: usize, m: String| CliError::parse(nu_path, line, m);
    let mut lines = nu_text.lines();
    let header = lines
        .next()
        .ok_or_else(|| err(1, "empty extraction file".into()))?;
    let header = header
        .strip_prefix("# extraction")
        .ok_or_else(|| err(1, "expected `# extraction` header".into()))?;
    let h = fields_of(header).map_err(|m| err(1, m))?;
    let get = |key: &str| field(&h, key).map_err(|m| err(1, m));
    let int = |key: &str| -> Result<i64> {
        get(key)?
            .parse::<i64>()
            .map_err(|_| err(1, format!("bad {key}")))
    };
    let num = |key: &str| -> Result<f64> { parse_f64(get(key)?).map_err(|m| err(1, m)) };
    let level = int("j")? as u32;
    let params = ExtractParams {
        window: num("window")?,
        cutoff: num("cutoff")?,
        bins: int("bins")? as usize,
        atom_tol: num("atom_tol")?,
    };
    let origin = get("origin")?
        .split(',')
        .map(|s| {
            s.parse::<i64>()
                .map_err(|_| err(1, format!("bad origin {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = CellLayout {
        origin,
        width: int("width")?,
    };
    let mut cells = Vec::new();
    let mut bary = Vec::new();
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse = || -> std::result::Result<(CellMeasure, f64), String> {
            let f = fields_of(line)?;
            let key = field(&f, "key")?
                .split(',')
                .map(|s| s.parse::<i64>().map_err(|_| format!("bad key {s:?}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let cell = CellMeasure {
                key,
                center: parse_list(field(&f, "x")?)?,
                volume: parse_f64(field(&f, "vol")?)?,
                bins: parse_pairs(field(&f, "bins")?)?,
                bin_width: parse_f64(field(&f, "width")?)?,
            };
            Ok((cell, parse_f64(field(&f, "b")?)?))
        };
        let (cell, b) = parse().map_err(|m| err(line_no, m))?;
        cells.push(cell);
        bary.push(b);
    }
    Ok(Extraction {
        nu: LocalMeasureField::new(level, layout, params, cells),
        barycenter: BarycenterField { values: bary },
        atoms,
    })
}

/// Young specification file:
///
/// ```text
/// default -1:0.5,1:0.5
/// region 0,0.5 mix 0.2:1
/// atom p=0 mass=2
/// ```
pub fn read_young_spec(text: &str, path: &Path) -> Result<(YoungSpec, AtomicMeasure)> {
    let mut default = None;
    let mut regions = Vec::new();
    let mut atoms = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = |m: String| CliError::parse(path, n + 1, m);
        let (kind, rest) = line
            .split_once(' ')
            .ok_or_else(|| at(format!("bad line {line:?}")))?;
        let mixture = |s: &str| -> Result<Mixture> {
            let pairs = parse_pairs(s.trim()).map_err(at)?;
            Mixture::new(pairs.into_iter().map(|(r, w)| (w, r)).collect())
                .map_err(|e| at(e.to_string()))
        };
        match kind {
            "default" => default = Some(mixture(rest)?),
            "region" => {
                let (bx, mix) = rest
                    .split_once(" mix ")
                    .ok_or_else(|| at("expected `region <box> mix <pairs>`".into()))?;
                regions.push((parse_box(bx.trim()).map_err(at)?, mixture(mix)?));
            }
            "atom" => atoms.push(parse_atom(rest).map_err(at)?),
            _ => return Err(at(format!("unknown entry {kind:?}"))),
        }
    }
    let default = default.ok_or_else(|| CliError::parse(path, 0, "missing `default` mixture"))?;
    let spec = if regions.is_empty() {
        YoungSpec::Uniform(default)
    } else {
        YoungSpec::Regions { regions, default }
    };
    Ok((spec, AtomicMeasure::new(atoms)))
}

/// `bump center=<coords> radius=<r> [amplitude=<a>]`.
pub fn parse_bump(s: &str, omega: &Omega) -> std::result::Result<TestField, String> {
    let rest = s
        .trim()
        .strip_prefix("bump")
        .ok_or_else(|| format!("expected `bump`, found {s:?}"))?;
    let f = fields_of(rest)?;
    let amplitude = field(&f, "amplitude").map_or(Ok(1.0), parse_f64)?;
    TestField::new(
        parse_list(field(&f, "center")?)?,
        parse_f64(field(&f, "radius")?)?,
        omega,
    )
    .map(|t| t.scaled(amplitude))
    .map_err(|e| e.to_string())
}

pub fn format_bump(t: &TestField) -> String {
    format!(
        "bump center={} radius={} amplitude={}",
        join(&t.center),
        t.radius,
        t.amplitude
    )
}

/// File names inside a run directory.
pub fn snapshot_name(i: usize) -> String {
    format!("snap_{i:04}.gridfn")
}

pub fn with_extension(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}
