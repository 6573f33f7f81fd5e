//! Extraction of the oscillation and concentration limits of a grid function.
//!
//! The domain is tiled by coarse cells of `w` nodes per axis, `w ≈ h/eps`.
//! Within each cell the values with `|f| <= M` form a sub-probability
//! histogram (the local Young measure), while values above the cutoff are
//! collected into atoms of the concentration part.

mod synthesis;

pub use synthesis::{
    realize_sequence, synthesize, synthesize_with, Mixture, RealizedSequence, YoungSpec,
};

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{GridDomain, GridFunction};
use crate::reduce::{pairwise_sum, pairwise_sum_by};
use crate::test_fields::{pair, TestField};
use crate::{Error, Result};

/// Extraction parameters: window `h`, cutoff `M`, histogram bins and the
/// minimum mass of a reported atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractParams {
    pub window: f64,
    pub cutoff: f64,
    pub bins: usize,
    pub atom_tol: f64,
}

impl ExtractParams {
    /// `h = sqrt(eps)`, `M = eps^(-1/2)`, 64 bins, atoms above `1e-3`.
    pub fn defaults(eps: f64) -> ExtractParams {
        ExtractParams {
            window: eps.sqrt(),
            cutoff: 1.0 / eps.sqrt(),
            bins: 64,
            atom_tol: 1e-3,
        }
    }

    pub fn for_domain(domain: &GridDomain) -> ExtractParams {
        ExtractParams::defaults(domain.eps())
    }

    fn validate(&self, domain: &GridDomain) -> Result<()> {
        let eps = domain.eps();
        if !(self.window > eps) {
            return Err(Error::WindowTooSmall {
                window: self.window,
                eps,
            });
        }
        if self.window >= domain.omega().diameter() {
            return Err(Error::InvalidParameter(alloc::format!(
                "window {} is not smaller than the domain diameter",
                self.window
            )));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "cutoff {}",
                self.cutoff
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParameter(alloc::format!(
                "bins {}", self.bins
            )));
        }
        if !(self.atom_tol >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "atom_tol {}",
                self.atom_tol
            )));
        }
        Ok(())
    }
}

/// Nodes per cell side for a window `h` on a grid of step `eps`.
pub fn cell_nodes(window: f64, eps: f64) -> i64 {
    ((window / eps).round() as i64).max(2)
}

/// Tiling of the grid box by cells of `width` nodes per axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellLayout {
    pub origin: Vec<i64>,
    pub width: i64,
}

impl CellLayout {
    pub fn new(domain: &GridDomain, window: f64) -> CellLayout {
        let grid = domain.grid();
        let origin = (0..grid.dim()).map(|a| grid.index_range(a).0).collect();
        CellLayout {
            origin,
            width: cell_nodes(window, domain.eps()),
        }
    }

    pub fn key(&self, index: &[i64]) -> Vec<i64> {
        index
            .iter()
            .zip(&self.origin)
            .map(|(i, o)| (i - o).div_euclid(self.width))
            .collect()
    }

    /// Cell key of every in-domain node, and the nodes of every cell in
    /// lexicographic node order.
    pub fn partition(&self, domain: &GridDomain) -> (Vec<Vec<i64>>, Vec<Vec<usize>>) {
        let mut map: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for s in 0..domain.len() {
            map.entry(self.key(domain.index(s))).or_default().push(s);
        }
        map.into_iter().unzip()
    }
}

/// Local measure at one coarse cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMeasure {
    /// Integer position of the cell in the coarse lattice.
    pub key: Vec<i64>,
    /// Centroid of the in-domain nodes of the cell.
    pub center: Vec<f64>,
    /// `eps^k` times the number of in-domain nodes.
    pub volume: f64,
    /// Sorted `(representative, weight)` pairs of the non-empty bins.
    pub bins: Vec<(f64, f64)>,
    /// Width of the equal-width bins (0 when all finite values coincide).
    pub bin_width: f64,
}

impl CellMeasure {
    /// Total mass `sum w_i` in `[0, 1]`.
    pub fn mass(&self) -> f64 {
        pairwise_sum_by(self.bins.len(), |i| self.bins[i].1)
    }

    /// First moment `sum w_i b_i`.
    pub fn barycenter(&self) -> f64 {
        pairwise_sum_by(self.bins.len(), |i| self.bins[i].0 * self.bins[i].1)
    }

    /// `sum w_i g(b_i)`.
    pub fn compose<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        pairwise_sum_by(self.bins.len(), |i| self.bins[i].1 * g(self.bins[i].0))
    }

    pub fn decompose(&self, tol: f64) -> Result<DiracDecomposition> {
        dirac_decompose(&self.bins, self.bin_width, tol)
    }
}

/// The field `x -> nu_x` on the coarse lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeasureField {
    pub level: u32,
    pub layout: CellLayout,
    pub params: ExtractParams,
    pub cells: Vec<CellMeasure>,
    lookup: BTreeMap<Vec<i64>, usize>,
}

impl LocalMeasureField {
    pub fn new(
        level: u32,
        layout: CellLayout,
        params: ExtractParams,
        cells: Vec<CellMeasure>,
    ) -> LocalMeasureField {
        let lookup = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.key.clone(), i))
            .collect();
        LocalMeasureField {
            level,
            layout,
            params,
            cells,
            lookup,
        }
    }

    pub fn eps(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn dim(&self) -> usize {
        self.layout.origin.len()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell side `w eps`.
    pub fn spacing(&self) -> f64 {
        self.layout.width as f64 * self.eps()
    }

    pub fn cell_by_key(&self, key: &[i64]) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    /// Cell containing the lattice node nearest to `x`.
    pub fn cell_of_point(&self, x: &[f64]) -> Option<usize> {
        let eps = self.eps();
        let index: Vec<i64> = x.iter().map(|xi| (xi / eps).round() as i64).collect();
        self.cell_by_key(&self.layout.key(&index))
    }

    /// Neighbouring cell one step up `axis`.
    pub fn neighbor(&self, cell: usize, axis: usize) -> Option<usize> {
        let mut key = self.cells[cell].key.clone();
        key[axis] += 1;
        self.cell_by_key(&key)
    }

    /// Per-cell `sum w_i g(b_i)`.
    pub fn compose<G: Fn(f64) -> f64>(&self, g: G) -> Vec<f64> {
        self.cells.iter().map(|c| c.compose(&g)).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.cells.iter().map(CellMeasure::mass).collect()
    }

    /// `sum_c F(c) phi(x_c) vol_c` for a per-cell field `F`.
    pub fn integrate_against(&self, field: &[f64], phi: &TestField) -> f64 {
        pairwise_sum_by(self.cells.len(), |i| {
            let c = &self.cells[i];
            field[i] * phi.eval(&c.center) * c.volume
        })
    }
}

/// Barycenter field `b(x_c) = sum w_i b_i` on the coarse lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct BarycenterField {
    pub values: Vec<f64>,
}

impl BarycenterField {
    pub fn l1_norm(&self, nu: &LocalMeasureField) -> f64 {
        pairwise_sum_by(self.values.len(), |i| {
            self.values[i].abs() * nu.cells[i].volume
        })
    }

    pub fn at(&self, nu: &LocalMeasureField, x: &[f64]) -> f64 {
        nu.cell_of_point(x).map_or(0.0, |c| self.values[c])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// Finite sum of point masses: the concentration part.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<Atom>) -> AtomicMeasure {
        AtomicMeasure { atoms }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum_by(self.atoms.len(), |i| self.atoms[i].mass)
    }

    pub fn total_variation(&self) -> f64 {
        pairwise_sum_by(self.atoms.len(), |i| self.atoms[i].mass.abs())
    }

    /// `sum m_j phi(p_j)`.
    pub fn pair(&self, phi: &TestField) -> f64 {
        pairwise_sum_by(self.atoms.len(), |i| {
            self.atoms[i].mass * phi.eval(&self.atoms[i].location)
        })
    }

    /// Every atom mass multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> AtomicMeasure {
        AtomicMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    location: a.location.clone(),
                    mass: a.mass * factor,
                })
                .collect(),
        }
    }
}

/// Local measures, barycenter and atoms of one grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub nu: LocalMeasureField,
    pub barycenter: BarycenterField,
    pub atoms: AtomicMeasure,
}

impl Extraction {
    /// `<b, phi> + sum m_j phi(p_j)`, the pairing of the weak-* limit.
    pub fn pair(&self, phi: &TestField) -> f64 {
        self.nu.integrate_against(&self.barycenter.values, phi) + self.atoms.pair(phi)
    }
}

/// Histogram, barycenter and atoms of `f` at the given resolution.
pub fn extract(f: &GridFunction, params: &ExtractParams) -> Result<Extraction> {
    let domain = f.domain();
    params.validate(domain)?;
    let dim = domain.dim();
    let vol = domain.grid().cell_volume();
    let layout = CellLayout::new(domain, params.window);
    let (keys, members) = layout.partition(domain);
    let values = f.values();

    let mut cells = Vec::with_capacity(keys.len());
    let mut bary = Vec::with_capacity(keys.len());
    let mut spikes: Vec<(f64, Vec<f64>, f64)> = Vec::with_capacity(keys.len());
    let mut finite = Vec::new();
    for (key, nodes) in keys.into_iter().zip(members) {
        let n = nodes.len() as f64;
        let mut center = vec![0.0; dim];
        for axis in 0..dim {
            center[axis] = pairwise_sum_by(nodes.len(), |i| domain.point(nodes[i])[axis]) / n;
        }

        finite.clear();
        let mut spike_sum = Vec::new();
        let mut spike_abs = Vec::new();
        let mut spike_loc = vec![Vec::new(); dim];
        for &s in &nodes {
            let v = values[s];
            if v.abs() <= params.cutoff {
                finite.push(v);
            } else {
                spike_sum.push(v);
                spike_abs.push(v.abs());
                for axis in 0..dim {
                    spike_loc[axis].push(v.abs() * domain.point(s)[axis]);
                }
            }
        }
        let (bins, bin_width) = histogram(&finite, params.bins, n);
        bary.push(pairwise_sum(&finite) / n);
        let weight = pairwise_sum(&spike_abs);
        let loc = if weight > 0.0 {
            spike_loc.iter().map(|l| pairwise_sum(l) / weight).collect()
        } else {
            center.clone()
        };
        spikes.push((vol * pairwise_sum(&spike_sum), loc, weight));
        cells.push(CellMeasure {
            key,
            center,
            volume: n * vol,
            bins,
            bin_width,
        });
    }

    let nu = LocalMeasureField::new(domain.grid().level(), layout, *params, cells);
    let atoms = cluster_atoms(&nu, &spikes, params.atom_tol);
    Ok(Extraction {
        nu,
        barycenter: BarycenterField { values: bary },
        atoms,
    })
}

fn histogram(finite: &[f64], bins: usize, total: f64) -> (Vec<(f64, f64)>, f64) {
    if finite.is_empty() {
        return (Vec::new(), 0.0);
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return (vec![(lo, finite.len() as f64 / total)], 0.0);
    }
    let width = (hi - lo) / bins as f64;
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for &v in finite {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        members[b].push(v);
    }
    let out = members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| (pairwise_sum(m) / m.len() as f64, m.len() as f64 / total))
        .collect();
    (out, width)
}

fn cluster_atoms(
    nu: &LocalMeasureField,
    spikes: &[(f64, Vec<f64>, f64)],
    atom_tol: f64,
) -> AtomicMeasure {
    let flagged: Vec<bool> = spikes.iter().map(|s| s.0.abs() > atom_tol).collect();
    let mut seen = vec![false; spikes.len()];
    let dim = nu.dim();
    let mut offsets: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..dim {
        offsets = offsets
            .into_iter()
            .flat_map(|o| {
                [-1i64, 0, 1].into_iter().map(move |d| {
                    let mut n = o.clone();
                    n.push(d);
                    n
                })
            })
            .collect();
    }
    let mut atoms = Vec::new();
    for start in 0..spikes.len() {
        if !flagged[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(c) = queue.pop_front() {
            members.push(c);
            for off in &offsets {
                let key: Vec<i64> = nu.cells[c]
                    .key
                    .iter()
                    .zip(off)
                    .map(|(k, o)| k + o)
                    .collect();
                if let Some(n) = nu.cell_by_key(&key) {
                    if flagged[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        members.sort_unstable();
        let mass = pairwise_sum_by(members.len(), |i| spikes[members[i]].0);
        let weight = pairwise_sum_by(members.len(), |i| spikes[members[i]].2);
        let location = (0..dim)
            .map(|axis| {
                pairwise_sum_by(members.len(), |i| {
                    spikes[members[i]].2 * spikes[members[i]].1[axis]
                }) / weight
            })
            .collect();
        atoms.push(Atom { location, mass });
    }
    AtomicMeasure { atoms }
}

/// A nonlinearity `g` with an optional limit at infinity.
#[derive(Clone, Copy)]
pub struct Nonlinearity<G> {
    pub g: G,
    pub limit: Option<f64>,
}

impl<G: Fn(f64) -> f64> Nonlinearity<G> {
    pub fn new(g: G) -> Nonlinearity<G> {
        Nonlinearity { g, limit: None }
    }

    pub fn with_limit(g: G, limit: f64) -> Nonlinearity<G> {
        Nonlinearity {
            g,
            limit: Some(limit),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungPairing {
    pub direct: f64,
    pub via_measure: f64,
}

impl YoungPairing {
    pub fn error(&self) -> f64 {
        (self.direct - self.via_measure).abs()
    }
}

/// `<g(f), phi>` computed on the grid and through the extracted measures,
/// with the deficit `1 - nu_x(R)` carrying the limit of `g`.
pub fn young_pairing<G: Fn(f64) -> f64>(
    f: &GridFunction,
    g: &Nonlinearity<G>,
    phi: &TestField,
    extraction: &Extraction,
) -> Result<YoungPairing> {
    let limit = g.limit.ok_or(Error::MissingLimit)?;
    let direct = pair(&f.map(&g.g), phi);
    let nu = &extraction.nu;
    let field: Vec<f64> = nu
        .cells
        .iter()
        .map(|c| c.compose(&g.g) + (1.0 - c.mass()) * limit)
        .collect();
    let via_measure = nu.integrate_against(&field, phi);
    Ok(YoungPairing {
        direct,
        via_measure,
    })
}

/// Clusters of a single-cell histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracDecomposition {
    /// `(lambda_i, r_i)` with `sum lambda_i = 1`, sorted by `r_i`.
    pub components: Vec<(f64, f64)>,
    pub is_dirac: bool,
    /// Standard deviation of the whole histogram.
    pub spread: f64,
}

/// Splits a sorted histogram where consecutive representatives are more
/// than three bin widths apart.
pub fn dirac_decompose(
    bins: &[(f64, f64)],
    bin_width: f64,
    tol: f64,
) -> Result<DiracDecomposition> {
    let mass = pairwise_sum_by(bins.len(), |i| bins[i].1);
    let deficit = 1.0 - mass;
    if deficit.abs() > tol || bins.is_empty() {
        return Err(Error::NotYoungMeasure { deficit });
    }
    let mut sorted = bins.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<Vec<(f64, f64)>> = vec![vec![sorted[0]]];
    for w in sorted.windows(2) {
        if w[1].0 - w[0].0 > 3.0 * bin_width {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(w[1]);
    }
    let components: Vec<(f64, f64)> = groups
        .iter()
        .map(|g| {
            let m = pairwise_sum_by(g.len(), |i| g[i].1);
            let r = pairwise_sum_by(g.len(), |i| g[i].0 * g[i].1) / m;
            (m / mass, r)
        })
        .collect();
    let mean = pairwise_sum_by(sorted.len(), |i| sorted[i].0 * sorted[i].1) / mass;
    let spread = (pairwise_sum_by(sorted.len(), |i| {
        let d = sorted[i].0 - mean;
        d * d * sorted[i].1
    }) / mass)
        .sqrt();
    Ok(DiracDecomposition {
        is_dirac: components.len() == 1 && spread <= tol,
        components,
        spread,
    })
}
