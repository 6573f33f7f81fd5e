//! Grid functions and classical sequences with prescribed limits.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use super::{AtomicMeasure, CellLayout, Extraction};
use crate::grid::{GridDomain, GridFunction};
use crate::quadrature::adaptive_simpson;
use crate::test_fields::bump_profile;
use crate::{Error, Result};

/// A finite convex combination `sum lambda_i delta_{r_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    components: Vec<(f64, f64)>,
}

impl Mixture {
    /// Components `(lambda_i, r_i)`; weights must be nonnegative and sum to 1.
    pub fn new(components: Vec<(f64, f64)>) -> Result<Mixture> {
        if components.is_empty() {
            return Err(Error::BadMixture("no components".into()));
        }
        for &(l, r) in &components {
            if !(l >= 0.0 && l.is_finite() && r.is_finite()) {
                return Err(Error::BadMixture(alloc::format!("component ({l}, {r})")));
            }
        }
        let total: f64 = components.iter().map(|c| c.0).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadMixture(alloc::format!("weights sum to {total}")));
        }
        Ok(Mixture { components })
    }

    pub fn dirac(r: f64) -> Mixture {
        Mixture {
            components: vec![(1.0, r)],
        }
    }

    pub fn components(&self) -> &[(f64, f64)] {
        &self.components
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|(l, r)| l * r).sum()
    }
}

/// Prescribed Young measure as a function of position.
#[derive(Clone)]
pub enum YoungSpec {
    Uniform(Mixture),
    /// First closed box containing the point wins; `default` elsewhere.
    Regions {
        regions: Vec<(Vec<(f64, f64)>, Mixture)>,
        default: Mixture,
    },
    Field(Arc<dyn Fn(&[f64]) -> Mixture + Send + Sync>),
}

impl fmt::Debug for YoungSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            YoungSpec::Uniform(m) => f.debug_tuple("Uniform").field(m).finish(),
            YoungSpec::Regions { regions, default } => f
                .debug_struct("Regions")
                .field("regions", regions)
                .field("default", default)
                .finish(),
            YoungSpec::Field(_) => f.write_str("Field(..)"),
        }
    }
}

impl YoungSpec {
    pub fn at(&self, x: &[f64]) -> Mixture {
        match self {
            YoungSpec::Uniform(m) => m.clone(),
            YoungSpec::Regions { regions, default } => regions
                .iter()
                .find(|(b, _)| b.iter().zip(x).all(|(&(lo, hi), &xi)| lo <= xi && xi <= hi))
                .map_or_else(|| default.clone(), |(_, m)| m.clone()),
            YoungSpec::Field(f) => f(x),
        }
    }
}

/// [`synthesize_with`] at the default window `sqrt(eps)`.
pub fn synthesize(
    domain: &Arc<GridDomain>,
    spec: &YoungSpec,
    atoms: &AtomicMeasure,
) -> Result<GridFunction> {
    synthesize_with(domain, spec, atoms, domain.eps().sqrt())
}

/// Grid function whose local value distributions follow `spec` and whose
/// concentration part is `atoms`.
///
/// Within each cell the nodes are visited in lexicographic order and each
/// takes the value `r_i` with the largest accumulated deficit
/// `sum lambda_i - count_i` (ties to the lowest `i`). Each atom `(p, m)`
/// adds `m / eps^k` at the node nearest to `p`.
pub fn synthesize_with(
    domain: &Arc<GridDomain>,
    spec: &YoungSpec,
    atoms: &AtomicMeasure,
    window: f64,
) -> Result<GridFunction> {
    let eps = domain.eps();
    if !(window > eps) {
        return Err(Error::WindowTooSmall { window, eps });
    }
    for atom in &atoms.atoms {
        if atom.location.len() != domain.dim() || !domain.omega().contains(&atom.location) {
            return Err(Error::OutsideDomain(alloc::format!(
                "atom at {:?}",
                atom.location
            )));
        }
        if !atom.mass.is_finite() {
            return Err(Error::NonFinite("atom mass".into()));
        }
    }
    let layout = CellLayout::new(domain, window);
    let (_, members) = layout.partition(domain);
    let mut values = vec![0.0; domain.len()];
    let mut deficit: Vec<f64> = Vec::new();
    for nodes in members {
        deficit.clear();
        for s in nodes {
            let mix = spec.at(domain.point(s));
            let comps = mix.components();
            if deficit.len() != comps.len() {
                deficit.clear();
                deficit.resize(comps.len(), 0.0);
            }
            for (d, c) in deficit.iter_mut().zip(comps) {
                *d += c.0;
            }
            let mut pick = 0;
            for i in 1..deficit.len() {
                if deficit[i] > deficit[pick] {
                    pick = i;
                }
            }
            deficit[pick] -= 1.0;
            values[s] = comps[pick].1;
        }
    }
    let scale = 1.0 / domain.grid().cell_volume();
    for atom in &atoms.atoms {
        values[domain.nearest_slot(&atom.location)] += atom.mass * scale;
    }
    GridFunction::new(domain.clone(), values)
}

/// `integral of bump_profile(|y|)` over the unit ball in `dim` dimensions.
pub fn profile_mass(dim: usize) -> f64 {
    // area of the unit sphere in R^dim
    let mut area = if dim % 2 == 1 {
        2.0
    } else {
        2.0 * core::f64::consts::PI
    };
    let mut d = if dim % 2 == 1 { 1 } else { 2 };
    while d < dim {
        area *= 2.0 * core::f64::consts::PI / d as f64;
        d += 2;
    }
    area * adaptive_simpson(
        |t| t.powi(dim as i32 - 1) * bump_profile(t),
        0.0,
        1.0,
        1e-13,
    )
}

#[derive(Debug, Clone)]
struct CellLaw {
    base: f64,
    cumulative: Vec<(f64, f64)>,
}

/// The classical function `z_n = d_n + y_n` built from an extraction.
///
/// `d_n` is the cellwise barycenter plus mass-normalized bumps of radius
/// `1/n` at the atoms; `y_n` oscillates through the histogram values with
/// period `2/n` along the first axis and has zero cell average.
#[derive(Debug, Clone)]
pub struct RealizedSequence {
    extraction: Extraction,
    n: usize,
    laws: Vec<CellLaw>,
    norm: f64,
}

impl RealizedSequence {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut z = 0.0;
        if let Some(c) = self.extraction.nu.cell_of_point(x) {
            let law = &self.laws[c];
            if !law.cumulative.is_empty() {
                let t = x[0] * self.n as f64 * 0.5;
                let s = t - t.floor();
                let r = law
                    .cumulative
                    .iter()
                    .find(|(cum, _)| s < *cum)
                    .unwrap_or_else(|| law.cumulative.last().unwrap())
                    .1;
                z += law.base + r;
            }
        }
        let n = self.n as f64;
        for atom in &self.extraction.atoms.atoms {
            let d2: f64 = atom
                .location
                .iter()
                .zip(x)
                .map(|(p, xi)| (xi - p) * (xi - p))
                .sum();
            let t = d2.sqrt() * n;
            if t < 1.0 {
                z += atom.mass * self.norm * bump_profile(t);
            }
        }
        z
    }

    pub fn sample(&self, domain: &Arc<GridDomain>) -> GridFunction {
        GridFunction::from_fn(domain.clone(), |x| self.eval(x))
    }
}

pub fn realize_sequence(extraction: &Extraction, n: usize) -> Result<RealizedSequence> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "sequence index must be at least 1".into(),
        ));
    }
    let laws = extraction
        .nu
        .cells
        .iter()
        .zip(&extraction.barycenter.values)
        .map(|(cell, &b)| {
            let mass = cell.mass();
            if mass <= 0.0 {
                return CellLaw {
                    base: b,
                    cumulative: Vec::new(),
                };
            }
            let mean = b / mass;
            let mut acc = 0.0;
            let cumulative = cell
                .bins
                .iter()
                .map(|&(r, w)| {
                    acc += w / mass;
                    (acc, r)
                })
                .collect();
            CellLaw {
                base: b - mean,
                cumulative,
            }
        })
        .collect();
    let dim = extraction.nu.dim();
    let norm = (n as f64).powi(dim as i32) / profile_mass(dim);
    Ok(RealizedSequence {
        extraction: extraction.clone(),
        n,
        laws,
        norm,
    })
}
