//! Dyadic grids, open sets and grid functions.
//!
//! Nodes are addressed by integer multi-indices `n` with coordinate `n * eps`;
//! membership and neighbour tests never compare raw floats against each other.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

const NONE: u32 = u32::MAX;

/// Uniform grid of step `eps = 2^-level` over a closed box.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    level: u32,
    eps: f64,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl Grid {
    /// Builds the grid with `eps = 2^-level` over the closed box `bounds`.
    ///
    /// Both endpoints of every axis must be integer multiples of `eps`.
    pub fn new(level: u32, bounds: &[(f64, f64)]) -> Result<Grid> {
        if bounds.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if level > 40 {
            return Err(Error::InvalidGrid(format!(
                "refinement level {level} is too deep"
            )));
        }
        let scale = (1u64 << level) as f64;
        let eps = 1.0 / scale;
        let mut lo = Vec::with_capacity(bounds.len());
        let mut hi = Vec::with_capacity(bounds.len());
        for (axis, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) || a >= b {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need finite a < b, got [{a}, {b}]"
                )));
            }
            let (sa, sb) = (a * scale, b * scale);
            for (name, s) in [("lower", sa), ("upper", sb)] {
                if s != s.round() || s.abs() > 1e15 {
                    return Err(Error::NonCommensurateBox {
                        axis,
                        level,
                        detail: format!("{name} endpoint is not a multiple of eps"),
                    });
                }
            }
            lo.push(sa as i64);
            hi.push(sb as i64);
        }
        Ok(Grid { level, eps, lo, hi })
    }

    /// Same interval `[a, b]` on each of `dim` axes.
    pub fn cube(level: u32, a: f64, b: f64, dim: usize) -> Result<Grid> {
        Grid::new(level, &vec![(a, b); dim])
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// `eps^dim`, the volume element of the grid integral.
    pub fn cell_volume(&self) -> f64 {
        self.eps.powi(self.dim() as i32)
    }

    /// Inclusive integer index range along `axis`.
    pub fn index_range(&self, axis: usize) -> (i64, i64) {
        (self.lo[axis], self.hi[axis])
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| (a as f64 * self.eps, b as f64 * self.eps))
            .collect()
    }

    /// Nodes per axis, `(b - a) / eps + 1`.
    pub fn shape(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| (b - a + 1) as usize)
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn coord(&self, index: i64) -> f64 {
        index as f64 * self.eps
    }

    /// Row-major flat position of a multi-index (first axis slowest).
    pub fn flat(&self, index: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for axis in 0..self.dim() {
            let i = index[axis];
            if i < self.lo[axis] || i > self.hi[axis] {
                return None;
            }
            let n = (self.hi[axis] - self.lo[axis] + 1) as usize;
            flat = flat * n + (i - self.lo[axis]) as usize;
        }
        Some(flat)
    }

    pub fn unflat(&self, mut flat: usize, out: &mut [i64]) {
        for axis in (0..self.dim()).rev() {
            let n = (self.hi[axis] - self.lo[axis] + 1) as usize;
            out[axis] = self.lo[axis] + (flat % n) as i64;
            flat /= n;
        }
    }
}

/// An open set, described so that membership can be decided exactly.
#[derive(Clone)]
pub enum Omega {
    /// Open box `(a1, b1) x ... x (ak, bk)`.
    Box(Vec<(f64, f64)>),
    /// Open ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// User predicate; `bounds` must enclose the set.
    Custom {
        label: String,
        bounds: Vec<(f64, f64)>,
        contains: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    },
}

impl fmt::Debug for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Omega::Box(b) => f.debug_tuple("Box").field(b).finish(),
            Omega::Ball { center, radius } => f
                .debug_struct("Ball")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            Omega::Custom { label, bounds, .. } => f
                .debug_struct("Custom")
                .field("label", label)
                .field("bounds", bounds)
                .finish_non_exhaustive(),
        }
    }
}

impl PartialEq for Omega {
    fn eq(&self, other: &Omega) -> bool {
        match (self, other) {
            (Omega::Box(a), Omega::Box(b)) => a == b,
            (
                Omega::Ball {
                    center: c1,
                    radius: r1,
                },
                Omega::Ball {
                    center: c2,
                    radius: r2,
                },
            ) => c1 == c2 && r1 == r2,
            (
                Omega::Custom {
                    label: l1,
                    bounds: b1,
                    contains: p1,
                },
                Omega::Custom {
                    label: l2,
                    bounds: b2,
                    contains: p2,
                },
            ) => l1 == l2 && b1 == b2 && Arc::ptr_eq(p1, p2),
            _ => false,
        }
    }
}

impl Omega {
    pub fn interval(a: f64, b: f64) -> Omega {
        Omega::Box(vec![(a, b)])
    }

    pub fn dim(&self) -> usize {
        match self {
            Omega::Box(b) => b.len(),
            Omega::Ball { center, .. } => center.len(),
            Omega::Custom { bounds, .. } => bounds.len(),
        }
    }

    /// Strict membership (open set).
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Omega::Box(b) => b.iter().zip(x).all(|(&(lo, hi), &xi)| lo < xi && xi < hi),
            Omega::Ball { center, radius } => {
                let d2: f64 = center
                    .iter()
                    .zip(x)
                    .map(|(c, xi)| (xi - c) * (xi - c))
                    .sum();
                d2 < radius * radius
            }
            Omega::Custom { contains, .. } => contains(x),
        }
    }

    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Omega::Box(b) => b.clone(),
            Omega::Ball { center, radius } => {
                center.iter().map(|&c| (c - radius, c + radius)).collect()
            }
            Omega::Custom { bounds, .. } => bounds.clone(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            Omega::Ball { center, .. } => center.clone(),
            _ => self
                .bounding_box()
                .iter()
                .map(|&(a, b)| 0.5 * (a + b))
                .collect(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Omega::Ball { radius, .. } => 2.0 * radius,
            _ => self
                .bounding_box()
                .iter()
                .map(|&(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Distance from an interior point to the boundary (0 outside).
    ///
    /// Exact for boxes and balls; custom sets are probed by bisection along
    /// a fan of directions.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match self {
            Omega::Box(b) => b
                .iter()
                .zip(x)
                .map(|(&(lo, hi), &xi)| (xi - lo).min(hi - xi))
                .fold(f64::INFINITY, f64::min),
            Omega::Ball { center, radius } => {
                let d: f64 = center
                    .iter()
                    .zip(x)
                    .map(|(c, xi)| (xi - c) * (xi - c))
                    .sum::<f64>()
                    .sqrt();
                radius - d
            }
            Omega::Custom { .. } => self.probe_boundary(x),
        }
    }

    fn probe_boundary(&self, x: &[f64]) -> f64 {
        let dim = x.len();
        let reach = self.diameter();
        let mut best = f64::INFINITY;
        let mut dirs: Vec<Vec<f64>> = Vec::new();
        if dim == 1 {
            dirs.push(vec![1.0]);
            dirs.push(vec![-1.0]);
        } else {
            let n = 64;
            for i in 0..n {
                let a = 2.0 * core::f64::consts::PI * i as f64 / n as f64;
                let mut d = vec![0.0; dim];
                d[0] = a.cos();
                d[1] = a.sin();
                dirs.push(d);
            }
            for axis in 2..dim {
                for s in [1.0, -1.0] {
                    let mut d = vec![0.0; dim];
                    d[axis] = s;
                    dirs.push(d);
                }
            }
        }
        let mut p = vec![0.0; dim];
        let march = 1024;
        for d in &dirs {
            let mut inside = 0.0;
            let mut outside = None;
            for s in 1..=march {
                let r = reach * s as f64 / march as f64;
                for (pi, (xi, di)) in p.iter_mut().zip(x.iter().zip(d)) {
                    *pi = xi + r * di;
                }
                if self.contains(&p) {
                    inside = r;
                } else {
                    outside = Some(r);
                    break;
                }
            }
            let Some(mut outside) = outside else { continue };
            for _ in 0..50 {
                let mid = 0.5 * (inside + outside);
                for (pi, (xi, di)) in p.iter_mut().zip(x.iter().zip(d)) {
                    *pi = xi + mid * di;
                }
                if self.contains(&p) {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            best = best.min(inside);
        }
        best
    }

    /// Lebesgue measure (exact for boxes and balls up to dimension 3).
    pub fn measure(&self) -> Option<f64> {
        match self {
            Omega::Box(b) => Some(b.iter().map(|&(lo, hi)| hi - lo).product()),
            Omega::Ball { center, radius } => match center.len() {
                1 => Some(2.0 * radius),
                2 => Some(core::f64::consts::PI * radius * radius),
                3 => Some(4.0 / 3.0 * core::f64::consts::PI * radius.powi(3)),
                _ => None,
            },
            Omega::Custom { .. } => None,
        }
    }
}

/// Lattice nodes of a grid that lie strictly inside an open set.
#[derive(Debug, Clone)]
pub struct GridDomain {
    grid: Grid,
    omega: Omega,
    // flat box position of every in-domain node, in lexicographic order
    nodes: Vec<usize>,
    // slot of each box node, NONE if outside
    slot_of: Vec<u32>,
    indices: Vec<i64>,
    coords: Vec<f64>,
    // neighbour slots, laid out as [axis * len + slot]
    plus: Vec<u32>,
    minus: Vec<u32>,
}

impl PartialEq for GridDomain {
    fn eq(&self, other: &GridDomain) -> bool {
        self.grid == other.grid && self.nodes == other.nodes
    }
}

impl GridDomain {
    /// Marks exactly the lattice nodes strictly inside `omega`.
    pub fn new(grid: Grid, omega: Omega) -> Result<GridDomain> {
        let dim = grid.dim();
        if omega.dim() != dim {
            return Err(Error::InvalidOmega(format!(
                "open set has dimension {}, grid has {dim}",
                omega.dim()
            )));
        }
        let gb = grid.bounds();
        for (axis, (&(a, b), &(ga, gb))) in omega.bounding_box().iter().zip(&gb).enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidOmega(format!("axis {axis} is unbounded")));
            }
            if a < ga || b > gb {
                return Err(Error::InvalidOmega(format!(
                    "axis {axis}: ({a}, {b}) is not inside [{ga}, {gb}]"
                )));
            }
        }
        let total = grid.node_count();
        let mut slot_of = vec![NONE; total];
        let mut nodes = Vec::new();
        let mut indices = Vec::new();
        let mut coords = Vec::new();
        let mut idx = vec![0i64; dim];
        let mut x = vec![0.0; dim];
        for flat in 0..total {
            grid.unflat(flat, &mut idx);
            for (xi, &ii) in x.iter_mut().zip(&idx) {
                *xi = grid.coord(ii);
            }
            if omega.contains(&x) {
                slot_of[flat] = nodes.len() as u32;
                nodes.push(flat);
                indices.extend_from_slice(&idx);
                coords.extend_from_slice(&x);
            }
        }
        if nodes.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let len = nodes.len();
        let mut plus = vec![NONE; dim * len];
        let mut minus = vec![NONE; dim * len];
        for s in 0..len {
            for axis in 0..dim {
                idx.copy_from_slice(&indices[s * dim..(s + 1) * dim]);
                idx[axis] += 1;
                if let Some(f) = grid.flat(&idx) {
                    plus[axis * len + s] = slot_of[f];
                }
                idx[axis] -= 2;
                if let Some(f) = grid.flat(&idx) {
                    minus[axis * len + s] = slot_of[f];
                }
            }
        }
        Ok(GridDomain {
            grid,
            omega,
            nodes,
            slot_of,
            indices,
            coords,
            plus,
            minus,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn omega(&self) -> &Omega {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn eps(&self) -> f64 {
        self.grid.eps()
    }

    /// Number of in-domain nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Membership mask over all box nodes (row-major).
    pub fn mask(&self) -> Vec<bool> {
        self.slot_of.iter().map(|&s| s != NONE).collect()
    }

    pub fn index(&self, slot: usize) -> &[i64] {
        let d = self.dim();
        &self.indices[slot * d..(slot + 1) * d]
    }

    pub fn point(&self, slot: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[slot * d..(slot + 1) * d]
    }

    /// Slot of the node with the given multi-index, if it is in the domain.
    pub fn slot(&self, index: &[i64]) -> Option<usize> {
        let f = self.grid.flat(index)?;
        match self.slot_of[f] {
            NONE => None,
            s => Some(s as usize),
        }
    }

    /// Slot of `x + eps e_axis`, or `None` when that node is outside.
    #[inline]
    pub fn plus(&self, slot: usize, axis: usize) -> Option<usize> {
        match self.plus[axis * self.len() + slot] {
            NONE => None,
            s => Some(s as usize),
        }
    }

    /// Slot of `x - eps e_axis`, or `None` when that node is outside.
    #[inline]
    pub fn minus(&self, slot: usize, axis: usize) -> Option<usize> {
        match self.minus[axis * self.len() + slot] {
            NONE => None,
            s => Some(s as usize),
        }
    }

    /// In-domain node closest to `x` (ties broken by lexicographic order).
    pub fn nearest_slot(&self, x: &[f64]) -> usize {
        let eps = self.eps();
        let guess: Vec<i64> = x.iter().map(|&xi| (xi / eps).round() as i64).collect();
        if let Some(s) = self.slot(&guess) {
            return s;
        }
        let mut best = (f64::INFINITY, 0);
        for s in 0..self.len() {
            let d: f64 = self
                .point(s)
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d < best.0 {
                best = (d, s);
            }
        }
        best.1
    }

    /// First in-domain node at which some axis has neither neighbour.
    pub fn thin_node(&self) -> Option<(usize, usize)> {
        for s in 0..self.len() {
            for axis in 0..self.dim() {
                if self.plus(s, axis).is_none() && self.minus(s, axis).is_none() {
                    return Some((s, axis));
                }
            }
        }
        None
    }
}

/// Real values on the in-domain nodes of a [`GridDomain`].
///
/// Evaluation outside the domain is taken to be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != domain.len() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} nodes",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::NonFinite(format!(
                "NaN at node {:?}",
                domain.index(i)
            )));
        }
        Ok(GridFunction { domain, values })
    }

    pub(crate) fn from_parts(domain: Arc<GridDomain>, values: Vec<f64>) -> GridFunction {
        debug_assert_eq!(values.len(), domain.len());
        GridFunction { domain, values }
    }

    pub fn constant(domain: Arc<GridDomain>, c: f64) -> GridFunction {
        let n = domain.len();
        GridFunction {
            domain,
            values: vec![c; n],
        }
    }

    pub fn zeros(domain: Arc<GridDomain>) -> GridFunction {
        GridFunction::constant(domain, 0.0)
    }

    /// Samples `f` at every in-domain node.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(domain: Arc<GridDomain>, f: F) -> GridFunction {
        let values = (0..domain.len()).map(|s| f(domain.point(s))).collect();
        GridFunction { domain, values }
    }

    /// Builds values from the integer multi-index of each node.
    pub fn from_index_fn<F: Fn(&[i64]) -> f64>(domain: Arc<GridDomain>, f: F) -> GridFunction {
        let values = (0..domain.len()).map(|s| f(domain.index(s))).collect();
        GridFunction { domain, values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn grid(&self) -> &Grid {
        self.domain.grid()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a multi-index with zero extension outside the domain.
    pub fn at(&self, index: &[i64]) -> f64 {
        self.domain.slot(index).map_or(0.0, |s| self.values[s])
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridFunction {
        GridFunction {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(
        &self,
        other: &GridFunction,
        f: F,
    ) -> Result<GridFunction> {
        if !self.same_domain(other) {
            return Err(Error::MismatchedDomains);
        }
        Ok(GridFunction {
            domain: self.domain.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn same_domain(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.domain, &other.domain) || *self.domain == *other.domain
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
