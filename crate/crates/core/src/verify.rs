//! Residual checks that a run, together with its extracted limits, is an
//! entropy measure-valued solution.
//!
//! Time integrals use the trapezoid rule over snapshots. Space integrals
//! are grid sums over the coarse cells, with the test function summed over
//! each cell's nodes, and gradients are differences between neighbouring
//! cell centroids.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

#[allow(unused_imports)]
use num_traits::Float;

use crate::calculus::lp_norm;
use crate::flux::{classify_flux, FluxFunction};
use crate::grid::{GridDomain, GridFunction};
use crate::measure::{extract, CellLayout, ExtractParams, Extraction, LocalMeasureField};
use crate::quadrature::adaptive_simpson;
use crate::reduce::pairwise_sum_by;
use crate::solver::Trajectory;
use crate::test_fields::{pair, test_family, TestField};
use crate::{Error, Result};

/// Time factor of a separable space-time test function.
#[derive(Debug, Clone, Copy)]
pub enum TimeProfile {
    /// `1 - t/T`.
    Linear,
    /// `cos(π t / 2T)`.
    CosRamp,
    /// `sin(π t / T)`, vanishing at both ends.
    SinBump,
    /// `(t, T) -> (value, derivative)`.
    Custom(fn(f64, f64) -> (f64, f64)),
}

impl TimeProfile {
    pub fn value(&self, t: f64, horizon: f64) -> f64 {
        self.eval(t, horizon).0
    }

    pub fn derivative(&self, t: f64, horizon: f64) -> f64 {
        self.eval(t, horizon).1
    }

    fn eval(&self, t: f64, horizon: f64) -> (f64, f64) {
        use core::f64::consts::PI;
        match self {
            TimeProfile::Linear => (1.0 - t / horizon, -1.0 / horizon),
            TimeProfile::CosRamp => {
                let a = PI / (2.0 * horizon);
                ((a * t).cos(), -a * (a * t).sin())
            }
            TimeProfile::SinBump => {
                let a = PI / horizon;
                ((a * t).sin(), a * (a * t).cos())
            }
            TimeProfile::Custom(f) => f(t, horizon),
        }
    }
}

/// `ψ(t, x) = profile(t) · space(x)`.
#[derive(Debug, Clone)]
pub struct SpaceTimeTest {
    pub space: TestField,
    pub profile: TimeProfile,
}

impl SpaceTimeTest {
    pub fn new(space: TestField, profile: TimeProfile) -> SpaceTimeTest {
        SpaceTimeTest { space, profile }
    }

    pub fn eval(&self, t: f64, x: &[f64], horizon: f64) -> f64 {
        self.profile.value(t, horizon) * self.space.eval(x)
    }

    /// `∂_t ψ`.
    pub fn time_derivative(&self, t: f64, x: &[f64], horizon: f64) -> f64 {
        self.profile.derivative(t, horizon) * self.space.eval(x)
    }
}

/// `16` separable tests built on [`test_family`], alternating the two
/// profiles that vanish at `T`.
pub fn space_time_family(
    domain: &GridDomain,
    count: usize,
    seed: u64,
) -> Result<Vec<SpaceTimeTest>> {
    let fam = test_family(domain, count, seed)?;
    Ok(fam
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            SpaceTimeTest::new(
                f,
                if i % 2 == 0 {
                    TimeProfile::Linear
                } else {
                    TimeProfile::CosRamp
                },
            )
        })
        .collect())
}

/// Nondecreasing weights `g` of the entropy inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyWeight {
    Constant(f64),
    Identity,
    Tanh,
}

impl EntropyWeight {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            EntropyWeight::Constant(c) => *c,
            EntropyWeight::Identity => v,
            EntropyWeight::Tanh => v.tanh(),
        }
    }

    pub fn deriv(&self, v: f64) -> f64 {
        match self {
            EntropyWeight::Constant(_) => 0.0,
            EntropyWeight::Identity => 1.0,
            EntropyWeight::Tanh => {
                let t = v.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            EntropyWeight::Constant(c) => alloc::format!("const:{c}"),
            EntropyWeight::Identity => "identity".into(),
            EntropyWeight::Tanh => "tanh".into(),
        }
    }
}

/// A run with its extracted limits at every snapshot.
#[derive(Debug, Clone)]
pub struct MvSolutionBundle {
    pub domain: Arc<GridDomain>,
    pub flux: FluxFunction,
    /// Grid initial data.
    pub u0: GridFunction,
    /// Snapshot times, starting at 0.
    pub times: Vec<f64>,
    pub extractions: Vec<Option<Extraction>>,
}

impl MvSolutionBundle {
    /// Extracts every snapshot of `traj`; the first snapshot must be at `t = 0`.
    pub fn from_trajectory(traj: &Trajectory, params: &ExtractParams) -> Result<MvSolutionBundle> {
        if traj.snapshots.first().map(|s| s.0) != Some(0.0) {
            return Err(Error::InvalidParameter(
                "trajectory has no snapshot at t = 0".into(),
            ));
        }
        let extractions = traj
            .snapshots
            .iter()
            .map(|(_, u)| extract(u, params).map(Some))
            .collect::<Result<Vec<_>>>()?;
        Ok(MvSolutionBundle {
            domain: traj.initial().domain().clone(),
            flux: traj.flux.clone(),
            u0: traj.initial().clone(),
            times: traj.snapshots.iter().map(|s| s.0).collect(),
            extractions,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Copy with every atom mass multiplied by `factor`.
    pub fn with_atoms_scaled(&self, factor: f64) -> MvSolutionBundle {
        let mut out = self.clone();
        for e in out.extractions.iter_mut().flatten() {
            e.atoms = e.atoms.scaled(factor);
        }
        out
    }

    fn prepared(&self) -> Result<Prepared<'_>> {
        if self.times.len() < 2 || self.times.len() != self.extractions.len() {
            return Err(Error::InvalidParameter(
                "bundle needs at least two aligned snapshots".into(),
            ));
        }
        if self.times[0] != 0.0 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "snapshot times must start at 0 and increase".into(),
            ));
        }
        let mut ex = Vec::with_capacity(self.extractions.len());
        for (i, e) in self.extractions.iter().enumerate() {
            ex.push(e.as_ref().ok_or(Error::MissingExtraction(i))?);
        }
        let nu0 = &ex[0].nu;
        let layout = CellLayout {
            origin: nu0.layout.origin.clone(),
            width: nu0.layout.width,
        };
        let (keys, members) = layout.partition(&self.domain);
        for e in &ex {
            if e.nu.layout != layout || e.nu.cells.len() != keys.len() {
                return Err(Error::InvalidParameter(
                    "extractions use different cell layouts".into(),
                ));
            }
        }
        let limit = classify_flux(&self.flux, 4.0 * self.u0.max_abs().max(1.0), 2000)
            .ok()
            .and_then(|c| c.limit_l)
            .unwrap_or(0.0);
        let v = ex
            .iter()
            .map(|e| {
                e.nu.cells
                    .iter()
                    .map(|c| c.compose(|b| self.flux.eval(b)) + (1.0 - c.mass()) * limit)
                    .collect()
            })
            .collect();
        let edges = cell_edges(nu0);
        let grid_measure = self.domain.len() as f64 * self.domain.grid().cell_volume();
        let u0_l1 = lp_norm(&self.u0, 1.0)?;
        Ok(Prepared {
            ex,
            members,
            v,
            edges,
            scale_base: u0_l1.max(grid_measure),
            u0_l1,
        })
    }
}

struct Prepared<'a> {
    ex: Vec<&'a Extraction>,
    members: Vec<Vec<usize>>,
    /// `v = ∫ φ dν + (1 - ν(R)) l` per snapshot and cell.
    v: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    scale_base: f64,
    u0_l1: f64,
}

struct Edge {
    a: usize,
    b: usize,
    /// `h^(k-1) / d` with `d` the centroid distance.
    weight: f64,
}

fn cell_edges(nu: &LocalMeasureField) -> Vec<Edge> {
    let h = nu.spacing();
    let k = nu.dim();
    let mut edges = Vec::new();
    for a in 0..nu.len() {
        for axis in 0..k {
            if let Some(b) = nu.neighbor(a, axis) {
                let d2: f64 = nu.cells[a]
                    .center
                    .iter()
                    .zip(&nu.cells[b].center)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum();
                edges.push(Edge {
                    a,
                    b,
                    weight: h.powi(k as i32 - 1) / d2.sqrt(),
                });
            }
        }
    }
    edges
}

impl Prepared<'_> {
    /// `sum_{x in c} space(x) eps^k` per cell.
    fn cell_sums(&self, domain: &GridDomain, space: &TestField) -> Vec<f64> {
        let vol = domain.grid().cell_volume();
        self.members
            .iter()
            .map(|nodes| vol * pairwise_sum_by(nodes.len(), |i| space.eval(domain.point(nodes[i]))))
            .collect()
    }

    fn centers(&self, space: &TestField) -> Vec<f64> {
        self.ex[0]
            .nu
            .cells
            .iter()
            .map(|c| space.eval(&c.center))
            .collect()
    }

    fn scale(&self, psi: &SpaceTimeTest) -> f64 {
        psi.space.amplitude.abs() * self.scale_base
    }
}

fn trapezoid(times: &[f64], q: &[f64]) -> f64 {
    pairwise_sum_by(times.len() - 1, |i| {
        0.5 * (times[i + 1] - times[i]) * (q[i] + q[i + 1])
    })
}

/// `∫ B(t) ψ_t dt` with `B` linear between snapshots and the time profile
/// differenced exactly.
fn against_profile(times: &[f64], pairing: &[f64], psi: &SpaceTimeTest, horizon: f64) -> f64 {
    pairwise_sum_by(times.len() - 1, |i| {
        let dp = psi.profile.value(times[i + 1], horizon) - psi.profile.value(times[i], horizon);
        0.5 * (pairing[i] + pairing[i + 1]) * dp
    })
}

fn check_profile_end(psi: &SpaceTimeTest, horizon: f64) -> Result<()> {
    let end = psi.profile.value(horizon, horizon);
    if end.abs() > 1e-12 {
        return Err(Error::BadTestFunction(alloc::format!(
            "ψ(T) = {end} times the spatial bump"
        )));
    }
    Ok(())
}

/// Raw and normalized weak-form defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub raw: f64,
    pub normalized: f64,
}

fn weak_form_with(
    bundle: &MvSolutionBundle,
    prep: &Prepared<'_>,
    psi: &SpaceTimeTest,
) -> Result<Residual> {
    let horizon = bundle.horizon();
    check_profile_end(psi, horizon)?;
    let sums = prep.cell_sums(&bundle.domain, &psi.space);
    let at_centers = prep.centers(&psi.space);
    let pairing: Vec<f64> = prep
        .ex
        .iter()
        .map(|e| {
            let atoms = pairwise_sum_by(e.atoms.len(), |j| {
                let a = &e.atoms.atoms[j];
                a.mass * psi.space.eval(&a.location)
            });
            atoms + pairwise_sum_by(sums.len(), |c| e.barycenter.values[c] * sums[c])
        })
        .collect();
    let dirichlet: Vec<f64> = bundle
        .times
        .iter()
        .zip(&prep.v)
        .map(|(&t, v)| {
            psi.profile.value(t, horizon)
                * pairwise_sum_by(prep.edges.len(), |j| {
                    let ed = &prep.edges[j];
                    (v[ed.b] - v[ed.a]) * (at_centers[ed.b] - at_centers[ed.a]) * ed.weight
                })
        })
        .collect();
    let time_part = against_profile(&bundle.times, &pairing, psi, horizon)
        - trapezoid(&bundle.times, &dirichlet);
    let initial = psi.profile.value(0.0, horizon) * pair(&bundle.u0, &psi.space);
    let raw = (time_part + initial).abs();
    Ok(Residual {
        raw,
        normalized: raw / prep.scale(psi),
    })
}

/// `| ∫∫ Σ m ψ_t(p) + b ψ_t - ∇v·∇ψ + ∫ u0 ψ(0) |`.
pub fn weak_form_residual(bundle: &MvSolutionBundle, psi: &SpaceTimeTest) -> Result<Residual> {
    let prep = bundle.prepared()?;
    weak_form_with(bundle, &prep, psi)
}

/// Only the atom term `∫ Σ m ψ_t(p) dt`.
pub fn atom_term(bundle: &MvSolutionBundle, psi: &SpaceTimeTest) -> Result<f64> {
    let prep = bundle.prepared()?;
    let pairing: Vec<f64> = prep.ex.iter().map(|e| e.atoms.pair(&psi.space)).collect();
    Ok(against_profile(
        &bundle.times,
        &pairing,
        psi,
        bundle.horizon(),
    ))
}

fn entropy_with(
    bundle: &MvSolutionBundle,
    prep: &Prepared<'_>,
    g: &EntropyWeight,
    psi: &SpaceTimeTest,
) -> Result<Residual> {
    let horizon = bundle.horizon();
    check_profile_end(psi, horizon)?;
    if psi.profile.value(0.0, horizon).abs() > 1e-12 {
        return Err(Error::BadTestFunction(
            "entropy tests must vanish at t = 0".into(),
        ));
    }
    if psi.space.amplitude < 0.0 {
        return Err(Error::BadTestFunction(
            "entropy tests must be nonnegative".into(),
        ));
    }
    for i in 0..=256 {
        let t = horizon * i as f64 / 256.0;
        if psi.profile.value(t, horizon) < -1e-12 {
            return Err(Error::BadTestFunction(alloc::format!(
                "negative time profile at t = {t}"
            )));
        }
    }
    let flux = &bundle.flux;
    let big_g = |b: f64| {
        if b == 0.0 {
            0.0
        } else {
            adaptive_simpson(|s| g.eval(flux.eval(s)), 0.0, b, 1e-12 * b.abs().max(1.0))
        }
    };
    let sums = prep.cell_sums(&bundle.domain, &psi.space);
    let at_centers = prep.centers(&psi.space);
    let gstar: Vec<f64> = prep
        .ex
        .iter()
        .map(|e| {
            pairwise_sum_by(sums.len(), |c| {
                let cell = &e.nu.cells[c];
                let gs =
                    pairwise_sum_by(cell.bins.len(), |k| cell.bins[k].1 * big_g(cell.bins[k].0));
                gs * sums[c]
            })
        })
        .collect();
    let q: Vec<f64> = bundle
        .times
        .iter()
        .zip(&prep.v)
        .map(|(&t, v)| {
            let edges = pairwise_sum_by(prep.edges.len(), |j| {
                let ed = &prep.edges[j];
                let dv = v[ed.b] - v[ed.a];
                let dpsi = at_centers[ed.b] - at_centers[ed.a];
                let vbar = 0.5 * (v[ed.a] + v[ed.b]);
                let pbar = 0.5 * (at_centers[ed.a] + at_centers[ed.b]);
                (g.eval(vbar) * dv * dpsi + g.deriv(vbar) * dv * dv * pbar) * ed.weight
            });
            psi.profile.value(t, horizon) * edges
        })
        .collect();
    let value = against_profile(&bundle.times, &gstar, psi, horizon) - trapezoid(&bundle.times, &q);
    Ok(Residual {
        raw: value,
        normalized: value / prep.scale(psi),
    })
}

/// `∫∫ G⋆(ν) ψ_t - g(v) ∇v·∇ψ - g'(v) |∇v|^2 ψ`, which is `>= 0` for an
/// entropy solution; `raw` carries the sign.
pub fn entropy_inequality_check(
    bundle: &MvSolutionBundle,
    g: &EntropyWeight,
    psi: &SpaceTimeTest,
) -> Result<Residual> {
    for i in 0..=256 {
        let x = -10.0 + 20.0 * i as f64 / 256.0;
        if g.deriv(x) < 0.0 {
            return Err(Error::DecreasingEntropyFunction(x));
        }
    }
    let prep = bundle.prepared()?;
    entropy_with(bundle, &prep, g, psi)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub family_size: usize,
    pub seed: u64,
    /// Relative slack on `||b||_1 <= ||u0||_1`.
    pub tol1: f64,
    /// Relative slack on `||v||_∞ <= max φ`.
    pub tol2: f64,
    pub tol3: f64,
    pub tol4: f64,
    pub entropy_weights: Vec<EntropyWeight>,
    /// Spread below which `ν^{φ(u)}` counts as a Dirac mass.
    pub dirac_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions {
            family_size: 16,
            seed: 0,
            tol1: 1e-2,
            tol2: 1e-2,
            tol3: 1e-2,
            tol4: 1e-2,
            entropy_weights: vec![
                EntropyWeight::Constant(1.0),
                EntropyWeight::Identity,
                EntropyWeight::Tanh,
            ],
            dirac_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub pass: bool,
    pub value: f64,
    pub tol: f64,
    pub note: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub conditions: [Condition; 4],
    pub seed: u64,
    pub family_size: usize,
    /// `∫ ||∇v||_2^2 dt`, reported, not certified.
    pub dirichlet_energy: f64,
    /// Fraction of (snapshot, cell) pairs where `ν^{φ(u)}` is Dirac.
    pub dirac_fraction: f64,
    /// `max |φ(r_i) - v|` over the components of the last snapshot.
    pub branch_consistency: f64,
    /// Index of the family member with the largest weak-form residual.
    pub worst_member: usize,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    /// `key=value` lines, e.g. `cond3.residual=...`, `cond3.pass=true`.
    pub fn to_key_value(&self) -> String {
        let names = ["norm", "bound", "residual", "entropy"];
        let mut out = String::new();
        for (i, (c, name)) in self.conditions.iter().zip(names).enumerate() {
            let _ = writeln!(out, "cond{}.{name}={:e}", i + 1, c.value);
            let _ = writeln!(out, "cond{}.tol={:e}", i + 1, c.tol);
            let _ = writeln!(out, "cond{}.pass={}", i + 1, c.pass);
        }
        let _ = writeln!(out, "family.seed={}", self.seed);
        let _ = writeln!(out, "family.size={}", self.family_size);
        let _ = writeln!(out, "dirichlet_energy={:e}", self.dirichlet_energy);
        let _ = writeln!(out, "dirac_fraction={}", self.dirac_fraction);
        let _ = writeln!(out, "branch_consistency={:e}", self.branch_consistency);
        out
    }

    pub fn to_text(&self) -> String {
        let labels = [
            "(1) barycenter L1 bound",
            "(2) v bounded by max φ",
            "(3) weak form residual",
            "(4) entropy inequality",
        ];
        let mut out = String::new();
        for (c, label) in self.conditions.iter().zip(labels) {
            let _ = writeln!(
                out,
                "{label:<28} {}  value={:.3e} tol={:.1e}  {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.value,
                c.tol,
                c.note
            );
        }
        let _ = writeln!(
            out,
            "test family: {} members, seed {}; ∫||∇v||² dt = {:.4e} (reported, not certified)",
            self.family_size, self.seed, self.dirichlet_energy
        );
        let _ = writeln!(
            out,
            "Dirac fraction of ν^φ(u): {:.4}; branch consistency max|φ(r_i) - v| = {:.3e}",
            self.dirac_fraction, self.branch_consistency
        );
        out
    }
}

/// All four conditions over seeded test families.
pub fn verify(bundle: &MvSolutionBundle, opts: &VerifyOptions) -> Result<VerificationReport> {
    let prep = bundle.prepared()?;
    let flux = &bundle.flux;

    // (1)
    let b_max = prep
        .ex
        .iter()
        .map(|e| e.barycenter.l1_norm(&e.nu))
        .fold(0.0, f64::max);
    let excess1 = (b_max - prep.u0_l1) / prep.u0_l1.max(1e-300);
    let cond1 = Condition {
        pass: b_max.is_finite() && excess1 <= opts.tol1,
        value: excess1,
        tol: opts.tol1,
        note: "relative excess of max_t ||b||_1 over ||u0||_1",
    };

    // (2)
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for e in &prep.ex {
        for c in &e.nu.cells {
            for &(r, _) in &c.bins {
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
    }
    let mut phi_max = 0.0f64;
    if lo <= hi {
        for i in 0..=1024 {
            phi_max = phi_max.max(flux.eval(lo + (hi - lo) * i as f64 / 1024.0).abs());
        }
    }
    let v_max = prep.v.iter().flatten().fold(0.0f64, |m, &x| m.max(x.abs()));
    let excess2 = (v_max - phi_max) / phi_max.max(1e-300);
    let dirichlet_q: Vec<f64> = prep
        .v
        .iter()
        .map(|v| {
            pairwise_sum_by(prep.edges.len(), |j| {
                let ed = &prep.edges[j];
                let dv = v[ed.b] - v[ed.a];
                dv * dv * ed.weight
            })
        })
        .collect();
    let dirichlet_energy = trapezoid(&bundle.times, &dirichlet_q);
    let cond2 = Condition {
        pass: excess2 <= opts.tol2 && dirichlet_energy.is_finite(),
        value: excess2,
        tol: opts.tol2,
        note: "relative excess of ||v||_inf over max |φ| on the observed range",
    };

    // (3)
    let family = space_time_family(&bundle.domain, opts.family_size, opts.seed)?;
    let mut worst = (f64::NEG_INFINITY, 0usize);
    for (i, psi) in family.iter().enumerate() {
        let r = weak_form_with(bundle, &prep, psi)?;
        if r.normalized > worst.0 {
            worst = (r.normalized, i);
        }
    }
    let cond3 = Condition {
        pass: worst.0 <= opts.tol3,
        value: worst.0,
        tol: opts.tol3,
        note: "max normalized weak-form residual over the family",
    };

    // (4)
    let mut min_entropy = f64::INFINITY;
    for g in &opts.entropy_weights {
        for test in &family {
            let psi = SpaceTimeTest::new(test.space.clone(), TimeProfile::SinBump);
            let r = entropy_with(bundle, &prep, g, &psi)?;
            min_entropy = min_entropy.min(r.normalized);
        }
    }
    let cond4 = Condition {
        pass: min_entropy >= -opts.tol4,
        value: min_entropy,
        tol: opts.tol4,
        note: "min normalized entropy value over weights and family",
    };

    // Dirac fraction of ν^{φ(u)} and branch consistency
    let mut dirac = 0usize;
    let mut total = 0usize;
    for e in &prep.ex {
        for c in &e.nu.cells {
            let m = c.mass();
            if m <= 0.0 {
                continue;
            }
            let mean = c.compose(|b| flux.eval(b)) / m;
            let var = c.compose(|b| (flux.eval(b) - mean) * (flux.eval(b) - mean)) / m;
            total += 1;
            if var.sqrt() <= opts.dirac_tol {
                dirac += 1;
            }
        }
    }
    let last = prep.ex.len() - 1;
    let mut branch: f64 = 0.0;
    for (c, cell) in prep.ex[last].nu.cells.iter().enumerate() {
        if let Ok(dec) = cell.decompose(opts.tol1) {
            for &(_, r) in &dec.components {
                branch = branch.max((flux.eval(r) - prep.v[last][c]).abs());
            }
        }
    }

    Ok(VerificationReport {
        conditions: [cond1, cond2, cond3, cond4],
        seed: opts.seed,
        family_size: opts.family_size,
        dirichlet_energy,
        dirac_fraction: if total == 0 {
            1.0
        } else {
            dirac as f64 / total as f64
        },
        branch_consistency: branch,
        worst_member: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Omega};
    use crate::solver::{solve, SolveConfig};
    use crate::test_fields::{canonical_bump, sample};

    fn line(level: u32) -> Arc<GridDomain> {
        Arc::new(
            GridDomain::new(
                Grid::new(level, &[(-1.0, 1.0)]).unwrap(),
                Omega::interval(-1.0, 1.0),
            )
            .unwrap(),
        )
    }

    fn run(flux: FluxFunction, u0: &GridFunction, t: f64, snaps: usize) -> MvSolutionBundle {
        let mut cfg = SolveConfig::new(u0.domain().clone(), flux, t);
        cfg.snapshots = (0..=snaps).map(|i| t * i as f64 / snaps as f64).collect();
        let traj = solve(&cfg, u0).unwrap();
        MvSolutionBundle::from_trajectory(&traj, &ExtractParams::for_domain(u0.domain())).unwrap()
    }

    #[test]
    fn profiles_vanish_at_horizon() {
        for p in [
            TimeProfile::Linear,
            TimeProfile::CosRamp,
            TimeProfile::SinBump,
        ] {
            assert!(p.value(2.0, 2.0).abs() < 1e-15);
            let h = 1e-6;
            let fd = (p.value(0.7 + h, 2.0) - p.value(0.7 - h, 2.0)) / (2.0 * h);
            assert!((fd - p.derivative(0.7, 2.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_solution_has_zero_residual() {
        let d = line(8);
        let u0 = GridFunction::constant(d.clone(), 0.6);
        let bundle = run(FluxFunction::cubic(), &u0, 0.01, 4);
        for psi in space_time_family(&d, 6, 1).unwrap() {
            let r = weak_form_residual(&bundle, &psi).unwrap();
            assert!(r.raw < 1e-14, "{r:?}");
        }
        let report = verify(&bundle, &VerifyOptions::default()).unwrap();
        assert!(report.all_pass(), "{}", report.to_text());
        assert!(report.conditions[2].value < 1e-13);
    }

    #[test]
    fn heat_run_passes() {
        let d = line(8);
        let phi = canonical_bump(d.omega()).unwrap();
        let u0 = sample(&phi, &d).map(|v| 0.2 + v);
        let bundle = run(FluxFunction::identity(), &u0, 0.1, 64);
        let report = verify(&bundle, &VerifyOptions::default()).unwrap();
        assert!(report.all_pass(), "{}", report.to_text());
        let kv = report.to_key_value();
        assert!(kv.contains("cond3.pass=true"));
    }

    #[test]
    fn residual_scales_linearly() {
        let d = line(7);
        let u0 = GridFunction::from_fn(d.clone(), |x| 1.0 + 0.5 * (2.0 * x[0]).cos());
        let bundle = run(FluxFunction::identity(), &u0, 0.05, 16);
        let base = canonical_bump(d.omega()).unwrap();
        let psi1 = SpaceTimeTest::new(base.clone(), TimeProfile::Linear);
        let psi3 = SpaceTimeTest::new(base.scaled(3.0), TimeProfile::Linear);
        let r1 = weak_form_residual(&bundle, &psi1).unwrap();
        let r3 = weak_form_residual(&bundle, &psi3).unwrap();
        assert!((r3.raw - 3.0 * r1.raw).abs() <= 1e-12 * r3.raw.max(1e-300));
        assert!((r3.normalized - r1.normalized).abs() <= 1e-12 * r1.normalized.max(1e-300));
    }

    #[test]
    fn bad_tests_and_missing_extraction() {
        let d = line(7);
        let u0 = GridFunction::constant(d.clone(), 1.0);
        let mut bundle = run(FluxFunction::identity(), &u0, 0.01, 2);
        let space = canonical_bump(d.omega()).unwrap();
        let keep = SpaceTimeTest::new(space.clone(), TimeProfile::Custom(|_, _| (1.0, 0.0)));
        assert!(matches!(
            weak_form_residual(&bundle, &keep),
            Err(Error::BadTestFunction(_))
        ));
        let neg = SpaceTimeTest::new(space.clone().scaled(-1.0), TimeProfile::SinBump);
        assert!(matches!(
            entropy_inequality_check(&bundle, &EntropyWeight::Identity, &neg),
            Err(Error::BadTestFunction(_))
        ));
        bundle.extractions[1] = None;
        let psi = SpaceTimeTest::new(space, TimeProfile::Linear);
        assert_eq!(
            weak_form_residual(&bundle, &psi).unwrap_err(),
            Error::MissingExtraction(1)
        );
    }

    #[test]
    fn constant_weight_entropy_is_weak_form() {
        let d = line(8);
        let phi = canonical_bump(d.omega()).unwrap();
        let u0 = sample(&phi, &d).map(|v| 0.5 + v);
        let bundle = run(FluxFunction::identity(), &u0, 0.05, 32);
        let psi = SpaceTimeTest::new(phi, TimeProfile::SinBump);
        let r = entropy_inequality_check(&bundle, &EntropyWeight::Constant(1.0), &psi).unwrap();
        assert!(r.normalized.abs() < 1e-2, "{r:?}");
        let r = entropy_inequality_check(&bundle, &EntropyWeight::Identity, &psi).unwrap();
        assert!(r.normalized >= -1e-3, "{r:?}");
    }
}
