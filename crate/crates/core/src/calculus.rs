//! Finite differences, grid integrals, norms and the Neumann grid Laplacian.
//!
//! All one-sided differences use the zero extension of a grid function
//! outside its domain. The Laplacian instead closes the stencil at the
//! boundary so that its row sums telescope to zero.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::grid::{GridDomain, GridFunction};
use crate::reduce::{pairwise_sum, pairwise_sum_by};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    Forward,
    Backward,
    Centered,
}

fn diff_values(domain: &GridDomain, f: &[f64], axis: usize, mode: DiffMode, out: &mut [f64]) {
    let inv = 1.0 / domain.eps();
    for s in 0..domain.len() {
        let right = domain.plus(s, axis).map_or(0.0, |p| f[p]);
        let left = domain.minus(s, axis).map_or(0.0, |m| f[m]);
        out[s] = match mode {
            DiffMode::Forward => (right - f[s]) * inv,
            DiffMode::Backward => (f[s] - left) * inv,
            DiffMode::Centered => 0.5 * (right - left) * inv,
        };
    }
}

/// First difference along `axis`.
pub fn diff(f: &GridFunction, axis: usize, mode: DiffMode) -> GridFunction {
    assert!(axis < f.domain().dim(), "axis {axis} out of range");
    let mut out = vec![0.0; f.len()];
    diff_values(f.domain(), f.values(), axis, mode, &mut out);
    GridFunction::from_parts(f.domain().clone(), out)
}

/// `D^alpha f`, applying `alpha[i]` differences along axis `i`, axis by axis.
pub fn diff_multi(f: &GridFunction, alpha: &[usize], mode: DiffMode) -> GridFunction {
    assert_eq!(
        alpha.len(),
        f.domain().dim(),
        "multi-index length must equal dimension"
    );
    let mut cur = f.clone();
    for (axis, &k) in alpha.iter().enumerate() {
        for _ in 0..k {
            cur = diff(&cur, axis, mode);
        }
    }
    cur
}

/// Grid gradient: one difference per axis.
pub fn gradient(f: &GridFunction, mode: DiffMode) -> Vec<GridFunction> {
    (0..f.domain().dim())
        .map(|axis| diff(f, axis, mode))
        .collect()
}

/// Grid divergence `sum_i D_i F_i`.
pub fn divergence(field: &[GridFunction], mode: DiffMode) -> Result<GridFunction> {
    let first = field
        .first()
        .ok_or(Error::InvalidParameter("empty vector field".into()))?;
    let dim = first.domain().dim();
    if field.len() != dim {
        return Err(Error::InvalidParameter(alloc::format!(
            "{} components for dimension {dim}",
            field.len()
        )));
    }
    if field.iter().any(|c| !c.same_domain(first)) {
        return Err(Error::MismatchedDomains);
    }
    let mut acc = vec![0.0; first.len()];
    let mut tmp = vec![0.0; first.len()];
    for (axis, comp) in field.iter().enumerate() {
        diff_values(comp.domain(), comp.values(), axis, mode, &mut tmp);
        for (a, t) in acc.iter_mut().zip(&tmp) {
            *a += t;
        }
    }
    Ok(GridFunction::from_parts(first.domain().clone(), acc))
}

/// `eps^k * sum f(x)` over the domain, or over nodes accepted by `subset`.
pub fn integrate(f: &GridFunction, subset: Option<&dyn Fn(&[f64]) -> bool>) -> f64 {
    let d = f.domain();
    let vol = d.grid().cell_volume();
    let v = f.values();
    match subset {
        None => vol * pairwise_sum(v),
        Some(keep) => vol * pairwise_sum_by(v.len(), |s| if keep(d.point(s)) { v[s] } else { 0.0 }),
    }
}

/// `eps^k * sum f(x) g(x)`, zero where either function is undefined.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::IncompatibleGrids);
    }
    let vol = f.grid().cell_volume();
    let (fv, gv) = (f.values(), g.values());
    if f.same_domain(g) {
        return Ok(vol * pairwise_sum_by(fv.len(), |s| fv[s] * gv[s]));
    }
    let (fd, gd) = (f.domain(), g.domain());
    Ok(vol
        * pairwise_sum_by(fv.len(), |s| match gd.slot(fd.index(s)) {
            Some(t) => fv[s] * gv[t],
            None => 0.0,
        }))
}

/// Discrete `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "L^p norm needs p >= 1, got {p}"
        )));
    }
    let v = f.values();
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let vol = f.grid().cell_volume();
    if p == 1.0 {
        let abs = f.map(f64::abs);
        return Ok(integrate(&abs, None));
    }
    let s = vol * pairwise_sum_by(v.len(), |i| v[i].abs().powf(p));
    Ok(s.powf(1.0 / p))
}

/// Checks that no node is isolated along an axis.
pub fn check_not_thin(domain: &GridDomain) -> Result<()> {
    match domain.thin_node() {
        Some((s, axis)) => Err(Error::ThinDomain {
            axis,
            node: domain.index(s).to_vec(),
        }),
        None => Ok(()),
    }
}

/// Neumann Laplacian on raw values; the domain must already be known not
/// to be thin.
pub(crate) fn laplacian_values(domain: &GridDomain, f: &[f64], out: &mut [f64]) {
    let inv2 = 1.0 / (domain.eps() * domain.eps());
    let dim = domain.dim();
    for s in 0..domain.len() {
        let fs = f[s];
        let mut acc = 0.0;
        for axis in 0..dim {
            acc += match (domain.plus(s, axis), domain.minus(s, axis)) {
                (Some(p), Some(m)) => f[p] - 2.0 * fs + f[m],
                (None, Some(m)) => -(fs - f[m]),
                (Some(p), None) => f[p] - fs,
                (None, None) => 0.0,
            };
        }
        out[s] = acc * inv2;
    }
}

/// Grid Laplacian with one-sided Neumann corrections at the boundary.
///
/// Along axes where `x + eps e_i` is missing the term is `-D^-_i f / eps`,
/// where `x - eps e_i` is missing it is `D^+_i f / eps`, and elsewhere the
/// usual `D^+_i D^-_i f`.
pub fn laplacian_neumann(f: &GridFunction) -> Result<GridFunction> {
    check_not_thin(f.domain())?;
    let mut out = vec![0.0; f.len()];
    laplacian_values(f.domain(), f.values(), &mut out);
    Ok(GridFunction::from_parts(f.domain().clone(), out))
}

/// `(sum over in-domain edges of |D^+ f|^2 eps^k)^(1/2)`.
pub fn edge_gradient_norm(f: &GridFunction) -> f64 {
    let d = f.domain();
    let v = f.values();
    let inv = 1.0 / d.eps();
    let vol = d.grid().cell_volume();
    let s = pairwise_sum_by(d.len(), |s| {
        let mut acc = 0.0;
        for axis in 0..d.dim() {
            if let Some(p) = d.plus(s, axis) {
                let g = (v[p] - v[s]) * inv;
                acc += g * g;
            }
        }
        acc
    });
    (vol * s).sqrt()
}

/// Grid representative of the Dirac mass at `r` (one dimension): `1/eps` at
/// the largest lattice node not exceeding `r`, zero elsewhere.
pub fn dirac_representative(domain: &Arc<GridDomain>, r: f64) -> Result<GridFunction> {
    if domain.dim() != 1 {
        return Err(Error::InvalidParameter(
            "Dirac representative needs dimension 1".into(),
        ));
    }
    if !domain.omega().contains(&[r]) {
        return Err(Error::OutsideDomain(alloc::format!("r = {r}")));
    }
    let eps = domain.eps();
    let idx = (r / eps).floor() as i64;
    let slot = domain
        .slot(&[idx])
        .ok_or_else(|| Error::OutsideDomain(alloc::format!("lattice node below r = {r}")))?;
    let mut values = vec![0.0; domain.len()];
    values[slot] = 1.0 / eps;
    Ok(GridFunction::from_parts(domain.clone(), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, Omega};

    fn line(level: u32, a: f64, b: f64) -> Arc<GridDomain> {
        Arc::new(
            GridDomain::new(Grid::new(level, &[(a, b)]).unwrap(), Omega::interval(a, b)).unwrap(),
        )
    }

    // nodes {0, 1, 2} with eps = 1
    fn three_nodes() -> Arc<GridDomain> {
        Arc::new(
            GridDomain::new(
                Grid::new(0, &[(-1.0, 3.0)]).unwrap(),
                Omega::interval(-1.0, 3.0),
            )
            .unwrap(),
        )
    }

    #[test]
    fn forward_difference_of_square() {
        let d = line(1, -2.0, 2.0);
        let f = GridFunction::from_fn(d.clone(), |x| x[0] * x[0]);
        let df = diff(&f, 0, DiffMode::Forward);
        let s = d.slot(&[2]).unwrap();
        assert_eq!(df.values()[s], 2.5);
    }

    #[test]
    fn backward_hand_stencil() {
        let f = GridFunction::new(three_nodes(), vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(diff(&f, 0, DiffMode::Backward).values()[1], 1.0);
        assert_eq!(diff(&f, 0, DiffMode::Centered).values()[1], 2.0);
    }

    #[test]
    fn constant_has_zero_interior_differences() {
        let d = line(3, -1.0, 1.0);
        let f = GridFunction::constant(d.clone(), 3.5);
        for mode in [DiffMode::Forward, DiffMode::Backward, DiffMode::Centered] {
            let df = diff(&f, 0, mode);
            for s in 1..d.len() - 1 {
                assert_eq!(df.values()[s], 0.0);
            }
        }
    }

    #[test]
    fn laplacian_hand_values() {
        let f = GridFunction::new(three_nodes(), vec![0.0, 1.0, 4.0]).unwrap();
        let l = laplacian_neumann(&f).unwrap();
        assert_eq!(l.values(), &[1.0, 2.0, -3.0]);
        assert_eq!(l.values().iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn laplacian_exact_on_quadratics_and_constants() {
        for level in [2, 5, 8] {
            let d = line(level, -1.0, 1.0);
            let f = GridFunction::from_fn(d.clone(), |x| x[0] * x[0]);
            let l = laplacian_neumann(&f).unwrap();
            for s in 1..d.len() - 1 {
                assert_eq!(l.values()[s], 2.0);
            }
            let c = laplacian_neumann(&GridFunction::constant(d, 7.0)).unwrap();
            assert!(c.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn thin_domain_rejected() {
        let d = Arc::new(
            GridDomain::new(
                Grid::cube(1, 0.0, 1.0, 2).unwrap(),
                Omega::Box(vec![(0.0, 1.0); 2]),
            )
            .unwrap(),
        );
        let f = GridFunction::constant(d, 1.0);
        assert!(matches!(
            laplacian_neumann(&f),
            Err(Error::ThinDomain { .. })
        ));
    }

    #[test]
    fn gradient_divergence_give_three_point_stencil() {
        let d = line(4, -1.0, 1.0);
        let f = GridFunction::from_fn(d.clone(), |x| (3.0 * x[0]).sin());
        let g = gradient(&f, DiffMode::Forward);
        let div = divergence(&g, DiffMode::Backward).unwrap();
        let eps = d.eps();
        let v = f.values();
        for s in 1..d.len() - 1 {
            let stencil = (v[s + 1] - 2.0 * v[s] + v[s - 1]) / (eps * eps);
            assert!((div.values()[s] - stencil).abs() <= 1e-12 * stencil.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_of_linear_is_exact() {
        let d = line(3, -1.0, 1.0);
        let f = GridFunction::from_fn(d.clone(), |x| 0.75 * x[0]);
        let g = &gradient(&f, DiffMode::Forward)[0];
        for s in 0..d.len() {
            if d.plus(s, 0).is_some() {
                assert_eq!(g.values()[s], 0.75);
            }
        }
    }

    #[test]
    fn divergence_rejects_mismatched_domains() {
        let a = GridFunction::constant(line(2, -1.0, 1.0), 1.0);
        let b = GridFunction::constant(line(3, -1.0, 1.0), 1.0);
        let d2 = Arc::new(
            GridDomain::new(
                Grid::cube(2, -1.0, 1.0, 2).unwrap(),
                Omega::Box(vec![(-1.0, 1.0); 2]),
            )
            .unwrap(),
        );
        let c = GridFunction::constant(d2.clone(), 1.0);
        let e = GridFunction::constant(
            Arc::new(
                GridDomain::new(
                    Grid::cube(2, -1.0, 1.0, 2).unwrap(),
                    Omega::Ball {
                        center: vec![0.0, 0.0],
                        radius: 1.0,
                    },
                )
                .unwrap(),
            ),
            1.0,
        );
        assert!(divergence(&[a, b], DiffMode::Forward).is_err());
        assert_eq!(
            divergence(&[c, e], DiffMode::Forward).unwrap_err(),
            Error::MismatchedDomains
        );
    }

    #[test]
    fn integral_and_inner_product() {
        let d = line(3, -1.0, 1.0);
        let one = GridFunction::constant(d.clone(), 1.0);
        assert_eq!(inner_product(&one, &one).unwrap(), d.eps() * d.len() as f64);
        let half = integrate(&one, Some(&|x: &[f64]| x[0] > 0.0));
        assert_eq!(half, d.eps() * 7.0);
        let other = GridFunction::constant(line(4, -1.0, 1.0), 1.0);
        assert_eq!(
            inner_product(&one, &other).unwrap_err(),
            Error::IncompatibleGrids
        );
    }

    #[test]
    fn inner_product_zero_extends_across_domains() {
        let grid = Grid::cube(2, -1.0, 1.0, 1).unwrap();
        let a = Arc::new(GridDomain::new(grid.clone(), Omega::interval(-1.0, 1.0)).unwrap());
        let b = Arc::new(GridDomain::new(grid, Omega::interval(0.0, 1.0)).unwrap());
        let f = GridFunction::constant(a, 2.0);
        let g = GridFunction::constant(b, 3.0);
        assert_eq!(inner_product(&f, &g).unwrap(), 0.25 * 3.0 * 6.0);
    }

    #[test]
    fn norms() {
        for level in [4, 8, 12] {
            let d = line(level, -1.0, 1.0);
            let one = GridFunction::constant(d.clone(), 1.0);
            let n1 = lp_norm(&one, 1.0).unwrap();
            assert_eq!(n1, d.eps() * d.len() as f64);
            assert!((n1 - 2.0).abs() <= d.eps());
        }
        let d = line(2, -1.0, 1.0);
        let f = GridFunction::from_fn(d, |x| x[0]);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 0.75);
        assert!(
            (lp_norm(&f, 2.0).unwrap() - (0.25f64 * 2.0 * (0.5625 + 0.25 + 0.0625)).sqrt()).abs()
                < 1e-15
        );
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn dirac_representative_spikes() {
        let d = line(2, -1.0, 1.0);
        let d0 = dirac_representative(&d, 0.0).unwrap();
        assert_eq!(d0.at(&[0]), 4.0);
        assert_eq!(d0.values().iter().filter(|&&v| v != 0.0).count(), 1);
        let d3 = dirac_representative(&d, 0.3).unwrap();
        assert_eq!(d3.at(&[1]), 4.0);
        assert_eq!(integrate(&d3, None), 1.0);
        assert!(dirac_representative(&d, 1.5).is_err());
        assert!(dirac_representative(&d, -0.9).is_err());
    }
}
