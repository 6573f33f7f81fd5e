//! Smooth compactly supported test functions and the duality pairing.
//!
//! The pairing `<f, phi>` of a grid function with a sampled test function
//! determines the distribution (or Radon measure) a grid function stands
//! for. Quantifiers over all test functions are replaced here by finite,
//! seeded families.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{inner_product, lp_norm};
use crate::grid::{GridDomain, GridFunction, Omega};
use crate::{Error, Result};

/// Radial profile `exp(1 - 1/(1 - t^2))` on `|t| < 1`, normalized to 1 at 0.
pub fn bump_profile(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t2)).exp()
    }
}

/// Derivative of [`bump_profile`] in `t`.
pub fn bump_profile_deriv(t: f64) -> f64 {
    let t2 = t * t;
    if t2 >= 1.0 {
        0.0
    } else {
        let q = 1.0 - t2;
        -2.0 * t / (q * q) * bump_profile(t)
    }
}

/// `max |bump_profile'|`, located by a dense scan and golden-section refinement.
pub fn bump_profile_lipschitz() -> f64 {
    let n = 4000;
    let mut best = (0.0, 0.0);
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let v = bump_profile_deriv(t).abs();
        if v > best.0 {
            best = (v, t);
        }
    }
    let (mut a, mut b) = (
        (best.1 - 1.0 / n as f64).max(0.0),
        (best.1 + 1.0 / n as f64).min(1.0),
    );
    let g = 0.5 * (5.0f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if bump_profile_deriv(c).abs() > bump_profile_deriv(d).abs() {
            b = d;
        } else {
            a = c;
        }
    }
    bump_profile_deriv(0.5 * (a + b)).abs()
}

/// A radial bump `amplitude * profile(|x - center| / radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl TestField {
    /// Bump whose closed support is compactly contained in `omega`.
    pub fn new(center: Vec<f64>, radius: f64, omega: &Omega) -> Result<TestField> {
        if center.len() != omega.dim() {
            return Err(Error::InvalidParameter(
                "bump center has the wrong dimension".into(),
            ));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "bump radius {radius}"
            )));
        }
        if omega.distance_to_boundary(&center) <= radius {
            return Err(Error::SupportNotContained);
        }
        Ok(TestField {
            center,
            radius,
            amplitude: 1.0,
        })
    }

    pub fn scaled(mut self, amplitude: f64) -> TestField {
        self.amplitude = amplitude;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn rel(&self, x: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(x)
            .map(|(c, xi)| (xi - c) * (xi - c))
            .sum::<f64>()
            .sqrt()
            / self.radius
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.amplitude * bump_profile(self.rel(x))
    }

    /// Spatial gradient, written into `out`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let t = self.rel(x);
        if t == 0.0 || t >= 1.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let scale = self.amplitude * bump_profile_deriv(t) / (t * self.radius * self.radius);
        for ((o, xi), c) in out.iter_mut().zip(x).zip(&self.center) {
            *o = scale * (xi - c);
        }
    }

    /// Lipschitz constant `|amplitude| * max|profile'| / radius`.
    pub fn lipschitz(&self) -> f64 {
        self.amplitude.abs() * bump_profile_lipschitz() / self.radius
    }

    pub fn sup(&self) -> f64 {
        self.amplitude.abs()
    }
}

/// Pointwise evaluation at every in-domain node.
pub fn sample(field: &TestField, domain: &alloc::sync::Arc<GridDomain>) -> GridFunction {
    GridFunction::from_fn(domain.clone(), |x| field.eval(x))
}

/// The canonical bump: centred in `omega` with radius one third of its
/// diameter, shrunk if needed to stay compactly inside.
pub fn canonical_bump(omega: &Omega) -> Result<TestField> {
    let center = omega.center();
    let room = omega.distance_to_boundary(&center);
    let radius = (omega.diameter() / 3.0).min(0.95 * room);
    TestField::new(center, radius, omega)
}

/// `count` bumps with seeded pseudo-random centres stratified over a
/// coarse partition of the bounding box of the domain's open set.
///
/// `count == 1` gives [`canonical_bump`].
pub fn test_family(domain: &GridDomain, count: usize, seed: u64) -> Result<Vec<TestField>> {
    if count == 0 {
        return Err(Error::EmptyFamily);
    }
    let omega = domain.omega();
    if count == 1 {
        return Ok(vec![canonical_bump(omega)?]);
    }
    let dim = omega.dim();
    let bbox = omega.bounding_box();
    let mut per_axis = 1usize;
    while per_axis.pow(dim as u32) < count {
        per_axis += 1;
    }
    let strata = per_axis.pow(dim as u32);
    let widths: Vec<f64> = bbox
        .iter()
        .map(|&(a, b)| (b - a) / per_axis as f64)
        .collect();
    let cell_width = widths.iter().copied().fold(0.0, f64::max);
    let min_room = 1e-3 * omega.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut family = Vec::with_capacity(count);
    let mut x = vec![0.0; dim];
    for i in 0..count {
        let mut stratum = i * strata / count;
        let mut cell = vec![0usize; dim];
        for c in cell.iter_mut().rev() {
            *c = stratum % per_axis;
            stratum /= per_axis;
        }
        let mut center = None;
        for _ in 0..64 {
            for axis in 0..dim {
                let lo = bbox[axis].0 + cell[axis] as f64 * widths[axis];
                x[axis] = lo + rng.random::<f64>() * widths[axis];
            }
            if omega.distance_to_boundary(&x) > min_room {
                center = Some(x.clone());
                break;
            }
        }
        let center = center.unwrap_or_else(|| omega.center());
        let room = omega.distance_to_boundary(&center);
        let radius = (cell_width * (0.5 + rng.random::<f64>())).min(0.95 * room);
        family.push(TestField::new(center, radius, omega)?);
    }
    Ok(family)
}

/// `<f, sample(phi)>`.
pub fn pair(f: &GridFunction, field: &TestField) -> f64 {
    let phi = sample(field, f.domain());
    inner_product(f, &phi).expect("sampled on the same domain")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalence {
    pub equivalent: bool,
    pub max_dev: f64,
}

/// Largest pairing difference over a finite test family.
pub fn are_equivalent(
    f: &GridFunction,
    g: &GridFunction,
    family: &[TestField],
    tol: f64,
) -> Result<Equivalence> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    if f.grid() != g.grid() {
        return Err(Error::IncompatibleGrids);
    }
    let mut max_dev: f64 = 0.0;
    for field in family {
        let pf = pair(f, field);
        let phi = sample(field, g.domain());
        let pg = inner_product(g, &phi)?;
        max_dev = max_dev.max((pf - pg).abs());
    }
    Ok(Equivalence {
        equivalent: max_dev <= tol,
        max_dev,
    })
}

/// Default equivalence tolerance `10 sqrt(eps) ||f - g||_1`.
pub fn default_equivalence_tol(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let d = f.zip_with(g, |a, b| a - b)?;
    Ok(10.0 * f.domain().eps().sqrt() * lp_norm(&d, 1.0)?)
}
