//! Flux nonlinearities `φ` of `u_t = Δφ(u)` and their monotonicity structure.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxPreset {
    /// `φ(u) = u`.
    Identity,
    /// `φ(u) = 2u^3 - 4.5u^2 + 3u`, increasing, decreasing on `(1/2, 1)`, increasing again.
    Cubic,
    /// `φ(u) = u/(1 + u^2)`, increasing then decreasing to 0.
    Rational,
    /// `φ(u) = u(1 + l u)/(1 + u^2)`, increasing then decreasing to `l`.
    RationalLimit(f64),
}

#[derive(Clone)]
enum Kind {
    Preset(FluxPreset),
    Custom {
        name: String,
        eval: RealFn,
        deriv: Option<RealFn>,
    },
}

#[derive(Clone)]
pub struct FluxFunction {
    kind: Kind,
}

impl fmt::Debug for FluxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FluxFunction({})", self.name())
    }
}

impl FluxFunction {
    pub fn preset(p: FluxPreset) -> FluxFunction {
        FluxFunction {
            kind: Kind::Preset(p),
        }
    }

    pub fn identity() -> FluxFunction {
        FluxFunction::preset(FluxPreset::Identity)
    }

    pub fn cubic() -> FluxFunction {
        FluxFunction::preset(FluxPreset::Cubic)
    }

    pub fn rational() -> FluxFunction {
        FluxFunction::preset(FluxPreset::Rational)
    }

    pub fn rational_limit(l: f64) -> Result<FluxFunction> {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("flux limit {l}")));
        }
        Ok(FluxFunction::preset(FluxPreset::RationalLimit(l)))
    }

    /// User flux; without `deriv` the derivative is a central difference.
    pub fn custom(name: impl Into<String>, eval: RealFn, deriv: Option<RealFn>) -> FluxFunction {
        FluxFunction {
            kind: Kind::Custom {
                name: name.into(),
                eval,
                deriv,
            },
        }
    }

    /// Preset by name: `identity`/`heat`, `cubic`, `rational`, `rational:<l>`.
    pub fn from_name(name: &str) -> Result<FluxFunction> {
        match name.trim() {
            "identity" | "heat" => Ok(FluxFunction::identity()),
            "cubic" => Ok(FluxFunction::cubic()),
            "rational" => Ok(FluxFunction::rational()),
            other => match other.strip_prefix("rational:") {
                Some(l) => {
                    let l: f64 = l
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidParameter(alloc::format!("flux limit {l:?}")))?;
                    FluxFunction::rational_limit(l)
                }
                None => Err(Error::InvalidParameter(alloc::format!(
                    "unknown flux {other:?}"
                ))),
            },
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::Preset(FluxPreset::Identity) => "identity".into(),
            Kind::Preset(FluxPreset::Cubic) => "cubic".into(),
            Kind::Preset(FluxPreset::Rational) => "rational".into(),
            Kind::Preset(FluxPreset::RationalLimit(l)) => alloc::format!("rational:{l}"),
            Kind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn preset_kind(&self) -> Option<FluxPreset> {
        match self.kind {
            Kind::Preset(p) => Some(p),
            Kind::Custom { .. } => None,
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Preset(FluxPreset::Identity) => u,
            Kind::Preset(FluxPreset::Cubic) => u * (3.0 + u * (-4.5 + 2.0 * u)),
            Kind::Preset(FluxPreset::Rational) => u / (1.0 + u * u),
            Kind::Preset(FluxPreset::RationalLimit(l)) => u * (1.0 + l * u) / (1.0 + u * u),
            Kind::Custom { eval, .. } => eval(u),
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Preset(FluxPreset::Identity) => 1.0,
            Kind::Preset(FluxPreset::Cubic) => 3.0 * (2.0 * u - 1.0) * (u - 1.0),
            Kind::Preset(FluxPreset::Rational) => {
                let q = 1.0 + u * u;
                (1.0 - u * u) / (q * q)
            }
            Kind::Preset(FluxPreset::RationalLimit(l)) => {
                let q = 1.0 + u * u;
                (1.0 + 2.0 * l * u - u * u) / (q * q)
            }
            Kind::Custom { eval, deriv, .. } => match deriv {
                Some(d) => d(u),
                None => {
                    let h = 1e-6 * u.abs().max(1.0);
                    (eval(u + h) - eval(u - h)) / (2.0 * h)
                }
            },
        }
    }

    /// `max |φ'|` over `[0, range]` on 4096 samples, padded by 1%.
    pub fn lipschitz(&self, range: f64) -> f64 {
        let n = 4096;
        let mut best: f64 = 0.0;
        for i in 0..=n {
            best = best.max(self.deriv(range * i as f64 / n as f64).abs());
        }
        1.01 * best
    }

    /// Largest `u >= 0` with `φ(u) = level`, scanning up to `limit`.
    pub fn largest_preimage(&self, level: f64, limit: f64) -> Option<f64> {
        if self.eval(limit) <= level {
            return None;
        }
        let (mut lo, mut hi) = (0.0, limit);
        for _ in 0..3 {
            match self.highest_crossing(level, lo, hi, 1000) {
                Some((a, b)) => (lo, hi) = (a, b),
                None => return Some(0.0),
            }
        }
        Some(bisect(|x| self.eval(x) - level, lo, hi, 1e-12))
    }

    fn highest_crossing(&self, level: f64, lo: f64, hi: f64, parts: usize) -> Option<(f64, f64)> {
        let step = (hi - lo) / parts as f64;
        let mut u = hi;
        for i in (0..parts).rev() {
            let a = lo + step * i as f64;
            if self.eval(a) <= level {
                return Some((a, u));
            }
            u = a;
        }
        None
    }

    /// `B = max(s, largest preimage of max_{[0,s]} φ) + 0.1` for `s = ||u0||_∞`;
    /// `None` when the preimage is not found below `1e6`.
    pub fn sup_bound(&self, u0_sup: f64) -> Option<f64> {
        let n = 4096;
        let at = |i: usize| u0_sup * i as f64 / n as f64;
        let best = (0..=n)
            .max_by(|&a, &b| self.eval(at(a)).total_cmp(&self.eval(at(b))))
            .unwrap_or(0);
        let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(n)));
        let g = 0.5 * (5.0f64.sqrt() - 1.0);
        for _ in 0..100 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.eval(c) >= self.eval(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let peak = self.eval(at(best)).max(self.eval(0.5 * (a + b)));
        let top = if self.eval(u0_sup) >= peak {
            u0_sup
        } else {
            self.largest_preimage(peak, 1e6)?
        };
        Some(u0_sup.max(top) + 0.1)
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa = f(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Critical points and tail behaviour of `φ` on `[0, R]`.
#[derive(Debug, Clone)]
pub struct FluxClassification {
    /// First local maximum.
    pub u_minus: Option<f64>,
    /// Following local minimum (`None` stands for `+∞`).
    pub u_plus: Option<f64>,
    pub eventually_decreasing: bool,
    /// `lim φ` at `+∞`, estimated when eventually decreasing.
    pub limit_l: Option<f64>,
    /// All sign changes of `φ'` on `[0, R]`.
    pub critical_points: Vec<f64>,
    range: f64,
    flux: FluxFunction,
    samples: usize,
}

impl FluxClassification {
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn is_monotone(&self) -> bool {
        self.critical_points.is_empty()
    }

    /// Number of preimages of `v` in `[0, R]`.
    pub fn branch_count(&self, v: f64) -> usize {
        let mut count = 0;
        let mut prev = self.flux.eval(0.0) - v;
        if prev == 0.0 {
            count += 1;
        }
        for i in 1..=self.samples {
            let cur = self.flux.eval(self.range * i as f64 / self.samples as f64) - v;
            if cur == 0.0 || (prev != 0.0 && (cur > 0.0) != (prev > 0.0)) {
                count += 1;
            }
            prev = cur;
        }
        count
    }
}

/// Locates the sign changes of `φ'` on `[0, range]` and checks `φ(0) = 0`,
/// `φ >= 0`.
pub fn classify_flux(
    flux: &FluxFunction,
    range: f64,
    samples: usize,
) -> Result<FluxClassification> {
    if samples < 100 {
        return Err(Error::InvalidParameter(alloc::format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!("range {range}")));
    }
    if flux.eval(0.0).abs() > 1e-12 {
        return Err(Error::HypothesisViolation(alloc::format!(
            "φ(0) = {}",
            flux.eval(0.0)
        )));
    }
    let at = |i: usize| range * i as f64 / samples as f64;
    for i in 0..=samples {
        let v = flux.eval(at(i));
        if v < -1e-12 || !v.is_finite() {
            return Err(Error::HypothesisViolation(alloc::format!(
                "φ({}) = {v}",
                at(i)
            )));
        }
    }
    let mut critical = Vec::new();
    let mut kinds = Vec::new();
    let mut prev = flux.deriv(0.0);
    let mut last = 0;
    for i in 1..=samples {
        let cur = flux.deriv(at(i));
        if cur == 0.0 {
            continue;
        }
        if prev != 0.0 && (cur > 0.0) != (prev > 0.0) {
            critical.push(bisect(|u| flux.deriv(u), at(last), at(i), 1e-10));
            kinds.push(prev > 0.0);
        }
        prev = cur;
        last = i;
    }
    let u_minus = kinds.iter().position(|&m| m).map(|i| critical[i]);
    let u_plus = u_minus.and_then(|um| {
        critical
            .iter()
            .zip(&kinds)
            .find(|&(&c, &is_max)| c > um && !is_max)
            .map(|(&c, _)| c)
    });
    let tail_negative = flux.deriv(range) < 0.0;
    let eventually_decreasing = u_minus.is_some() && u_plus.is_none() && tail_negative;
    let limit_l = if eventually_decreasing {
        let big = 1e4 * range.max(1.0);
        Some(2.0 * flux.eval(2.0 * big) - flux.eval(big))
    } else {
        None
    };
    Ok(FluxClassification {
        u_minus,
        u_plus,
        eventually_decreasing,
        limit_l,
        critical_points: critical,
        range,
        flux: flux.clone(),
        samples,
    })
}
