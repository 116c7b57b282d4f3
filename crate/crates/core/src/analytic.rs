//! Closed-form separable vector fields with exact derivatives.
//!
//! A component is a sum of terms `amp · f_x(x) · f_y(y) · f_z(z)` built from
//! the factor catalog:
//!
//! | descriptor   | factor               | axes        |
//! |--------------|----------------------|-------------|
//! | `1`          | 1                    | any         |
//! | `sin(k)`     | sin(2πk s)           | x, y        |
//! | `cos(k)`     | cos(2πk s)           | x, y        |
//! | `sinpi(k)`   | sin(πk z)            | z           |
//! | `cospi(k)`   | cos(πk z)            | z           |
//! | `bump`       | z(1 - z)             | z           |
//!
//! Horizontal factors must be 1-periodic, so `k` is an integer there.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::{Grid, Loc};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    One,
    /// `sin(freq · s + phase)`.
    Sin {
        freq: f64,
        phase: f64,
    },
    /// `s (1 - s)`.
    Bump,
}

impl Factor {
    pub fn sin(k: f64) -> Factor {
        Factor::Sin { freq: 2.0 * PI * k, phase: 0.0 }
    }

    pub fn cos(k: f64) -> Factor {
        Factor::Sin { freq: 2.0 * PI * k, phase: 0.5 * PI }
    }

    pub fn sinpi(k: f64) -> Factor {
        Factor::Sin { freq: PI * k, phase: 0.0 }
    }

    pub fn cospi(k: f64) -> Factor {
        Factor::Sin { freq: PI * k, phase: 0.5 * PI }
    }

    /// `n`-th derivative at `s`.
    pub fn eval(&self, n: u8, s: f64) -> f64 {
        match *self {
            Factor::One => {
                if n == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Factor::Sin { freq, phase } => freq.powi(n as i32) * (freq * s + phase + 0.5 * PI * n as f64).sin(),
            Factor::Bump => match n {
                0 => s * (1.0 - s),
                1 => 1.0 - 2.0 * s,
                2 => -2.0,
                _ => 0.0,
            },
        }
    }

    fn is_periodic(&self) -> bool {
        match *self {
            Factor::One => true,
            Factor::Sin { freq, .. } => {
                let k = freq / (2.0 * PI);
                (k - k.round()).abs() < 1e-12
            }
            Factor::Bump => false,
        }
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Factor> {
        let s = s.trim();
        let bad = || Error::Precondition(format!("unknown factor descriptor '{s}'"));
        if s == "1" || s == "one" {
            return Ok(Factor::One);
        }
        if s == "bump" {
            return Ok(Factor::Bump);
        }
        let open = s.find('(').ok_or_else(bad)?;
        let name = &s[..open];
        let k: f64 = s[open + 1..].strip_suffix(')').ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        match name {
            "sin" => Ok(Factor::sin(k)),
            "cos" => Ok(Factor::cos(k)),
            "sinpi" => Ok(Factor::sinpi(k)),
            "cospi" => Ok(Factor::cospi(k)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Factor::One => write!(f, "1"),
            Factor::Bump => write!(f, "bump"),
            Factor::Sin { freq, phase } => {
                let (name, base) = if (freq / PI).fract().abs() < 1e-12 && ((freq / PI) as i64) % 2 != 0 {
                    ("pi", PI)
                } else {
                    ("", 2.0 * PI)
                };
                let trig = if phase == 0.0 { "sin" } else { "cos" };
                write!(f, "{trig}{name}({})", freq / base)
            }
        }
    }
}

/// One separable term of a component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    #[serde(default = "one")]
    pub amp: f64,
    #[serde(default = "one_desc")]
    pub x: String,
    #[serde(default = "one_desc")]
    pub y: String,
    #[serde(default = "one_desc")]
    pub z: String,
}

fn one() -> f64 {
    1.0
}

fn one_desc() -> String {
    "1".into()
}

impl Term {
    pub fn new(amp: f64, x: &str, y: &str, z: &str) -> Term {
        Term { amp, x: x.into(), y: y.into(), z: z.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Compiled {
    amp: f64,
    f: [Factor; 3],
}

impl Compiled {
    fn eval(&self, orders: [u8; 3], p: [f64; 3]) -> f64 {
        let mut v = self.amp;
        for a in 0..3 {
            v *= self.f[a].eval(orders[a], p[a]);
            if v == 0.0 {
                break;
            }
        }
        v
    }
}

/// Symbolic description of a field, as it appears in configuration files.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub u1: Vec<Term>,
    #[serde(default)]
    pub u2: Vec<Term>,
    #[serde(default)]
    pub u3: Vec<Term>,
}

/// A vector field given by closed-form separable terms per component.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticField {
    terms: [Vec<Compiled>; 3],
    spec: FieldSpec,
}

impl AnalyticField {
    pub fn new(spec: FieldSpec) -> Result<Self> {
        let compile = |ts: &Vec<Term>| -> Result<Vec<Compiled>> {
            ts.iter()
                .map(|t| {
                    let f = [t.x.parse()?, t.y.parse()?, t.z.parse()?];
                    for (a, fa) in f.iter().take(2).enumerate() {
                        if !Factor::is_periodic(fa) {
                            return Err(Error::Precondition(format!(
                                "factor '{}' along axis {} is not 1-periodic",
                                [&t.x, &t.y][a],
                                a + 1
                            )));
                        }
                    }
                    if !t.amp.is_finite() {
                        return Err(Error::NonFinite("term amplitude"));
                    }
                    Ok(Compiled { amp: t.amp, f })
                })
                .collect()
        };
        Ok(AnalyticField { terms: [compile(&spec.u1)?, compile(&spec.u2)?, compile(&spec.u3)?], spec })
    }

    pub fn zero() -> Self {
        AnalyticField::new(FieldSpec::default()).expect("empty spec")
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    /// Mixed partial derivative of component `c` with the given orders.
    pub fn derivative(&self, c: usize, orders: [u8; 3], p: [f64; 3]) -> f64 {
        self.terms[c].iter().map(|t| t.eval(orders, p)).sum()
    }

    pub fn value(&self, c: usize, p: [f64; 3]) -> f64 {
        self.derivative(c, [0, 0, 0], p)
    }

    pub fn partial(&self, c: usize, axis: usize, p: [f64; 3]) -> f64 {
        let mut o = [0u8; 3];
        o[axis] = 1;
        self.derivative(c, o, p)
    }

    pub fn divergence(&self, p: [f64; 3]) -> f64 {
        (0..3).map(|c| self.partial(c, c, p)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.iter().all(|t| t.is_empty())
    }

    pub fn component_is_empty(&self, c: usize) -> bool {
        self.terms[c].is_empty()
    }

    /// Samples of `∂^orders u^c` at every point of `loc`.
    pub fn sample_at(&self, grid: &Grid, c: usize, orders: [u8; 3], loc: Loc) -> Vec<f64> {
        let [nx, ny, nz] = grid.dims(loc);
        let centred = loc.centred();
        let mut out = Vec::with_capacity(nx * ny * nz);
        if self.terms[c].is_empty() {
            out.resize(nx * ny * nz, 0.0);
            return out;
        }
        // separable: tabulate each factor along its axis once
        let axis_vals = |t: &Compiled, a: usize, n: usize| -> Vec<f64> {
            (0..n).map(|i| t.f[a].eval(orders[a], grid.coord(a, centred[a], i))).collect()
        };
        out.resize(nx * ny * nz, 0.0);
        for t in &self.terms[c] {
            let fx = axis_vals(t, 0, nx);
            let fy = axis_vals(t, 1, ny);
            let fz = axis_vals(t, 2, nz);
            let mut idx = 0;
            for &vz in &fz {
                for &vy in &fy {
                    let s = t.amp * vz * vy;
                    for &vx in &fx {
                        out[idx] += s * vx;
                        idx += 1;
                    }
                }
            }
        }
        out
    }

    /// Sample every component at its own staggered location.
    pub fn to_field(&self, grid: Grid) -> VectorField {
        let comps = [0, 1, 2].map(|c| self.sample_at(&grid, c, [0, 0, 0], Loc::of_component(c)));
        VectorField { grid, comps }
    }

    /// `max_{|α| ≤ 2} max_x |∂^α u|` estimated on a uniform 48³ lattice.
    pub fn w2inf_norm(&self) -> f64 {
        self.winf_norm(2)
    }

    /// `max_{|α| ≤ order} max_x |∂^α u|` estimated on a uniform 48³ lattice.
    pub fn winf_norm(&self, order: u8) -> f64 {
        let n = 48;
        let mut orders = Vec::new();
        for a in 0..=order {
            for b in 0..=order - a {
                for c in 0..=order - a - b {
                    orders.push([a, b, c]);
                }
            }
        }
        let mut best = 0.0f64;
        for comp in 0..3 {
            for &o in &orders {
                for k in 0..=n {
                    for j in 0..n {
                        for i in 0..n {
                            let p = [i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64];
                            best = best.max(self.derivative(comp, o, p).abs());
                        }
                    }
                }
            }
        }
        best
    }

    /// Largest `|u^3|` over the two plates, on a 64² lattice.
    pub fn plate_trace(&self) -> f64 {
        let n = 64;
        let mut best = 0.0f64;
        for z in [0.0, 1.0] {
            for j in 0..n {
                for i in 0..n {
                    let p = [i as f64 / n as f64, j as f64 / n as f64, z];
                    best = best.max(self.value(2, p).abs());
                }
            }
        }
        best
    }
}

/// Random smooth field: a few low-wavenumber separable terms per component.
/// With `impermeable`, the vertical component vanishes on both plates.
pub fn random_field(seed: u64, impermeable: bool) -> AnalyticField {
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    const H: [&str; 5] = ["1", "sin(1)", "cos(1)", "sin(2)", "cos(2)"];
    const Z: [&str; 5] = ["1", "cospi(1)", "sinpi(1)", "cospi(2)", "bump"];
    const ZW: [&str; 3] = ["sinpi(1)", "sinpi(2)", "bump"];
    let mut comp = |c: usize| -> Vec<Term> {
        (0..3)
            .map(|_| {
                let mut pick = |list: &[&str]| list[(unit() * list.len() as f64) as usize % list.len()].to_string();
                let x = pick(&H);
                let y = pick(&H);
                let z = if c == 2 && impermeable { pick(&ZW) } else { pick(&Z) };
                Term { amp: 2.0 * unit() - 1.0, x, y, z }
            })
            .collect()
    };
    let spec = FieldSpec { u1: comp(0), u2: comp(1), u3: comp(2) };
    AnalyticField::new(spec).expect("catalog factors are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_derivatives() {
        let f = Factor::cos(1.0);
        let s = 0.3;
        let w = 2.0 * PI;
        assert!((f.eval(0, s) - (w * s).cos()).abs() < 1e-14);
        assert!((f.eval(1, s) + w * (w * s).sin()).abs() < 1e-13);
        assert!((f.eval(2, s) + w * w * (w * s).cos()).abs() < 1e-12);
        assert_eq!(Factor::Bump.eval(2, 0.7), -2.0);
    }

    #[test]
    fn descriptors_round_trip() {
        for d in ["1", "sin(2)", "cos(1)", "sinpi(1)", "cospi(3)", "bump"] {
            let f: Factor = d.parse().unwrap();
            assert_eq!(f.to_string(), d);
        }
        assert!("tan(1)".parse::<Factor>().is_err());
        assert!("sin(x)".parse::<Factor>().is_err());
    }

    #[test]
    fn rejects_non_periodic_horizontal_factor() {
        let spec = FieldSpec { u1: vec![Term::new(1.0, "bump", "1", "1")], ..Default::default() };
        assert!(AnalyticField::new(spec).is_err());
        let spec = FieldSpec { u1: vec![Term::new(1.0, "sinpi(1)", "1", "1")], ..Default::default() };
        assert!(AnalyticField::new(spec).is_err());
    }

    #[test]
    fn separable_sampling_matches_pointwise() {
        let spec = FieldSpec {
            u1: vec![Term::new(0.5, "cos(1)", "sin(2)", "cospi(1)")],
            u3: vec![Term::new(2.0, "sin(1)", "1", "bump")],
            ..Default::default()
        };
        let a = AnalyticField::new(spec).unwrap();
        let g = Grid::new(4, 6, 5).unwrap();
        let s = a.sample_at(&g, 0, [1, 0, 1], Loc::U);
        for (v, p) in s.iter().zip(g.points(Loc::U)) {
            assert!((v - a.derivative(0, [1, 0, 1], p)).abs() < 1e-12);
        }
        assert_eq!(a.plate_trace(), 0.0);
    }

    #[test]
    fn random_fields_reproducible() {
        assert_eq!(random_field(4, true), random_field(4, true));
        assert_ne!(random_field(4, true), random_field(5, true));
        for s in 0..20 {
            assert!(random_field(s, true).plate_trace() < 1e-12);
        }
    }
}
