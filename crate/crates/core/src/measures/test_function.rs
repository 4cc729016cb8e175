use serde::{Deserialize, Serialize};

use crate::geometry::{point_segment_distance, Point, Vector};

/// One term `coef · Π x_k^{e_k}` of a polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    fn value(&self, x: &Point) -> f64 {
        self.coef
            * self
                .exponents
                .iter()
                .enumerate()
                .map(|(k, &e)| x[k].powi(e as i32))
                .product::<f64>()
    }

    fn add_gradient(&self, x: &Point, out: &mut [f64]) {
        for (k, &ek) in self.exponents.iter().enumerate() {
            if ek == 0 {
                continue;
            }
            let mut d = self.coef * ek as f64 * x[k].powi(ek as i32 - 1);
            for (j, &ej) in self.exponents.iter().enumerate() {
                if j != k {
                    d *= x[j].powi(ej as i32);
                }
            }
            out[k] += d;
        }
    }
}

/// Data point of a [`TestFunction::ConeExtension`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub point: Point,
    pub value: f64,
}

/// A capsule `{x : dist(x, [a, b]) ≤ radius}` on which a cone extension is
/// held constant at `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub a: Point,
    pub b: Point,
    pub radius: f64,
    pub level: f64,
}

/// Smooth (or Lipschitz) functions used to probe distributions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestFunction {
    /// φ(x) = x_axis
    Coordinate {
        axis: usize,
    },
    Polynomial {
        terms: Vec<Monomial>,
    },
    /// φ(x) = A (1 − |x − c|²/R²)³ inside the ball, 0 outside; C².
    RadialBump {
        center: Point,
        radius: f64,
        #[serde(default = "unit_amplitude")]
        amplitude: f64,
    },
    /// φ(x) = (n·(x − a)) (1 − ρ²/R²)³ with ρ = dist(x, [a, b]) and n a unit
    /// vector orthogonal to b − a. Its gradient equals n on the segment and
    /// never exceeds 1 in norm, while |φ| ≤ R.
    NormalBump {
        a: Point,
        b: Point,
        normal: Vector,
        radius: f64,
    },
    /// McShane-type extension min over anchors of `value + |x − point|` and
    /// over plateaus of `level + (dist(x, capsule))`. 1-Lipschitz whenever the
    /// data are; differentiable almost everywhere.
    ConeExtension {
        anchors: Vec<Anchor>,
        plateaus: Vec<Plateau>,
    },
    Combination {
        terms: Vec<(f64, TestFunction)>,
    },
}

fn unit_amplitude() -> f64 {
    1.0
}

impl TestFunction {
    pub fn coordinate(axis: usize) -> Self {
        TestFunction::Coordinate { axis }
    }

    pub fn monomial(coef: f64, exponents: Vec<u32>) -> Self {
        TestFunction::Polynomial {
            terms: vec![Monomial { coef, exponents }],
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::monomial(c, vec![0; dim])
    }

    pub fn radial_bump(center: Point, radius: f64) -> Self {
        TestFunction::RadialBump {
            center,
            radius,
            amplitude: 1.0,
        }
    }

    /// α·self + β·other
    pub fn combine(alpha: f64, phi: TestFunction, beta: f64, psi: TestFunction) -> Self {
        TestFunction::Combination {
            terms: vec![(alpha, phi), (beta, psi)],
        }
    }

    /// All monomials x^e with total degree ≤ `max_degree` and unit coefficient.
    pub fn polynomial_family(dim: usize, max_degree: u32) -> Vec<TestFunction> {
        let mut out = Vec::new();
        let mut exps = vec![0u32; dim];
        fn rec(k: usize, left: u32, exps: &mut Vec<u32>, out: &mut Vec<TestFunction>) {
            if k == exps.len() {
                out.push(TestFunction::monomial(1.0, exps.clone()));
                return;
            }
            for e in 0..=left {
                exps[k] = e;
                rec(k + 1, left - e, exps, out);
            }
            exps[k] = 0;
        }
        rec(0, max_degree, &mut exps, &mut out);
        out
    }

    /// Total degree when the function is a polynomial.
    pub fn polynomial_degree(&self) -> Option<u32> {
        match self {
            TestFunction::Coordinate { .. } => Some(1),
            TestFunction::Polynomial { terms } => {
                Some(terms.iter().map(Monomial::degree).max().unwrap_or(0))
            }
            TestFunction::Combination { terms } => terms
                .iter()
                .map(|(_, f)| f.polynomial_degree())
                .try_fold(0, |acc, d| d.map(|d| acc.max(d))),
            _ => None,
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        match self {
            TestFunction::Coordinate { axis } => x[*axis],
            TestFunction::Polynomial { terms } => terms.iter().map(|t| t.value(x)).sum(),
            TestFunction::RadialBump {
                center,
                radius,
                amplitude,
            } => {
                let s = x.dist(center).powi(2) / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - s).powi(3)
                }
            }
            TestFunction::NormalBump {
                a,
                b,
                normal,
                radius,
            } => {
                let (rho, _) = point_segment_distance(x, a, b);
                let s = rho * rho / (radius * radius);
                if s >= 1.0 {
                    0.0
                } else {
                    normal.dot(&(x - a)) * (1.0 - s).powi(3)
                }
            }
            TestFunction::ConeExtension { anchors, plateaus } => {
                cone_active(anchors, plateaus, x).map_or(0.0, |(v, _)| v)
            }
            TestFunction::Combination { terms } => terms.iter().map(|(c, f)| c * f.value(x)).sum(),
        }
    }

    pub fn gradient(&self, x: &Point) -> Vector {
        let n = x.dim();
        match self {
            TestFunction::Coordinate { axis } => Point::unit(n, *axis),
            TestFunction::Polynomial { terms } => {
                let mut g = vec![0.0; n];
                for t in terms {
                    t.add_gradient(x, &mut g);
                }
                Point(g)
            }
            TestFunction::RadialBump {
                center,
                radius,
                amplitude,
            } => {
                let y = x - center;
                let r2 = radius * radius;
                let s = y.dot(&y) / r2;
                if s >= 1.0 {
                    Point::zeros(n)
                } else {
                    y.scale(-6.0 * amplitude * (1.0 - s).powi(2) / r2)
                }
            }
            TestFunction::NormalBump {
                a,
                b,
                normal,
                radius,
            } => {
                let (rho, closest) = point_segment_distance(x, a, b);
                let r2 = radius * radius;
                let s = rho * rho / r2;
                if s >= 1.0 {
                    return Point::zeros(n);
                }
                // ∇(ρ²) = 2 (x − closest) for the distance to a convex set.
                let lift = normal.dot(&(x - a));
                let radial = (x - &closest).scale(-6.0 * lift * (1.0 - s).powi(2) / r2);
                &normal.scale((1.0 - s).powi(3)) + &radial
            }
            TestFunction::ConeExtension { anchors, plateaus } => {
                cone_active(anchors, plateaus, x).map_or_else(|| Point::zeros(n), |(_, g)| g)
            }
            TestFunction::Combination { terms } => {
                let mut g = Point::zeros(n);
                for (c, f) in terms {
                    g = g.offset(&f.gradient(x), *c);
                }
                g
            }
        }
    }
}

/// Value and gradient of the active piece; ties go to the first piece.
fn cone_active(anchors: &[Anchor], plateaus: &[Plateau], x: &Point) -> Option<(f64, Vector)> {
    let n = x.dim();
    let mut best: Option<(f64, Vector)> = None;
    let mut consider = |v: f64, g: &dyn Fn() -> Vector| {
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, g()));
        }
    };
    for an in anchors {
        let d = x.dist(&an.point);
        consider(an.value + d, &|| {
            if d > 0.0 {
                (x - &an.point).scale(1.0 / d)
            } else {
                Point::zeros(n)
            }
        });
    }
    for pl in plateaus {
        let (rho, closest) = point_segment_distance(x, &pl.a, &pl.b);
        let excess = (rho - pl.radius).max(0.0);
        consider(pl.level + excess, &|| {
            if excess > 0.0 {
                (x - &closest).scale(1.0 / rho)
            } else {
                Point::zeros(n)
            }
        });
    }
    best
}
