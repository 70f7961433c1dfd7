//! Scalar functions on the half-line carried with exact derivatives.
//!
//! Every metric coefficient in this crate is a [`SmoothFn`]: a small
//! expression tree over `{const, t, add, mul, neg, inv, pow, exp, log, bump}`
//! that can be evaluated as a second-order jet (value, first and second
//! derivative) at any admissible point. Jets are propagated with truncated
//! Taylor arithmetic, so derivatives are exact up to floating rounding; no
//! finite differences are involved.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Value, first and second derivative of a scalar function at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub fn new(value: f64, d1: f64, d2: f64) -> Self {
        Jet2 { value, d1, d2 }
    }

    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            d1: 0.0,
            d2: 0.0,
        }
    }
}

/// Errors raised while evaluating or constructing scalar functions.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ScalarError {
    #[error("domain error in `{node}` at t = {t}: {reason}")]
    Domain {
        node: &'static str,
        t: f64,
        reason: String,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type ScalarResult<T> = Result<T, ScalarError>;

// ---------------------------------------------------------------------------
// Truncated Taylor arithmetic
// ---------------------------------------------------------------------------

/// Taylor data of order 3: `[f, f', f'', f''']` at a point.
///
/// One order beyond the public `Jet2` is carried so that structurally
/// differentiated trees (see [`SmoothFn::derivative`]) still yield exact
/// second derivatives.
pub(crate) type T3 = [f64; 4];

fn t3_const(v: f64) -> T3 {
    [v, 0.0, 0.0, 0.0]
}

fn t3_add(a: T3, b: T3) -> T3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn t3_neg(a: T3) -> T3 {
    [-a[0], -a[1], -a[2], -a[3]]
}

fn t3_mul(a: T3, b: T3) -> T3 {
    [
        a[0] * b[0],
        a[1] * b[0] + a[0] * b[1],
        a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
        a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
    ]
}

/// Faà di Bruno to third order: derivatives of `g ∘ f` from the derivatives
/// `g = [g(f0), g'(f0), g''(f0), g'''(f0)]` of the outer function.
fn t3_compose(g: [f64; 4], f: T3) -> T3 {
    let (f1, f2, f3) = (f[1], f[2], f[3]);
    [
        g[0],
        g[1] * f1,
        g[2] * f1 * f1 + g[1] * f2,
        g[3] * f1 * f1 * f1 + 3.0 * g[2] * f1 * f2 + g[1] * f3,
    ]
}

// ---------------------------------------------------------------------------
// The smooth cutoff
// ---------------------------------------------------------------------------

/// Derivatives of the logistic function expressed in terms of its value.
fn logistic_derivs(s: f64) -> [f64; 6] {
    let s1 = s * (1.0 - s);
    [
        s,
        s1,
        s1 * (1.0 - 2.0 * s),
        s1 * (1.0 - 6.0 * s + 6.0 * s * s),
        s1 * (1.0 - 14.0 * s + 36.0 * s * s - 24.0 * s * s * s),
        s1 * (1.0 - 30.0 * s + 150.0 * s * s - 240.0 * s * s * s + 120.0 * s * s * s * s),
    ]
}

/// Faà di Bruno for `g ∘ f` up to fifth order, with `g` given by its
/// derivatives at `f[0]` and `f` by `[f, f', ..., f''''']`.
fn compose5(g: [f64; 6], f: [f64; 6]) -> [f64; 6] {
    let (f1, f2, f3, f4, f5) = (f[1], f[2], f[3], f[4], f[5]);
    let f1p2 = f1 * f1;
    let f1p3 = f1p2 * f1;
    let f1p4 = f1p3 * f1;
    let f1p5 = f1p4 * f1;
    [
        g[0],
        g[1] * f1,
        g[2] * f1p2 + g[1] * f2,
        g[3] * f1p3 + 3.0 * g[2] * f1 * f2 + g[1] * f3,
        g[4] * f1p4 + 6.0 * g[3] * f1p2 * f2 + g[2] * (4.0 * f1 * f3 + 3.0 * f2 * f2) + g[1] * f4,
        g[5] * f1p5
            + 10.0 * g[4] * f1p3 * f2
            + g[3] * (10.0 * f1p2 * f3 + 15.0 * f1 * f2 * f2)
            + g[2] * (5.0 * f1 * f4 + 10.0 * f2 * f3)
            + g[1] * f5,
    ]
}

/// Order-5 Taylor data of the cutoff `f_eta` at `t`.
///
/// `f_eta` is 1 on `[0, eta/2]`, 0 on `[eta, inf)` and in between equals the
/// logistic sigmoid of `h(x) = 1/x - 1/(1-x)` with `x = (t - eta/2)/(eta/2)`,
/// which is the classical exponential smooth step rescaled to `[eta/2, eta]`.
fn bump_taylor(t: f64, eta: f64) -> [f64; 6] {
    if t <= eta / 2.0 {
        return [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    }
    if t >= eta {
        return [0.0; 6];
    }
    let half = eta / 2.0;
    let x = (t - half) / half;
    let scale = 1.0 / half; // dx/dt

    // h(x) = 1/x - 1/(1-x) and its derivatives in x.
    let y = 1.0 - x;
    let mut h = [0.0f64; 6];
    let mut xf = x;
    let mut yf = y;
    let mut fact = 1.0f64;
    let mut sign = 1.0f64;
    h[0] = 1.0 / x - 1.0 / y;
    for k in 1..6 {
        fact *= k as f64;
        sign = -sign;
        xf *= x;
        yf *= y;
        h[k] = sign * fact / xf - fact / yf;
    }

    // Large |h| saturates the sigmoid; short-circuit to avoid overflow noise.
    let s0 = if h[0] > 40.0 {
        return [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    } else if h[0] < -40.0 {
        return [0.0; 6];
    } else {
        1.0 / (1.0 + (-h[0]).exp())
    };

    let mut f = compose5(logistic_derivs(s0), h);
    // chain through the linear rescaling x(t)
    let mut pw = 1.0;
    for item in f.iter_mut().skip(1) {
        pw *= scale;
        *item *= pw;
    }
    f
}

// ---------------------------------------------------------------------------
// Expression trees
// ---------------------------------------------------------------------------

/// A scalar function on the nonnegative half-line, represented as an
/// expression tree and evaluable as an exact jet.
///
/// The JSON form uses `kind` tags: `const`, `t`, `add`, `mul`, `neg`, `inv`,
/// `pow` (rational exponent `num`/`den`), `exp`, `log`, `bump` (field `eta`).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothFn {
    Const {
        value: f64,
    },
    T,
    Add {
        args: Vec<SmoothFn>,
    },
    Mul {
        args: Vec<SmoothFn>,
    },
    Neg {
        arg: Box<SmoothFn>,
    },
    Inv {
        arg: Box<SmoothFn>,
    },
    Pow {
        arg: Box<SmoothFn>,
        num: i64,
        #[serde(default = "default_den")]
        den: i64,
    },
    Exp {
        arg: Box<SmoothFn>,
    },
    Log {
        arg: Box<SmoothFn>,
    },
    Bump {
        eta: f64,
    },
    /// First derivative of `bump(eta)`; produced by structural
    /// differentiation only, never part of user-facing configs.
    BumpD1 {
        eta: f64,
    },
    /// Second derivative of `bump(eta)`; same provenance as `BumpD1`.
    BumpD2 {
        eta: f64,
    },
}

fn default_den() -> i64 {
    1
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.max(1)
}

impl SmoothFn {
    pub fn constant(value: f64) -> Self {
        SmoothFn::Const { value }
    }

    pub fn t() -> Self {
        SmoothFn::T
    }

    pub fn add(args: Vec<SmoothFn>) -> Self {
        let args: Vec<SmoothFn> = args.into_iter().filter(|a| !a.is_const(0.0)).collect();
        match args.len() {
            0 => SmoothFn::constant(0.0),
            1 => args.into_iter().next().unwrap(),
            _ => SmoothFn::Add { args },
        }
    }

    pub fn mul(args: Vec<SmoothFn>) -> Self {
        if args.iter().any(|a| a.is_const(0.0)) {
            return SmoothFn::constant(0.0);
        }
        let args: Vec<SmoothFn> = args.into_iter().filter(|a| !a.is_const(1.0)).collect();
        match args.len() {
            0 => SmoothFn::constant(1.0),
            1 => args.into_iter().next().unwrap(),
            _ => SmoothFn::Mul { args },
        }
    }

    pub fn neg(arg: SmoothFn) -> Self {
        if arg.is_const(0.0) {
            return arg;
        }
        SmoothFn::Neg { arg: Box::new(arg) }
    }

    pub fn inv(arg: SmoothFn) -> Self {
        SmoothFn::Inv { arg: Box::new(arg) }
    }

    /// `arg^(num/den)`; the exponent is reduced at construction.
    pub fn pow(arg: SmoothFn, num: i64, den: i64) -> ScalarResult<Self> {
        if den == 0 {
            return Err(ScalarError::Parameter("pow: zero denominator".into()));
        }
        let (mut num, mut den) = (num, den);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        if num == 0 {
            return Ok(SmoothFn::constant(1.0));
        }
        if (num, den) == (1, 1) {
            return Ok(arg);
        }
        Ok(SmoothFn::Pow {
            arg: Box::new(arg),
            num,
            den,
        })
    }

    pub fn exp(arg: SmoothFn) -> Self {
        SmoothFn::Exp { arg: Box::new(arg) }
    }

    pub fn log(arg: SmoothFn) -> Self {
        SmoothFn::Log { arg: Box::new(arg) }
    }

    pub fn bump(eta: f64) -> ScalarResult<Self> {
        if !(eta > 0.0) {
            return Err(ScalarError::Parameter(format!(
                "bump: eta must be positive, got {eta}"
            )));
        }
        Ok(SmoothFn::Bump { eta })
    }

    fn is_const(&self, v: f64) -> bool {
        matches!(self, SmoothFn::Const { value } if *value == v)
    }

    /// Scale by a constant factor.
    pub fn scaled(self, k: f64) -> Self {
        SmoothFn::mul(vec![SmoothFn::constant(k), self])
    }

    /// Parse from the JSON expression schema.
    pub fn from_json(v: &serde_json::Value) -> ScalarResult<Self> {
        let f: SmoothFn = serde_json::from_value(v.clone())
            .map_err(|e| ScalarError::Parameter(format!("bad expression: {e}")))?;
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> ScalarResult<()> {
        match self {
            SmoothFn::Bump { eta } | SmoothFn::BumpD1 { eta } | SmoothFn::BumpD2 { eta } => {
                if !(*eta > 0.0) {
                    return Err(ScalarError::Parameter(format!(
                        "bump: eta must be positive, got {eta}"
                    )));
                }
            }
            SmoothFn::Pow { arg, den, .. } => {
                if *den <= 0 {
                    return Err(ScalarError::Parameter(
                        "pow: denominator must be positive".into(),
                    ));
                }
                arg.validate()?;
            }
            SmoothFn::Add { args } | SmoothFn::Mul { args } => {
                for a in args {
                    a.validate()?;
                }
            }
            SmoothFn::Neg { arg }
            | SmoothFn::Inv { arg }
            | SmoothFn::Exp { arg }
            | SmoothFn::Log { arg } => arg.validate()?,
            SmoothFn::Const { .. } | SmoothFn::T => {}
        }
        Ok(())
    }

    pub(crate) fn eval_t3(&self, t: f64) -> ScalarResult<T3> {
        match self {
            SmoothFn::Const { value } => Ok(t3_const(*value)),
            SmoothFn::T => Ok([t, 1.0, 0.0, 0.0]),
            SmoothFn::Add { args } => {
                let mut acc = t3_const(0.0);
                for a in args {
                    acc = t3_add(acc, a.eval_t3(t)?);
                }
                Ok(acc)
            }
            SmoothFn::Mul { args } => {
                let mut acc = t3_const(1.0);
                for a in args {
                    acc = t3_mul(acc, a.eval_t3(t)?);
                }
                Ok(acc)
            }
            SmoothFn::Neg { arg } => Ok(t3_neg(arg.eval_t3(t)?)),
            SmoothFn::Inv { arg } => {
                let f = arg.eval_t3(t)?;
                if f[0] == 0.0 {
                    return Err(ScalarError::Domain {
                        node: "inv",
                        t,
                        reason: "reciprocal of zero".into(),
                    });
                }
                let i = 1.0 / f[0];
                let i2 = i * i;
                // derivatives of x -> 1/x at f0
                Ok(t3_compose([i, -i2, 2.0 * i2 * i, -6.0 * i2 * i2], f))
            }
            SmoothFn::Pow { arg, num, den } => {
                let f = arg.eval_t3(t)?;
                let e = *num as f64 / *den as f64;
                pow_t3(f, e, *num, *den, t)
            }
            SmoothFn::Exp { arg } => {
                let f = arg.eval_t3(t)?;
                let v = f[0].exp();
                Ok(t3_compose([v, v, v, v], f))
            }
            SmoothFn::Log { arg } => {
                let f = arg.eval_t3(t)?;
                if f[0] <= 0.0 {
                    return Err(ScalarError::Domain {
                        node: "log",
                        t,
                        reason: format!("argument {} not positive", f[0]),
                    });
                }
                let i = 1.0 / f[0];
                Ok(t3_compose([f[0].ln(), i, -i * i, 2.0 * i * i * i], f))
            }
            SmoothFn::Bump { eta } => {
                let b = bump_taylor(t, *eta);
                Ok([b[0], b[1], b[2], b[3]])
            }
            SmoothFn::BumpD1 { eta } => {
                let b = bump_taylor(t, *eta);
                Ok([b[1], b[2], b[3], b[4]])
            }
            SmoothFn::BumpD2 { eta } => {
                let b = bump_taylor(t, *eta);
                Ok([b[2], b[3], b[4], b[5]])
            }
        }
    }

    /// Evaluate the 2-jet at `t >= 0`.
    pub fn eval_jet2(&self, t: f64) -> ScalarResult<Jet2> {
        if !(t >= 0.0) {
            return Err(ScalarError::Domain {
                node: "eval",
                t,
                reason: "argument must be nonnegative".into(),
            });
        }
        let v = self.eval_t3(t)?;
        Ok(Jet2::new(v[0], v[1], v[2]))
    }

    /// Value only.
    pub fn eval(&self, t: f64) -> ScalarResult<f64> {
        Ok(self.eval_jet2(t)?.value)
    }

    /// Structural derivative: a new tree computing `d self / dt`.
    ///
    /// The node set is closed under differentiation (the cutoff gets the
    /// dedicated `BumpD1`/`BumpD2` nodes). No simplification beyond trivial
    /// constant folding is attempted.
    pub fn derivative(&self) -> ScalarResult<SmoothFn> {
        Ok(match self {
            SmoothFn::Const { .. } => SmoothFn::constant(0.0),
            SmoothFn::T => SmoothFn::constant(1.0),
            SmoothFn::Add { args } => {
                let mut d = Vec::with_capacity(args.len());
                for a in args {
                    d.push(a.derivative()?);
                }
                SmoothFn::add(d)
            }
            SmoothFn::Mul { args } => {
                let mut terms = Vec::with_capacity(args.len());
                for (i, a) in args.iter().enumerate() {
                    let mut factors = Vec::with_capacity(args.len());
                    for (j, b) in args.iter().enumerate() {
                        if i == j {
                            factors.push(a.derivative()?);
                        } else {
                            factors.push(b.clone());
                        }
                    }
                    terms.push(SmoothFn::mul(factors));
                }
                SmoothFn::add(terms)
            }
            SmoothFn::Neg { arg } => SmoothFn::neg(arg.derivative()?),
            SmoothFn::Inv { arg } => {
                // -f' / f^2
                SmoothFn::neg(SmoothFn::mul(vec![
                    arg.derivative()?,
                    SmoothFn::inv(SmoothFn::mul(vec![(**arg).clone(), (**arg).clone()])),
                ]))
            }
            SmoothFn::Pow { arg, num, den } => {
                // (p/q) f' f^(p/q - 1)
                let scale = *num as f64 / *den as f64;
                SmoothFn::mul(vec![
                    SmoothFn::constant(scale),
                    arg.derivative()?,
                    SmoothFn::pow((**arg).clone(), num - den, *den)?,
                ])
            }
            SmoothFn::Exp { arg } => {
                SmoothFn::mul(vec![arg.derivative()?, SmoothFn::Exp { arg: arg.clone() }])
            }
            SmoothFn::Log { arg } => {
                SmoothFn::mul(vec![arg.derivative()?, SmoothFn::inv((**arg).clone())])
            }
            SmoothFn::Bump { eta } => SmoothFn::BumpD1 { eta: *eta },
            SmoothFn::BumpD1 { eta } => SmoothFn::BumpD2 { eta: *eta },
            SmoothFn::BumpD2 { .. } => {
                return Err(ScalarError::Parameter(
                    "derivative order of the cutoff exceeded".into(),
                ))
            }
        })
    }
}

/// Taylor data of `f^e` with rational exponent `num/den`.
fn pow_t3(f: T3, e: f64, num: i64, den: i64, t: f64) -> ScalarResult<T3> {
    let x = f[0];
    if x > 0.0 {
        let v = x.powf(e);
        let g1 = e * x.powf(e - 1.0);
        let g2 = e * (e - 1.0) * x.powf(e - 2.0);
        let g3 = e * (e - 1.0) * (e - 2.0) * x.powf(e - 3.0);
        return Ok(t3_compose([v, g1, g2, g3], f));
    }
    let is_int = den == 1;
    if x == 0.0 {
        if is_int && num >= 0 {
            // x^n at 0: finitely many nonzero derivatives
            let g = |k: i64| -> f64 {
                if num == k {
                    (1..=k).map(|i| i as f64).product()
                } else {
                    0.0
                }
            };
            return Ok(t3_compose(
                [g(0).max(if num == 0 { 1.0 } else { 0.0 }), g(1), g(2), g(3)],
                f,
            ));
        }
        if e > 3.0 {
            return Ok(t3_const(0.0));
        }
        return Err(ScalarError::Domain {
            node: "pow",
            t,
            reason: format!("{num}/{den} power of zero has no finite 2-jet"),
        });
    }
    // negative base: only integer exponents
    if is_int {
        let v = x.powi(num as i32);
        let g1 = num as f64 * x.powi(num as i32 - 1);
        let g2 = (num * (num - 1)) as f64 * x.powi(num as i32 - 2);
        let g3 = (num * (num - 1) * (num - 2)) as f64 * x.powi(num as i32 - 3);
        return Ok(t3_compose([v, g1, g2, g3], f));
    }
    Err(ScalarError::Domain {
        node: "pow",
        t,
        reason: format!("fractional power {num}/{den} of negative value {x}"),
    })
}

/// The smooth cutoff `f_eta`: 1 on `[0, eta/2]`, 0 on `[eta, inf)`,
/// monotone in between, with continuous first and second derivatives.
pub fn build_bump(eta: f64) -> ScalarResult<SmoothFn> {
    SmoothFn::bump(eta)
}

impl fmt::Display for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmoothFn::Const { value } => write!(f, "{value}"),
            SmoothFn::T => write!(f, "t"),
            SmoothFn::Add { args } => {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            SmoothFn::Mul { args } => {
                write!(f, "(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            SmoothFn::Neg { arg } => write!(f, "-({arg})"),
            SmoothFn::Inv { arg } => write!(f, "1/({arg})"),
            SmoothFn::Pow { arg, num, den } => write!(f, "({arg})^({num}/{den})"),
            SmoothFn::Exp { arg } => write!(f, "exp({arg})"),
            SmoothFn::Log { arg } => write!(f, "log({arg})"),
            SmoothFn::Bump { eta } => write!(f, "bump({eta})"),
            SmoothFn::BumpD1 { eta } => write!(f, "bump'({eta})"),
            SmoothFn::BumpD2 { eta } => write!(f, "bump''({eta})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference derivatives with one Richardson level, used as the
    /// independent check on jet arithmetic.
    pub(crate) fn fd_jet(f: &SmoothFn, t: f64, h: f64) -> (f64, f64) {
        let (d1, d2, _, _) = fd_jet_est(f, t, h);
        (d1, d2)
    }

    /// As [`fd_jet`], with self-calibrated error estimates obtained by
    /// comparing Richardson results at two base steps.
    pub(crate) fn fd_jet_est(f: &SmoothFn, t: f64, h: f64) -> (f64, f64, f64, f64) {
        let f0 = f.eval(t).unwrap();
        let d = |h: f64| {
            let fp = f.eval(t + h).unwrap();
            let fm = f.eval(t - h).unwrap();
            ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
        };
        let rich = |h: f64| {
            let (d1a, d2a) = d(h);
            let (d1b, d2b) = d(h / 2.0);
            ((4.0 * d1b - d1a) / 3.0, (4.0 * d2b - d2a) / 3.0)
        };
        let (r1a, r2a) = rich(h);
        let (r1b, r2b) = rich(h / 2.0);
        // rounding floors on top of the extrapolation spread
        let eps = f64::EPSILON * (1.0 + f0.abs());
        let e1 = (r1a - r1b).abs() + eps / h;
        let e2 = (r2a - r2b).abs() + 8.0 * eps / (h * h);
        (r1b, r2b, e1, e2)
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn exponential_at_zero() {
        let f = SmoothFn::exp(SmoothFn::mul(vec![SmoothFn::constant(1.0), SmoothFn::t()]));
        let j = f.eval_jet2(0.0).unwrap();
        assert_eq!((j.value, j.d1, j.d2), (1.0, 1.0, 1.0));
    }

    #[test]
    fn power_three_halves() {
        // (2/3) t^{3/2} at t = 4: value 16/3, d1 = 2, d2 = 1/4
        let f = SmoothFn::mul(vec![
            SmoothFn::constant(2.0 / 3.0),
            SmoothFn::pow(SmoothFn::t(), 3, 2).unwrap(),
        ]);
        let j = f.eval_jet2(4.0).unwrap();
        assert!((j.value - 16.0 / 3.0).abs() < 1e-14);
        assert!((j.d1 - 2.0).abs() < 1e-14);
        assert!((j.d2 - 0.25).abs() < 1e-14);
    }

    #[test]
    fn bump_plateaus() {
        let f = build_bump(1.0).unwrap();
        let j = f.eval_jet2(0.25).unwrap();
        assert_eq!((j.value, j.d1, j.d2), (1.0, 0.0, 0.0));
        let j = f.eval_jet2(2.0).unwrap();
        assert_eq!((j.value, j.d1, j.d2), (0.0, 0.0, 0.0));
        let j = f.eval_jet2(1.5).unwrap();
        assert_eq!((j.value, j.d1, j.d2), (0.0, 0.0, 0.0));
        let mid = f.eval(0.75).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn bump_monotone_and_smooth() {
        let f = build_bump(2.0).unwrap();
        let mut prev = 1.0;
        for i in 0..=200 {
            let t = 1.0 + i as f64 / 200.0;
            let v = f.eval(t).unwrap();
            assert!(v <= prev + 1e-12, "not non-increasing at {t}");
            assert!((0.0..=1.0).contains(&v));
            prev = v;
        }
        // derivatives flatten out towards both plateau boundaries
        for &t in &[1.0 + 1e-6, 2.0 - 1e-6] {
            let j = f.eval_jet2(t).unwrap();
            assert!(j.d1.abs() < 1e-8, "d1 at boundary {t}: {}", j.d1);
            assert!(j.d2.abs() < 1e-8, "d2 at boundary {t}: {}", j.d2);
        }
        // jets match finite differences inside the transition
        for &t in &[1.1, 1.35, 1.5, 1.71, 1.9] {
            let j = f.eval_jet2(t).unwrap();
            let (d1, d2) = fd_jet(&f, t, 1e-4);
            assert!(rel_close(j.d1, d1, 1e-6), "d1 at {t}: {} vs {}", j.d1, d1);
            assert!(rel_close(j.d2, d2, 2e-4), "d2 at {t}: {} vs {}", j.d2, d2);
        }
    }

    #[test]
    fn domain_errors() {
        let f = SmoothFn::inv(SmoothFn::t());
        assert!(matches!(
            f.eval_jet2(0.0),
            Err(ScalarError::Domain { node: "inv", .. })
        ));
        let f = SmoothFn::log(SmoothFn::t());
        assert!(matches!(
            f.eval_jet2(0.0),
            Err(ScalarError::Domain { node: "log", .. })
        ));
        // t^{3/2} has an infinite second derivative at 0: rejected, not patched
        let f = SmoothFn::pow(SmoothFn::t(), 3, 2).unwrap();
        assert!(matches!(
            f.eval_jet2(0.0),
            Err(ScalarError::Domain { node: "pow", .. })
        ));
        assert!(SmoothFn::bump(0.0).is_err());
        assert!(f.eval_jet2(-1.0).is_err());
    }

    #[test]
    fn structural_derivative_matches_jet() {
        let f = SmoothFn::mul(vec![
            SmoothFn::t(),
            SmoothFn::exp(SmoothFn::mul(vec![SmoothFn::constant(0.5), SmoothFn::t()])),
        ]);
        let df = f.derivative().unwrap();
        for &t in &[0.3, 1.0, 2.7] {
            let j = f.eval_jet2(t).unwrap();
            let dj = df.eval_jet2(t).unwrap();
            assert!(rel_close(dj.value, j.d1, 1e-14));
            assert!(rel_close(dj.d1, j.d2, 1e-14));
        }
        // cutoff derivative nodes agree with the cutoff's own jets
        let b = build_bump(1.0).unwrap();
        let db = b.derivative().unwrap();
        let ddb = db.derivative().unwrap();
        for &t in &[0.6, 0.75, 0.9] {
            let j = b.eval_jet2(t).unwrap();
            assert!(rel_close(db.eval(t).unwrap(), j.d1, 1e-13));
            assert!(rel_close(ddb.eval(t).unwrap(), j.d2, 1e-13));
        }
    }

    #[test]
    fn json_round_trip() {
        let v: serde_json::Value = serde_json::from_str(
            r#"{"kind":"exp","arg":{"kind":"mul","args":[{"kind":"const","value":1.0},{"kind":"t"}]}}"#,
        )
        .unwrap();
        let f = SmoothFn::from_json(&v).unwrap();
        let j = f.eval_jet2(1.0).unwrap();
        assert!((j.value - std::f64::consts::E).abs() < 1e-14);
        let v: serde_json::Value =
            serde_json::from_str(r#"{"kind":"pow","arg":{"kind":"t"},"num":3,"den":2}"#).unwrap();
        let f = SmoothFn::from_json(&v).unwrap();
        assert!((f.eval(4.0).unwrap() - 8.0).abs() < 1e-14);
        assert!(SmoothFn::from_json(&serde_json::json!({"kind":"nope"})).is_err());
    }

    #[test]
    fn jet_linearity_exact() {
        let f = SmoothFn::exp(SmoothFn::t());
        let g = SmoothFn::pow(SmoothFn::t(), 2, 1).unwrap();
        let sum = SmoothFn::add(vec![f.clone(), g.clone()]);
        for &t in &[0.1, 1.0, 3.0] {
            let (jf, jg, js) = (
                f.eval_jet2(t).unwrap(),
                g.eval_jet2(t).unwrap(),
                sum.eval_jet2(t).unwrap(),
            );
            assert_eq!(js.value, jf.value + jg.value);
            assert_eq!(js.d1, jf.d1 + jg.d1);
            assert_eq!(js.d2, jf.d2 + jg.d2);
        }
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn leaf() -> impl Strategy<Value = SmoothFn> {
        prop_oneof![
            (-3.0..3.0f64).prop_map(SmoothFn::constant),
            Just(SmoothFn::t()),
            (0.5..3.0f64).prop_map(|eta| SmoothFn::bump(eta).unwrap()),
        ]
    }

    /// Random expression trees kept inside a numerically tame envelope:
    /// arguments of exp are damped and inverses are shifted away from zero.
    fn expr() -> impl Strategy<Value = SmoothFn> {
        leaf().prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(SmoothFn::add),
                prop::collection::vec(inner.clone(), 2..3).prop_map(SmoothFn::mul),
                inner.clone().prop_map(SmoothFn::neg),
                inner.clone().prop_map(|f| SmoothFn::inv(SmoothFn::add(vec![
                    SmoothFn::constant(3.0),
                    SmoothFn::mul(vec![f, f_damp()])
                ]))),
                inner
                    .clone()
                    .prop_map(|f| SmoothFn::exp(SmoothFn::mul(vec![SmoothFn::constant(0.1), f]))),
                inner.clone().prop_map(|f| SmoothFn::log(SmoothFn::add(vec![
                    SmoothFn::constant(4.0),
                    SmoothFn::mul(vec![f, f_damp()])
                ]))),
                (inner, 1i64..4, 1i64..3).prop_map(|(f, n, d)| SmoothFn::pow(
                    SmoothFn::add(vec![
                        SmoothFn::constant(2.0),
                        SmoothFn::mul(vec![f, f_damp()])
                    ]),
                    n,
                    d
                )
                .unwrap()),
            ]
        })
    }

    fn f_damp() -> SmoothFn {
        // squashes any subtree into (0, 1]: 1 / (1 + 0.01 f^2)
        SmoothFn::constant(0.25)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// Jets agree with Richardson-extrapolated central differences, to
        /// a tolerance calibrated by the extrapolation's own convergence.
        #[test]
        fn jets_match_finite_differences(f in expr(), t in 0.2f64..4.0) {
            let j = match f.eval_jet2(t) { Ok(j) => j, Err(_) => return Ok(()) };
            if !j.value.is_finite() || j.value.abs() > 1e4 { return Ok(()); }
            // step tuned to the scale of t
            let h = 1e-3 * (1.0 + t);
            let ok = (f.eval(t + h).is_ok()) && (f.eval(t - h).is_ok());
            prop_assume!(ok && t - h > 0.0);
            let (d1, d2, e1, e2) = tests::fd_jet_est(&f, t, h);
            let scale1 = 1.0 + j.d1.abs().max(d1.abs());
            prop_assert!((j.d1 - d1).abs() <= 1e-6 * scale1 + 8.0 * e1,
                "d1 mismatch at t={}: jet {} vs fd {} (est {})", t, j.d1, d1, e1);
            let scale2 = 1.0 + j.d2.abs().max(d2.abs());
            prop_assert!((j.d2 - d2).abs() <= 1e-6 * scale2 + 8.0 * e2,
                "d2 mismatch at t={}: jet {} vs fd {} (est {})", t, j.d2, d2, e2);
        }

        /// Product rule holds exactly at the jet level.
        #[test]
        fn leibniz_exact(f in expr(), g in expr(), t in 0.2f64..4.0) {
            let (jf, jg) = match (f.eval_jet2(t), g.eval_jet2(t)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return Ok(()),
            };
            let prod = SmoothFn::mul(vec![f, g]);
            let jp = prod.eval_jet2(t).unwrap();
            let d1 = jf.d1 * jg.value + jf.value * jg.d1;
            let d2 = jf.d2 * jg.value + 2.0 * jf.d1 * jg.d1 + jf.value * jg.d2;
            let s = 1.0 + d1.abs() + d2.abs() + jp.value.abs();
            prop_assert!((jp.d1 - d1).abs() <= 1e-12 * s);
            prop_assert!((jp.d2 - d2).abs() <= 1e-12 * s);
        }

        /// Second-order chain rule (Faà di Bruno) through exp.
        #[test]
        fn chain_rule_through_exp(f in expr(), t in 0.2f64..4.0) {
            let jf = match f.eval_jet2(t) { Ok(j) => j, Err(_) => return Ok(()) };
            prop_assume!(jf.value.abs() < 30.0);
            let e = SmoothFn::exp(f);
            let je = e.eval_jet2(t).unwrap();
            let v = jf.value.exp();
            let s = 1.0 + v.abs() * (1.0 + jf.d1.abs() + jf.d2.abs()).powi(2);
            prop_assert!((je.d1 - v * jf.d1).abs() <= 1e-12 * s);
            prop_assert!((je.d2 - v * (jf.d2 + jf.d1 * jf.d1)).abs() <= 1e-12 * s);
        }
    }
}
