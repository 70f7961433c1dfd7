//! Metrics on the tangent bundle determined by six scalar functions, their
//! classification, and the scalars entering the Levi-Civita connection of
//! the bundle metric.
//!
//! A metric here is the data `(alpha1, alpha2, alpha3, beta1, beta2, beta3)`
//! of functions of the squared fiber norm. The bundle connection is encoded
//! by six fiberwise tensors `A..F` of type (1,2); on a fixed tangent space
//! each is a combination of curvature terms and metric terms with scalar
//! coefficients `A1..A5, B1..B6, C1..C6, D1..D6, E1..E3, F1..F3` evaluated
//! at the squared norm. Those scalars, and their first derivatives, are
//! computed here with exact jet arithmetic.

use crate::scalarfn::{Jet2, ScalarError, SmoothFn};
use serde::{Deserialize, Serialize};

/// Errors from metric-level computations.
#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("degenerate metric at t = {t}: {quantity} = {value}")]
    Degenerate {
        quantity: &'static str,
        t: f64,
        value: f64,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0}")]
    Invalid(String),
}

pub type MetricResult<T> = Result<T, MetricError>;

/// Which special family a metric was constructed as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    Generic,
    Sasaki,
    KaluzaKlein,
    KaluzaKleinType,
    Section4Lambda,
}

/// A metric on the tangent bundle given by six functions of the squared
/// fiber norm.
#[derive(Debug, Clone)]
pub struct GNaturalMetric {
    pub alpha1: SmoothFn,
    pub alpha2: SmoothFn,
    pub alpha3: SmoothFn,
    pub beta1: SmoothFn,
    pub beta2: SmoothFn,
    pub beta3: SmoothFn,
    pub family: FamilyTag,
}

impl GNaturalMetric {
    pub fn explicit(
        alpha1: SmoothFn,
        alpha2: SmoothFn,
        alpha3: SmoothFn,
        beta1: SmoothFn,
        beta2: SmoothFn,
        beta3: SmoothFn,
    ) -> Self {
        GNaturalMetric {
            alpha1,
            alpha2,
            alpha3,
            beta1,
            beta2,
            beta3,
            family: FamilyTag::Generic,
        }
    }

    /// `alpha1 = 1`, everything else zero.
    pub fn sasaki() -> Self {
        let zero = || SmoothFn::constant(0.0);
        GNaturalMetric {
            alpha1: SmoothFn::constant(1.0),
            alpha2: zero(),
            alpha3: zero(),
            beta1: zero(),
            beta2: zero(),
            beta3: zero(),
            family: FamilyTag::Sasaki,
        }
    }

    /// Horizontal/vertical orthogonal with `beta1 + beta3 = 0`.
    pub fn kaluza_klein(alpha1: SmoothFn, alpha3: SmoothFn, beta1: SmoothFn) -> Self {
        let zero = || SmoothFn::constant(0.0);
        GNaturalMetric {
            alpha1,
            alpha2: zero(),
            alpha3,
            beta1: beta1.clone(),
            beta2: zero(),
            beta3: SmoothFn::neg(beta1),
            family: FamilyTag::KaluzaKlein,
        }
    }

    /// Horizontal/vertical orthogonal (`alpha2 = beta2 = 0`) without the
    /// Kaluza-Klein trace condition.
    pub fn kaluza_klein_type(
        alpha1: SmoothFn,
        alpha3: SmoothFn,
        beta1: SmoothFn,
        beta3: SmoothFn,
    ) -> Self {
        let zero = || SmoothFn::constant(0.0);
        GNaturalMetric {
            alpha1,
            alpha2: zero(),
            alpha3,
            beta1,
            beta2: zero(),
            beta3,
            family: FamilyTag::KaluzaKleinType,
        }
    }

    /// Parse the metric JSON schema. Accepted shapes:
    /// `{"family":"sasaki"}`,
    /// `{"family":"kaluza_klein","alpha1":E,"alpha3":E,"beta1":E}`,
    /// `{"family":"lambda","lambda":E,"K":x,"eta":x,"m":n}`,
    /// or fully explicit `{"alpha1":E,...,"beta3":E}`.
    pub fn from_json(v: &serde_json::Value) -> MetricResult<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| MetricError::Invalid("metric config must be an object".into()))?;
        let expr = |key: &str| -> MetricResult<SmoothFn> {
            let e = obj
                .get(key)
                .ok_or_else(|| MetricError::Invalid(format!("missing field `{key}`")))?;
            Ok(SmoothFn::from_json(e)?)
        };
        match obj.get("family").and_then(|f| f.as_str()) {
            Some("sasaki") => Ok(GNaturalMetric::sasaki()),
            Some("kaluza_klein") => Ok(GNaturalMetric::kaluza_klein(
                expr("alpha1")?,
                expr("alpha3")?,
                expr("beta1")?,
            )),
            Some("kaluza_klein_type") => Ok(GNaturalMetric::kaluza_klein_type(
                expr("alpha1")?,
                expr("alpha3")?,
                expr("beta1")?,
                expr("beta3")?,
            )),
            Some("lambda") => {
                let num = |key: &str| -> MetricResult<f64> {
                    obj.get(key)
                        .and_then(|x| x.as_f64())
                        .ok_or_else(|| MetricError::Invalid(format!("missing number `{key}`")))
                };
                let m = obj
                    .get("m")
                    .and_then(|x| x.as_u64())
                    .ok_or_else(|| MetricError::Invalid("missing integer `m`".into()))?;
                let fam = crate::tm::LambdaFamily::build(
                    expr("lambda")?,
                    num("K")?,
                    num("eta")?,
                    m as usize,
                )
                .map_err(|e| MetricError::Invalid(e.to_string()))?;
                Ok(fam.metric())
            }
            Some(other) => Err(MetricError::Invalid(format!("unknown family `{other}`"))),
            None => Ok(GNaturalMetric::explicit(
                expr("alpha1")?,
                expr("alpha2")?,
                expr("alpha3")?,
                expr("beta1")?,
                expr("beta2")?,
                expr("beta3")?,
            )),
        }
    }
}

// ---------------------------------------------------------------------------
// Derived quantities
// ---------------------------------------------------------------------------

fn jadd(a: Jet2, b: Jet2) -> Jet2 {
    Jet2::new(a.value + b.value, a.d1 + b.d1, a.d2 + b.d2)
}

fn jsub(a: Jet2, b: Jet2) -> Jet2 {
    Jet2::new(a.value - b.value, a.d1 - b.d1, a.d2 - b.d2)
}

fn jmul(a: Jet2, b: Jet2) -> Jet2 {
    Jet2::new(
        a.value * b.value,
        a.d1 * b.value + a.value * b.d1,
        a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2,
    )
}

/// Jets at `t` of the six base functions and the derived scalars.
#[derive(Debug, Clone, Copy)]
pub struct MetricJets {
    pub t: f64,
    pub a1: Jet2,
    pub a2: Jet2,
    pub a3: Jet2,
    pub b1: Jet2,
    pub b2: Jet2,
    pub b3: Jet2,
    pub phi1: Jet2,
    pub phi2: Jet2,
    pub phi3: Jet2,
    /// `alpha = alpha1 (alpha1 + alpha3) - alpha2^2`
    pub alpha: Jet2,
    /// `phi = phi1 (phi1 + phi3) - phi2^2`
    pub phi: Jet2,
}

impl GNaturalMetric {
    /// Evaluate all base and derived jets at `t`.
    pub fn jets(&self, t: f64) -> MetricResult<MetricJets> {
        let tj = Jet2::new(t, 1.0, 0.0);
        let a1 = self.alpha1.eval_jet2(t)?;
        let a2 = self.alpha2.eval_jet2(t)?;
        let a3 = self.alpha3.eval_jet2(t)?;
        let b1 = self.beta1.eval_jet2(t)?;
        let b2 = self.beta2.eval_jet2(t)?;
        let b3 = self.beta3.eval_jet2(t)?;
        let phi1 = jadd(a1, jmul(tj, b1));
        let phi2 = jadd(a2, jmul(tj, b2));
        let phi3 = jadd(a3, jmul(tj, b3));
        let alpha = jsub(jmul(a1, jadd(a1, a3)), jmul(a2, a2));
        let phi = jsub(jmul(phi1, jadd(phi1, phi3)), jmul(phi2, phi2));
        Ok(MetricJets {
            t,
            a1,
            a2,
            a3,
            b1,
            b2,
            b3,
            phi1,
            phi2,
            phi3,
            alpha,
            phi,
        })
    }
}

/// The five derived jets `(phi1, phi2, phi3, alpha, phi)` at `t`.
pub fn derived_quantities(
    metric: &GNaturalMetric,
    t: f64,
) -> MetricResult<(Jet2, Jet2, Jet2, Jet2, Jet2)> {
    let j = metric.jets(t)?;
    Ok((j.phi1, j.phi2, j.phi3, j.alpha, j.phi))
}

// ---------------------------------------------------------------------------
// Classification on a sample grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridStatus {
    Verified,
    Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub t: f64,
    pub quantity: String,
    pub value: f64,
}

/// Grid certificate for the non-degeneracy / Riemannian conditions.
#[derive(Debug, Clone, Serialize)]
pub struct MetricClassification {
    pub nondegenerate_on_grid: GridStatus,
    pub riemannian_on_grid: GridStatus,
    pub violations: Vec<Violation>,
}

/// Check `alpha != 0, phi != 0` (non-degeneracy) and
/// `alpha1 > 0, phi1 > 0, alpha > 0, phi > 0` (Riemannian signature) on a
/// uniform grid. Sign changes between adjacent samples count as violations;
/// the verdict is a statement about the grid, not the whole half-line.
pub fn classify(
    metric: &GNaturalMetric,
    interval: (f64, f64),
    samples: usize,
) -> MetricResult<MetricClassification> {
    let (t0, t1) = interval;
    if !(t0 >= 0.0 && t1 > t0) || samples < 2 {
        return Err(MetricError::Invalid(
            "need 0 <= t_min < t_max and samples >= 2".into(),
        ));
    }
    let mut violations = Vec::new();
    let mut grid = Vec::with_capacity(samples);
    for i in 0..samples {
        let t = t0 + (t1 - t0) * i as f64 / (samples - 1) as f64;
        let j = metric.jets(t)?;
        grid.push((t, j));
    }

    let tol = |x: f64| 1e-12 * (1.0 + x.abs());
    let mut nondeg = GridStatus::Verified;
    let mut riem = GridStatus::Verified;

    // non-degeneracy: alpha and phi keep a constant nonzero sign
    for (name, get) in [
        (
            "alpha",
            (|j: &MetricJets| j.alpha.value) as fn(&MetricJets) -> f64,
        ),
        ("phi", |j: &MetricJets| j.phi.value),
    ] {
        let mut first: Option<Violation> = None;
        for w in grid.windows(2) {
            let (ta, va) = (w[0].0, get(&w[0].1));
            let (tb, vb) = (w[1].0, get(&w[1].1));
            if va.abs() <= tol(va) {
                first = Some(Violation {
                    t: ta,
                    quantity: name.into(),
                    value: va,
                });
                break;
            }
            if va.signum() != vb.signum() && vb.abs() > tol(vb) {
                first = Some(Violation {
                    t: 0.5 * (ta + tb),
                    quantity: format!("{name} sign change"),
                    value: vb,
                });
                break;
            }
        }
        if first.is_none() {
            let (t, j) = grid.last().unwrap();
            let v = get(j);
            if v.abs() <= tol(v) {
                first = Some(Violation {
                    t: *t,
                    quantity: name.into(),
                    value: v,
                });
            }
        }
        if let Some(v) = first {
            nondeg = GridStatus::Violated;
            violations.push(v);
        }
    }

    // Riemannian: four strict positivity conditions
    for (name, get) in [
        (
            "alpha1",
            (|j: &MetricJets| j.a1.value) as fn(&MetricJets) -> f64,
        ),
        ("phi1", |j: &MetricJets| j.phi1.value),
        ("alpha", |j: &MetricJets| j.alpha.value),
        ("phi", |j: &MetricJets| j.phi.value),
    ] {
        for (t, j) in &grid {
            let v = get(j);
            if v <= tol(v) {
                riem = GridStatus::Violated;
                violations.push(Violation {
                    t: *t,
                    quantity: format!("{name} not positive"),
                    value: v,
                });
                break;
            }
        }
    }

    Ok(MetricClassification {
        nondegenerate_on_grid: nondeg,
        riemannian_on_grid: riem,
        violations,
    })
}

// ---------------------------------------------------------------------------
// Connection coefficients
// ---------------------------------------------------------------------------

/// First-order dual number: value and derivative in `t`. Used to carry the
/// connection scalars together with their `t`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    pub fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }
    pub fn constant(v: f64) -> Self {
        Dual { v, d: 0.0 }
    }
    /// Value part of a jet, paired with its derivative.
    fn of(j: Jet2) -> Self {
        Dual {
            v: j.value,
            d: j.d1,
        }
    }
    /// Derivative part of a jet, paired with the second derivative.
    fn of_d(j: Jet2) -> Self {
        Dual { v: j.d1, d: j.d2 }
    }
}

impl std::ops::Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.v + o.v, self.d + o.d)
    }
}
impl std::ops::Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.v - o.v, self.d - o.d)
    }
}
impl std::ops::Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.v * o.v, self.d * o.v + self.v * o.d)
    }
}
impl std::ops::Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        Dual::new(self.v / o.v, (self.d * o.v - self.v * o.d) / (o.v * o.v))
    }
}
impl std::ops::Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.v, -self.d)
    }
}
impl std::ops::Mul<f64> for Dual {
    type Output = Dual;
    fn mul(self, k: f64) -> Dual {
        Dual::new(self.v * k, self.d * k)
    }
}

/// The 26 connection scalars at a fixed squared norm, each with its first
/// `t`-derivative.
#[derive(Debug, Clone)]
pub struct ConnectionCoeffJets {
    pub rho: f64,
    /// `A1..A5`
    pub a: [Dual; 5],
    /// `B1..B6` (`B2` included, see below)
    pub b: [Dual; 6],
    /// `C1..C6`
    pub c: [Dual; 6],
    /// `D1..D6`
    pub d: [Dual; 6],
    /// `E1..E3`
    pub e: [Dual; 3],
    /// `F1..F3`
    pub f: [Dual; 3],
}

/// Values only, at a fixed squared norm.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectionCoeffs {
    pub rho: f64,
    pub a: [f64; 5],
    pub b: [f64; 6],
    pub c: [f64; 6],
    pub d: [f64; 6],
    pub e: [f64; 3],
    pub f: [f64; 3],
}

impl ConnectionCoeffJets {
    pub fn values(&self) -> ConnectionCoeffs {
        ConnectionCoeffs {
            rho: self.rho,
            a: self.a.map(|x| x.v),
            b: self.b.map(|x| x.v),
            c: self.c.map(|x| x.v),
            d: self.d.map(|x| x.v),
            e: self.e.map(|x| x.v),
            f: self.f.map(|x| x.v),
        }
    }
}

/// Compute all 26 scalars, with first derivatives, at `t = rho`.
///
/// Two departures from the published coefficient lists, both validated by
/// the flat finite-difference oracle:
///
/// * `B2` does not appear in the published list even though the
///   corresponding curvature term does; the value used here,
///   `B2 = -alpha1 (alpha1 + alpha3) / (2 alpha)`, comes from the wider
///   literature on these metrics and reduces to the classical `-1/2` in the
///   canonical case.
/// * `C2` and `D2` are printed with the opposite sign; differentiating the
///   explicit flat-chart metric gives `C2 = +alpha1 (beta1+beta3)/(2 alpha)`
///   and `D2 = -alpha2 (beta1+beta3)/(2 alpha)`.
pub fn connection_coeff_jets(
    metric: &GNaturalMetric,
    rho: f64,
) -> MetricResult<ConnectionCoeffJets> {
    let j = metric.jets(rho)?;
    if j.alpha.value == 0.0 || !j.alpha.value.is_finite() {
        return Err(MetricError::Degenerate {
            quantity: "alpha",
            t: rho,
            value: j.alpha.value,
        });
    }
    if j.phi.value == 0.0 || !j.phi.value.is_finite() {
        return Err(MetricError::Degenerate {
            quantity: "phi",
            t: rho,
            value: j.phi.value,
        });
    }

    let al1 = Dual::of(j.a1);
    let al2 = Dual::of(j.a2);
    let al3 = Dual::of(j.a3);
    let be1 = Dual::of(j.b1);
    let be2 = Dual::of(j.b2);
    let be3 = Dual::of(j.b3);
    let dal1 = Dual::of_d(j.a1);
    let dal2 = Dual::of_d(j.a2);
    let dbe1 = Dual::of_d(j.b1);
    let dbe2 = Dual::of_d(j.b2);
    let ph1 = Dual::of(j.phi1);
    let ph2 = Dual::of(j.phi2);
    let ph3 = Dual::of(j.phi3);
    let alpha = Dual::of(j.alpha);
    let phi = Dual::of(j.phi);

    let w13 = al1 + al3; // alpha1 + alpha3
    let dw13 = dal1 + Dual::of_d(j.a3); // (alpha1 + alpha3)'
    let s13 = be1 + be3; // beta1 + beta3
    let ds13 = dbe1 + Dual::of_d(j.b3); // (beta1 + beta3)'
    let p13 = ph1 + ph3; // phi1 + phi3
    let half = Dual::constant(0.5);
    let two = Dual::constant(2.0);

    let a1c = -(al1 * al2) / (alpha * 2.0);
    let a2c = al2 * s13 / (alpha * 2.0);
    let a3c = al2 * (al1 * (ph1 * s13 - ph2 * be2) + al2 * (be1 * al2 - be2 * al1)) / (alpha * phi);
    let a4c = ph2 * dw13 / phi;
    let a5c = (alpha * ph2 * ds13
        + s13 * (al2 * (ph2 * be2 - ph1 * s13) + w13 * (al1 * be2 - al2 * be1)))
        / (alpha * phi);

    let b1c = al2 * al2 / alpha;
    let b2c = -(al1 * w13) / (alpha * 2.0);
    let b3c = -(w13 * s13) / (alpha * 2.0);
    let b4c = al2 * (al2 * (ph2 * be2 - ph1 * s13) + w13 * (be2 * al1 - be1 * al2)) / (alpha * phi);
    let b5c = -(p13 * dw13) / phi;
    let b6c = (-(alpha * p13 * ds13)
        + s13 * (w13 * (p13 * be1 - ph2 * be2) + al2 * (al2 * s13 - w13 * be2)))
        / (alpha * phi);

    let c1c = -(al1 * al1) / (alpha * 2.0);
    // Printed with the opposite sign in the reference list; the flat
    // finite-difference oracle fixes the sign (see the companion D2).
    let c2c = al1 * s13 / (alpha * 2.0);
    let c3c = (al1 * dw13 - al2 * (dal2 - be2 * half)) / alpha;
    let c4c =
        al1 * (al2 * (al2 * be1 - al1 * be2) + al1 * (ph1 * s13 - ph2 * be2)) / (alpha * phi * 2.0);
    let c5c = (ph1 * s13 + ph2 * (two * dal2 - be2)) / (phi * 2.0);
    let c6c = (alpha * ph1 * ds13
        + (al2 * (al1 * be2 - al2 * be1) + al1 * (ph2 * be2 - s13 * ph1)) * (dw13 + s13 * half)
        + (al2 * (be1 * p13 - be2 * ph2) - al1 * (be2 * w13 - al2 * s13)) * (dal2 - be2 * half))
        / (alpha * phi);

    let d1c = al1 * al2 / (alpha * 2.0);
    // Sign corrected against the oracle, as for C2.
    let d2c = -(al2 * s13) / (alpha * 2.0);
    let d3c = (-(al2 * dw13) + w13 * (dal2 - be2 * half)) / alpha;
    let d4c =
        al1 * (w13 * (al1 * be2 - al2 * be1) + al2 * (ph2 * be2 - ph1 * s13)) / (alpha * phi * 2.0);
    let d5c = -(ph2 * s13 + p13 * (two * dal2 - be2)) / (phi * 2.0);
    let d6c = (-(alpha * ph2 * ds13)
        + (w13 * (al2 * be1 - al1 * be2) + al2 * (ph1 * s13 - ph2 * be2)) * (dw13 + s13 * half)
        + (w13 * (be2 * ph2 - be1 * p13) + al2 * (be2 * w13 - al2 * s13)) * (dal2 - be2 * half))
        / (alpha * phi);

    let e1c = (al1 * (dal2 + be2 * half) - al2 * dal1) / alpha;
    let e2c = (ph1 * be2 - ph2 * (be1 - dal1)) / phi;
    let e3c = (alpha * (two * ph1 * dbe2 - ph2 * dbe1)
        + (dal1 * (al1 * (al2 * s13 - be2 * w13) + al2 * (be1 * p13 - be2 * ph2))) * 2.0
        + (two * dal2 + be2) * (al1 * (ph2 * be2 - ph1 * s13) + al2 * (al1 * be2 - al2 * be1)))
        / (alpha * phi);

    let f1c = (-(al2 * (dal2 + be2 * half)) + w13 * dal1) / alpha;
    let f2c = (p13 * (be1 - dal1) - ph2 * be2) / phi;
    let f3c = (alpha * (p13 * dbe1 - two * ph2 * dbe2)
        + (dal1 * (al2 * (be2 * w13 - al2 * s13) + w13 * (be2 * ph2 - be1 * p13))) * 2.0
        + (two * dal2 + be2) * (al2 * (ph1 * s13 - ph2 * be2) + w13 * (al2 * be1 - al1 * be2)))
        / (alpha * phi);

    let coeffs = ConnectionCoeffJets {
        rho,
        a: [a1c, a2c, a3c, a4c, a5c],
        b: [b1c, b2c, b3c, b4c, b5c, b6c],
        c: [c1c, c2c, c3c, c4c, c5c, c6c],
        d: [d1c, d2c, d3c, d4c, d5c, d6c],
        e: [e1c, e2c, e3c],
        f: [f1c, f2c, f3c],
    };
    for d in coeffs
        .a
        .iter()
        .chain(&coeffs.b)
        .chain(&coeffs.c)
        .chain(&coeffs.d)
        .chain(&coeffs.e)
        .chain(&coeffs.f)
    {
        if !d.v.is_finite() {
            return Err(MetricError::Degenerate {
                quantity: "coefficient",
                t: rho,
                value: d.v,
            });
        }
    }
    Ok(coeffs)
}

/// Values of the 26 scalars at `t = rho`.
pub fn connection_coeffs(metric: &GNaturalMetric, rho: f64) -> MetricResult<ConnectionCoeffs> {
    Ok(connection_coeff_jets(metric, rho)?.values())
}

// ---------------------------------------------------------------------------
// Fiberwise tensor evaluation
// ---------------------------------------------------------------------------

/// Curvature data of the base at a point: `R(X,Y)Z` in a fixed orthonormal
/// basis. The metric on that basis is Euclidean.
pub trait CurvatureOracle {
    fn curvature(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64>;
}

/// Flat base: curvature is identically zero.
pub struct FlatCurvature;

impl CurvatureOracle for FlatCurvature {
    fn curvature(&self, x: &[f64], _y: &[f64], _z: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FKind {
    A,
    B,
    C,
    D,
    E,
    F,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(acc: &mut [f64], k: f64, v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += k * x;
    }
}

/// Evaluate one of the six fiberwise tensors at `(u; X, Y)`.
pub fn f_tensor_eval(
    kind: FKind,
    coeffs: &ConnectionCoeffs,
    u: &[f64],
    x: &[f64],
    y: &[f64],
    curv: &dyn CurvatureOracle,
) -> MetricResult<Vec<f64>> {
    let n = u.len();
    if x.len() != n || y.len() != n {
        return Err(MetricError::Dimension(format!(
            "u, X, Y must share a tangent space; got {}, {}, {}",
            n,
            x.len(),
            y.len()
        )));
    }
    let gxu = dot(x, u);
    let gyu = dot(y, u);
    let gxy = dot(x, y);
    let mut out = vec![0.0; n];
    match kind {
        FKind::A => {
            let [a1, a2, a3, a4, a5] = coeffs.a;
            let rxuy = curv.curvature(x, u, y);
            let ryux = curv.curvature(y, u, x);
            axpy(&mut out, a1, &rxuy);
            axpy(&mut out, a1, &ryux);
            axpy(&mut out, a2 * gyu, x);
            axpy(&mut out, a2 * gxu, y);
            axpy(&mut out, a3 * dot(&rxuy, u) + a4 * gxy + a5 * gxu * gyu, u);
        }
        FKind::B => {
            let [b1, b2, b3, b4, b5, b6] = coeffs.b;
            let rxuy = curv.curvature(x, u, y);
            let rxyu = curv.curvature(x, y, u);
            axpy(&mut out, b1, &rxuy);
            axpy(&mut out, b2, &rxyu);
            axpy(&mut out, b3 * gyu, x);
            axpy(&mut out, b3 * gxu, y);
            axpy(&mut out, b4 * dot(&rxuy, u) + b5 * gxy + b6 * gxu * gyu, u);
        }
        FKind::C | FKind::D => {
            let q = if kind == FKind::C { coeffs.c } else { coeffs.d };
            let [q1, q2, q3, q4, q5, q6] = q;
            let ryux = curv.curvature(y, u, x);
            let rxuy = curv.curvature(x, u, y);
            axpy(&mut out, q1, &ryux);
            axpy(&mut out, q2 * gxu, y);
            axpy(&mut out, q3 * gyu, x);
            axpy(&mut out, q4 * dot(&rxuy, u) + q5 * gxy + q6 * gxu * gyu, u);
        }
        FKind::E | FKind::F => {
            let q = if kind == FKind::E { coeffs.e } else { coeffs.f };
            let [q1, q2, q3] = q;
            axpy(&mut out, q1 * gyu, x);
            axpy(&mut out, q1 * gxu, y);
            axpy(&mut out, q2 * gxy + q3 * gxu * gyu, u);
        }
    }
    Ok(out)
}

/// Fiber derivative of a tensor of the reduced form
/// `P(u;X,Y) = f3 g(Y,u)X + f4 g(X,u)Y + f5 g(X,Y)u + f6 g(X,u)g(Y,u)u`
/// in the direction `Z`, given `(f_i, f_i')` at `|u|^2`.
///
/// Differentiating the explicit `u` factors contributes `f5 g(X,Y) Z` and
/// `f6 g(X,u)g(Y,u) Z`; the reference display for this rule omits the
/// latter, but the finite-difference check pins it down.
pub fn d_p_eval_values(
    f: &[Dual; 4],
    u: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> MetricResult<Vec<f64>> {
    let n = u.len();
    if x.len() != n || y.len() != n || z.len() != n {
        return Err(MetricError::Dimension(
            "d_P arguments must share a tangent space".into(),
        ));
    }
    let (f3, f4, f5, f6) = (f[0], f[1], f[2], f[3]);
    let gxu = dot(x, u);
    let gyu = dot(y, u);
    let gxy = dot(x, y);
    let gxz = dot(x, z);
    let gyz = dot(y, z);
    let gzu = dot(z, u);
    let mut out = vec![0.0; n];
    axpy(&mut out, f3.v * gyz + 2.0 * f3.d * gyu * gzu, x);
    axpy(&mut out, f4.v * gxz + 2.0 * f4.d * gxu * gzu, y);
    axpy(&mut out, f5.v * gxy + f6.v * gxu * gyu, z);
    axpy(
        &mut out,
        f6.v * (gxz * gyu + gyz * gxu) + 2.0 * f5.d * gxy * gzu + 2.0 * f6.d * gxu * gyu * gzu,
        u,
    );
    Ok(out)
}

/// Same as [`d_p_eval_values`] with the coefficient quadruple given as
/// functions; jets are taken at `|u|^2`.
pub fn d_p_eval(
    p_form: &[SmoothFn; 4],
    u: &[f64],
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> MetricResult<Vec<f64>> {
    let rho = dot(u, u);
    let mut duals = [Dual::constant(0.0); 4];
    for (dst, f) in duals.iter_mut().zip(p_form) {
        let j = f.eval_jet2(rho)?;
        *dst = Dual::new(j.value, j.d1);
    }
    d_p_eval_values(&duals, u, x, y, z)
}
