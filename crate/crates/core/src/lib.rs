//! Geometry engine for pseudo-Riemannian bundle metrics on tangent and unit
//! tangent bundles: exact-jet scalar calculus, connection coefficients,
//! tension and bitension of parallel vector fields with independent
//! finite-difference verification, homogeneous frame models, and the
//! biharmonicity analysis of unit fields.

pub mod flat_oracle;
pub mod frame_models;
pub mod gnatural;
pub mod report;
pub mod scalarfn;
pub mod t1m;
pub mod tm;

pub use gnatural::{GNaturalMetric, MetricError};
pub use scalarfn::{Jet2, SmoothFn};

/// Shared metric corpus used by the oracle-agreement suites: one canonical
/// metric, two with orthogonal distributions and the trace condition, two
/// orthogonal-distribution metrics without it, two profile-family metrics
/// (these depend on the base dimension), and one fully generic metric with
/// all six functions active.
#[doc(hidden)]
pub mod test_corpus {
    use crate::gnatural::GNaturalMetric;
    use crate::scalarfn::SmoothFn;
    use crate::tm::LambdaFamily;

    pub fn corpus(dim: usize) -> Vec<(String, GNaturalMetric)> {
        let t = SmoothFn::t;
        let c = SmoothFn::constant;
        let mut out = Vec::new();

        out.push(("sasaki".to_string(), GNaturalMetric::sasaki()));

        // orthogonal distributions, trace condition identically: exponential
        // horizontal profile
        {
            let alpha1 = c(1.0);
            let w = SmoothFn::exp(t().scaled(0.3));
            let alpha3 = SmoothFn::add(vec![w, SmoothFn::neg(alpha1.clone())]);
            out.push((
                "kk_exponential".to_string(),
                GNaturalMetric::kaluza_klein(alpha1, alpha3, c(0.0)),
            ));
        }
        // the distinguished-norm example metric
        {
            let r0 = 1.0;
            let e = std::f64::consts::E;
            let alpha1 = SmoothFn::exp(t().scaled(1.0 / r0));
            let beta1 = SmoothFn::add(vec![
                alpha1.clone().scaled(r0),
                SmoothFn::neg(t().scaled(e)),
            ]);
            let w = SmoothFn::add(vec![alpha1.clone(), c(1.0)]);
            let alpha3 = SmoothFn::add(vec![w, SmoothFn::neg(alpha1.clone())]);
            out.push((
                "kk_distinguished_norm".to_string(),
                GNaturalMetric::kaluza_klein(alpha1, alpha3, beta1),
            ));
        }
        // orthogonal distributions without the trace condition
        {
            let alpha1 = c(1.0);
            let alpha3 = SmoothFn::add(vec![c(0.0), t().scaled(0.5)]);
            out.push((
                "kk_type_linear".to_string(),
                GNaturalMetric::kaluza_klein_type(alpha1, alpha3, c(0.2), c(0.1)),
            ));
        }
        {
            let alpha1 = SmoothFn::exp(t().scaled(0.2));
            let alpha3 = SmoothFn::add(vec![
                c(2.0),
                SmoothFn::pow(t(), 2, 1).unwrap(),
                SmoothFn::neg(alpha1.clone()),
            ]);
            let beta1 = t().scaled(0.1);
            let beta3 = SmoothFn::add(vec![
                t().scaled(-0.1),
                SmoothFn::pow(t(), 2, 1).unwrap().scaled(0.05),
            ]);
            out.push((
                "kk_type_quadratic".to_string(),
                GNaturalMetric::kaluza_klein_type(alpha1, alpha3, beta1, beta3),
            ));
        }
        // profile family members (depend on the base dimension)
        {
            let fam = LambdaFamily::build(t(), 1.0, 1.0, dim).unwrap();
            out.push(("lambda_linear".to_string(), fam.metric()));
            let lam = SmoothFn::mul(vec![t(), SmoothFn::exp(t().scaled(0.5))]);
            let fam = LambdaFamily::build(lam, 1.0, 1.0, dim).unwrap();
            out.push(("lambda_exponential".to_string(), fam.metric()));
        }
        // fully generic: all six functions active, kept safely non-degenerate
        // on (0, 5]
        {
            out.push((
                "generic_full".to_string(),
                GNaturalMetric::explicit(
                    SmoothFn::add(vec![c(2.0), t().scaled(0.1)]),
                    SmoothFn::add(vec![c(0.3), t().scaled(0.05)]),
                    SmoothFn::add(vec![c(1.0), t().scaled(0.2)]),
                    c(0.1),
                    SmoothFn::add(vec![c(0.07), t().scaled(0.01)]),
                    t().scaled(-0.02),
                ),
            ));
        }
        out
    }
}
