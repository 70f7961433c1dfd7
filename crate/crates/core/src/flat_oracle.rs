//! Finite-difference verification on the flat chart.
//!
//! For a flat base the tangent bundle is a chart `R^{2m}` with coordinates
//! `(x^1..x^m, u^1..u^m)`, the horizontal lift of a coordinate field is the
//! same coordinate field, and the bundle metric is an explicit block matrix.
//! Differentiating that matrix numerically gives Christoffel symbols and the
//! curvature tensor, from which the tension and bitension of the constant
//! section `x -> (x, v0)` follow directly from their definitions. Nothing in
//! this module shares code with the closed-form coefficient path, so the two
//! can check each other.

use crate::gnatural::{GNaturalMetric, MetricError, MetricResult};

/// Chart data: dimension of the base and the metric functions.
pub struct FlatChart<'a> {
    pub dim: usize,
    pub metric: &'a GNaturalMetric,
}

/// Finite-difference configuration.
#[derive(Debug, Clone, Copy)]
pub struct FdConfig {
    /// Base step; scaled internally by `(1 + |u|)`.
    pub step: f64,
    /// Richardson extrapolation levels on the final bitension (>= 1 means
    /// one halving-and-combining pass).
    pub richardson_levels: usize,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: 1e-3,
            richardson_levels: 1,
        }
    }
}

/// Result of one finite-difference bitension evaluation.
#[derive(Debug, Clone)]
pub struct FdBitension {
    pub tau_h: Vec<f64>,
    pub tau_v: Vec<f64>,
    pub tau2_h: Vec<f64>,
    pub tau2_v: Vec<f64>,
    /// Per-component spread between the two Richardson stages; an accuracy
    /// estimate, not a bound.
    pub error_estimate: f64,
}

impl<'a> FlatChart<'a> {
    pub fn new(dim: usize, metric: &'a GNaturalMetric) -> Self {
        FlatChart { dim, metric }
    }

    /// The `2m x 2m` metric matrix at chart point `(x, u)`; only the fiber
    /// part of the point enters.
    pub fn metric_matrix(&self, point: &[f64]) -> MetricResult<Vec<Vec<f64>>> {
        let m = self.dim;
        assert_eq!(point.len(), 2 * m, "chart point must have 2m coordinates");
        let u = &point[m..];
        let rho: f64 = u.iter().map(|x| x * x).sum();
        let j = self.metric.jets(rho)?;
        let (a1, a2) = (j.a1.value, j.a2.value);
        let w13 = j.a1.value + j.a3.value;
        let (b1, b2) = (j.b1.value, j.b2.value);
        let s13 = j.b1.value + j.b3.value;
        let mut g = vec![vec![0.0; 2 * m]; 2 * m];
        for i in 0..m {
            for k in 0..m {
                let delta = if i == k { 1.0 } else { 0.0 };
                let uu = u[i] * u[k];
                g[i][k] = w13 * delta + s13 * uu;
                g[i][m + k] = a2 * delta + b2 * uu;
                g[m + i][k] = a2 * delta + b2 * uu;
                g[m + i][m + k] = a1 * delta + b1 * uu;
            }
        }
        Ok(g)
    }

    /// Sign of the determinant of the metric matrix (for signature checks).
    pub fn det_sign(&self, point: &[f64]) -> MetricResult<i32> {
        let g = self.metric_matrix(point)?;
        let (_, det) = invert(&g)?;
        Ok(if det > 0.0 { 1 } else { -1 })
    }

    /// Christoffel symbols at `point` from central differences of the metric.
    /// Returns `gamma[k][i][j]` with `k` the upper index.
    fn christoffels(&self, point: &[f64], h: f64) -> MetricResult<Vec<Vec<Vec<f64>>>> {
        let n = 2 * self.dim;
        let g0 = self.metric_matrix(point)?;
        let (ginv, _) = invert(&g0)?;
        let dg = self.metric_gradient(point, h)?;
        let mut gamma = vec![vec![vec![0.0; n]; n]; n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    gamma[k][i][j] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// `dg[c][i][j] = d_c G_{ij}` by central differences.
    fn metric_gradient(&self, point: &[f64], h: f64) -> MetricResult<Vec<Vec<Vec<f64>>>> {
        let n = 2 * self.dim;
        let mut dg = vec![vec![vec![0.0; n]; n]; n];
        for c in 0..n {
            let mut pp = point.to_vec();
            let mut pm = point.to_vec();
            pp[c] += h;
            pm[c] -= h;
            let gp = self.metric_matrix(&pp)?;
            let gm = self.metric_matrix(&pm)?;
            for i in 0..n {
                for j in 0..n {
                    dg[c][i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
                }
            }
        }
        Ok(dg)
    }

    /// Curvature `R(d_i, d_j) d_l = sum_k riem[k][l][i][j] d_k` at `point`,
    /// from central differences of the Christoffel symbols.
    fn riemann(&self, point: &[f64], h: f64) -> MetricResult<Vec<Vec<Vec<Vec<f64>>>>> {
        let n = 2 * self.dim;
        let gamma0 = self.christoffels(point, h)?;
        // dgamma[c][k][i][j] = d_c Gamma^k_{ij}
        let mut dgamma = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for c in 0..n {
            let mut pp = point.to_vec();
            let mut pm = point.to_vec();
            pp[c] += h;
            pm[c] -= h;
            let gp = self.christoffels(&pp, h)?;
            let gm = self.christoffels(&pm, h)?;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        dgamma[c][k][i][j] = (gp[k][i][j] - gm[k][i][j]) / (2.0 * h);
                    }
                }
            }
        }
        let mut riem = vec![vec![vec![vec![0.0; n]; n]; n]; n];
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = dgamma[i][k][j][l] - dgamma[j][k][i][l];
                        for s in 0..n {
                            v += gamma0[k][i][s] * gamma0[s][j][l]
                                - gamma0[k][j][s] * gamma0[s][i][l];
                        }
                        riem[k][l][i][j] = v;
                    }
                }
            }
        }
        Ok(riem)
    }

    /// Tension and bitension of the constant section `x -> (x, v0)` at one
    /// step size, without extrapolation.
    fn bitension_once(&self, v0: &[f64], h: f64) -> MetricResult<(Vec<f64>, Vec<f64>)> {
        let m = self.dim;
        let n = 2 * m;
        let mut point = vec![0.0; n];
        point[m..].copy_from_slice(v0);

        let gamma = self.christoffels(&point, h)?;
        let riem = self.riemann(&point, h)?;

        // tau^k = sum_i Gamma^k_{ii} over horizontal directions; the metric
        // has no x-dependence, so pullback derivatives reduce to Christoffel
        // contractions at the section point.
        let mut tau = vec![0.0; n];
        for k in 0..n {
            for i in 0..m {
                tau[k] += gamma[k][i][i];
            }
        }

        // nabla_i W for a section with x-constant components
        let cov = |w: &[f64], i: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (k, o) in out.iter_mut().enumerate() {
                for (l, wl) in w.iter().enumerate() {
                    *o += gamma[k][i][l] * wl;
                }
            }
            out
        };

        let mut tau2 = vec![0.0; n];
        for i in 0..m {
            let d1 = cov(&tau, i);
            let d2 = cov(&d1, i);
            for k in 0..n {
                tau2[k] -= d2[k];
            }
        }
        // curvature term: - sum_i R(tau, d_i) d_i
        for i in 0..m {
            for k in 0..n {
                let mut v = 0.0;
                for (l, tl) in tau.iter().enumerate() {
                    v += tl * riem[k][i][l][i];
                }
                tau2[k] -= v;
            }
        }
        Ok((tau, tau2))
    }

    /// Finite-difference tension and bitension of the constant section with
    /// Richardson extrapolation.
    pub fn fd_bitension(&self, v0: &[f64], cfg: &FdConfig) -> MetricResult<FdBitension> {
        let m = self.dim;
        if v0.len() != m {
            return Err(MetricError::Dimension(
                "section value must have base dimension".into(),
            ));
        }
        let norm = v0.iter().map(|x| x * x).sum::<f64>().sqrt();
        let h = cfg.step * (1.0 + norm);
        let (tau_a, t2_a) = self.bitension_once(v0, h)?;
        let (tau, tau2, err) = if cfg.richardson_levels >= 1 {
            let (tau_b, t2_b) = self.bitension_once(v0, h / 2.0)?;
            let comb = |a: &[f64], b: &[f64]| -> Vec<f64> {
                a.iter().zip(b).map(|(x, y)| (4.0 * y - x) / 3.0).collect()
            };
            let err = t2_a
                .iter()
                .zip(&t2_b)
                .map(|(x, y)| (x - y).abs() / 3.0)
                .fold(0.0f64, f64::max);
            (comb(&tau_a, &tau_b), comb(&t2_a, &t2_b), err)
        } else {
            (tau_a, t2_a, f64::NAN)
        };
        Ok(FdBitension {
            tau_h: tau[..m].to_vec(),
            tau_v: tau[m..].to_vec(),
            tau2_h: tau2[..m].to_vec(),
            tau2_v: tau2[m..].to_vec(),
            error_estimate: err,
        })
    }
}

/// Comparison of the closed-form bitension factors against the
/// finite-difference values.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rho: f64,
    pub dim: usize,
    pub closed_h: f64,
    pub closed_v: f64,
    pub fd_h: f64,
    pub fd_v: f64,
    pub rel_error_h: f64,
    pub rel_error_v: f64,
    pub fd_error_estimate: f64,
    pub pass: bool,
}

/// Relative error with an absolute fallback when the reference is ~0.
fn rel_err(closed: f64, fd: f64, abs_floor: f64) -> f64 {
    let diff = (closed - fd).abs();
    if closed.abs() <= abs_floor {
        if diff <= abs_floor {
            0.0
        } else {
            diff
        }
    } else {
        diff / closed.abs()
    }
}

/// Run both routes for a parallel field of squared norm `rho` in dimension
/// `m` and compare. The section direction is `sqrt(rho) e_1`.
pub fn compare(
    metric: &GNaturalMetric,
    dim: usize,
    rho: f64,
    cfg: &FdConfig,
    tol_rel: f64,
    tol_abs: f64,
) -> MetricResult<CompareReport> {
    let chart = FlatChart::new(dim, metric);
    let mut v0 = vec![0.0; dim];
    v0[0] = rho.sqrt();
    let fd = chart.fd_bitension(&v0, cfg)?;
    let bt = crate::tm::bitension_parallel(metric, &crate::tm::ParallelFieldSpec { dim, rho })?;
    // factor out the section direction
    let scale = if rho > 0.0 { v0[0] } else { 1.0 };
    let fd_h = fd.tau2_h[0] / scale;
    let fd_v = fd.tau2_v[0] / scale;
    let reh = rel_err(bt.tau2h_factor, fd_h, tol_abs);
    let rev = rel_err(bt.tau2v_factor, fd_v, tol_abs);
    let pass = reh <= tol_rel && rev <= tol_rel;
    Ok(CompareReport {
        rho,
        dim,
        closed_h: bt.tau2h_factor,
        closed_v: bt.tau2v_factor,
        fd_h,
        fd_v,
        rel_error_h: reh,
        rel_error_v: rev,
        fd_error_estimate: fd.error_estimate,
        pass,
    })
}

/// Solve for the inverse and determinant by Gaussian elimination with
/// partial pivoting. Sizes here are at most 6x6.
fn invert(a: &[Vec<f64>]) -> MetricResult<(Vec<Vec<f64>>, f64)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.extend(std::iter::repeat_n(0.0, n));
            row
        })
        .collect();
    for i in 0..n {
        m[i][n + i] = 1.0;
    }
    let mut det = 1.0;
    for col in 0..n {
        let (piv, pv) = (col..n)
            .map(|r| (r, m[r][col].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pv == 0.0 {
            return Err(MetricError::Degenerate {
                quantity: "metric matrix",
                t: f64::NAN,
                value: 0.0,
            });
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        let p = m[col][col];
        for j in col..2 * n {
            m[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                if f != 0.0 {
                    for j in col..2 * n {
                        m[r][j] -= f * m[col][j];
                    }
                }
            }
        }
    }
    let inv = m.into_iter().map(|row| row[n..].to_vec()).collect();
    Ok((inv, det))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnatural::GNaturalMetric;
    use crate::scalarfn::SmoothFn;

    #[test]
    fn sasaki_matrix_is_identity() {
        let g = GNaturalMetric::sasaki();
        let chart = FlatChart::new(2, &g);
        let gm = chart.metric_matrix(&[0.3, -0.1, 0.7, 0.2]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(gm[i][j], want);
            }
        }
    }

    #[test]
    fn sasaki_constant_section_is_biharmonic() {
        let g = GNaturalMetric::sasaki();
        let chart = FlatChart::new(2, &g);
        let fd = chart
            .fd_bitension(&[0.9, 0.3], &FdConfig::default())
            .unwrap();
        for v in fd.tau2_h.iter().chain(&fd.tau2_v) {
            assert!(v.abs() < 1e-8, "expected zero bitension, got {v}");
        }
    }

    /// Numeric Christoffels must be metric-compatible: `d_c G_{ij}` equals
    /// the Gamma contraction, up to the finite-difference budget.
    #[test]
    fn metric_compatibility_residual() {
        let g = generic_metric();
        let chart = FlatChart::new(2, &g);
        let point = [0.1, -0.2, 0.8, 0.4];
        let h = 1e-3 * (1.0 + 0.9f64);
        let gamma = chart.christoffels(&point, h).unwrap();
        let dg = chart.metric_gradient(&point, h).unwrap();
        let g0 = chart.metric_matrix(&point).unwrap();
        let n = 4;
        for c in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut contraction = 0.0;
                    for s in 0..n {
                        contraction += gamma[s][c][i] * g0[s][j] + gamma[s][c][j] * g0[i][s];
                    }
                    let resid = dg[c][i][j] - contraction;
                    assert!(
                        resid.abs() < 1e-6,
                        "compatibility residual {resid} at ({c},{i},{j})"
                    );
                }
            }
        }
    }

    /// Curvature antisymmetry in the first pair and the first Bianchi
    /// identity within the finite-difference error budget.
    #[test]
    fn curvature_identities() {
        let g = generic_metric();
        let chart = FlatChart::new(2, &g);
        let point = [0.0, 0.0, 0.7, -0.3];
        let r = chart.riemann(&point, 1e-3).unwrap();
        let n = 4;
        for k in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        assert!(
                            (r[k][l][i][j] + r[k][l][j][i]).abs() < 1e-5,
                            "antisymmetry fails"
                        );
                        // first Bianchi: R(i,j)l + R(j,l)i + R(l,i)j = 0
                        let b = r[k][l][i][j] + r[k][i][j][l] + r[k][j][l][i];
                        assert!(b.abs() < 1e-5, "Bianchi fails: {b}");
                    }
                }
            }
        }
    }

    /// Determinant sign of the chart matrix agrees with the grid signature
    /// certificate.
    #[test]
    fn determinant_sign_matches_classification() {
        use crate::gnatural::{classify, GridStatus};
        // Riemannian metric: positive determinant
        let g = GNaturalMetric::sasaki();
        let chart = FlatChart::new(2, &g);
        assert_eq!(chart.det_sign(&[0.0, 0.0, 0.8, 0.2]).unwrap(), 1);
        let cls = classify(&g, (0.0, 5.0), 50).unwrap();
        assert_eq!(cls.riemannian_on_grid, GridStatus::Verified);
        // split-signature family: determinant sign (-1)^m, Riemannian violated
        let fam =
            crate::tm::LambdaFamily::build(crate::scalarfn::SmoothFn::t(), 1.0, 1.0, 2).unwrap();
        let lm = fam.metric();
        let chart = FlatChart::new(2, &lm);
        assert_eq!(chart.det_sign(&[0.0, 0.0, 1.2, 0.5]).unwrap(), 1); // (-1)^2
        let lm3 = crate::tm::LambdaFamily::build(crate::scalarfn::SmoothFn::t(), 1.0, 1.0, 3)
            .unwrap()
            .metric();
        let chart3 = FlatChart::new(3, &lm3);
        assert_eq!(
            chart3.det_sign(&[0.0, 0.0, 0.0, 1.2, 0.5, 0.1]).unwrap(),
            -1
        ); // (-1)^3
        let cls = classify(&lm, (1e-6, 5.0), 50).unwrap();
        assert_eq!(cls.riemannian_on_grid, GridStatus::Violated);
        assert_eq!(cls.nondegenerate_on_grid, GridStatus::Verified);
    }

    fn generic_metric() -> GNaturalMetric {
        GNaturalMetric::explicit(
            SmoothFn::add(vec![SmoothFn::constant(2.0), SmoothFn::t().scaled(0.1)]),
            SmoothFn::add(vec![SmoothFn::constant(0.3), SmoothFn::t().scaled(0.05)]),
            SmoothFn::add(vec![SmoothFn::constant(1.0), SmoothFn::t().scaled(0.2)]),
            SmoothFn::constant(0.1),
            SmoothFn::add(vec![SmoothFn::constant(0.07), SmoothFn::t().scaled(0.01)]),
            SmoothFn::t().scaled(-0.02),
        )
    }
}
