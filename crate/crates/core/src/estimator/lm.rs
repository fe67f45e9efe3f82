use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::models::{linear_lstsq, span, FitModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Per-point standard deviations; the fit is unweighted when absent.
    pub y_err: Option<Vec<f64>>,
    /// Starting parameters in natural units.
    pub init: Option<Vec<f64>>,
    /// Parameters held at a value, as `(index, value)`.
    pub fixed: Vec<(usize, f64)>,
    pub max_iterations: usize,
    /// Relative parameter change below which the fit counts as converged.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            y_err: None,
            init: None,
            fixed: Vec::new(),
            max_iterations: 500,
            tolerance: 1e-10,
        }
    }
}

impl FitOptions {
    pub fn weighted(y_err: Vec<f64>) -> Self {
        Self {
            y_err: Some(y_err),
            ..Self::default()
        }
    }

    pub fn with_init(mut self, init: Vec<f64>) -> Self {
        self.init = Some(init);
        self
    }

    pub fn fix(mut self, index: usize, value: f64) -> Self {
        self.fixed.push((index, value));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ParameterTolerance,
    ZeroResidual,
    /// No downhill step exists at machine precision.
    Stagnated,
    MaxIterations,
    /// Closed-form linear solve.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    /// Parameter covariance; rows/columns of fixed parameters are zero.
    pub covariance: DMatrix<f64>,
    /// Residual sum of squares, weighted by `y_err` when given.
    pub rss: f64,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub rss_history: Vec<f64>,
}

impl FitResult {
    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[(j, j)].max(0.0).sqrt()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.model.eval(&self.params, x)
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.model.param_index(name).map(|j| self.params[j])
    }

    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            f64::NAN
        } else {
            self.rss / self.dof as f64
        }
    }
}

/// Least-squares fit of `model` to `(x, y)`.
///
/// Nonlinear families use Levenberg–Marquardt with Marquardt diagonal
/// scaling and a central-difference Jacobian; positive parameters are fitted
/// in log space. Iteration stops when every free parameter changes by less
/// than `tolerance` relative to its scale, or after `max_iterations`.
/// Without `y_err`, the covariance is scaled by the reduced χ².
pub fn fit_curve(model: FitModel, x: &[f64], y: &[f64], opts: &FitOptions) -> Result<FitResult> {
    let m = x.len();
    if m != y.len() {
        return Err(Error::InvalidArgument("x and y lengths differ".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite data".into()));
    }
    let n = model.n_params();
    for &(j, v) in &opts.fixed {
        if j >= n || !v.is_finite() {
            return Err(Error::InvalidArgument(format!("bad fixed parameter {j}")));
        }
    }
    let free: Vec<usize> = (0..n).filter(|j| !opts.fixed.iter().any(|(i, _)| i == j)).collect();
    let is_poly = matches!(model, FitModel::Polynomial { .. });
    if m < free.len() || (m == free.len() && !is_poly) {
        return Err(Error::DegenerateData(format!(
            "{m} points cannot constrain {} parameters",
            free.len()
        )));
    }
    let yr = span(y);
    if yr == 0.0 || yr <= 1e-14 * y.iter().fold(0.0f64, |a, v| a.max(v.abs())) {
        return Err(Error::DegenerateData("data are constant".into()));
    }
    let w: Vec<f64> = match &opts.y_err {
        Some(e) => {
            if e.len() != m || e.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                return Err(Error::InvalidArgument("y_err must be positive and match y".into()));
            }
            e.iter().map(|s| 1.0 / s).collect()
        }
        None => vec![1.0; m],
    };
    if let FitModel::Polynomial { .. } = model {
        if !opts.fixed.is_empty() {
            return Err(Error::InvalidArgument("polynomial fits take no fixed parameters".into()));
        }
        return fit_polynomial(model, x, y, &w, opts.y_err.is_some());
    }

    let mut p0 = match &opts.init {
        Some(p) if p.len() == n => p.clone(),
        Some(_) => return Err(Error::InvalidArgument("init has wrong length".into())),
        None => model.initial_guess(x, y, &opts.fixed)?,
    };
    for &(j, v) in &opts.fixed {
        p0[j] = v;
    }
    for j in 0..n {
        if model.is_positive(j) && !(p0[j] > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "parameter `{}` must start positive",
                model.param_names()[j]
            )));
        }
    }
    let scales = model.scales(x, y);
    // Free-parameter vector θ (log for positive parameters).
    let to_theta = |p: &[f64]| -> Vec<f64> {
        free.iter()
            .map(|&j| if model.is_positive(j) { p[j].ln() } else { p[j] })
            .collect()
    };
    let to_params = |theta: &[f64]| -> Vec<f64> {
        let mut p = p0.clone();
        for (k, &j) in free.iter().enumerate() {
            p[j] = if model.is_positive(j) { theta[k].exp() } else { theta[k] };
        }
        p
    };
    let theta_scale: Vec<f64> = free
        .iter()
        .map(|&j| if model.is_positive(j) { 1.0 } else { scales[j].max(p0[j].abs()) })
        .collect();
    let residuals = |theta: &[f64]| -> DVector<f64> {
        let p = to_params(theta);
        DVector::from_iterator(m, (0..m).map(|i| (y[i] - model.eval(&p, x[i])) * w[i]))
    };
    let jacobian = |theta: &[f64]| -> DMatrix<f64> {
        let nf = theta.len();
        let mut jac = DMatrix::zeros(m, nf);
        let mut t = theta.to_vec();
        for k in 0..nf {
            let h = 1e-6 * (theta[k].abs() + theta_scale[k]);
            t[k] = theta[k] + h;
            let rp = residuals(&t);
            t[k] = theta[k] - h;
            let rm = residuals(&t);
            t[k] = theta[k];
            // Residuals are y − f, so ∂f/∂θ = −∂r/∂θ.
            jac.set_column(k, &((rm - rp) / (2.0 * h)));
        }
        jac
    };

    let mut theta = to_theta(&p0);
    let mut r = residuals(&theta);
    let mut rss = r.norm_squared();
    if !rss.is_finite() {
        return Err(Error::DegenerateData("model is not finite at the initial guess".into()));
    }
    let data_norm: f64 = y.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
    let mut history = vec![rss];
    let mut jac = jacobian(&theta);
    let mut lambda = None::<f64>;
    let mut iterations = 0;
    let termination = loop {
        if rss <= 1e-30 * data_norm {
            break Termination::ZeroResidual;
        }
        if iterations >= opts.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let dmax = a.diagonal().max();
        let diag: Vec<f64> = a.diagonal().iter().map(|&d| d.max(1e-12 * dmax)).collect();
        let mut lam = lambda.unwrap_or(1e-3);
        let mut accepted = None;
        while lam < 1e16 {
            let mut lhs = a.clone();
            for k in 0..diag.len() {
                lhs[(k, k)] += lam * diag[k];
            }
            let step = match lhs.clone().cholesky() {
                Some(c) => c.solve(&g),
                None => match lhs.lu().solve(&g) {
                    Some(s) => s,
                    None => {
                        lam *= 10.0;
                        continue;
                    }
                },
            };
            let trial: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            let rt = residuals(&trial);
            let rss_t = rt.norm_squared();
            if rss_t.is_finite() && rss_t <= rss {
                accepted = Some((trial, rt, rss_t, step));
                break;
            }
            lam *= 10.0;
        }
        let Some((trial, rt, rss_t, step)) = accepted else {
            break Termination::Stagnated;
        };
        lambda = Some((lam * 0.3).max(1e-12));
        let small = step
            .iter()
            .zip(&theta)
            .zip(&theta_scale)
            .all(|((s, t), sc)| s.abs() <= opts.tolerance * (t.abs() + sc));
        theta = trial;
        r = rt;
        rss = rss_t;
        history.push(rss);
        if small {
            break Termination::ParameterTolerance;
        }
        jac = jacobian(&theta);
    };

    let mut params = to_params(&theta);
    let jac = jacobian(&theta);
    let dof = m.saturating_sub(free.len());
    let s2 = if opts.y_err.is_some() {
        1.0
    } else if dof > 0 {
        rss / dof as f64
    } else {
        f64::NAN
    };
    let cov_theta = invert_normal(&jac) * s2;
    let mut covariance = DMatrix::zeros(n, n);
    let dpdt: Vec<f64> = free
        .iter()
        .map(|&j| if model.is_positive(j) { params[j] } else { 1.0 })
        .collect();
    for (a, &ja) in free.iter().enumerate() {
        for (b, &jb) in free.iter().enumerate() {
            covariance[(ja, jb)] = dpdt[a] * dpdt[b] * cov_theta[(a, b)];
        }
    }
    let before = params.clone();
    model.normalize(&mut params);
    if model == FitModel::DoubleGaussian && before[1] != params[1] {
        let perm = [3, 4, 5, 0, 1, 2];
        covariance = DMatrix::from_fn(n, n, |i, j| covariance[(perm[i], perm[j])]);
    }
    Ok(FitResult {
        model,
        params,
        covariance,
        rss,
        dof,
        iterations,
        converged: termination != Termination::MaxIterations,
        termination,
        rss_history: history,
    })
}

fn invert_normal(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let a = jac.transpose() * jac;
    if let Some(c) = a.clone().cholesky() {
        return c.inverse();
    }
    // Singular normal matrix: parameters with weight on a null direction
    // are not identified and get infinite variance rather than the zero the
    // pseudo-inverse would report.
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut cov = a.pseudo_inverse(1e-14 * top).unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= 1e-14 * top {
            for j in 0..n {
                if eig.eigenvectors[(j, i)].abs() > 1e-6 {
                    cov[(j, j)] = f64::INFINITY;
                }
            }
        }
    }
    cov
}

fn fit_polynomial(model: FitModel, x: &[f64], y: &[f64], w: &[f64], weighted: bool) -> Result<FitResult> {
    let n = model.n_params();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|k| x.iter().zip(w).map(|(&xv, &wv)| wv * xv.powi(k as i32)).collect())
        .collect();
    let yw: Vec<f64> = y.iter().zip(w).map(|(a, b)| a * b).collect();
    let (params, rss) = linear_lstsq(&cols, &yw)
        .ok_or_else(|| Error::RankDeficient("polynomial design matrix is rank deficient".into()))?;
    let m = x.len();
    let jac = DMatrix::from_fn(m, n, |i, j| cols[j][i]);
    let dof = m.saturating_sub(n);
    let s2 = if weighted {
        1.0
    } else if dof > 0 {
        rss / dof as f64
    } else {
        0.0
    };
    Ok(FitResult {
        model,
        params,
        covariance: invert_normal(&jac) * s2,
        rss,
        dof,
        iterations: 0,
        converged: true,
        termination: Termination::Linear,
        rss_history: vec![rss],
    })
}
