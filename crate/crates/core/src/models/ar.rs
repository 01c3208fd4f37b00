use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::normal;

/// One mean-reverting factor with polynomial loading `P(x) e^{-alpha x}`.
///
/// `poly` holds coefficients in increasing degree; the constant case
/// `poly = [sigma]` is the classical exponential-decay volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub alpha: f64,
    pub poly: Vec<f64>,
}

impl FactorSpec {
    pub fn constant(sigma: f64, alpha: f64) -> Self {
        Self {
            alpha,
            poly: vec![sigma],
        }
    }

    pub fn new(alpha: f64, poly: Vec<f64>) -> Result<Self> {
        let spec = Self { alpha, poly };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("mean reversion {} must be positive", self.alpha)));
        }
        if self.poly.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("polynomial coefficients must be finite"));
        }
        Ok(())
    }

    /// Degree after trimming trailing zeros; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.poly.iter().rposition(|c| *c != 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Kernel `P(x) e^{-alpha x}`.
    pub fn kernel(&self, x: f64) -> f64 {
        self.eval(x) * (-self.alpha * x).exp()
    }
}

/// Gaussian AR(1) structure process `X_{k+1} = A X_k + T eps_{k+1}`, `X_0 = 0`.
///
/// The spot exponent is `loadings . X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArProcess {
    pub a: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub delta: f64,
    pub n_steps: usize,
    pub correlation: DMatrix<f64>,
    pub loadings: DVector<f64>,
}

impl ArProcess {
    pub fn state_dimension(&self) -> usize {
        self.a.nrows()
    }

    /// Builds a process from explicit matrices, checking shapes and triangularity.
    pub fn new(
        a: DMatrix<f64>,
        t: DMatrix<f64>,
        loadings: DVector<f64>,
        delta: f64,
        n_steps: usize,
    ) -> Result<Self> {
        let d = a.nrows();
        if a.ncols() != d || t.nrows() != d || t.ncols() != d || loadings.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: t.nrows().max(loadings.len()),
            });
        }
        for i in 0..d {
            for j in i + 1..d {
                if t[(i, j)] != 0.0 {
                    return Err(Error::invalid("noise factor T must be lower triangular"));
                }
            }
        }
        if !(delta > 0.0) {
            return Err(Error::invalid("time step must be positive"));
        }
        Ok(Self {
            a,
            t,
            delta,
            n_steps,
            correlation: DMatrix::identity(d, d),
            loadings,
        })
    }
}

/// Exact AR(1) coefficients `(e^{-alpha delta}, sqrt((1 - e^{-2 alpha delta}) / (2 alpha)))`
/// of a unit-volatility Ornstein-Uhlenbeck process sampled every `delta`.
pub fn ou_ar1(alpha: f64, delta: f64) -> (f64, f64) {
    let a = (-alpha * delta).exp();
    // -expm1 keeps precision for tiny alpha * delta.
    let b = (-(-2.0 * alpha * delta).exp_m1() / (2.0 * alpha)).sqrt();
    (a, b)
}

/// One-factor model: unit OU state with spot loading `sigma`.
pub fn one_factor_ar1(sigma: f64, alpha: f64, delta: f64, n_steps: usize) -> Result<ArProcess> {
    FactorSpec::constant(sigma, alpha).validate()?;
    let (a, b) = ou_ar1(alpha, delta);
    ArProcess::new(
        DMatrix::from_element(1, 1, a),
        DMatrix::from_element(1, 1, b),
        DVector::from_element(1, sigma),
        delta,
        n_steps,
    )
}

/// Correlation `r` between the one-step increments of two unit OU factors.
pub fn increment_correlation(alpha1: f64, alpha2: f64, rho: f64, delta: f64) -> f64 {
    let cross = -(-(alpha1 + alpha2) * delta).exp_m1() / (alpha1 + alpha2);
    let v1 = -(-2.0 * alpha1 * delta).exp_m1() / (2.0 * alpha1);
    let v2 = -(-2.0 * alpha2 * delta).exp_m1() / (2.0 * alpha2);
    rho * cross / (v1 * v2).sqrt()
}

/// Two-factor model: state of two unit OU factors driven by Brownian motions
/// with correlation `rho`; spot loadings `(sigma1, sigma2)`.
pub fn two_factor_ar1(
    f1: (f64, f64),
    f2: (f64, f64),
    rho: f64,
    delta: f64,
    n_steps: usize,
) -> Result<ArProcess> {
    let ((sigma1, alpha1), (sigma2, alpha2)) = (f1, f2);
    FactorSpec::constant(sigma1, alpha1).validate()?;
    FactorSpec::constant(sigma2, alpha2).validate()?;
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidCorrelation(format!("|rho| = {} exceeds 1", rho.abs())));
    }
    let (a1, b1) = ou_ar1(alpha1, delta);
    let (a2, b2) = ou_ar1(alpha2, delta);
    let r = increment_correlation(alpha1, alpha2, rho, delta);
    if !(r.abs() <= 1.0) {
        return Err(Error::InvalidCorrelation(format!(
            "increment correlation {r} is outside [-1, 1]"
        )));
    }
    let a = DMatrix::from_row_slice(2, 2, &[a1, 0.0, 0.0, a2]);
    let t = DMatrix::from_row_slice(2, 2, &[b1, 0.0, b2 * r, b2 * (1.0 - r * r).sqrt()]);
    let mut p = ArProcess::new(a, t, DVector::from_row_slice(&[sigma1, sigma2]), delta, n_steps)?;
    p.correlation = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    Ok(p)
}

/// Coefficients `lambda_l` with `P(Z + (d+1) h) = sum_l lambda_l P(Z + l h)` for
/// every polynomial of degree `d`: the solution of `sum_l lambda_l l^j = (d+1)^j`.
pub fn shift_coefficients(degree: usize) -> Vec<f64> {
    let m = degree + 1;
    let v = DMatrix::from_fn(m, m, |j, l| (l as f64).powi(j as i32));
    let rhs = DVector::from_fn(m, |j, _| (m as f64).powi(j as i32));
    let sol = v
        .lu()
        .solve(&rhs)
        .expect("Vandermonde system on distinct nodes is nonsingular");
    sol.iter().copied().collect()
}

/// Gauss-Legendre order used for the noise covariance integrals.
const NOISE_QUADRATURE_ORDER: usize = 40;

/// Exact AR(1) representation of the multi-factor polynomial-loading model.
///
/// Factor `i` of degree `d_i` contributes the `d_i + 1` coordinates
/// `X^{i,l}_k = int_0^{k delta} P_i((k+l) delta - s) e^{-alpha_i ((k+l) delta - s)} dW^i_s`.
/// The spot exponent loads on the `l = 0` coordinates with weight one.
pub fn polyfactor_ar1(
    factors: &[FactorSpec],
    correlation: &DMatrix<f64>,
    delta: f64,
    n_steps: usize,
) -> Result<ArProcess> {
    if factors.is_empty() {
        return Err(Error::invalid("at least one factor is required"));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    let m = factors.len();
    if correlation.nrows() != m || correlation.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: correlation.nrows(),
        });
    }
    for i in 0..m {
        if (correlation[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidCorrelation("diagonal must be one".into()));
        }
        for j in 0..m {
            let r = correlation[(i, j)];
            if !(r.abs() <= 1.0) || (r - correlation[(j, i)]).abs() > 1e-12 {
                return Err(Error::InvalidCorrelation(format!(
                    "entry ({i}, {j}) = {r} is not a valid correlation"
                )));
            }
        }
    }
    let mut degrees = Vec::with_capacity(m);
    for f in factors {
        f.validate()?;
        degrees.push(f.degree().ok_or_else(|| Error::invalid("zero polynomial loading"))?);
    }
    let dim: usize = degrees.iter().map(|d| d + 1).sum();
    let offsets: Vec<usize> = degrees
        .iter()
        .scan(0, |acc, d| {
            let o = *acc;
            *acc += d + 1;
            Some(o)
        })
        .collect();

    let mut a = DMatrix::zeros(dim, dim);
    let mut loadings = DVector::zeros(dim);
    for (i, f) in factors.iter().enumerate() {
        let (o, d) = (offsets[i], degrees[i]);
        loadings[o] = 1.0;
        for l in 0..d {
            a[(o + l, o + l + 1)] = 1.0;
        }
        let lambda = shift_coefficients(d);
        for (l, lam) in lambda.iter().enumerate() {
            a[(o + d, o + l)] = lam * (-f.alpha * (d + 1 - l) as f64 * delta).exp();
        }
    }

    // Increment covariance: rho_ij * int_0^delta g_{i,l}(u) g_{j,m}(u) du,
    // g_{i,l}(u) = P_i(l delta + u) e^{-alpha_i (l delta + u)}.
    let (nodes, weights) = normal::gauss_legendre(NOISE_QUADRATURE_ORDER, 0.0, delta);
    let coords: Vec<(usize, usize)> = degrees
        .iter()
        .enumerate()
        .flat_map(|(i, d)| (0..=*d).map(move |l| (i, l)))
        .collect();
    let mut cov = DMatrix::zeros(dim, dim);
    for (p, &(i, l)) in coords.iter().enumerate() {
        for (q, &(j, mm)) in coords.iter().enumerate().take(p + 1) {
            let integral: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(&u, &w)| {
                    w * factors[i].kernel(l as f64 * delta + u)
                        * factors[j].kernel(mm as f64 * delta + u)
                })
                .sum();
            let v = correlation[(i, j)] * integral;
            cov[(p, q)] = v;
            cov[(q, p)] = v;
        }
    }
    let t = psd_cholesky(&cov).ok_or(Error::NotPositiveSemidefinite { step: 1 })?;
    let mut process = ArProcess::new(a, t, loadings, delta, n_steps)?;
    process.correlation = correlation.clone();
    Ok(process)
}

/// Lower-triangular `L` with `L L^T = m` for a positive semidefinite `m`.
///
/// Zero pivots (relative to the matrix scale) produce zero columns, so
/// singular but semidefinite matrices are accepted. Returns `None` when `m`
/// is not semidefinite.
pub fn psd_cholesky(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 1e-13 * scale.max(f64::MIN_POSITIVE);
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = m[(j, j)];
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if s < -tol {
            return None;
        }
        if s <= tol {
            for i in j + 1..n {
                let mut r = m[(i, j)];
                for k in 0..j {
                    r -= l[(i, k)] * l[(j, k)];
                }
                if r.abs() > 1e-7 * scale {
                    return None;
                }
            }
            continue;
        }
        let d = s.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut r = m[(i, j)];
            for k in 0..j {
                r -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = r / d;
        }
    }
    Some(l)
}
