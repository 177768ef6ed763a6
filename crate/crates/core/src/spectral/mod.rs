//! Laplacian spectra and the spectral bounds the convergence analysis uses.

mod jacobi;
mod speeds;

pub use jacobi::{symmetric_eigen, Matrix, SymmetricEigen};
pub use speeds::{granularity_of, parse_speed, SpeedProfile};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, ISOPERIMETRIC_CAP};

/// Default eigenvalue tolerance.
pub const EIGEN_TOL: f64 = 1e-10;

/// The graph Laplacian `L = D - A`.
pub fn laplacian(g: &Graph) -> Matrix {
    let n = g.node_count();
    let mut m = Matrix::zeros(n);
    for v in 0..n {
        m.set(v, v, g.degree(v) as f64);
    }
    for &(u, v) in g.edges() {
        m.set(u, v, -1.0);
        m.set(v, u, -1.0);
    }
    m
}

/// `S^{-1/2} L S^{-1/2}`, which is similar to `L S^{-1}` and therefore has
/// the same spectrum.
pub fn symmetrized_generalized_laplacian(g: &Graph, sp: &SpeedProfile) -> Result<Matrix> {
    check_len(g.node_count(), sp.len())?;
    let n = g.node_count();
    let scale: Vec<f64> = sp.as_slice().iter().map(|s| 1.0 / s.sqrt()).collect();
    let l = laplacian(g);
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v = l.get(i, j);
            if v != 0.0 {
                m.set(i, j, scale[i] * v * scale[j]);
            }
        }
    }
    Ok(m)
}

/// Second entry of the ascending spectrum of a symmetric matrix.
pub fn second_smallest_eigenvalue(m: &Matrix, tol: f64) -> Result<f64> {
    if m.dim() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: m.dim(),
        });
    }
    Ok(symmetric_eigen(m, tol)?.values[1])
}

/// `⟨x, y⟩_S = Σ x_i y_i / s_i`.
pub fn generalized_dot(x: &[f64], y: &[f64], sp: &SpeedProfile) -> Result<f64> {
    check_len(sp.len(), x.len())?;
    check_len(sp.len(), y.len())?;
    Ok(x.iter()
        .zip(y)
        .zip(sp.as_slice())
        .map(|((a, b), s)| a * b / s)
        .sum())
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(name: &'static str, lhs: f64, rhs: f64, tol: f64) -> BoundCheck {
        BoundCheck {
            name,
            lhs,
            rhs,
            holds: lhs <= rhs + tol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    /// Second-smallest eigenvalue of `L`.
    pub lambda2: f64,
    /// Second-smallest eigenvalue of `L S^{-1}`.
    pub mu2: f64,
    /// Smallest eigenvalue of `L`, zero up to tolerance.
    pub lambda1: f64,
    pub eigen_tolerance: f64,
    pub bound_report: Vec<BoundCheck>,
}

impl SpectralSummary {
    pub fn all_hold(&self) -> bool {
        self.bound_report.iter().all(|b| b.holds)
    }

    pub fn bound(&self, name: &str) -> Option<&BoundCheck> {
        self.bound_report.iter().find(|b| b.name == name)
    }
}

/// Computes λ₂ and μ₂ and evaluates every bound on them. The Cheeger rows are
/// only present when the isoperimetric number can be brute-forced.
pub fn spectral_summary(g: &Graph, sp: &SpeedProfile, tol: f64) -> Result<SpectralSummary> {
    let n = g.node_count();
    let nf = n as f64;
    let lap = symmetric_eigen(&laplacian(g), tol)?;
    let (lambda1, lambda2) = (lap.values[0], lap.values[1]);
    let mu2 = second_smallest_eigenvalue(&symmetrized_generalized_laplacian(g, sp)?, tol)?;

    let mut rows = vec![
        BoundCheck::new("lambda1_is_zero", lambda1.abs(), 0.0, tol),
        BoundCheck {
            name: "lambda2_positive",
            lhs: tol,
            rhs: lambda2,
            holds: lambda2 > tol,
        },
        BoundCheck::new("lambda2_simple_lower", 4.0 / (nf * nf), lambda2, tol),
        BoundCheck::new(
            "lambda2_min_degree_upper",
            lambda2,
            nf / (nf - 1.0) * g.min_degree() as f64,
            tol,
        ),
        BoundCheck::new("diameter_lower", 4.0 / (nf * lambda2), g.diameter() as f64, tol),
    ];
    if n <= ISOPERIMETRIC_CAP {
        let i = g.isoperimetric_number()?;
        let i = *i.numer() as f64 / *i.denom() as f64;
        rows.push(BoundCheck::new(
            "cheeger_lower",
            i * i / (2.0 * g.max_degree() as f64),
            lambda2,
            tol,
        ));
        rows.push(BoundCheck::new("cheeger_upper", lambda2, 2.0 * i, tol));
    }
    rows.push(BoundCheck::new(
        "interlacing_lower",
        lambda2 / sp.max(),
        mu2,
        tol,
    ));
    rows.push(BoundCheck::new(
        "interlacing_upper",
        mu2,
        lambda2 / sp.min(),
        tol,
    ));

    Ok(SpectralSummary {
        lambda2,
        mu2,
        lambda1,
        eigen_tolerance: tol,
        bound_report: rows,
    })
}
