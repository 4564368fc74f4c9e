//! Complex polynomial roots via companion-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{JadeError, Result};

/// Evaluates `Σ coeffs[i] z^{d−i}` (highest power first) and its derivative.
fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Scaled residual `|p(z)| / (d · max|c| · max(1, |z|)^d)`.
pub fn scaled_residual(coeffs: &[Complex64], z: Complex64) -> f64 {
    let degree = coeffs.len() - 1;
    let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let (p, _) = horner(coeffs, z);
    p.norm() / (degree as f64 * cmax * z.norm().max(1.0).powi(degree as i32))
}

/// All roots of the polynomial with coefficients in descending powers.
pub fn roots_of_polynomial(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let lead = *coeffs
        .first()
        .ok_or_else(|| JadeError::invalid("empty coefficient list"))?;
    if lead.norm() == 0.0 {
        return Err(JadeError::invalid("leading coefficient is zero"));
    }
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Err(JadeError::invalid("polynomial degree must be >= 1"));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(JadeError::invalid("non-finite coefficient"));
    }
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();

    let mut roots = if degree == 1 {
        vec![-monic[1]]
    } else {
        let companion = DMatrix::from_fn(degree, degree, |r, c| {
            if r == 0 {
                -monic[c + 1]
            } else if r == c + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let schur = companion
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| not_converged(coeffs))?;
        let (_, t) = schur.unpack();
        t.diagonal().iter().copied().collect()
    };

    // Newton polishing, kept only where it lowers the residual.
    for z in roots.iter_mut() {
        let mut best = *z;
        let mut best_res = horner(&monic, best).0.norm();
        let mut cur = best;
        for _ in 0..8 {
            let (p, dp) = horner(&monic, cur);
            if dp.norm() == 0.0 {
                break;
            }
            cur -= p / dp;
            let res = horner(&monic, cur).0.norm();
            if res.is_nan() || res >= best_res {
                break;
            }
            best = cur;
            best_res = res;
        }
        *z = best;
    }

    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        || roots.iter().any(|&z| scaled_residual(&monic, z) >= 1e-8)
    {
        return Err(not_converged(coeffs));
    }
    Ok(roots)
}

fn not_converged(coeffs: &[Complex64]) -> JadeError {
    JadeError::RootsNotConverged {
        coeffs: format!("{coeffs:?}"),
    }
}

/// Expands `Π (z − r_i)` into descending-power coefficients.
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}
