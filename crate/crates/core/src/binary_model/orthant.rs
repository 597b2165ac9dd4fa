//! Orthant probabilities and sign moments of zero-mean Gaussian vectors.
//!
//! Up to three dimensions the orthant probability is closed form. For four
//! dimensions we integrate Plackett's reduction along the straight path
//! `Σ(t) = (1 − t) I + t Σ`: the derivative of the orthant probability with
//! respect to `ρ_ij` is the bivariate density at the origin times the
//! orthant probability of the remaining pair conditioned on `x_i = x_j = 0`,
//! and that conditional pair is again zero-mean, so its orthant probability
//! is closed form in the partial correlation. This leaves a smooth
//! one-dimensional integral per pair.

use std::f64::consts::{FRAC_2_PI, PI};

use nalgebra::{Matrix4, SymmetricEigen};

use crate::array_model::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::quadrature;

/// Absolute tolerance handed to the quadrature for the fourth moment.
/// The orthant probability is the moment divided by 16.
const QUAD_TOL: f64 = 1e-13;

/// Eigenvalues below this are treated as indefinite.
const PSD_TOL: f64 = 1e-10;

/// The six ordered pair/complement splits of {0, 1, 2, 3}.
const SPLITS: [((usize, usize), (usize, usize)); 6] = [
    ((0, 1), (2, 3)),
    ((0, 2), (1, 3)),
    ((0, 3), (1, 2)),
    ((1, 2), (0, 3)),
    ((1, 3), (0, 2)),
    ((2, 3), (0, 1)),
];

/// `E[sign(u) sign(v)] = (2/π) asin ρ`.
#[inline]
pub fn arcsine(rho: f64) -> f64 {
    FRAC_2_PI * rho.clamp(-1.0, 1.0).asin()
}

/// `P(x₁ > 0, x₂ > 0)` for correlation `rho`.
pub fn orthant2(rho: f64) -> f64 {
    0.25 + rho.clamp(-1.0, 1.0).asin() / (2.0 * PI)
}

/// `P(x₁ > 0, x₂ > 0, x₃ > 0)` for pairwise correlations `r12, r13, r23`.
pub fn orthant3(r12: f64, r13: f64, r23: f64) -> f64 {
    0.125 + (r12.clamp(-1.0, 1.0).asin() + r13.clamp(-1.0, 1.0).asin() + r23.clamp(-1.0, 1.0).asin()) / (4.0 * PI)
}

#[inline]
fn partial(r_ab: f64, r_ac: f64, r_bc: f64) -> f64 {
    let den = ((1.0 - r_ac * r_ac) * (1.0 - r_bc * r_bc))
        .max(f64::MIN_POSITIVE)
        .sqrt();
    ((r_ab - r_ac * r_bc) / den).clamp(-1.0, 1.0)
}

/// `1 − (t ρ)²` with `t = 1 − u²`, factored so it keeps full relative
/// precision as `t → 1` and `|ρ| → 1`.
#[inline]
fn one_minus_sq(rho: f64, t: f64, u: f64) -> f64 {
    let r = rho.abs();
    ((1.0 - r) + u * u * r) * (1.0 + t * r)
}

/// Correlation of `(x_k, x_l)` given `x_i, x_j` on the path matrix
/// `(1 − t) I + t c`.
#[inline]
fn path_partial(c: &[[f64; 4]; 4], t: f64, u: f64, i: usize, j: usize, k: usize, l: usize) -> f64 {
    // Partial of (a, b) given i; the numerator t(c_ab − t c_ai c_bi) is
    // rewritten with 1 − t = u².
    let given_i = |a: usize, b: usize| {
        let num = t * ((c[a][b] - c[a][i] * c[b][i]) + u * u * c[a][i] * c[b][i]);
        let den = (one_minus_sq(c[a][i], t, u) * one_minus_sq(c[b][i], t, u))
            .max(f64::MIN_POSITIVE)
            .sqrt();
        (num / den).clamp(-1.0, 1.0)
    };
    partial(given_i(k, l), given_i(k, j), given_i(l, j))
}

fn as_array(sigma4: &CorrelationMatrix) -> Result<[[f64; 4]; 4]> {
    if sigma4.dims() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: sigma4.dims(),
        });
    }
    let mut c = [[0.0; 4]; 4];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = sigma4.get(i, j);
        }
    }
    Ok(c)
}

fn check_psd(c: &[[f64; 4]; 4]) -> Result<()> {
    let m = Matrix4::from_fn(|i, j| c[i][j]);
    let min = SymmetricEigen::new(m).eigenvalues.min();
    if min < -PSD_TOL {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min });
    }
    Ok(())
}

/// `E[z₁ z₂ z₃ z₄]` for `z = sign(x)`, `x ~ N(0, c)`; `c` must be a valid
/// 4×4 correlation matrix (not re-checked).
pub(crate) fn quad_moment_unchecked(c: &[[f64; 4]; 4]) -> f64 {
    // With E4 the fourth sign moment, 16·P(x > 0) = 1 + Σ (2/π) asin ρ_ij + E4,
    // and integrating the Plackett derivative leaves
    //   E4 = (4/π²) Σ_{(ij|kl)} ∫₀¹ ρ_ij asin(ρ_kl·ij(t)) / √(1 − t²ρ_ij²) dt.
    if SPLITS.iter().all(|&((i, j), _)| c[i][j] == 0.0) {
        return 0.0;
    }
    let integrand = |u: f64| {
        // t = 1 − u² absorbs the 1/√(1 − t) endpoint singularity at |ρ| = 1.
        let t = 1.0 - u * u;
        let mut acc = 0.0;
        for &((i, j), (k, l)) in &SPLITS {
            let rho = c[i][j];
            if rho == 0.0 {
                continue;
            }
            let r = path_partial(c, t, u, i, j, k, l);
            // dt = 2u du; the ratio stays bounded as u → 0 even for |ρ| = 1.
            let den = one_minus_sq(rho, t, u).max(f64::MIN_POSITIVE).sqrt();
            acc += rho * r.asin() * (2.0 * u / den);
        }
        acc
    };
    let integral = quadrature::integrate(integrand, 0.0, 1.0, QUAD_TOL);
    (4.0 / (PI * PI) * integral.value).clamp(-1.0, 1.0)
}

/// Fourth-order sign moment `E[z₁ z₂ z₃ z₄]` of a zero-mean Gaussian vector
/// with correlation `sigma4`.
pub fn quad_moment(sigma4: &CorrelationMatrix) -> Result<f64> {
    let c = as_array(sigma4)?;
    check_psd(&c)?;
    Ok(quad_moment_unchecked(&c))
}

/// `P(x₁ > 0, …, x₄ > 0)` for `x ~ N(0, sigma4)`.
pub fn orthant4(sigma4: &CorrelationMatrix) -> Result<f64> {
    let c = as_array(sigma4)?;
    check_psd(&c)?;
    Ok(orthant4_from_array(&c))
}

pub(crate) fn orthant4_from_array(c: &[[f64; 4]; 4]) -> f64 {
    let second: f64 = SPLITS[..3]
        .iter()
        .flat_map(|&((i, j), (k, l))| [arcsine(c[i][j]), arcsine(c[k][l])])
        .sum();
    ((1.0 + second + quad_moment_unchecked(c)) / 16.0).clamp(0.0, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn corr(entries: [f64; 6]) -> CorrelationMatrix {
        let [a, b, c, d, e, f] = entries;
        CorrelationMatrix::new(DMatrix::from_row_slice(
            4,
            4,
            &[1.0, a, b, c, a, 1.0, d, e, b, d, 1.0, f, c, e, f, 1.0],
        ))
        .unwrap()
    }

    #[test]
    fn independent_signs() {
        let id = corr([0.0; 6]);
        assert_eq!(orthant4(&id).unwrap(), 1.0 / 16.0);
        assert_eq!(quad_moment(&id).unwrap(), 0.0);
    }

    #[test]
    fn fully_correlated() {
        let one = corr([1.0; 6]);
        assert_abs_diff_eq!(orthant4(&one).unwrap(), 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(quad_moment(&one).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn equicorrelated_half_gives_one_fifth() {
        // Exchangeable Gaussians with ρ = 1/2: P(all positive) = 1/(n + 1).
        assert_abs_diff_eq!(orthant4(&corr([0.5; 6])).unwrap(), 0.2, epsilon = 1e-11);
    }

    #[test]
    fn block_diagonal_factorizes() {
        for (rho, tau) in [(0.3, -0.7), (0.9, 0.1), (-0.99, 0.5)] {
            let m = quad_moment(&corr([rho, 0.0, 0.0, 0.0, 0.0, tau])).unwrap();
            assert_abs_diff_eq!(m, arcsine(rho) * arcsine(tau), epsilon = 1e-11);
        }
    }

    #[test]
    fn duplicated_variable_reduces_to_second_moment() {
        // x₄ = x₃ ⇒ z₃z₄ = 1 and E[z₁z₂z₃z₄] = E[z₁z₂].
        let (r12, r13, r23) = (0.4, -0.2, 0.35);
        let m = quad_moment(&corr([r12, r13, r13, r23, r23, 1.0])).unwrap();
        assert_abs_diff_eq!(m, arcsine(r12), epsilon = 1e-8);
        let p = orthant4(&corr([r12, r13, r13, r23, r23, 1.0])).unwrap();
        assert_abs_diff_eq!(p, orthant3(r12, r13, r23), epsilon = 1e-9);
    }

    #[test]
    fn indefinite_rejected() {
        let bad = corr([0.9, 0.9, -0.9, 0.9, -0.9, 0.9]);
        assert!(matches!(orthant4(&bad), Err(Error::NotPositiveSemidefinite { .. })));
        let small = CorrelationMatrix::new(DMatrix::identity(3, 3)).unwrap();
        assert!(matches!(quad_moment(&small), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sign_flip_of_one_variable_negates_moment() {
        let c = corr([0.3, 0.2, 0.1, 0.25, -0.15, 0.4]);
        let flipped = corr([-0.3, -0.2, -0.1, 0.25, -0.15, 0.4]);
        assert_abs_diff_eq!(
            quad_moment(&c).unwrap(),
            -quad_moment(&flipped).unwrap(),
            epsilon = 1e-13
        );
    }
}
