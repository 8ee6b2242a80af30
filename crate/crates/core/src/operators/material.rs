//! Hyperelastic and linear material laws in the reference configuration.

use crate::{Error, Mat2, Result};

/// Fourth-order tensor in two dimensions, indexed `[I][J][K][L]`.
pub type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameParameters {
    pub lambda: f64,
    pub mu: f64,
}

impl LameParameters {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return Err(Error::SingularMaterial(format!(
                "lambda = {lambda}, mu = {mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn from_young_poisson(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) {
            return Err(Error::SingularMaterial(format!(
                "Young's modulus {young} is not positive"
            )));
        }
        if !(poisson > -1.0 && poisson < 0.5) {
            return Err(Error::SingularMaterial(format!(
                "Poisson's ratio {poisson} outside (-1, 0.5)"
            )));
        }
        let lambda = poisson * young / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        Self::new(lambda, mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialLaw {
    /// Linear law on the small strain `(grad u + grad u^T) / 2`.
    Hooke(LameParameters),
    StVenantKirchhoff(LameParameters),
    NeoHookeanLog(LameParameters),
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `lambda d_IJ d_KL + mu (d_IK d_JL + d_IL d_JK)`.
pub fn isotropic_tangent(lame: LameParameters) -> Tensor4 {
    let mut c = [[[[0.0; 2]; 2]; 2]; 2];
    for (i, ci) in c.iter_mut().enumerate() {
        for (j, cij) in ci.iter_mut().enumerate() {
            for (k, cijk) in cij.iter_mut().enumerate() {
                for (l, v) in cijk.iter_mut().enumerate() {
                    *v = lame.lambda * delta(i, j) * delta(k, l)
                        + lame.mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
                }
            }
        }
    }
    c
}

/// `C : A` for a second-order `A`.
pub fn contract(c: &Tensor4, a: &Mat2) -> Mat2 {
    let mut out = Mat2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += c[i][j][k][l] * a[(k, l)];
                }
            }
            out[(i, j)] = s;
        }
    }
    out
}

impl MaterialLaw {
    pub fn lame(&self) -> LameParameters {
        match *self {
            MaterialLaw::Hooke(l)
            | MaterialLaw::StVenantKirchhoff(l)
            | MaterialLaw::NeoHookeanLog(l) => l,
        }
    }

    /// Second Piola-Kirchhoff stress `S` and material tangent `dS/dE` at the
    /// deformation gradient `f`. For [`MaterialLaw::Hooke`] the stress is the
    /// linear stress of `f - I`.
    ///
    /// A nonpositive `det f` for the logarithmic law yields
    /// [`Error::InvalidState`] with zeroed location fields.
    pub fn stress_and_tangent(&self, f: &Mat2) -> Result<(Mat2, Tensor4)> {
        match *self {
            MaterialLaw::Hooke(lame) => {
                let h = f - Mat2::identity();
                let eps = 0.5 * (h + h.transpose());
                let s = Mat2::identity() * (lame.lambda * eps.trace()) + eps * (2.0 * lame.mu);
                Ok((s, isotropic_tangent(lame)))
            }
            MaterialLaw::StVenantKirchhoff(lame) => {
                let e = 0.5 * (f.transpose() * f - Mat2::identity());
                let s = Mat2::identity() * (lame.lambda * e.trace()) + e * (2.0 * lame.mu);
                Ok((s, isotropic_tangent(lame)))
            }
            MaterialLaw::NeoHookeanLog(lame) => {
                let j = f.determinant();
                if !(j > 0.0) {
                    return Err(Error::InvalidState {
                        patch: 0,
                        point: 0,
                        jacobian: j,
                    });
                }
                let c = f.transpose() * f;
                let ci = c.try_inverse().expect("C is invertible when det F > 0");
                let lnj = j.ln();
                let s = ci * (lame.lambda * lnj) + (Mat2::identity() - ci) * lame.mu;
                let a = lame.lambda;
                let b = lame.mu - lame.lambda * lnj;
                let mut t = [[[[0.0; 2]; 2]; 2]; 2];
                for (i, ti) in t.iter_mut().enumerate() {
                    for (jj, tij) in ti.iter_mut().enumerate() {
                        for (k, tijk) in tij.iter_mut().enumerate() {
                            for (l, v) in tijk.iter_mut().enumerate() {
                                *v = a * ci[(i, jj)] * ci[(k, l)]
                                    + b * (ci[(i, k)] * ci[(jj, l)] + ci[(i, l)] * ci[(jj, k)]);
                            }
                        }
                    }
                }
                Ok((s, t))
            }
        }
    }

    /// Stored energy per unit reference area. Used to verify the stress.
    pub fn energy_density(&self, f: &Mat2) -> Result<f64> {
        match *self {
            MaterialLaw::Hooke(lame) => {
                let h = f - Mat2::identity();
                let eps = 0.5 * (h + h.transpose());
                Ok(0.5 * lame.lambda * eps.trace().powi(2)
                    + lame.mu * eps.component_mul(&eps).sum())
            }
            MaterialLaw::StVenantKirchhoff(lame) => {
                let e = 0.5 * (f.transpose() * f - Mat2::identity());
                Ok(0.5 * lame.lambda * e.trace().powi(2) + lame.mu * e.component_mul(&e).sum())
            }
            MaterialLaw::NeoHookeanLog(lame) => {
                let j = f.determinant();
                if !(j > 0.0) {
                    return Err(Error::InvalidState {
                        patch: 0,
                        point: 0,
                        jacobian: j,
                    });
                }
                let c = f.transpose() * f;
                let lnj = j.ln();
                Ok(
                    0.5 * lame.lambda * lnj * lnj + 0.5 * lame.mu * (c.trace() - 2.0)
                        - lame.mu * lnj,
                )
            }
        }
    }
}

/// Largest relative deviation between the tangent at `f` and a central
/// difference of `S` with respect to the Green-Lagrange strain. The strain
/// is perturbed through `C = I + 2E`, realised by `F = R U` with `U = sqrt(C)`.
pub fn tangent_fd_error(law: &MaterialLaw, f: &Mat2, h: f64) -> Result<f64> {
    let (_, tangent) = law.stress_and_tangent(f)?;
    let e0 = 0.5 * (f.transpose() * f - Mat2::identity());
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for k in 0..2 {
        for l in 0..2 {
            // symmetric perturbation dE = (e_k e_l^T + e_l e_k^T) / 2
            let mut de = Mat2::zeros();
            de[(k, l)] += 0.5 * h;
            de[(l, k)] += 0.5 * h;
            let sp = law.stress_and_tangent(&stretch_from_strain(&(e0 + de))?)?.0;
            let sm = law.stress_and_tangent(&stretch_from_strain(&(e0 - de))?)?.0;
            let fd = (sp - sm) / (2.0 * h);
            for i in 0..2 {
                for j in 0..2 {
                    let an = 0.5 * (tangent[i][j][k][l] + tangent[i][j][l][k]);
                    num = num.max((an - fd[(i, j)]).abs());
                    den = den.max(an.abs());
                }
            }
        }
    }
    Ok(num / den.max(f64::MIN_POSITIVE))
}

/// Symmetric `U` with `U^2 = I + 2E`; the stress laws depend on `F` only
/// through `C`, so `U` stands in for any `F` with the same strain.
fn stretch_from_strain(e: &Mat2) -> Result<Mat2> {
    let c = Mat2::identity() + 2.0 * e;
    let eig = nalgebra::SymmetricEigen::new(c);
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(
            "strain perturbation leaves C indefinite".into(),
        ));
    }
    let sq = Mat2::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(eig.eigenvectors * sq * eig.eigenvectors.transpose())
}
