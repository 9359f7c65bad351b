//! Skew-matrix algebra and the three rotation-series matrices.
//!
//! For a rotation vector `θ` with `z = ‖θ‖`, every matrix here is a
//! quadratic in `θ^∧`:
//!
//! | matrix | `I`  | `θ^∧`     | `(θ^∧)²`     |
//! |--------|------|-----------|--------------|
//! | `E`    | 1    | h1/z      | h2/z²        |
//! | `Γ`    | 1    | h2/z²     | h3/z³        |
//! | `Λ`    | 1/2  | h3/z³     | h4/(2z⁴)     |
//!
//! with `h1 = sin z`, `h2 = 1 − cos z`, `h3 = z − sin z`,
//! `h4 = 2cos z − 2 + z²`. Equivalently `E = Σ (θ^∧)ᵏ/k!`,
//! `Γ = Σ (θ^∧)ᵏ/(k+1)!` and `Λ = Σ (θ^∧)ᵏ/(k+2)!`.

use nalgebra::{DMatrix, Matrix3, Rotation3, Vector3};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Orthonormal 3×3 matrix with determinant +1.
pub type RotationMatrix = Rotation3<f64>;

/// Below this angle the coefficient ratios switch to their Taylor expansions.
pub const SMALL_ANGLE: f64 = 1e-4;

/// The cross-product matrix: `skew(w) * v == w.cross(&v)`.
pub fn skew(w: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -w.z, w.y, //
        w.z, 0.0, -w.x, //
        -w.y, w.x, 0.0,
    )
}

/// `(h1, h2, h3, h4)` evaluated at `z`.
///
/// `h2` and `h4` are computed through `sin²(z/2)`, which is the same function
/// without the cancellation of `1 − cos z` for small `z`.
pub fn h_functions(z: f64) -> [f64; 4] {
    let s = (0.5 * z).sin();
    let h2 = 2.0 * s * s;
    [z.sin(), h2, z - z.sin(), z * z - 2.0 * h2]
}

/// Coefficient ratios `[h1/z, h2/z², h3/z³, h4/(2z⁴)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Ratios([f64; 4]);

impl Ratios {
    fn new(z: f64) -> Self {
        if z < SMALL_ANGLE {
            Self::taylor(z)
        } else {
            Self::closed_form(z)
        }
    }

    fn closed_form(z: f64) -> Self {
        let [h1, h2, h3, h4] = h_functions(z);
        let z2 = z * z;
        Ratios([h1 / z, h2 / z2, h3 / (z2 * z), h4 / (2.0 * z2 * z2)])
    }

    fn taylor(z: f64) -> Self {
        let z2 = z * z;
        Ratios([
            1.0 - z2 / 6.0,
            0.5 - z2 / 24.0,
            1.0 / 6.0 - z2 / 120.0,
            1.0 / 24.0 - z2 / 720.0,
        ])
    }
}

fn quadratic(c0: f64, c1: f64, c2: f64, theta: &Vec3) -> Mat3 {
    let k = skew(theta);
    Mat3::identity() * c0 + k * c1 + k * k * c2
}

/// `E(θ) = exp(θ^∧)`, the Rodrigues rotation of the rotation vector `θ`.
pub fn mat_e(theta: &Vec3) -> RotationMatrix {
    let Ratios([c1, c2, _, _]) = Ratios::new(theta.norm());
    RotationMatrix::from_matrix_unchecked(quadratic(1.0, c1, c2, theta))
}

/// `Γ(θ)`; maps a body-frame acceleration held over one step to the exact
/// velocity increment (in units of `Δt`).
pub fn mat_gamma(theta: &Vec3) -> Mat3 {
    let Ratios([_, c2, c3, _]) = Ratios::new(theta.norm());
    quadratic(1.0, c2, c3, theta)
}

/// `Λ(θ)`; the matching position increment (in units of `Δt²`).
pub fn mat_lambda(theta: &Vec3) -> Mat3 {
    let Ratios([_, _, c3, c4]) = Ratios::new(theta.norm());
    quadratic(0.5, c3, c4, theta)
}

/// Largest entry of `|MᵀM − I|`.
pub fn orthonormality_residual(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).abs().max()
}

/// Nearest rotation in the Frobenius sense (`U Vᵀ` of the SVD, with the
/// smallest singular direction flipped if needed to keep `det = +1`).
pub fn project_to_rotation(m: &Mat3) -> RotationMatrix {
    // nalgebra's fixed-size 3x3 SVD goes through the eigenvectors of MᵀM and
    // loses half the digits; the dynamic path runs Golub-Kahan.
    let svd = DMatrix::from_column_slice(3, 3, m.as_slice()).svd(true, true);
    let u = Mat3::from_column_slice(svd.u.expect("requested U").as_slice());
    let v_t = Mat3::from_column_slice(svd.v_t.expect("requested V^T").as_slice());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        // singular values are sorted in descending order
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    polish(RotationMatrix::from_matrix_unchecked(r), m)
}

/// Newton steps on `max tr(Rᵀ m)` over `R ← R E(δ)`. nalgebra's SVD stops
/// at ~1e-11 relative accuracy when singular values are close; two steps
/// bring the rotation to round-off. Steps that would move far (an
/// ill-conditioned or non-unique optimum) are not taken.
fn polish(mut r: RotationMatrix, m: &Mat3) -> RotationMatrix {
    for _ in 0..2 {
        let k = r.matrix().transpose() * m;
        let asym = 0.5 * Vec3::new(k[(2, 1)] - k[(1, 2)], k[(0, 2)] - k[(2, 0)], k[(1, 0)] - k[(0, 1)]);
        let hessian = Mat3::identity() * k.trace() - 0.5 * (k + k.transpose());
        let Some(delta) = hessian.try_inverse().map(|h| 2.0 * h * asym) else {
            break;
        };
        if delta.norm().is_nan() || delta.norm() >= 1e-6 {
            break;
        }
        r = RotationMatrix::from_matrix_unchecked(r.matrix() * mat_e(&delta).matrix());
    }
    r
}

/// Rotation angle in `[0, π]`, well conditioned near 0 and tolerant of
/// round-off that puts the trace slightly outside `[-1, 3]`.
pub fn rotation_angle(r: &RotationMatrix) -> f64 {
    let m = r.matrix();
    let axis = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    (0.5 * axis.norm()).atan2(0.5 * (m.trace() - 1.0))
}
