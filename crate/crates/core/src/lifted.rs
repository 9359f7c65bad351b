//! The 15-dimensional lifted kinematics.
//!
//! Stacking position, velocity and the three rows of the body-to-world
//! rotation into one vector turns the rigid-body kinematics with constant
//! body-frame inputs into a linear time-invariant system `ẋ = A x + b`,
//! whose one-step transition is the block-triangular matrix `e^A`.

use nalgebra::{SMatrix, SVector};

use crate::error::{ensure_finite3, Error, Result};
use crate::so3::{mat_e, mat_gamma, mat_lambda, skew, Mat3, RotationMatrix, Vec3};

pub type Mat15 = SMatrix<f64, 15, 15>;
pub type Vec15 = SVector<f64, 15>;

/// `[p; v; r1; r2; r3]` where `r_i` is the i-th row of the body-to-world
/// rotation (equivalently the i-th column of world-to-body).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LiftedState {
    pub p: Vec3,
    pub v: Vec3,
    pub r: [Vec3; 3],
}

impl LiftedState {
    pub fn new(p: Vec3, v: Vec3, body_to_world: &RotationMatrix) -> Self {
        let m = body_to_world.matrix();
        let row = |i: usize| m.row(i).transpose();
        LiftedState {
            p,
            v,
            r: [row(0), row(1), row(2)],
        }
    }

    /// Body-to-world rotation reassembled from the rows. Not re-projected.
    pub fn rotation_matrix(&self) -> Mat3 {
        Mat3::from_rows(&[
            self.r[0].transpose(),
            self.r[1].transpose(),
            self.r[2].transpose(),
        ])
    }

    pub fn to_vector(&self) -> Vec15 {
        let mut x = Vec15::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.p);
        x.fixed_rows_mut::<3>(3).copy_from(&self.v);
        for (i, r) in self.r.iter().enumerate() {
            x.fixed_rows_mut::<3>(6 + 3 * i).copy_from(r);
        }
        x
    }

    pub fn from_vector(x: &Vec15) -> Self {
        let seg = |i: usize| Vec3::from(x.fixed_rows::<3>(3 * i));
        LiftedState {
            p: seg(0),
            v: seg(1),
            r: [seg(2), seg(3), seg(4)],
        }
    }
}

/// `Âᵢ(a)`: zero except row `i`, which holds `aᵀ`, so that
/// `Σᵢ Âᵢ(a) rᵢ = R a` for the rows `rᵢ` of `R`.
pub fn a_hat(i: usize, a: &Vec3) -> Mat3 {
    let mut m = Mat3::zeros();
    m.set_row(i, &a.transpose());
    m
}

fn set_block(m: &mut Mat15, row: usize, col: usize, block: &Mat3) {
    m.fixed_view_mut::<3, 3>(3 * row, 3 * col).copy_from(block);
}

/// Block `(row, col)` of a 15×15 matrix, in units of 3×3 blocks.
pub fn block(m: &Mat15, row: usize, col: usize) -> Mat3 {
    m.fixed_view::<3, 3>(3 * row, 3 * col).into_owned()
}

/// The lifted system matrix `A(s, a, w)`.
///
/// ```text
/// [ 0  sI  0    0    0   ]
/// [ 0  0   Â₁   Â₂   Â₃  ]
/// [ 0  0  −w^∧  0    0   ]
/// [ 0  0   0   −w^∧  0   ]
/// [ 0  0   0    0   −w^∧ ]
/// ```
pub fn build_a(s: f64, a: &Vec3, w: &Vec3) -> Mat15 {
    let mut m = Mat15::zeros();
    set_block(&mut m, 0, 1, &(Mat3::identity() * s));
    let minus_w = -skew(w);
    for i in 0..3 {
        set_block(&mut m, 1, 2 + i, &a_hat(i, a));
        set_block(&mut m, 2 + i, 2 + i, &minus_w);
    }
    m
}

/// Closed form of `exp(build_a(s, a, theta))`.
pub fn exp_a_closed(s: f64, a: &Vec3, theta: &Vec3) -> Mat15 {
    let neg = -theta;
    let lambda = mat_lambda(&neg) * s;
    let gamma = mat_gamma(&neg);
    let e = mat_e(&neg).into_inner();

    let mut m = Mat15::zeros();
    set_block(&mut m, 0, 0, &Mat3::identity());
    set_block(&mut m, 0, 1, &(Mat3::identity() * s));
    set_block(&mut m, 1, 1, &Mat3::identity());
    for i in 0..3 {
        let ai = a_hat(i, a);
        set_block(&mut m, 0, 2 + i, &(ai * lambda));
        set_block(&mut m, 1, 2 + i, &(ai * gamma));
        set_block(&mut m, 2 + i, 2 + i, &e);
    }
    m
}

/// Truncated Maclaurin series `Σ_{k=0}^{terms} Aᵏ/k!`.
pub fn exp_a_series(a: &Mat15, terms: usize) -> Mat15 {
    let mut sum = Mat15::identity();
    let mut term = Mat15::identity();
    for k in 1..=terms {
        term = term * a / k as f64;
        sum += term;
    }
    sum
}

/// One step of the switched linear system,
/// `x ← e^{A(Δt, Δt·a, ω·Δt)} x + [g Δt²/2; g Δt; 0; 0; 0]`.
pub fn propagate_lifted(
    state: &LiftedState,
    dt: f64,
    a: &Vec3,
    w: &Vec3,
    g: &Vec3,
) -> Result<LiftedState> {
    if !dt.is_finite() {
        return Err(Error::NonFinite("dt"));
    }
    if dt <= 0.0 {
        return Err(Error::NonPositiveStep(dt));
    }
    ensure_finite3(a, "acceleration")?;
    ensure_finite3(w, "angular velocity")?;
    ensure_finite3(g, "gravity")?;
    let x = state.to_vector();
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("lifted state"));
    }

    let transition = exp_a_closed(dt, &(a * dt), &(w * dt));
    let mut next = transition * x;
    let mut drift = next.fixed_rows_mut::<3>(0);
    drift += g * (0.5 * dt * dt);
    let mut kick = next.fixed_rows_mut::<3>(3);
    kick += g * dt;
    Ok(LiftedState::from_vector(&next))
}
