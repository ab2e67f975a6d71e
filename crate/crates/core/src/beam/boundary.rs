use crate::linalg::Mat;

/// Clamped end at ξ = 0, force and moment inputs at ξ = 1, in boundary
/// flow/effort coordinates.
pub fn boundary_matrices() -> (Mat, Mat) {
    let s = 1.0 / 2f64.sqrt();
    let w0 = Mat::from_row_slice(
        2,
        8,
        &[-1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0],
    ) * s;
    let wb = Mat::from_row_slice(
        2,
        8,
        &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
    ) * s;
    (w0, wb)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryCheck {
    pub rank: usize,
    pub product_norm: f64,
}

impl BoundaryCheck {
    pub fn passes(&self) -> bool {
        self.rank == 4 && self.product_norm <= 1e-14
    }
}

/// Rank of `[W₀; W_B]` and the norm of `[W₀; W_B] Σ [W₀; W_B]ᵀ`, `Σ = [[0, I], [I, 0]]`.
pub fn boundary_check(w0: &Mat, wb: &Mat) -> BoundaryCheck {
    let mut w = Mat::zeros(4, 8);
    w.view_mut((0, 0), (2, 8)).copy_from(w0);
    w.view_mut((2, 0), (2, 8)).copy_from(wb);
    let mut sigma = Mat::zeros(8, 8);
    for i in 0..4 {
        sigma[(i, i + 4)] = 1.0;
        sigma[(i + 4, i)] = 1.0;
    }
    let prod = &w * sigma * w.transpose();
    BoundaryCheck {
        rank: w.rank(1e-12),
        product_norm: prod.norm(),
    }
}

pub fn check_boundary_matrices() -> bool {
    let (w0, wb) = boundary_matrices();
    boundary_check(&w0, &wb).passes()
}
