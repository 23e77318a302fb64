//! Dense complex matrix kernels shared by every other module.

mod eig;
mod expm;
mod matrix;

pub use eig::{
    HermEig, herm_eig, herm_fun, invert, pinv_solve, sigma_ratio, smallest_dominating_lambda,
    solve_square, svd_norm,
};
pub use expm::{mat_exp, mat_exp_frechet};
pub use matrix::{C64, CMatrix};
