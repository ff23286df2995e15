//! A desk-scale laboratory for pairwise affinity losses in box-supervised
//! segmentation.
//!
//! The crate implements the asymmetric pairwise affinity loss (a δ-offset,
//! γ-modulated variant of the plain −log P edge loss) together with the
//! machinery needed to study it end to end without training a network:
//!
//! - [`loss`] — per-edge probability, asymmetric loss, closed-form gradients
//!   and the γ-bound analysis;
//! - [`graph`] — dilated pixel-pair edges, depth-gradient and color
//!   qualification, per-direction affinity maps;
//! - [`projection`] — mask max-projections and the Dice-based box loss with
//!   its sign-split gradient;
//! - [`objective`] — the composite objective with warmup and analytic
//!   gradients in logit space;
//! - [`scene`] — seeded synthetic scenes with affine-depth objects, plus
//!   metrics (IoU, box fill ratio, boundary F);
//! - [`optimize`] — plain gradient descent on a per-instance logit grid and
//!   δ×γ sweeps;
//! - [`landscape`] — loss-surface sampling and local-minima counting;
//! - [`io`] / [`cli`] — deterministic file formats and the command-line
//!   surface;
//! - [`gradcheck`] — the finite-difference oracle suite.

pub mod cli;
pub mod color;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod grid;
pub mod io;
pub mod landscape;
pub mod loss;
pub mod objective;
pub mod optimize;
pub mod projection;
pub mod scene;

pub use error::{Error, Result};
