//! Batch learning on recursive kernel stacks.
//!
//! One kernel ridge regressor is fitted per tap and their outputs are combined
//! with weights learned by regressing the targets on the per-tap predictions
//! (stacking). Composite-average and single-kernel regressors serve as
//! baselines. Test-time kernels are obtained by continuing the recursion over
//! the training sequence and its continuation.

mod grid;
mod krr;
mod model;
mod stacking;

pub use grid::{evaluate_on_test, grid_search, BatchMethod, Grid, GridPoint, GridResult, TestOutcome};
pub use krr::{krr_fit, krr_fit_with_loo, KrrFit};
pub use model::{
    stacked_predict, train_batch, train_batch_with, train_composite, CompositeModel, StackedBatchModel,
    StackingFeatures,
};
pub use stacking::{fit_stacking, StackingConfig};
