//! Function approximators, optimizer and gradient checking.

pub mod adamw;
pub mod checkpoint;
pub mod gradcheck;
pub mod mdn;
pub mod mlp;
pub mod scaler;
pub mod train;

pub use adamw::AdamW;
pub use checkpoint::Checkpoint;
pub use gradcheck::{check_gradient, GradCheck};
pub use mdn::{Mixture, MixtureDensityParams};
pub use mlp::{gather_rows, mse_loss_grad, rows_to_array, MlpParams};
pub use scaler::Standardizer;
pub use train::{fit_mdn, fit_mse, Fitted, Stage2Target, TrainConfig};
