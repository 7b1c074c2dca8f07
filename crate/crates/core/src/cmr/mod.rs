//! The conditional-moment solver: roll-out models, the two-stage DML-IL
//! fit with cross-fitting, CMR-error estimation and runtime diagnostics.

pub mod diagnostics;
pub mod dml;
pub mod horizon;
pub mod illposed;
pub mod moment;
pub mod policy;
pub mod rollout;
pub mod stage2;
pub mod tv;

pub use diagnostics::{gap_bound_diagnostic, BoundForm, CmrDiagnostics};
pub use dml::{dml_il_train, DmlFit};
pub use horizon::{select_horizon, HorizonOptions, HorizonSelection};
pub use illposed::{ill_posedness_lb, IllPosedness};
pub use moment::{cmr_error, cmr_lag_profile, CmrEstimate, LagProfile};
pub use policy::{predict_windows, HistoryPolicy, Method, Policy};
pub use rollout::{fit_rollout_model, RolloutModel};
pub use stage2::{fit_policy_stage2, PolicyInput};
pub use tv::{tv_shifted_gaussian, tv_stability_constant};
