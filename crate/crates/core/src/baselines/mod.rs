//! Policies that do not learn from interaction: the per-step myopic rule,
//! trajectory optimisation over a known day, and its receding-horizon form
//! driven by a learned forecaster.

mod forecast;
mod ilqg;
mod jet;
mod mpc;
mod myopic;

pub use ilqg::{
    ilqg_plan, ilqg_plan_from, ilqg_pomdp_plan, ilqr, myopic_trajectory, rollout, true_cost, IlqgController,
    IlqgPlan, IlqrOutcome, IterRecord, MicrogridPlanModel, PlanModel, SmoothingConfig, UnbalanceModel,
};
pub use forecast::{forecaster_train, BiasedForecast, Forecast, ForecastConfig, ForecastReport, Forecaster, OracleForecast};
pub use jet::Jet;
pub use mpc::MpcController;
pub use myopic::{myopic_action, myopic_pomdp_action, step_cost, MyopicController};
