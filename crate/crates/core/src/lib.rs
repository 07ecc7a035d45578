//! Analog forecasting: find the past segment most concordant with the
//! present, evolve an expression mapping it onto the present, and replay its
//! continuation. Includes an ARIMA baseline and an evaluation harness.

pub mod arima;
pub mod concordance;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod forecaster;
pub mod gp;
pub mod matcher;
pub mod optim;
pub mod rng;
pub mod timeseries;

pub use arima::ArimaModel;
pub use concordance::ConcordanceMeasure;
pub use error::{Error, Result};
pub use evaluation::{EvalCase, EvalReport};
pub use experiment::{print_config, run_experiment, RunConfig};
pub use forecaster::{EnsembleForecast, ForecastResult};
pub use gp::{Expr, GpConfig};
pub use timeseries::{load_csv, Series, Window};
