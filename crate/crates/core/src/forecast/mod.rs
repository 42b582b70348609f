//! Daily traffic forecasting with an additive trend + seasonality + holiday
//! model, and rolling-origin backtests scored by MAPE.

mod backtest;
mod model;
mod series;

pub use backtest::{mape, mape_counted, shf_backtest, BacktestReport, BacktestRow, ShfConfig};
pub use model::{fit, FitConfig, FitDiagnostics, ForecastModel, Regularization, Seasonality};
pub use series::{DailySeries, Holiday, HolidayCalendar};
