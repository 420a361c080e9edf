//! Mock model servers, chain benchmarks and the overhead fit used to
//! measure orchestration cost.

pub mod chain;
pub mod fit;
pub mod mock;
pub mod report;
pub mod rules_check;

pub use chain::{run_chain_benchmark, BenchError, BenchRow, ChainBench, Measurement, Scenario};
pub use fit::{fit_line, fit_linear_overhead, FitError, LinearFit};
pub use mock::{spawn_all_tasks, spawn_mock, MockServer, MockSpec};
