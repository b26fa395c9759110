//! Simulation and accounting for two mining-pool tactics.
//!
//! * **Shutdown**: a pool idles part of its hash power for one retarget
//!   period so the next period's difficulty, and with it the per-block
//!   cost, drops for everyone. See [`period`] and [`sweep`].
//! * **Towing**: during a chain split, a pool abandons the branch it saw
//!   first to mine on an accomplice's branch, raising that branch's chance
//!   of winning. See [`fork`] and [`race`].
//!
//! [`scenario`] loads JSON scenario files and renders reports for the
//! `mining-tactics` command-line tool.

pub mod difficulty;
pub mod error;
pub mod exec;
pub mod fork;
pub mod model;
pub mod period;
pub mod race;
pub mod report;
pub mod scenario;
pub mod sweep;

pub use error::{Error, Result};
pub use exec::Backend;
pub use model::{BranchId, Btc, Difficulty, EconomicParams, HashRate, HashSchedule, Pool, PoolId};
