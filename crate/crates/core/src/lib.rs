//! Column-structured spectral-element dynamical core and storage-layout
//! performance model.

pub mod mesh;
pub mod reference;
pub mod storage;
pub mod dynamics;
pub mod time;
pub mod perf;
pub mod harness;

pub use dynamics::{Discretization, GasConstants, PhaseTimes};
pub use harness::{BubbleConfig, HarnessError, Problem, RunReport};
pub use mesh::{CgNumbering, ColumnMesh, MetricTerms, Partition};
pub use perf::{CostLedger, KernelCost, MachineModel, SimConfig};
pub use reference::ReferenceElement;
pub use storage::{Layout, Scheme, Snapshot, StateCg, StateDg};
pub use time::{RkScheme, SemiDiscrete};
