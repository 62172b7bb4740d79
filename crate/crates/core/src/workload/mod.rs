//! Synthetic VU/task streams, parking-trace ingestion and trace CSV files.

mod config;
mod gen;
mod ingest;
mod io;
mod summary;

pub use config::WorkloadConfig;
pub use gen::{gen_tasks, gen_vus, price};
pub use ingest::{classify_vu, ingest_parking_text, ingest_parking_trace, IngestOptions};
pub use io::{read_task_csv, read_vu_csv, task_csv, vu_csv};
pub use summary::{TraceSummary, PRICE_QUANTILES};

use thiserror::Error;

use crate::model::{ModelError, Task, VehicularUnit};

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {msg}")]
    Validation { line: usize, msg: String },
    #[error("invalid workload configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// VUs ordered by arrival.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VuTrace {
    pub vus: Vec<VehicularUnit>,
}

/// Tasks ordered by arrival.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskTrace {
    pub tasks: Vec<Task>,
}

impl VuTrace {
    pub fn len(&self) -> usize {
        self.vus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vus.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.vus.windows(2).all(|w| w[0].arrival_min <= w[1].arrival_min)
    }
}

impl TaskTrace {
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.tasks.windows(2).all(|w| w[0].arrival_min <= w[1].arrival_min)
    }

    /// Sum of revenue on offer.
    pub fn offered_revenue(&self) -> crate::Money {
        self.tasks.iter().map(|t| t.revenue).sum()
    }
}
