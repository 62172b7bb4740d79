use std::fmt;

use super::{TaskTrace, VuTrace};
use crate::{Money, VuClass};

/// Descriptive statistics of a generated or ingested workload.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub vus_per_class: [usize; 3],
    pub mean_declared_stay_min: [f64; 3],
    pub mean_actual_stay_min: [f64; 3],
    pub tasks: usize,
    pub mean_exec_min: f64,
    pub mean_laxity_min: f64,
    /// Nearest-rank price quantiles at 10%, 50% and 90%.
    pub price_quantiles: [Money; 3],
    pub offered_revenue: Money,
}

pub const PRICE_QUANTILES: [f64; 3] = [0.1, 0.5, 0.9];

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl TraceSummary {
    pub fn of(vus: &VuTrace, tasks: &TaskTrace) -> Self {
        let mut count = [0usize; 3];
        let mut declared = [0.0; 3];
        let mut actual = [0.0; 3];
        for v in &vus.vus {
            let i = v.class.index();
            count[i] += 1;
            declared[i] += v.declared_stay_min as f64;
            actual[i] += (v.actual_departure_min - v.arrival_min) as f64;
        }
        let mut prices: Vec<Money> = tasks.tasks.iter().map(|t| t.revenue).collect();
        prices.sort();
        let price_quantiles = PRICE_QUANTILES.map(|q| {
            if prices.is_empty() {
                Money::ZERO
            } else {
                let rank = ((q * prices.len() as f64).ceil() as usize).clamp(1, prices.len());
                prices[rank - 1]
            }
        });
        let n = tasks.len();
        Self {
            vus_per_class: count,
            mean_declared_stay_min: [0, 1, 2].map(|i| mean(declared[i], count[i])),
            mean_actual_stay_min: [0, 1, 2].map(|i| mean(actual[i], count[i])),
            tasks: n,
            mean_exec_min: mean(tasks.tasks.iter().map(|t| t.exec_min as f64).sum(), n),
            mean_laxity_min: mean(tasks.tasks.iter().map(|t| t.laxity_min() as f64).sum(), n),
            price_quantiles,
            offered_revenue: tasks.offered_revenue(),
        }
    }
}

impl fmt::Display for TraceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "VUs: {}", self.vus_per_class.iter().sum::<usize>())?;
        for c in VuClass::ALL {
            let i = c.index();
            writeln!(
                f,
                "  {c}: {} VUs, mean declared stay {:.1} min, mean actual stay {:.1} min",
                self.vus_per_class[i], self.mean_declared_stay_min[i], self.mean_actual_stay_min[i]
            )?;
        }
        writeln!(f, "tasks: {}", self.tasks)?;
        writeln!(f, "  mean exec {:.1} min, mean laxity {:.1} min", self.mean_exec_min, self.mean_laxity_min)?;
        let [p10, p50, p90] = self.price_quantiles;
        writeln!(f, "  price p10 {p10}, p50 {p50}, p90 {p90}")?;
        write!(f, "  offered revenue {}", self.offered_revenue)
    }
}
