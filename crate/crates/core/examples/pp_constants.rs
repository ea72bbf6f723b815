//! Regenerates `data/pp_adjustment.csv` by simulation.
//!
//!     cargo run --release --example pp_constants -- [units] [out]

use panel_ecm::longrun::{simulate_adjustment_constants, AdjustmentTable, FirstStage, POOLED_REFERENCE_WIDTH};
use rayon::prelude::*;

const PERIODS: [usize; 12] = [8, 10, 12, 15, 20, 25, 30, 40, 50, 100, 250, 500];

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let units: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let out = args.get(2).cloned().unwrap_or_else(|| "data/pp_adjustment.csv".into());

    let jobs: Vec<(FirstStage, usize, usize)> = [FirstStage::UnitByUnit, FirstStage::Pooled]
        .into_iter()
        .flat_map(|st| (0..=7usize).flat_map(move |m| PERIODS.iter().map(move |&t| (st, m, t))))
        // too few residual degrees of freedom otherwise
        .filter(|&(_, m, t)| t >= m + 3)
        .collect();
    let rows: Vec<_> = jobs
        .into_par_iter()
        .map(|(st, m, t)| {
            let stage_offset = if st == FirstStage::Pooled { 1 << 20 } else { 0 };
            let seed = 0x5eed_0000 + stage_offset + (m as u64) * 1000 + t as u64;
            (st, m, t, simulate_adjustment_constants(st, m, t, units, seed))
        })
        .collect();
    let mut table = AdjustmentTable::default();
    for (st, m, t, sims) in rows {
        for (v, mean, var) in sims {
            table.insert(v, st, m, t, mean, var);
        }
    }
    let note = format!(
        "Standardization constants for the residual-based panel PP t statistics.\n\
         Simulated under no cointegration with {units} units per cell: random-walk\n\
         regressors, Bartlett kernel with bandwidth floor(4 (T/100)^(2/9)).\n\
         first_stage=unit: one levels regression with intercept per unit.\n\
         first_stage=pooled: common slopes with region effects on panels of\n\
         {POOLED_REFERENCE_WIDTH} units. `periods` is the sample length T;\n\
         T = 500 approximates the asymptotic values."
    );
    std::fs::write(&out, table.to_csv(&note)).expect("write table");
    eprintln!("wrote {out}");
}
