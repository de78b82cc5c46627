use std::fmt::Write as _;

/// Metrics recorded after one outer iteration (iteration 0 is the start point).
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    /// Fractional-programming objective with freshly updated auxiliaries (nats).
    pub fp_objective: f64,
    /// True sum rate (bit/s/Hz).
    pub sum_rate: f64,
    /// Linear SCNR.
    pub scnr: f64,
    /// Transmit power (W).
    pub power: f64,
    /// Final `‖θ − φ‖` of the last RIS update in this iteration.
    pub sadmm_residual: f64,
    /// Seconds since the solver started.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub entries: Vec<TraceEntry>,
    /// Whether the relative-change stop fired before the iteration budget ran out.
    pub converged: bool,
}

impl SolverTrace {
    /// Number of outer iterations performed.
    pub fn iterations(&self) -> usize {
        self.entries.last().map_or(0, |e| e.iter)
    }

    /// CSV with columns `iter, sum_rate_bps_hz, scnr_db, power_w, sadmm_residual`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,sum_rate_bps_hz,scnr_db,power_w,sadmm_residual\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{:.12e},{:.12e},{:.12e},{:.6e}",
                e.iter,
                e.sum_rate,
                10.0 * e.scnr.log10(),
                e.power,
                e.sadmm_residual
            );
        }
        s
    }
}
