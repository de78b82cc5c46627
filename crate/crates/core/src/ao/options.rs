use crate::error::{IsacError, Result};
use crate::scenario::{parse_kv_lines, parse_num};

/// Symmetric ADMM settings of the RIS block.
#[derive(Debug, Clone, PartialEq)]
pub struct SadmmOptions {
    /// Penalty weight of the augmented Lagrangian.
    pub mu_pen: f64,
    /// Dual stepsize after the unit-modulus update.
    pub r1: f64,
    /// Dual stepsize after the quadratic update.
    pub r2: f64,
    pub max_iters: usize,
    /// Stop once `‖θ − φ‖` falls below this.
    pub primal_tol: f64,
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(IsacError::Config(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

impl Default for SadmmOptions {
    fn default() -> Self {
        Self {
            mu_pen: 1.0,
            r1: 0.9,
            r2: 0.9,
            max_iters: 100,
            primal_tol: 1e-6,
        }
    }
}

impl SadmmOptions {
    /// Whether `(r1, r2)` lies in the convergence region of symmetric ADMM.
    pub fn stepsizes_admissible(&self) -> bool {
        let (r1, r2) = (self.r1, self.r2);
        let golden = 0.5 * (1.0 + 5f64.sqrt());
        r1 > -1.0
            && r1 < 1.0
            && r2 > 0.0
            && r2 < golden
            && r1 + r2 > 0.0
            && r1.abs() < 1.0 + r2 - r2 * r2
    }
}

/// Successive convex approximation settings of the offset block.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaOptions {
    /// Cyclic sweeps over all offsets per block update.
    pub max_passes: usize,
    /// Majorize-minimize steps per offset within one sweep.
    pub inner_steps: usize,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            max_passes: 2,
            inner_steps: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    /// Outer stop on relative change of the sum rate.
    pub rel_tol: f64,
    pub sadmm: SadmmOptions,
    pub sca: ScaOptions,
    /// Relative width of the final multiplier bracket in every QCQP solve.
    pub qcqp_tol: f64,
    /// Majorization steps per RIS block update.
    pub ris_mm_steps: usize,
    /// Iteration budget of the SCNR-only search used to find a feasible start.
    pub warm_start_iters: usize,
    /// Enforce the SCNR threshold; disabled for the communication-only baseline.
    pub enforce_scnr: bool,
    /// Optimize the frequency offsets; disabled when they are pinned.
    pub optimize_offsets: bool,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_outer_iters: 30,
            rel_tol: 1e-3,
            sadmm: SadmmOptions::default(),
            sca: ScaOptions::default(),
            qcqp_tol: 1e-12,
            ris_mm_steps: 3,
            warm_start_iters: 10,
            enforce_scnr: true,
            optimize_offsets: true,
            seed: 1,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.sadmm.stepsizes_admissible() {
            return Err(IsacError::Config(format!(
                "SADMM stepsizes ({}, {}) outside the convergence region",
                self.sadmm.r1, self.sadmm.r2
            )));
        }
        if !(self.sadmm.mu_pen > 0.0) {
            return Err(IsacError::Config("sadmm_mu_pen must be positive".into()));
        }
        if !(self.rel_tol > 0.0) || !(self.qcqp_tol > 0.0) {
            return Err(IsacError::Config("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 {
            return Err(IsacError::Config("max_outer_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets one option from its textual form. Returns `false` for unknown keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let v = value.trim();
        match key.trim() {
            "max_outer_iters" => self.max_outer_iters = parse_num(key, v)?,
            "rel_tol" => self.rel_tol = parse_num(key, v)?,
            "sadmm_mu_pen" => self.sadmm.mu_pen = parse_num(key, v)?,
            "sadmm_r1" => self.sadmm.r1 = parse_num(key, v)?,
            "sadmm_r2" => self.sadmm.r2 = parse_num(key, v)?,
            "sadmm_max_iters" => self.sadmm.max_iters = parse_num(key, v)?,
            "sadmm_primal_tol" => self.sadmm.primal_tol = parse_num(key, v)?,
            "sca_max_passes" => self.sca.max_passes = parse_num(key, v)?,
            "sca_inner_steps" => self.sca.inner_steps = parse_num(key, v)?,
            "qcqp_tol" => self.qcqp_tol = parse_num(key, v)?,
            "ris_mm_steps" => self.ris_mm_steps = parse_num(key, v)?,
            "warm_start_iters" => self.warm_start_iters = parse_num(key, v)?,
            "enforce_scnr" => self.enforce_scnr = parse_bool(key, v)?,
            "optimize_offsets" => self.optimize_offsets = parse_bool(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Applies every recognised `key = value` line; other keys are ignored so
    /// that scenario and solver settings can share one file.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_kv_lines(text)? {
            self.set(&k, &v)?;
        }
        self.validate()
    }
}
