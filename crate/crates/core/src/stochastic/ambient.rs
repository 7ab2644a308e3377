use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{gen_ou_pair, split_seed, MeasurementSeries, OuLoadConfig};
use crate::error::{Error, Result};
use crate::model::{solve_port, PortState, TheveninParams};

const LOOP_TOL: f64 = 1e-10;
const LOOP_MAX_ITER: usize = 50;

/// Thévenin parameters as a function of sample index and time.
pub trait TepSchedule: Sync {
    fn tep_at(&self, t: f64) -> TheveninParams;
}

/// Time-invariant network.
#[derive(Debug, Clone, Copy)]
pub struct ConstantTep(pub TheveninParams);

impl TepSchedule for ConstantTep {
    fn tep_at(&self, _t: f64) -> TheveninParams {
        self.0
    }
}

/// Linear reactance drift, a step in source voltage, and piecewise-constant
/// multiplicative jitter on all three parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftJumpSchedule {
    pub base: TheveninParams,
    /// Reactance reached at `drift_end` (Ω), ramped linearly from `base.x_th`
    /// starting at t = 0.
    pub x_th_end: f64,
    pub drift_end: f64,
    /// Source voltage after `jump_time` (kV).
    pub e_th_after: f64,
    pub jump_time: f64,
    /// Jitter standard deviation as a fraction of the current parameter value.
    pub jitter_frac: f64,
    /// Interval (s) over which one jitter draw is held.
    pub jitter_period: f64,
    pub seed: u64,
}

impl DriftJumpSchedule {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let ok = self.x_th_end > 0.0
            && self.drift_end > 0.0
            && self.e_th_after > 0.0
            && self.jump_time.is_finite()
            && self.jitter_frac >= 0.0
            && self.jitter_period > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid schedule {self:?}")))
        }
    }

    /// Parameters without jitter.
    pub fn nominal_at(&self, t: f64) -> TheveninParams {
        let frac = (t / self.drift_end).clamp(0.0, 1.0);
        TheveninParams {
            e_th: if t >= self.jump_time { self.e_th_after } else { self.base.e_th },
            r_th: self.base.r_th,
            x_th: self.base.x_th + frac * (self.x_th_end - self.base.x_th),
        }
    }
}

impl TepSchedule for DriftJumpSchedule {
    fn tep_at(&self, t: f64) -> TheveninParams {
        let nominal = self.nominal_at(t);
        if self.jitter_frac == 0.0 {
            return nominal;
        }
        let period = (t / self.jitter_period).floor().max(0.0) as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(self.seed, period));
        let mut jit = || -> f64 {
            let z: f64 = StandardNormal.sample(&mut rng);
            1.0 + self.jitter_frac * z
        };
        TheveninParams { e_th: nominal.e_th * jit(), r_th: nominal.r_th * jit(), x_th: nominal.x_th * jit() }
    }
}

/// Clean ambient measurements of a fixed network driven by O-U load noise.
pub fn simulate_ambient(
    tep: &TheveninParams,
    cfg: &OuLoadConfig,
    n: usize,
    ts: f64,
    seed: u64,
) -> Result<MeasurementSeries> {
    tep.validate()?;
    simulate_scheduled(&ConstantTep(*tep), cfg, n, ts, seed)
}

/// Clean ambient measurements with time-varying Thévenin parameters.
///
/// The voltage-dependent load closes an algebraic loop with the circuit,
/// solved per step by fixed-point iteration from the previous voltage.
pub fn simulate_scheduled(
    schedule: &dyn TepSchedule,
    cfg: &OuLoadConfig,
    n: usize,
    ts: f64,
    seed: u64,
) -> Result<MeasurementSeries> {
    let (eta_p, eta_q) = gen_ou_pair(cfg, n, ts, seed)?;
    let v0 = solve_port(&schedule.tep_at(0.0), cfg.p0, cfg.q0)?.v_mag;
    let cpl = cfg.gamma_p == 0.0 && cfg.gamma_q == 0.0;

    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut i = Vec::with_capacity(n);
    let mut v_prev = v0;
    for k in 0..n {
        let tep = schedule.tep_at(k as f64 * ts);
        let p_dem = cfg.p0 + eta_p[k];
        let q_dem = cfg.q0 + eta_q[k];
        let state = if cpl {
            solve_port(&tep, p_dem, q_dem)?
        } else {
            solve_load_loop(&tep, cfg, p_dem, q_dem, v0, v_prev, k)?
        };
        v_prev = state.v_mag;
        p.push(state.p);
        q.push(state.q);
        v.push(state.v_mag);
        i.push(state.i_mag);
    }
    MeasurementSeries::new(ts, 0.0, p, q, v, i)
}

fn solve_load_loop(
    tep: &TheveninParams,
    cfg: &OuLoadConfig,
    p_dem: f64,
    q_dem: f64,
    v0: f64,
    v_guess: f64,
    step: usize,
) -> Result<PortState> {
    let mut v = v_guess;
    for _ in 0..LOOP_MAX_ITER {
        let ratio = v / v0;
        let p = p_dem * ratio.powf(cfg.gamma_p);
        let q = q_dem * ratio.powf(cfg.gamma_q);
        let state = solve_port(tep, p, q)?;
        if ((state.v_mag - v) / v).abs() < LOOP_TOL {
            return Ok(state);
        }
        v = state.v_mag;
    }
    Err(Error::AlgebraicLoopDiverged { step })
}
