//! Joint gradient-based optimization of the free motion parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dsl::Constraint;
use crate::error::{Error, Result};
use crate::eval::{compile_all, total_loss, EvalConfig, EvalContext, ParamIndex, Slot};
use crate::scene::{MotionParams, Scene};

/// Which parameters of a segment may move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MotionState {
    N,
    T,
    TR,
    TS,
    TRS,
}

impl MotionState {
    /// Candidate order of the motion pass, most permissive first.
    pub const FLIP_ORDER: [MotionState; 5] = [MotionState::TRS, MotionState::TR, MotionState::TS, MotionState::T, MotionState::N];

    pub fn free(self) -> [bool; 5] {
        let (t, r, s) = match self {
            MotionState::N => (false, false, false),
            MotionState::T => (true, false, false),
            MotionState::TR => (true, true, false),
            MotionState::TS => (true, false, true),
            MotionState::TRS => (true, true, true),
        };
        [t, t, r, s, s]
    }

    pub fn dofs(self) -> usize {
        self.free().iter().filter(|f| **f).count()
    }

    /// Smallest state admitting translation plus the given extras.
    pub fn with(rotate: bool, scale: bool) -> Self {
        match (rotate, scale) {
            (false, false) => MotionState::T,
            (true, false) => MotionState::TR,
            (false, true) => MotionState::TS,
            (true, true) => MotionState::TRS,
        }
    }

    pub fn rotates(self) -> bool {
        matches!(self, MotionState::TR | MotionState::TRS)
    }

    pub fn scales(self) -> bool {
        matches!(self, MotionState::TS | MotionState::TRS)
    }
}

impl fmt::Display for MotionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveConfig {
    pub max_iters: usize,
    pub lr0: f64,
    pub lr_decay: f64,
    pub lr_floor: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Stop once the loss drops below this.
    pub eps_conv: f64,
    /// Stop when the best loss improved by less than this fraction over `stall_window` iterations.
    pub min_rel_improvement: f64,
    pub stall_window: usize,
    /// Step multipliers for translation (px), rotation (degrees) and log-scale.
    pub lr_scale: [f64; 3],
    pub record_trace: bool,
    pub eval: EvalConfig,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            max_iters: 150,
            lr0: 10.0,
            lr_decay: 0.97,
            lr_floor: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            eps_conv: 1e-3,
            min_rel_improvement: 1e-6,
            stall_window: 20,
            lr_scale: [1.0, 1.0, 0.01],
            record_trace: false,
            eval: EvalConfig::default(),
        }
    }
}

impl SolveConfig {
    pub fn check(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::Config("lr0 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub motions: Vec<MotionParams>,
    /// Best mean violation seen.
    pub score: f64,
    pub iters_used: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

pub const FLAG_UNSATISFIABLE: &str = "unsatisfiable under states";

fn slot_lr(cfg: &SolveConfig, slot: Slot) -> f64 {
    match slot {
        Slot::Tx | Slot::Ty => cfg.lr_scale[0],
        Slot::Theta => cfg.lr_scale[1],
        Slot::Sx | Slot::Sy => cfg.lr_scale[2],
    }
}

/// A plateau: neither the best nor the current loss moved over the window.
/// Adam oscillating across a kink keeps the loss moving, so it continues.
fn stalled(history: &[(f64, f64)], cfg: &SolveConfig) -> bool {
    let w = cfg.stall_window;
    if history.len() <= w {
        return false;
    }
    let recent = &history[history.len() - 1 - w..];
    let (old_best, best) = (recent[0].1, recent[w].1);
    let tol = cfg.min_rel_improvement * old_best.abs().max(1e-12);
    let lo = recent.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = recent.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    old_best - best <= tol && hi - lo <= tol
}

/// Solve from identity.
pub fn solve(scene: &Scene, constraints: &[Constraint], states: &[MotionState], cfg: &SolveConfig) -> Result<SolveResult> {
    let init: Vec<MotionParams> = scene.segments.iter().map(|s| MotionParams::identity(s.pivot)).collect();
    solve_from(scene, constraints, states, &init, cfg)
}

/// Solve starting at `init`; segments in state N are reset to identity.
///
/// Derived memberships (regions, intersections) are frozen at the start pose.
pub fn solve_from(
    scene: &Scene,
    constraints: &[Constraint],
    states: &[MotionState],
    init: &[MotionParams],
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    cfg.check()?;
    if states.len() != scene.len() || init.len() != scene.len() {
        return Err(Error::Invalid(format!(
            "expected {} motion states and start motions, got {} and {}",
            scene.len(),
            states.len(),
            init.len()
        )));
    }
    let free: Vec<[bool; 5]> = states.iter().map(|s| s.free()).collect();
    let index = ParamIndex::from_free(&free);
    let mut motions: Vec<MotionParams> = init
        .iter()
        .zip(states)
        .zip(&scene.segments)
        .map(|((m, st), seg)| if *st == MotionState::N { MotionParams::identity(seg.pivot) } else { *m })
        .collect();
    for m in &mut motions {
        m.sx = m.sx.clamp(MotionParams::MIN_SCALE, MotionParams::MAX_SCALE);
        m.sy = m.sy.clamp(MotionParams::MIN_SCALE, MotionParams::MAX_SCALE);
    }
    let mut ctx = EvalContext::new(scene, motions.clone(), index.clone(), cfg.eval.clone());
    let compiled = compile_all(&ctx, constraints)?;
    if compiled.is_empty() {
        return Ok(SolveResult {
            motions,
            score: 0.0,
            iters_used: 0,
            flags: vec![],
            trace: cfg.record_trace.then(Vec::new),
        });
    }

    let entries = index.entries().to_vec();
    let (lo, hi) = (MotionParams::MIN_SCALE.ln(), MotionParams::MAX_SCALE.ln());
    let read = |ms: &[MotionParams]| -> Vec<f64> {
        entries
            .iter()
            .map(|&(s, slot)| match slot {
                Slot::Tx => ms[s].tx,
                Slot::Ty => ms[s].ty,
                Slot::Theta => ms[s].theta,
                Slot::Sx => ms[s].sx.ln(),
                Slot::Sy => ms[s].sy.ln(),
            })
            .collect()
    };
    let write = |x: &[f64], ms: &mut [MotionParams]| {
        for (&(s, slot), v) in entries.iter().zip(x) {
            match slot {
                Slot::Tx => ms[s].tx = *v,
                Slot::Ty => ms[s].ty = *v,
                Slot::Theta => ms[s].theta = *v,
                Slot::Sx => ms[s].sx = v.exp(),
                Slot::Sy => ms[s].sy = v.exp(),
            }
        }
    };

    let mut x = read(&motions);
    let mut m1 = vec![0.0; x.len()];
    let mut m2 = vec![0.0; x.len()];
    let mut best = f64::INFINITY;
    let mut best_motions = motions.clone();
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut steps = 0usize;

    loop {
        let loss = total_loss(&ctx, &compiled)?;
        let value = loss.total.value;
        if let Some(t) = trace.as_mut() {
            t.push(value);
        }
        if value < best {
            best = value;
            best_motions = ctx.motions.clone();
        }
        history.push((value, best));
        if x.is_empty() || value < cfg.eps_conv || steps >= cfg.max_iters || stalled(&history, cfg) {
            break;
        }
        steps += 1;
        let t = steps as i32;
        let lr = (cfg.lr0 * cfg.lr_decay.powi(t - 1)).max(cfg.lr_floor);
        for (k, &(s, slot)) in entries.iter().enumerate() {
            let mut g = loss.total.grad[k];
            match slot {
                Slot::Sx => g *= ctx.motions[s].sx,
                Slot::Sy => g *= ctx.motions[s].sy,
                _ => {}
            }
            m1[k] = cfg.beta1 * m1[k] + (1.0 - cfg.beta1) * g;
            m2[k] = cfg.beta2 * m2[k] + (1.0 - cfg.beta2) * g * g;
            let mh = m1[k] / (1.0 - cfg.beta1.powi(t));
            let vh = m2[k] / (1.0 - cfg.beta2.powi(t));
            x[k] -= lr * slot_lr(cfg, slot) * mh / (vh.sqrt() + cfg.adam_eps);
            if matches!(slot, Slot::Sx | Slot::Sy) {
                x[k] = x[k].clamp(lo, hi);
            }
        }
        let mut ms = ctx.motions.clone();
        write(&x, &mut ms);
        ctx.set_motions(ms);
    }

    let mut flags = Vec::new();
    if index.is_empty() && best > cfg.eps_conv {
        flags.push(FLAG_UNSATISFIABLE.to_string());
    }
    Ok(SolveResult {
        motions: best_motions,
        score: best,
        iters_used: steps,
        flags,
        trace,
    })
}
