//! Differentiable evaluation of constraint trees.
//!
//! A constraint is first compiled against the scene (segment expressions become
//! fixed point-set memberships), then evaluated any number of times under
//! different motions. Every value carries its gradient with respect to the
//! active motion parameters.

mod compile;
mod kernels;
#[cfg(test)]
mod tests;

use std::ops::{Add, Mul, Sub};

use crate::geom::Vec2;
use crate::scene::{MotionParams, Scene};

pub use compile::{compile, compile_all, eval_region, eval_setop, CompiledConstraint, LoopRef, PointRef, PointSet};
pub use kernels::{
    eval_attribute, eval_compiled, eval_relation_attr, eval_tree, signed_gap, total_loss, LossBreakdown,
};

/// Motion parameter slots of one segment, in storage order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Tx = 0,
    Ty = 1,
    /// Degrees.
    Theta = 2,
    Sx = 3,
    Sy = 4,
}

impl Slot {
    pub const ALL: [Slot; 5] = [Slot::Tx, Slot::Ty, Slot::Theta, Slot::Sx, Slot::Sy];
}

/// Ordered list of `(segment, slot)` pairs that carry gradients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamIndex {
    entries: Vec<(usize, Slot)>,
    offsets: Vec<[Option<usize>; 5]>,
}

impl ParamIndex {
    /// `free[s][k]` marks slot `k` of segment `s` as active.
    pub fn from_free(free: &[[bool; 5]]) -> Self {
        let mut entries = Vec::new();
        let mut offsets = vec![[None; 5]; free.len()];
        for (s, slots) in free.iter().enumerate() {
            for slot in Slot::ALL {
                if slots[slot as usize] {
                    offsets[s][slot as usize] = Some(entries.len());
                    entries.push((s, slot));
                }
            }
        }
        ParamIndex { entries, offsets }
    }

    /// Every slot of every segment active.
    pub fn all(n_segments: usize) -> Self {
        Self::from_free(&vec![[true; 5]; n_segments])
    }

    pub fn none(n_segments: usize) -> Self {
        Self::from_free(&vec![[false; 5]; n_segments])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, Slot)] {
        &self.entries
    }

    pub fn offset(&self, seg: usize, slot: Slot) -> Option<usize> {
        self.offsets.get(seg).and_then(|o| o[slot as usize])
    }

    fn segment_offsets(&self, seg: usize) -> &[Option<usize>; 5] {
        &self.offsets[seg]
    }
}

/// A value with its gradient over a [`ParamIndex`].
#[derive(Clone, Debug, PartialEq)]
pub struct DiffScalar {
    pub value: f64,
    pub grad: Vec<f64>,
}

impl DiffScalar {
    pub fn constant(value: f64, n: usize) -> Self {
        DiffScalar {
            value,
            grad: vec![0.0; n],
        }
    }

    pub fn scale(mut self, k: f64) -> Self {
        self.value *= k;
        self.grad.iter_mut().for_each(|g| *g *= k);
        self
    }

    fn map(mut self, value: f64, dfdx: f64) -> Self {
        self.value = value;
        self.grad.iter_mut().for_each(|g| *g *= dfdx);
        self
    }

    pub fn abs(self) -> Self {
        let v = self.value;
        let d = if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.map(v.abs(), d)
    }

    pub fn relu(self) -> Self {
        let v = self.value;
        if v > 0.0 {
            self
        } else {
            self.map(0.0, 0.0)
        }
    }

    pub fn min(self, o: Self) -> Self {
        if o.value < self.value {
            o
        } else {
            self
        }
    }

    pub fn max(self, o: Self) -> Self {
        if o.value > self.value {
            o
        } else {
            self
        }
    }

    pub fn mul(self, o: Self) -> Self {
        let grad = self
            .grad
            .iter()
            .zip(&o.grad)
            .map(|(a, b)| a * o.value + b * self.value)
            .collect();
        DiffScalar {
            value: self.value * o.value,
            grad,
        }
    }

    pub fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        let q = self.value * inv;
        let grad = self
            .grad
            .iter()
            .zip(&o.grad)
            .map(|(a, b)| (a - q * b) * inv)
            .collect();
        DiffScalar { value: q, grad }
    }
}

impl Add for DiffScalar {
    type Output = DiffScalar;
    fn add(mut self, o: DiffScalar) -> DiffScalar {
        self.value += o.value;
        self.grad.iter_mut().zip(&o.grad).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for DiffScalar {
    type Output = DiffScalar;
    fn sub(mut self, o: DiffScalar) -> DiffScalar {
        self.value -= o.value;
        self.grad.iter_mut().zip(&o.grad).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul<f64> for DiffScalar {
    type Output = DiffScalar;
    fn mul(self, k: f64) -> DiffScalar {
        self.scale(k)
    }
}

/// Tunables of the violation semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Required penetration for `overlap`, px.
    pub overlap_depth: f64,
    /// Required clearance for `detach`, px.
    pub detach_gap: f64,
    /// Band fraction of the bbox for `top`/`bot`/`left`/`right`.
    pub region_fraction: f64,
    /// Log-sum-exp temperature for the signed-gap minimum; 0 means hard min.
    pub softmin_temperature: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            overlap_depth: 2.0,
            detach_gap: 2.0,
            region_fraction: 0.25,
            softmin_temperature: 0.0,
        }
    }
}

/// Scene, current motions and the active parameter index.
pub struct EvalContext<'a> {
    pub scene: &'a Scene,
    pub motions: Vec<MotionParams>,
    pub index: ParamIndex,
    pub cfg: EvalConfig,
    transformed: Vec<Vec<Vec2>>,
    trig: Vec<(f64, f64)>,
}

impl<'a> EvalContext<'a> {
    pub fn new(scene: &'a Scene, motions: Vec<MotionParams>, index: ParamIndex, cfg: EvalConfig) -> Self {
        assert_eq!(motions.len(), scene.len(), "one motion per segment");
        let mut ctx = EvalContext {
            scene,
            motions,
            index,
            cfg,
            transformed: Vec::new(),
            trig: Vec::new(),
        };
        ctx.refresh();
        ctx
    }

    /// Identity motions, nothing active.
    pub fn at_rest(scene: &'a Scene, cfg: EvalConfig) -> Self {
        let motions = scene
            .segments
            .iter()
            .map(|s| MotionParams::identity(s.pivot))
            .collect();
        Self::new(scene, motions, ParamIndex::none(scene.len()), cfg)
    }

    pub fn set_motions(&mut self, motions: Vec<MotionParams>) {
        self.motions = motions;
        self.refresh();
    }

    fn refresh(&mut self) {
        self.transformed = self
            .scene
            .segments
            .iter()
            .zip(&self.motions)
            .map(|(s, m)| m.apply_all(&s.samples))
            .collect();
        self.trig = self
            .motions
            .iter()
            .map(|m| m.theta.to_radians().sin_cos())
            .collect();
    }

    pub fn n_params(&self) -> usize {
        self.index.len()
    }

    pub fn zero(&self) -> DiffScalar {
        DiffScalar::constant(0.0, self.index.len())
    }

    pub fn constant(&self, v: f64) -> DiffScalar {
        DiffScalar::constant(v, self.index.len())
    }

    /// Current samples of segment `seg`.
    pub fn samples(&self, seg: usize) -> &[Vec2] {
        &self.transformed[seg]
    }

    #[inline]
    pub(crate) fn position(&self, r: PointRef) -> Vec2 {
        if r.frozen {
            self.scene.segments[r.seg].samples[r.idx as usize]
        } else {
            self.transformed[r.seg][r.idx as usize]
        }
    }

    /// Adds `coef · ∂p'/∂θ` for the image `p'` of rest point `rest` under the
    /// motion of `seg`.
    #[inline]
    pub(crate) fn add_point_grad(&self, grad: &mut [f64], seg: usize, rest: Vec2, coef: Vec2) {
        let off = self.index.segment_offsets(seg);
        if off.iter().all(Option::is_none) {
            return;
        }
        let m = &self.motions[seg];
        let (s, c) = self.trig[seg];
        let dx = rest.x - m.pivot.x;
        let dy = rest.y - m.pivot.y;
        if let Some(i) = off[Slot::Tx as usize] {
            grad[i] += coef.x;
        }
        if let Some(i) = off[Slot::Ty as usize] {
            grad[i] += coef.y;
        }
        if let Some(i) = off[Slot::Theta as usize] {
            let qx = m.sx * dx;
            let qy = m.sy * dy;
            let k = std::f64::consts::PI / 180.0;
            grad[i] += k * (coef.x * (-s * qx - c * qy) + coef.y * (c * qx - s * qy));
        }
        if let Some(i) = off[Slot::Sx as usize] {
            grad[i] += coef.x * c * dx + coef.y * s * dx;
        }
        if let Some(i) = off[Slot::Sy as usize] {
            grad[i] += coef.x * (-s * dy) + coef.y * c * dy;
        }
    }

    #[inline]
    pub(crate) fn add_ref_grad(&self, grad: &mut [f64], r: PointRef, coef: Vec2) {
        if !r.frozen {
            let rest = self.scene.segments[r.seg].samples[r.idx as usize];
            self.add_point_grad(grad, r.seg, rest, coef);
        }
    }
}
