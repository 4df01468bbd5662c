//! Class vocabularies and per-episode ground truth for the three tasks:
//! atomic actions, temporally composed action pairs, and the snitch's final
//! grid cell.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::program::{ActionInstance, ActionProgram, ActionType, Interval};
use crate::sim::EpisodeTimeline;
use crate::world::{affords, Shape};
use crate::{Error, Result};

pub const N_ATOMIC: usize = 14;
pub const N_BEFORE: usize = N_ATOMIC * N_ATOMIC;
pub const N_DURING: usize = N_ATOMIC * (N_ATOMIC + 1) / 2;
pub const N_COMPOSITE: usize = N_BEFORE + N_DURING;

/// Points this far outside the plane are clamped onto it before quantizing.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// An afforded `(shape, action)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomicClass {
    pub shape: Shape,
    pub action: ActionType,
}

impl AtomicClass {
    pub fn name(&self) -> String {
        format!("{}({})", self.action.name(), self.shape.name())
    }
}

/// The 14 atomic classes sorted by shape, then action.
pub fn atomic_vocab() -> Vec<AtomicClass> {
    let mut out = Vec::with_capacity(N_ATOMIC);
    for shape in Shape::ALL {
        for action in ActionType::ALL {
            if affords(shape, action) {
                out.push(AtomicClass { shape, action });
            }
        }
    }
    out
}

pub fn atomic_index(shape: Shape, action: ActionType) -> Option<usize> {
    let target = AtomicClass { shape, action };
    atomic_vocab().iter().position(|c| *c == target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BroadRelation {
    Before,
    During,
    After,
}

impl BroadRelation {
    pub const ALL: [BroadRelation; 3] = [
        BroadRelation::Before,
        BroadRelation::During,
        BroadRelation::After,
    ];

    pub fn converse(self) -> Self {
        match self {
            BroadRelation::Before => BroadRelation::After,
            BroadRelation::During => BroadRelation::During,
            BroadRelation::After => BroadRelation::Before,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BroadRelation::Before => "before",
            BroadRelation::During => "during",
            BroadRelation::After => "after",
        }
    }
}

/// Three-way grouping of Allen's interval relations. Intervals that only
/// share an endpoint ("meets") count as ordered, any other overlap as `During`.
pub fn broad_relation(a: Interval, b: Interval) -> BroadRelation {
    if a.end <= b.start {
        BroadRelation::Before
    } else if b.end <= a.start {
        BroadRelation::After
    } else {
        BroadRelation::During
    }
}

/// A canonical `(a, relation, b)` triple over atomic class indices:
/// `After` is stored as the converse `Before`, `During` with `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CompositeClass {
    pub a: u8,
    pub relation: BroadRelation,
    pub b: u8,
}

impl CompositeClass {
    pub fn canonical(a: usize, relation: BroadRelation, b: usize) -> Self {
        let (a, relation, b) = match relation {
            BroadRelation::After => (b, BroadRelation::Before, a),
            BroadRelation::During if a > b => (b, BroadRelation::During, a),
            _ => (a, relation, b),
        };
        Self {
            a: a as u8,
            relation,
            b: b as u8,
        }
    }

    /// Position in [`composite_vocab`]: all ordered `Before` pairs first,
    /// then the unordered `During` pairs.
    pub fn index(&self) -> usize {
        let (a, b) = (self.a as usize, self.b as usize);
        match self.relation {
            BroadRelation::Before => a * N_ATOMIC + b,
            BroadRelation::During => N_BEFORE + a * N_ATOMIC - a * (a.saturating_sub(1)) / 2 + (b - a),
            BroadRelation::After => Self::canonical(a, BroadRelation::After, b).index(),
        }
    }

    pub fn name(&self) -> String {
        let vocab = atomic_vocab();
        format!(
            "{} {} {}",
            vocab[self.a as usize].name(),
            self.relation.name(),
            vocab[self.b as usize].name()
        )
    }
}

/// The 301 canonical composite classes in index order.
pub fn composite_vocab() -> Vec<CompositeClass> {
    let mut out = Vec::with_capacity(N_COMPOSITE);
    for a in 0..N_ATOMIC {
        for b in 0..N_ATOMIC {
            out.push(CompositeClass::canonical(a, BroadRelation::Before, b));
        }
    }
    for a in 0..N_ATOMIC {
        for b in a..N_ATOMIC {
            out.push(CompositeClass::canonical(a, BroadRelation::During, b));
        }
    }
    out
}

/// Fixed-length multi-hot label vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiHot(pub Vec<bool>);

impl MultiHot {
    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![false; len])
    }

    pub fn from_positives(len: usize, positives: impl IntoIterator<Item = usize>) -> Self {
        let mut out = Self::zeros(len);
        for i in positives {
            out.0[i] = true;
        }
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize) {
        self.0[i] = true;
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|b| **b).count()
    }

    pub fn positives(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }
}

/// Atomic class index of one action.
pub fn action_class(program: &ActionProgram, action: &ActionInstance) -> usize {
    let shape = program.scene.spec(action.actor_id).shape;
    atomic_index(shape, action.action).expect("validated programs only contain afforded actions")
}

pub fn derive_task1(program: &ActionProgram) -> MultiHot {
    MultiHot::from_positives(
        N_ATOMIC,
        program.actions.iter().map(|a| action_class(program, a)),
    )
}

/// Sets the composite bit of every ordered pair of distinct actions.
pub fn derive_task2(program: &ActionProgram) -> MultiHot {
    let classes: Vec<(usize, Interval)> = program
        .actions
        .iter()
        .map(|a| (action_class(program, a), a.interval))
        .collect();
    let mut out = MultiHot::zeros(N_COMPOSITE);
    for (i, (ca, ia)) in classes.iter().enumerate() {
        for (cb, ib) in &classes[i + 1..] {
            out.set(CompositeClass::canonical(*ca, broad_relation(*ia, *ib), *cb).index());
        }
    }
    out
}

/// Row/column of a grid cell; row follows `y`, column follows `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCell {
    pub row: u32,
    pub col: u32,
}

impl GridCell {
    pub fn index(&self, grid: u32) -> usize {
        (self.row * grid + self.col) as usize
    }

    pub fn from_index(index: usize, grid: u32) -> Self {
        let index = index as u32;
        Self {
            row: index / grid,
            col: index % grid,
        }
    }

    pub fn l1(&self, other: &GridCell) -> u32 {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    /// Center of the cell on the plane.
    pub fn center(&self, grid: u32, half_extent: f64) -> Point2 {
        let size = 2.0 * half_extent / f64::from(grid);
        Point2::new(
            -half_extent + (f64::from(self.col) + 0.5) * size,
            -half_extent + (f64::from(self.row) + 0.5) * size,
        )
    }
}

fn axis_bin(v: f64, grid: u32, half_extent: f64) -> u32 {
    let v = v.clamp(-half_extent, half_extent);
    let bin = libm::floor((v + half_extent) * f64::from(grid) / (2.0 * half_extent));
    (bin as u32).min(grid - 1)
}

/// Cell of `p` on a `grid x grid` tiling of `[-h, h]^2`. Cells are half-open
/// `[lo, hi)` except the last one per axis, which also takes `hi`.
pub fn quantize_cell(p: Point2, grid: u32, half_extent: f64) -> Result<GridCell> {
    let limit = half_extent + CLAMP_TOLERANCE;
    if !(p.x.abs() <= limit && p.y.abs() <= limit) {
        return Err(Error::OutOfPlane { x: p.x, y: p.y });
    }
    Ok(GridCell {
        row: axis_bin(p.y, grid, half_extent),
        col: axis_bin(p.x, grid, half_extent),
    })
}

/// Row-major cell index of `p`.
pub fn quantize(p: Point2, grid: u32, half_extent: f64) -> Result<usize> {
    quantize_cell(p, grid, half_extent).map(|c| c.index(grid))
}

pub fn derive_task3(timeline: &EpisodeTimeline, grid: u32, half_extent: f64) -> Result<usize> {
    let last = timeline
        .snitch_track
        .last()
        .ok_or_else(|| Error::InvalidProgram("empty timeline".into()))?;
    quantize(*last, grid, half_extent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub episode_id: u64,
    pub task1: MultiHot,
    pub task2: MultiHot,
    pub task3: usize,
    pub grid_resolution: u32,
}

pub fn derive_labels(
    episode_id: u64,
    program: &ActionProgram,
    timeline: &EpisodeTimeline,
    grid: u32,
) -> Result<LabelRecord> {
    Ok(LabelRecord {
        episode_id,
        task1: derive_task1(program),
        task2: derive_task2(program),
        task3: derive_task3(timeline, grid, program.config.plane_half_extent)?,
        grid_resolution: grid,
    })
}
