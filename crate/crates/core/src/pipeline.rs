//! Scene + program in, edited motions and image out.

use log::{info, warn};

use crate::config::Config;
use crate::dsl::{self, ConstraintProgram};
use crate::raster::RgbImage;
use crate::relations::{build_graph, BridgeHeuristic, RelationGraph};
use crate::render::{depth_order, rasterize, DepthOrder};
use crate::scene::Scene;
use crate::search::{flip_and_solve, SearchOutcome};
use crate::{Error, Result};

pub struct EditOutcome {
    pub graph: RelationGraph,
    pub search: SearchOutcome,
    pub order: DepthOrder,
    pub image: RgbImage,
}

pub fn relations(scene: &Scene, cfg: &Config) -> RelationGraph {
    build_graph(scene, &cfg.relations, &BridgeHeuristic)
}

/// Validates the program, detects relations and runs the state search.
pub fn solve_program(
    scene: &Scene,
    program: &ConstraintProgram,
    cfg: &Config,
) -> Result<(RelationGraph, SearchOutcome)> {
    let report = dsl::validate(program, scene);
    for w in &report.warnings {
        warn!("{w}");
    }
    if !report.is_ok() {
        return Err(Error::Invalid(report.errors.join("; ")));
    }
    let graph = relations(scene, cfg);
    info!("{} relations detected", graph.edges.len());
    let out = flip_and_solve(scene, program, &graph, &cfg.search)?;
    info!(
        "search finished: score {:.4} after {} solves; states {}",
        out.result.score, out.report.solves, out.states
    );
    for f in &out.result.flags {
        warn!("{f}");
    }
    Ok((graph, out))
}

/// The full edit: solve, depth-order the result, render it.
pub fn edit(scene: &Scene, program: &ConstraintProgram, cfg: &Config, size: Option<(usize, usize)>) -> Result<EditOutcome> {
    let (graph, search) = solve_program(scene, program, cfg)?;
    let order = depth_order(scene, &search.result.motions, &cfg.render)?;
    if !order.broken.is_empty() {
        warn!("{} depth constraint(s) dropped to break cycles", order.broken.len());
    }
    let image = rasterize(scene, &search.result.motions, &order, size)?;
    Ok(EditOutcome {
        graph,
        search,
        order,
        image,
    })
}
