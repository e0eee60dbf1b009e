//! Edit-quality metrics and a manifest-driven benchmark harness.

mod metrics;

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::dsl;
use crate::geom::Vec2;
use crate::llm::{self, LlmConfig};
use crate::par;
use crate::pipeline;
use crate::render::{depth_order, rasterize};
use crate::scene::{load_motions, load_scene, MotionParams, Scene};
use crate::{Error, Result};

pub use metrics::{
    chamfer, chamfer_relative, chamfer_scene, chamfer_segments, edited_segments, image_mse, SizeNorm,
};

/// One benchmark case as written in the manifest.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCase {
    pub name: String,
    pub scene: PathBuf,
    #[serde(default)]
    pub program: Option<PathBuf>,
    #[serde(default)]
    pub request: Option<String>,
    #[serde(default)]
    pub gt_motions: Option<PathBuf>,
    #[serde(default)]
    pub gt_scene: Option<PathBuf>,
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    #[serde(default, rename = "case")]
    cases: Vec<BenchCase>,
}

/// Cases with paths resolved against the manifest's directory.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub path: PathBuf,
    pub cases: Vec<BenchCase>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Manifest> {
        let doc: ManifestDoc = toml::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
        let mut cases = doc.cases;
        for c in &mut cases {
            let gt = c.gt_motions.is_some() as usize + c.gt_scene.is_some() as usize;
            if gt != 1 {
                return Err(Error::Parse(format!(
                    "manifest case `{}`: give exactly one of gt_motions or gt_scene",
                    c.name
                )));
            }
            if c.program.is_none() && c.request.is_none() {
                return Err(Error::Parse(format!("manifest case `{}`: needs a program or a request", c.name)));
            }
            let fix = |p: &mut PathBuf| *p = base.join(&*p);
            fix(&mut c.scene);
            c.program.as_mut().map(fix);
            c.gt_motions.as_mut().map(fix);
            c.gt_scene.as_mut().map(fix);
        }
        Ok(Manifest {
            path: base.to_path_buf(),
            cases,
        })
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut m = Manifest::parse(&text, base)?;
        m.path = path.to_path_buf();
        Ok(m)
    }
}

/// Where each case's program comes from.
#[derive(Clone, Debug)]
pub enum RunMode {
    /// Hand-written program files.
    Offline,
    /// Generated from the case's request; falls back to the program file when
    /// a case has no request.
    Llm(LlmConfig),
}

/// Search variants compared by the ablation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    /// Every relation kept ST.
    NoRelationSearch,
    /// Every unpinned segment given TRS.
    NoMotionSearch,
}

impl Ablation {
    pub const ALL: [Ablation; 3] = [Ablation::Full, Ablation::NoRelationSearch, Ablation::NoMotionSearch];

    pub fn apply(self, cfg: &Config) -> Config {
        let mut c = cfg.clone();
        c.search.relation_search = self != Ablation::NoRelationSearch;
        c.search.motion_search = self != Ablation::NoMotionSearch;
        c
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoRelationSearch => "no relation search",
            Ablation::NoMotionSearch => "no motion search",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CaseRow {
    pub name: String,
    pub tags: Vec<String>,
    pub cd: Option<f64>,
    pub mse: Option<f64>,
    /// Final mean violation.
    pub score: Option<f64>,
    pub solves: usize,
    pub flags: Vec<String>,
    pub states: Option<String>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub variant: String,
    pub rows: Vec<CaseRow>,
    /// Over cases that finished with a CD value.
    pub mean_cd: Option<f64>,
    pub mean_mse: Option<f64>,
    /// Names of cases left out of the means.
    pub excluded: Vec<String>,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl BenchReport {
    pub fn new(variant: &str, rows: Vec<CaseRow>) -> Self {
        BenchReport {
            variant: variant.to_string(),
            mean_cd: mean(rows.iter().filter_map(|r| r.cd)),
            mean_mse: mean(rows.iter().filter_map(|r| r.mse)),
            excluded: rows.iter().filter(|r| r.cd.is_none()).map(|r| r.name.clone()).collect(),
            rows,
        }
    }

    pub fn row(&self, name: &str) -> Option<&CaseRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// Aligned text table with one row per case and a mean row.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
        let w = self.rows.iter().map(|r| r.name.len()).chain([4]).max().unwrap();
        let mut s = String::new();
        writeln!(s, "variant: {}", self.variant).unwrap();
        writeln!(s, "{:<w$}  {:>8}  {:>10}  {:>9}  {:>6}  {:>7}  note", "case", "CD", "MSE", "score", "solves", "secs")
            .unwrap();
        for r in &self.rows {
            let note = r.error.clone().unwrap_or_else(|| r.flags.join(", "));
            writeln!(
                s,
                "{:<w$}  {:>8}  {:>10}  {:>9}  {:>6}  {:>7.2}  {}",
                r.name,
                fmt(r.cd, 4),
                fmt(r.mse, 1),
                fmt(r.score, 4),
                r.solves,
                r.seconds,
                note.lines().next().unwrap_or("")
            )
            .unwrap();
        }
        writeln!(s, "{:<w$}  {:>8}  {:>10}", "mean", fmt(self.mean_cd, 4), fmt(self.mean_mse, 1)).unwrap();
        if !self.excluded.is_empty() {
            writeln!(s, "excluded: {}", self.excluded.join(", ")).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

fn ground_truth(case: &BenchCase, scene: &Scene, cfg: &Config) -> Result<GroundTruth> {
    if let Some(p) = &case.gt_motions {
        return Ok(GroundTruth::Motions(load_motions(p, scene)?));
    }
    let p = case.gt_scene.as_ref().expect("manifest guarantees one ground truth");
    let gt = load_scene(p, &cfg.scene)?;
    if gt.len() != scene.len() {
        return Err(Error::Invalid(format!(
            "ground-truth scene has {} segments, source has {}",
            gt.len(),
            scene.len()
        )));
    }
    Ok(GroundTruth::Scene(gt))
}

enum GroundTruth {
    Motions(Vec<MotionParams>),
    Scene(Scene),
}

fn program_for(case: &BenchCase, scene: &Scene, mode: &RunMode, cfg: &Config) -> Result<dsl::ConstraintProgram> {
    if let (RunMode::Llm(llm_cfg), Some(req)) = (mode, &case.request) {
        let graph = pipeline::relations(scene, cfg);
        return Ok(llm::request_program(req, scene, &graph, llm_cfg)?.programs.remove(0));
    }
    let path = case
        .program
        .as_ref()
        .ok_or_else(|| Error::Invalid("case has a request but no program file (offline mode)".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dsl::parse(&text, scene).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Runs one case end to end and scores it.
pub fn run_case(case: &BenchCase, mode: &RunMode, cfg: &Config) -> CaseRow {
    let start = Instant::now();
    let mut row = CaseRow {
        name: case.name.clone(),
        tags: case.tags.clone(),
        ..Default::default()
    };
    let res = (|| -> Result<()> {
        let scene = load_scene(&case.scene, &cfg.scene)?;
        let gt = ground_truth(case, &scene, cfg)?;
        let program = program_for(case, &scene, mode, cfg)?;
        let (_, out) = pipeline::solve_program(&scene, &program, cfg)?;
        let pred = &out.result.motions;
        row.score = Some(out.result.score);
        row.solves = out.report.solves;
        row.flags = out.result.flags.clone();
        row.states = Some(out.states.to_string());
        let pred_order = depth_order(&scene, pred, &cfg.render)?;
        let pred_img = rasterize(&scene, pred, &pred_order, None)?;
        match gt {
            GroundTruth::Motions(gm) => {
                row.cd = Some(chamfer_scene(&scene, pred, &gm, cfg.size_norm)?);
                let order = depth_order(&scene, &gm, &cfg.render)?;
                row.mse = Some(image_mse(&pred_img, &rasterize(&scene, &gm, &order, None)?)?);
            }
            GroundTruth::Scene(gs) => {
                let ids: Vec<usize> = (0..scene.len())
                    .filter(|&i| !pred[i].is_identity() || gs.segments[i].samples != scene.segments[i].samples)
                    .collect();
                let p: Vec<Vec<Vec2>> = ids.iter().map(|&i| pred[i].apply_all(&scene.segments[i].samples)).collect();
                let g: Vec<Vec<Vec2>> = ids.iter().map(|&i| gs.segments[i].samples.clone()).collect();
                row.cd = Some(chamfer_segments(&p, &g, cfg.size_norm)?);
                let rest = gs.rest_motions();
                let order = depth_order(&gs, &rest, &cfg.render)?;
                row.mse = Some(image_mse(&pred_img, &rasterize(&gs, &rest, &order, None)?)?);
            }
        }
        Ok(())
    })();
    if let Err(e) = res {
        warn!("case {}: {e}", case.name);
        row.error = Some(e.to_string());
        row.cd = None;
        row.mse = None;
    }
    row.seconds = start.elapsed().as_secs_f64();
    info!("case {} done in {:.2}s", case.name, row.seconds);
    row
}

/// Runs every case (in parallel unless configured otherwise); failures are
/// recorded per case.
pub fn run_manifest(manifest: &Manifest, mode: &RunMode, cfg: &Config, ablation: Ablation) -> BenchReport {
    let cfg = ablation.apply(cfg);
    let rows = par::map(cfg.exec, &manifest.cases, |c| run_case(c, mode, &cfg));
    BenchReport::new(ablation.label(), rows)
}

/// Full method and both ablations, in that order.
pub fn run_ablations(manifest: &Manifest, mode: &RunMode, cfg: &Config) -> Vec<BenchReport> {
    Ablation::ALL.iter().map(|a| run_manifest(manifest, mode, cfg, *a)).collect()
}

/// Per-case CD side by side for several reports of the same manifest.
pub fn comparison_table(reports: &[BenchReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let w = first.rows.iter().map(|r| r.name.len()).chain([4]).max().unwrap();
    let cw = reports.iter().map(|r| r.variant.len()).max().unwrap_or(0).max(8);
    let mut s = format!("{:<w$}", "case");
    for r in reports {
        write!(s, "  {:>cw$}", r.variant).unwrap();
    }
    s.push('\n');
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for row in &first.rows {
        write!(s, "{:<w$}", row.name).unwrap();
        for r in reports {
            write!(s, "  {:>cw$}", cell(r.row(&row.name).and_then(|x| x.cd))).unwrap();
        }
        s.push('\n');
    }
    write!(s, "{:<w$}", "mean").unwrap();
    for r in reports {
        write!(s, "  {:>cw$}", cell(r.mean_cd)).unwrap();
    }
    s.push('\n');
    s
}
