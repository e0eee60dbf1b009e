use std::fmt::Write;

use super::{Message, ALTERNATIVE_DELIMITER};
use crate::dsl::ops;
use crate::relations::{Category, RelationEdge, RelationGraph, RelationKind};
use crate::scene::Scene;
use crate::Error;

/// Bundled question/answer exchanges shown to the model before the request.
pub const DEFAULT_FEW_SHOT: &str = include_str!("../../assets/fewshot.txt");

const REFERENCE: &[(&str, &str)] = &[
    ("translate", "translate(S): S may move"),
    ("rotate", "rotate(S): S may rotate"),
    ("scale", "scale(S): S may scale"),
    ("stay", "stay(S): S must not move"),
    ("adjust", "adjust(S): S may move, rotate and scale to keep the scene coherent"),
    ("equal", "equal(a, b): numbers a and b are equal"),
    ("smaller", "smaller(a, b): a < b"),
    ("larger", "larger(a, b): a > b"),
    ("coincide_on_point", "coincide_on_point(S1, p1, S2, p2): the points p1 of S1 and p2 of S2 coincide"),
    ("inside", "inside(S1, S2): S1 lies inside S2"),
    ("touch", "touch(S1, S2): boundaries touch"),
    ("overlap", "overlap(S1, S2): S1 and S2 overlap"),
    ("detach", "detach(S1, S2): S1 and S2 are apart"),
    ("on_top", "on_top(S1, S2): S1 is above S2"),
    ("on_bottom", "on_bottom(S1, S2): S1 is below S2"),
    ("on_left", "on_left(S1, S2): S1 is left of S2"),
    ("on_right", "on_right(S1, S2): S1 is right of S2"),
    ("plus", "plus(a, b) or a + b"),
    ("minus", "minus(a, b) or a - b"),
    ("mul", "mul(a, b) or a * b"),
    ("div", "div(a, b) or a / b"),
    ("min", "min(a, b)"),
    ("max", "max(a, b)"),
    ("vert_len", "vert_len(S) (alias vertical_length): bounding-box height"),
    ("hori_len", "hori_len(S) (alias horizontal_length): bounding-box width"),
    ("center_x", "center_x(S)"),
    ("center_y", "center_y(S)"),
    ("long_dir_x", "long_dir_x(S): x of the principal axis direction"),
    ("long_dir_y", "long_dir_y(S)"),
    ("short_dir_x", "short_dir_x(S): x of the secondary axis direction"),
    ("short_dir_y", "short_dir_y(S)"),
    ("min_x", "min_x(S)"),
    ("min_y", "min_y(S)"),
    ("max_x", "max_x(S)"),
    ("max_y", "max_y(S)"),
    ("old", "old(S) (alias old_copy): S as it was before editing"),
    ("top", "top(S) (alias top_inner_region): upper band of S"),
    ("bot", "bot(S) (alias bottom_inner_region)"),
    ("left", "left(S) (alias left_inner_region)"),
    ("right", "right(S) (alias right_inner_region)"),
    ("avg_dist", "avg_dist(S1, S2): mean boundary distance"),
    ("min_dist", "min_dist(S1, S2)"),
    ("max_dist", "max_dist(S1, S2)"),
    ("angle", "angle(S1, S2): direction from S1's centre to S2's centre, degrees"),
    ("center_dist", "center_dist(S1, S2) (alias center_distance)"),
    ("union", "union(S1, S2, ...): all listed segments as one"),
    ("inter", "inter(S1, S2): shared part of S1 and S2"),
];

/// Model instructions: the full operator reference plus output rules.
pub fn system_text(alternatives: usize) -> String {
    let mut s = String::from(
        "You edit 2D icon scenes by writing constraint programs. Segments are named segK.\n\
         Coordinates are pixels, x to the right and y downwards.\n\nOperators:\n",
    );
    for name in ops::inventory() {
        let line = REFERENCE.iter().find(|(n, _)| *n == name).map_or(name, |(_, l)| l);
        writeln!(s, "- {line}").unwrap();
    }
    s.push_str(
        "\nRules:\n\
         - Write one statement per line.\n\
         - List the segments that should move with translate, rotate, scale or adjust.\n\
         - Express only what the request asks for; connected parts are kept together automatically.\n\
         - Answer with the program inside a single ``` code block and nothing else.\n",
    );
    if alternatives > 1 {
        writeln!(
            s,
            "- Give {alternatives} different interpretations, separated by a line `{ALTERNATIVE_DELIMITER}`."
        )
        .unwrap();
    }
    s
}

fn num(v: f64) -> String {
    let r = (v * 10.0).round() / 10.0;
    if r.fract() == 0.0 {
        format!("{r:.0}")
    } else {
        format!("{r:.1}")
    }
}

fn kind_name(k: RelationKind) -> &'static str {
    match k {
        RelationKind::Inside => "inside",
        RelationKind::Contain => "contain",
        RelationKind::Overlap => "overlap",
    }
}

/// Labels, bounding boxes and connections; boundary geometry is left out.
pub fn build_scene_summary(scene: &Scene, graph: &RelationGraph) -> String {
    let mut s = String::new();
    for seg in &scene.segments {
        let b = seg.bbox();
        let (x0, y0, x1, y1) = (num(b.min_x), num(b.min_y), num(b.max_x), num(b.max_y));
        writeln!(s, "seg{}:{} bbox=[({x0},{y0}),({x1},{y0}),({x1},{y1}),({x0},{y1})]", seg.id, seg.label).unwrap();
    }
    for e in &graph.edges {
        writeln!(s, "seg{} connected-to seg{} ({})", e.a, e.b, kind_name(e.kind)).unwrap();
    }
    s
}

/// One worked example.
#[derive(Clone, Debug, PartialEq)]
pub struct FewShot {
    pub request: String,
    pub scene: String,
    pub program: String,
}

impl FewShot {
    fn user_text(request: &str, scene: &str) -> String {
        format!("Scene:\n{}\nRequest: {}", scene.trim_end(), request.trim())
    }
}

/// Reads `### request / ### scene / ### program` sections.
pub fn parse_few_shot(text: &str) -> Result<Vec<FewShot>, Error> {
    let mut out = Vec::new();
    let mut cur: Option<(String, String, String)> = None;
    let mut field = "";
    for (n, line) in text.lines().enumerate() {
        if let Some(head) = line.strip_prefix("###") {
            field = match head.trim() {
                "request" => {
                    if let Some(done) = cur.take() {
                        out.push(done);
                    }
                    cur = Some(Default::default());
                    "request"
                }
                "scene" => "scene",
                "program" => "program",
                other => return Err(Error::Parse(format!("few-shot line {}: unknown section `{other}`", n + 1))),
            };
            if cur.is_none() {
                return Err(Error::Parse(format!("few-shot line {}: section before any request", n + 1)));
            }
            continue;
        }
        let Some(c) = cur.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::Parse(format!("few-shot line {}: text outside a section", n + 1)));
        };
        let target = match field {
            "request" => &mut c.0,
            "scene" => &mut c.1,
            _ => &mut c.2,
        };
        target.push_str(line);
        target.push('\n');
    }
    out.extend(cur);
    out.into_iter()
        .enumerate()
        .map(|(i, (request, scene, program))| {
            let ex = FewShot {
                request: request.trim().to_string(),
                scene: scene.trim().to_string(),
                program: program.trim().to_string(),
            };
            if ex.request.is_empty() || ex.program.is_empty() {
                return Err(Error::Parse(format!("few-shot example {} lacks a request or program", i + 1)));
            }
            Ok(ex)
        })
        .collect()
}

/// Everything sent to the model for one request.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    pub system: String,
    pub few_shot: Vec<FewShot>,
    pub scene_summary: String,
    pub request: String,
}

impl PromptBundle {
    pub fn new(request: &str, scene: &Scene, graph: &RelationGraph, alternatives: usize) -> Self {
        PromptBundle {
            system: system_text(alternatives),
            few_shot: parse_few_shot(DEFAULT_FEW_SHOT).expect("bundled few-shot file is well formed"),
            scene_summary: build_scene_summary(scene, graph),
            request: request.to_string(),
        }
    }

    /// System message, one user/assistant pair per example, then the request.
    pub fn messages(&self) -> Vec<Message> {
        let mut m = vec![Message::new("system", self.system.clone())];
        for ex in &self.few_shot {
            m.push(Message::new("user", FewShot::user_text(&ex.request, &ex.scene)));
            m.push(Message::new("assistant", format!("```\n{}\n```", ex.program)));
        }
        m.push(Message::new("user", FewShot::user_text(&self.request, &self.scene_summary)));
        m
    }
}

/// Prompt asking the model which same-object connections are essential.
/// Answers are expected as one `segA segB yes|no` line per listed pair.
pub fn crucial_prompt(scene: &Scene, graph: &RelationGraph) -> String {
    let mut s = String::from(
        "For each pair of connected parts of the same object below, answer whether the \
         connection is essential to the object's structure (moving one part without the \
         other would break the object). Reply with one line `segA segB yes` or `segA segB no` per pair.\n\n",
    );
    s.push_str(&build_scene_summary(scene, graph));
    s.push_str("\nPairs:\n");
    let intra = |e: &&RelationEdge| e.category != Category::Inter;
    for e in graph.edges.iter().filter(intra) {
        writeln!(s, "seg{} seg{}", e.a, e.b).unwrap();
    }
    s
}
