//! Every tunable in one place, readable from a plain `key = value` file.

use std::path::Path;
use std::str::FromStr;

use crate::bench::SizeNorm;
use crate::llm::LlmConfig;
use crate::par::Exec;
use crate::relations::RelationConfig;
use crate::render::{OrderMode, RenderConfig};
use crate::scene::SceneConfig;
use crate::search::SearchConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Recorded with every run. The pipeline itself draws no random numbers.
    pub seed: u64,
    pub exec: Exec,
    pub scene: SceneConfig,
    pub relations: RelationConfig,
    pub search: SearchConfig,
    pub render: RenderConfig,
    pub llm: LlmConfig,
    pub size_norm: SizeNorm,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0,
            exec: Exec::Parallel,
            scene: SceneConfig::default(),
            relations: RelationConfig::default(),
            search: SearchConfig::default(),
            render: RenderConfig::default(),
            llm: LlmConfig::default(),
            size_norm: SizeNorm::default(),
        }
    }
}

fn val<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot read `{v}`")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "seed",
    "exec",
    "scene.samples_per_path",
    "scene.proxy_rays",
    "scene.proxy_ratio",
    "scene.proxy_stride",
    "relations.inside_ratio",
    "relations.overlap_min_px",
    "relations.overlap_min_frac",
    "eval.overlap_depth",
    "eval.detach_gap",
    "eval.region_fraction",
    "eval.softmin_temperature",
    "solver.max_iters",
    "solver.lr0",
    "solver.lr_decay",
    "solver.lr_floor",
    "solver.beta1",
    "solver.beta2",
    "solver.adam_eps",
    "solver.eps_conv",
    "solver.min_rel_improvement",
    "solver.stall_window",
    "solver.lr_translate",
    "solver.lr_rotate",
    "solver.lr_log_scale",
    "search.eps_stop",
    "search.delta_tie",
    "search.max_power_set",
    "search.budget",
    "search.warm_start",
    "search.relation_search",
    "search.motion_search",
    "render.max_points",
    "render.tie_band",
    "render.order_mode",
    "llm.endpoint",
    "llm.model",
    "llm.temperature",
    "llm.timeout_secs",
    "llm.max_retries",
    "llm.alternatives",
    "bench.size_norm",
];

impl Config {
    /// Sets one key. Unknown keys are an error.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let solve = &mut self.search.solve;
        match key {
            "seed" => self.seed = val(key, v)?,
            "exec" => {
                self.exec = match v {
                    "parallel" => Exec::Parallel,
                    "sequential" => Exec::Sequential,
                    _ => return Err(Error::Config(format!("`exec`: expected parallel or sequential, got `{v}`"))),
                }
            }
            "scene.samples_per_path" => self.scene.samples_per_path = val(key, v)?,
            "scene.proxy_rays" => self.scene.proxy_rays = val(key, v)?,
            "scene.proxy_ratio" => self.scene.proxy_ratio = val(key, v)?,
            "scene.proxy_stride" => self.scene.proxy_stride = val(key, v)?,
            "relations.inside_ratio" => self.relations.inside_ratio = val(key, v)?,
            "relations.overlap_min_px" => self.relations.overlap_min_px = val(key, v)?,
            "relations.overlap_min_frac" => self.relations.overlap_min_frac = val(key, v)?,
            "eval.overlap_depth" => solve.eval.overlap_depth = val(key, v)?,
            "eval.detach_gap" => solve.eval.detach_gap = val(key, v)?,
            "eval.region_fraction" => solve.eval.region_fraction = val(key, v)?,
            "eval.softmin_temperature" => solve.eval.softmin_temperature = val(key, v)?,
            "solver.max_iters" => solve.max_iters = val(key, v)?,
            "solver.lr0" => solve.lr0 = val(key, v)?,
            "solver.lr_decay" => solve.lr_decay = val(key, v)?,
            "solver.lr_floor" => solve.lr_floor = val(key, v)?,
            "solver.beta1" => solve.beta1 = val(key, v)?,
            "solver.beta2" => solve.beta2 = val(key, v)?,
            "solver.adam_eps" => solve.adam_eps = val(key, v)?,
            "solver.eps_conv" => solve.eps_conv = val(key, v)?,
            "solver.min_rel_improvement" => solve.min_rel_improvement = val(key, v)?,
            "solver.stall_window" => solve.stall_window = val(key, v)?,
            "solver.lr_translate" => solve.lr_scale[0] = val(key, v)?,
            "solver.lr_rotate" => solve.lr_scale[1] = val(key, v)?,
            "solver.lr_log_scale" => solve.lr_scale[2] = val(key, v)?,
            "search.eps_stop" => self.search.eps_stop = val(key, v)?,
            "search.delta_tie" => self.search.delta_tie = val(key, v)?,
            "search.max_power_set" => self.search.max_power_set = val(key, v)?,
            "search.budget" => self.search.budget = val(key, v)?,
            "search.warm_start" => self.search.warm_start = flag(key, v)?,
            "search.relation_search" => self.search.relation_search = flag(key, v)?,
            "search.motion_search" => self.search.motion_search = flag(key, v)?,
            "render.max_points" => self.render.depth.max_points = val(key, v)?,
            "render.tie_band" => self.render.depth.tie_band = val(key, v)?,
            "render.order_mode" => self.render.order_mode = v.parse::<OrderMode>()?,
            "llm.endpoint" => self.llm.endpoint = (!v.is_empty()).then(|| v.to_string()),
            "llm.model" => self.llm.model = v.to_string(),
            "llm.temperature" => self.llm.temperature = val(key, v)?,
            "llm.timeout_secs" => self.llm.timeout_secs = val(key, v)?,
            "llm.max_retries" => self.llm.max_retries = val(key, v)?,
            "llm.alternatives" => self.llm.alternatives = val(key, v)?,
            "bench.size_norm" => self.size_norm = v.parse()?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values. `#` starts a
    /// comment; values may be quoted.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let v = v.trim().trim_matches('"');
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, e.to_string().trim_start_matches("config error: "))))?;
        }
        self.sync();
        self.check()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Config::default();
        cfg.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config error: "))))?;
        Ok(cfg)
    }

    /// Copies the execution mode into every module config.
    pub fn sync(&mut self) {
        self.relations.exec = self.exec;
        self.search.exec = self.exec;
        self.render.exec = self.exec;
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self.sync();
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.scene.samples_per_path < 3 {
            return Err(Error::Config("scene.samples_per_path must be at least 3".into()));
        }
        if !(0.0..=1.0).contains(&self.relations.inside_ratio) {
            return Err(Error::Config("relations.inside_ratio must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.render.depth.tie_band) {
            return Err(Error::Config("render.tie_band must lie in [0, 1)".into()));
        }
        self.search.check()
    }

    /// Every key with its current value, in `key = value` form.
    pub fn dump(&self) -> String {
        let s = &self.search.solve;
        let exec = if self.exec == Exec::Parallel { "parallel" } else { "sequential" };
        let order = match self.render.order_mode {
            OrderMode::Auto => "auto",
            OrderMode::Input => "input",
            OrderMode::InitialConfig => "initial-config",
        };
        let norm = match self.size_norm {
            SizeNorm::BboxDiagonal => "bbox_diagonal",
            SizeNorm::SqrtArea => "sqrt_area",
        };
        let values: Vec<String> = vec![
            self.seed.to_string(),
            exec.into(),
            self.scene.samples_per_path.to_string(),
            self.scene.proxy_rays.to_string(),
            self.scene.proxy_ratio.to_string(),
            self.scene.proxy_stride.to_string(),
            self.relations.inside_ratio.to_string(),
            self.relations.overlap_min_px.to_string(),
            self.relations.overlap_min_frac.to_string(),
            s.eval.overlap_depth.to_string(),
            s.eval.detach_gap.to_string(),
            s.eval.region_fraction.to_string(),
            s.eval.softmin_temperature.to_string(),
            s.max_iters.to_string(),
            s.lr0.to_string(),
            s.lr_decay.to_string(),
            s.lr_floor.to_string(),
            s.beta1.to_string(),
            s.beta2.to_string(),
            s.adam_eps.to_string(),
            s.eps_conv.to_string(),
            s.min_rel_improvement.to_string(),
            s.stall_window.to_string(),
            s.lr_scale[0].to_string(),
            s.lr_scale[1].to_string(),
            s.lr_scale[2].to_string(),
            self.search.eps_stop.to_string(),
            self.search.delta_tie.to_string(),
            self.search.max_power_set.to_string(),
            self.search.budget.to_string(),
            self.search.warm_start.to_string(),
            self.search.relation_search.to_string(),
            self.search.motion_search.to_string(),
            self.render.depth.max_points.to_string(),
            self.render.depth.tie_band.to_string(),
            order.into(),
            self.llm.endpoint.clone().unwrap_or_default(),
            self.llm.model.clone(),
            self.llm.temperature.to_string(),
            self.llm.timeout_secs.to_string(),
            self.llm.max_retries.to_string(),
            self.llm.alternatives.to_string(),
            norm.into(),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let mut c = Config::default();
        c.apply_text("solver.max_iters = 80\nsearch.budget=12 # small\nexec = sequential\nrender.order_mode = \"input\"")
            .unwrap();
        assert_eq!(c.search.solve.max_iters, 80);
        assert_eq!(c.search.budget, 12);
        assert_eq!(c.search.exec, Exec::Sequential);
        let mut again = Config::default();
        again.apply_text(&c.dump()).unwrap();
        assert_eq!(again, c);
        assert_eq!(Config::default().dump().lines().count(), KEYS.len());
    }

    #[test]
    fn bad_lines_name_the_problem() {
        let mut c = Config::default();
        let e = c.apply_text("\n\nsolver.lr9 = 1").unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("solver.lr9"), "{e}");
        assert!(c.apply_text("search.budget = many").is_err());
        assert!(c.apply_text("search.eps_stop = 0").is_err());
        assert!(c.apply_text("just words").is_err());
    }
}
