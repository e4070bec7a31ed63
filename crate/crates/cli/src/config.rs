//! Pipeline configuration: a flat `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key may appear
//! at most once and unknown keys are rejected, so typos never pass silently.
//! `seed` is required (it may instead come from `--seed`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use drivesafe_core::featx::{ExtractOptions, SpeedingSource, TlnSource};
use drivesafe_core::learn::{ForestHyperparams, LogisticParams, ModelSpec, Ratio};
use drivesafe_core::simgen::{NoiseSpec, RoadNetwork, SimConfig};
use drivesafe_core::{DayRange, PeriodSplit};

use crate::error::CliError;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "global seed; every stage derives its own seed from it"),
    ("work_dir", "directory holding every artifact (default: current directory)"),
    ("trajectories", "trajectory input for extract (default: <work_dir>/trajectories.csv)"),
    ("violations", "violation input for extract (default: <work_dir>/violations.csv)"),
    ("drivers", "simulated drivers"),
    ("days", "simulated days"),
    ("observation_days", "leading days used for features; the rest label drivers"),
    ("day_start", "daily window start, seconds after midnight"),
    ("day_end", "daily window end, seconds after midnight"),
    ("departure_spread", "spread of habitual departure times, s"),
    ("departure_jitter", "day-to-day departure jitter, s"),
    ("min_trip_length", "minimum route length, m"),
    ("compliance_ref_speed", "desired speed at which a driver cruises exactly at the limit, m/s"),
    ("compliance_dev", "daily relative spread of speed-limit compliance"),
    ("turn_speed", "cornering speed at unit compliance, m/s"),
    ("vehicle_length", "vehicle length, m"),
    ("speeding_min_duration", "seconds over the limit before speeding is recorded"),
    ("lapse_rate", "attention lapses per second per unit imperfection"),
    ("lapse_duration", "length of one attention lapse, s"),
    ("overrun", "seconds after the window before unfinished trips are stopped"),
    ("noise", "driver parameter noise: standard or zero"),
    ("grid_cols", "grid intersections per row"),
    ("grid_rows", "grid intersections per column"),
    ("edge_length", "road segment length, m"),
    ("speed_limit", "posted limit on every road, m/s"),
    ("signal_cycle", "signal cycle, s"),
    ("signal_green", "green time per axis, s"),
    ("signal_yellow", "yellow time per axis, s"),
    ("acc_threshold", "abrupt acceleration threshold, m/s²"),
    ("dec_threshold", "abrupt deceleration threshold, m/s²"),
    ("turn_speed_threshold", "minimum speed for an abrupt turn, m/s"),
    ("turn_angle_threshold", "heading change for an abrupt turn, degrees"),
    ("fallback_speed_limit", "limit used where no road matches a point, m/s"),
    ("speeding_source", "speeding count from: trajectory or records"),
    ("light_source", "light-violation count from: records or proxy"),
    ("proxy_decel", "deceleration near a signal the proxy flags, m/s²"),
    ("trip_gap", "time gap that starts a new trip, s"),
    ("min_bad_count", "performance-period violations that make a driver bad"),
    ("use_network", "map points onto the configured grid during extraction: true or false"),
    ("ratio", "good:bad training ratio"),
    ("folds", "cross-validation folds"),
    ("sweep", "also run the class-ratio sweep: true or false"),
    ("trees", "forest size"),
    ("max_depth", "tree depth limit, 0 for none"),
    ("min_leaf", "minimum rows per leaf"),
    ("max_features", "features tried per split, 0 for ceil(sqrt(d))"),
    ("bootstrap", "bootstrap sample size, 0 for the row count"),
    ("lr_iterations", "logistic regression gradient steps"),
    ("lr_learning_rate", "logistic regression step size"),
    ("lr_l2", "logistic regression L2 penalty"),
    ("min_weight", "importance below which a feature leaves the scorecard"),
    ("bands", "comma-separated start ranks of report bands, the first being 1"),
    ("top_n", "comma-separated N values for the top-N bad proportion"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Standard,
    Zero,
}

impl Noise {
    pub fn spec(self) -> NoiseSpec {
        match self {
            Noise::Standard => NoiseSpec::standard(),
            Noise::Zero => NoiseSpec::zero(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Noise::Standard => "standard",
            Noise::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub work_dir: PathBuf,
    pub trajectories: Option<PathBuf>,
    pub violations: Option<PathBuf>,
    pub observation_days: Option<u32>,
    pub sim: SimConfig,
    pub noise: Noise,
    pub extract: ExtractOptions,
    pub use_network: bool,
    pub ratio: Ratio,
    pub folds: usize,
    pub sweep: bool,
    pub model: ModelSpec,
    pub min_weight: Option<f64>,
    pub bands: Option<Vec<usize>>,
    pub top_n: Option<Vec<usize>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: None,
            work_dir: PathBuf::from("."),
            trajectories: None,
            violations: None,
            observation_days: None,
            sim: SimConfig::default(),
            noise: Noise::Standard,
            extract: ExtractOptions::default(),
            use_network: true,
            ratio: Ratio::new(1, 1),
            folds: 5,
            sweep: false,
            model: ModelSpec {
                forest: ForestHyperparams::default(),
                logistic: LogisticParams::default(),
            },
            min_weight: None,
            bands: None,
            top_n: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {value:?}")),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, String> {
    value
        .split(',')
        .map(|s| parse_num::<usize>(key, s.trim()))
        .collect()
}

fn zero_is_none(n: usize) -> Option<usize> {
    (n > 0).then_some(n)
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Parse and validate config text. Errors name the offending line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let at = |m: String| format!("line {}: {m}", i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(prev) = seen.insert(key.to_string(), i + 1) {
                return Err(at(format!("{key} already set on line {prev}")));
            }
            cfg.set(key, value).map_err(at)?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let sim = &mut self.sim;
        let thr = &mut self.extract.thresholds;
        let forest = &mut self.model.forest;
        let lr = &mut self.model.logistic;
        match key {
            "seed" => self.seed = Some(parse_num(key, v)?),
            "work_dir" => self.work_dir = PathBuf::from(v),
            "trajectories" => self.trajectories = Some(PathBuf::from(v)),
            "violations" => self.violations = Some(PathBuf::from(v)),
            "drivers" => sim.drivers = parse_num(key, v)?,
            "days" => sim.days = parse_num(key, v)?,
            "observation_days" => self.observation_days = Some(parse_num(key, v)?),
            "day_start" => sim.day_start = parse_num(key, v)?,
            "day_end" => sim.day_end = parse_num(key, v)?,
            "departure_spread" => sim.departure_spread = parse_num(key, v)?,
            "departure_jitter" => sim.departure_jitter = parse_num(key, v)?,
            "min_trip_length" => sim.min_trip_length = parse_num(key, v)?,
            "compliance_ref_speed" => sim.compliance_ref_speed = parse_num(key, v)?,
            "compliance_dev" => sim.compliance_dev = parse_num(key, v)?,
            "turn_speed" => sim.turn_speed = parse_num(key, v)?,
            "vehicle_length" => sim.vehicle_length = parse_num(key, v)?,
            "speeding_min_duration" => sim.speeding_min_duration = parse_num(key, v)?,
            "lapse_rate" => sim.lapse_rate = parse_num(key, v)?,
            "lapse_duration" => sim.lapse_duration = parse_num(key, v)?,
            "overrun" => sim.overrun = parse_num(key, v)?,
            "noise" => {
                self.noise = match v {
                    "standard" => Noise::Standard,
                    "zero" => Noise::Zero,
                    _ => return Err(format!("noise: expected standard or zero, got {v:?}")),
                }
            }
            "grid_cols" => sim.grid.cols = parse_num(key, v)?,
            "grid_rows" => sim.grid.rows = parse_num(key, v)?,
            "edge_length" => sim.grid.edge_length = parse_num(key, v)?,
            "speed_limit" => sim.grid.speed_limit = parse_num(key, v)?,
            "signal_cycle" => sim.grid.cycle = parse_num(key, v)?,
            "signal_green" => sim.grid.green = parse_num(key, v)?,
            "signal_yellow" => sim.grid.yellow = parse_num(key, v)?,
            "acc_threshold" => thr.acc = parse_num(key, v)?,
            "dec_threshold" => thr.dec = parse_num(key, v)?,
            "turn_speed_threshold" => thr.v_star = parse_num(key, v)?,
            "turn_angle_threshold" => thr.ang = parse_num(key, v)?,
            "fallback_speed_limit" => thr.speed_limit = parse_num(key, v)?,
            "speeding_source" => {
                self.extract.speeding = match v {
                    "trajectory" => SpeedingSource::Trajectory,
                    "records" => SpeedingSource::Records,
                    _ => return Err(format!("{key}: expected trajectory or records, got {v:?}")),
                }
            }
            "light_source" => {
                self.extract.tln = match v {
                    "records" => TlnSource::Records,
                    "proxy" => TlnSource::Proxy,
                    _ => return Err(format!("{key}: expected records or proxy, got {v:?}")),
                }
            }
            "proxy_decel" => self.extract.proxy_decel = parse_num(key, v)?,
            "trip_gap" => self.extract.trip_gap = parse_num(key, v)?,
            "min_bad_count" => self.extract.min_bad_count = parse_num(key, v)?,
            "use_network" => self.use_network = parse_bool(key, v)?,
            "ratio" => self.ratio = v.parse()?,
            "folds" => self.folds = parse_num(key, v)?,
            "sweep" => self.sweep = parse_bool(key, v)?,
            "trees" => forest.n_trees = parse_num(key, v)?,
            "max_depth" => forest.max_depth = zero_is_none(parse_num(key, v)?),
            "min_leaf" => forest.min_leaf = parse_num(key, v)?,
            "max_features" => forest.max_features = zero_is_none(parse_num(key, v)?),
            "bootstrap" => forest.bootstrap = zero_is_none(parse_num(key, v)?),
            "lr_iterations" => lr.iterations = parse_num(key, v)?,
            "lr_learning_rate" => lr.learning_rate = parse_num(key, v)?,
            "lr_l2" => lr.l2 = parse_num(key, v)?,
            "min_weight" => self.min_weight = Some(parse_num(key, v)?),
            "bands" => self.bands = Some(parse_list(key, v)?),
            "top_n" => self.top_n = Some(parse_list(key, v)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Derive dependent settings and check cross-field constraints.
    fn finish(&mut self) -> Result<(), String> {
        let days = self.sim.days;
        let obs = self.observation_days.unwrap_or(days / 2);
        if obs == 0 || obs >= days {
            return Err(format!(
                "observation_days must leave both periods non-empty ({obs} of {days} days)"
            ));
        }
        self.sim.split = PeriodSplit::new(DayRange::new(0, obs - 1), DayRange::new(obs, days - 1))
            .map_err(|e| e.to_string())?;
        self.sim.validate().map_err(|e| e.to_string())?;
        RoadNetwork::grid(self.sim.grid).map_err(|e| e.to_string())?;
        self.extract.validate()?;
        self.model.forest.validate().map_err(|e| e.to_string())?;
        let lr = &self.model.logistic;
        if lr.iterations == 0 || !(lr.learning_rate > 0.0) || !(lr.l2 >= 0.0) {
            return Err("logistic regression needs iterations, a positive step and l2 >= 0".into());
        }
        if self.folds < 2 {
            return Err("folds must be at least 2".into());
        }
        if let Some(w) = self.min_weight {
            if !(0.0..=1.0).contains(&w) {
                return Err("min_weight must lie in [0, 1]".into());
            }
        }
        if let Some(b) = &self.bands {
            if b.first() != Some(&1) || b.windows(2).any(|w| w[0] >= w[1]) {
                return Err("bands must start at 1 and increase strictly".into());
            }
        }
        if self.top_n.as_ref().is_some_and(|t| t.contains(&0)) {
            return Err("top_n values must be positive".into());
        }
        Ok(())
    }

    pub fn split(&self) -> PeriodSplit {
        self.sim.split
    }

    pub fn trajectories_path(&self) -> PathBuf {
        self.trajectories
            .clone()
            .unwrap_or_else(|| self.work_dir.join(crate::artifacts::TRAJECTORIES))
    }

    pub fn violations_path(&self) -> PathBuf {
        self.violations
            .clone()
            .unwrap_or_else(|| self.work_dir.join(crate::artifacts::VIOLATIONS))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = PipelineConfig::parse("seed = 7\n").unwrap();
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.sim.drivers, SimConfig::default().drivers);
        assert_eq!(c.split().observation, DayRange::new(0, 19));
        assert_eq!(c.split().performance, DayRange::new(20, 39));
        assert_eq!(c.ratio, Ratio::new(1, 1));
    }

    #[test]
    fn keys_comments_and_lists() {
        let text = "# desk run\nseed=1\n drivers = 500 \ndays = 20\nobservation_days = 10\n\
                    ratio = 2:1\nmax_depth = 0\nmax_features = 4\nbands = 1, 10, 100\n\
                    light_source = proxy\nsweep = true\n";
        let c = PipelineConfig::parse(text).unwrap();
        assert_eq!(c.sim.drivers, 500);
        assert_eq!(c.split().performance, DayRange::new(10, 19));
        assert_eq!(c.ratio, Ratio::new(2, 1));
        assert_eq!(c.model.forest.max_depth, None);
        assert_eq!(c.model.forest.max_features, Some(4));
        assert_eq!(c.bands, Some(vec![1, 10, 100]));
        assert_eq!(c.extract.tln, TlnSource::Proxy);
        assert!(c.sweep);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("seed = 1\nspeed = 3\n", "unknown key"),
            ("seed = 1\nseed = 2\n", "already set on line 1"),
            ("seed = x\n", "line 1"),
            ("seed = 1\nno equals sign\n", "line 2"),
            ("seed = 1\nfolds = 1\n", "folds"),
            ("seed = 1\ndays = 10\nobservation_days = 10\n", "observation_days"),
            ("seed = 1\nratio = 1-1\n", "P:N"),
            ("seed = 1\nbands = 2, 5\n", "bands"),
            ("seed = 1\nsignal_green = 40\n", "half a signal cycle"),
            ("seed = 1\nnoise = loud\n", "standard"),
        ];
        for (text, needle) in cases {
            let err = PipelineConfig::parse(text).unwrap_err();
            assert!(err.contains(needle), "{text:?} gave {err:?}");
        }
    }

    #[test]
    fn shipped_configs_parse() {
        for text in [include_str!("../../../configs/smoke.conf"), include_str!("../../../configs/desk.conf")] {
            let cfg = PipelineConfig::parse(text).unwrap();
            assert!(cfg.seed.is_some());
        }
    }

    #[test]
    fn every_documented_key_is_accepted() {
        for (key, _) in KEYS {
            let value = match *key {
                "seed" | "drivers" | "days" | "trees" | "min_leaf" | "folds" | "lr_iterations" => "20",
                "observation_days" | "max_depth" | "max_features" | "bootstrap" => "3",
                "speeding_min_duration" | "lapse_duration" | "min_bad_count" | "grid_cols"
                | "grid_rows" => "5",
                "work_dir" | "trajectories" | "violations" => "x",
                "noise" => "zero",
                "speeding_source" => "records",
                "light_source" => "records",
                "use_network" | "sweep" => "false",
                "ratio" => "1:1",
                "bands" => "1,2",
                "top_n" => "1",
                "day_start" => "0",
                "day_end" => "43200",
                "edge_length" => "400",
                "signal_cycle" => "60",
                "signal_green" => "20",
                "signal_yellow" => "3",
                "min_weight" | "lapse_rate" | "compliance_dev" => "0.01",
                "turn_angle_threshold" => "30",
                _ => "4.5",
            };
            let text = if *key == "seed" {
                format!("seed = {value}\n")
            } else {
                format!("seed = 1\n{key} = {value}\n")
            };
            PipelineConfig::parse(&text).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }
}
