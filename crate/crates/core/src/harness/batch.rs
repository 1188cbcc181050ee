//! Sweeps over generated corpora, one CSV row per tree.

use std::str::FromStr;

use serde::Serialize;

use crate::generators::{generate, Family, GenError, GenSpec};
use crate::radio::Round;

use super::{run_tree, HarnessError};

/// A sweep: the cross product of families, degrees, diameters and seeds.
///
/// Text form is one `key=value` per line, `#` comments allowed. `family`,
/// `delta`, `diameter` and `seeds` may repeat and take comma-separated
/// items, each a number, `a..b` (exclusive) or `a..=b`. `count` and
/// `max_rounds` are single numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub families: Vec<Family>,
    pub deltas: Vec<usize>,
    pub diameters: Vec<usize>,
    pub seeds: Vec<u64>,
    pub count: usize,
    pub max_rounds: Option<Round>,
}

fn parse_items(value: &str) -> Result<Vec<u64>, String> {
    let num = |s: &str| s.trim().parse::<u64>().map_err(|e| format!("bad number `{}`: {e}", s.trim()));
    let mut out = Vec::new();
    for item in value.split(',').filter(|s| !s.trim().is_empty()) {
        if let Some((a, b)) = item.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = item.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else {
            out.push(num(item)?);
        }
    }
    Ok(out)
}

impl FromStr for Config {
    type Err = HarnessError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut families = Vec::new();
        let (mut deltas, mut diameters, mut seeds) = (Vec::new(), Vec::new(), Vec::new());
        let (mut count, mut max_rounds) = (1, None);
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| HarnessError::Config { line: i + 1, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let items = || parse_items(value).map_err(err);
            match key {
                "family" => {
                    for name in value.split(',') {
                        families.push(name.trim().parse::<Family>().map_err(|e| err(e.to_string()))?);
                    }
                }
                "delta" => deltas.extend(items()?.into_iter().map(|x| x as usize)),
                "diameter" => diameters.extend(items()?.into_iter().map(|x| x as usize)),
                "seeds" | "seed" => seeds.extend(items()?),
                "count" => count = value.parse().map_err(|e| err(format!("bad count: {e}")))?,
                "max_rounds" => max_rounds = Some(value.parse().map_err(|e| err(format!("bad max_rounds: {e}")))?),
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        if families.is_empty() {
            families.push(Family::Random);
        }
        let missing = |what: &str| HarnessError::Config { line: 0, msg: format!("no {what} given") };
        // families that ignore one parameter get a placeholder for it
        if deltas.is_empty() {
            if families.iter().all(|f| *f == Family::Lines) {
                deltas.push(2);
            } else {
                return Err(missing("delta"));
            }
        }
        if diameters.is_empty() {
            if families.iter().all(|f| matches!(f, Family::Feas | Family::Stars)) {
                diameters.push(if families.contains(&Family::Feas) { 3 } else { 2 });
            } else {
                return Err(missing("diameter"));
            }
        }
        if seeds.is_empty() {
            seeds.push(0);
        }
        Ok(Config { families, deltas, diameters, seeds, count, max_rounds })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Row {
    pub family: String,
    pub delta: usize,
    pub diameter: usize,
    pub n: usize,
    pub seed: u64,
    pub protocol: String,
    pub rounds: Round,
    pub max_label_bits: usize,
    pub valid: bool,
}

#[derive(Clone, Debug, Default)]
pub struct BatchResult {
    pub rows: Vec<Row>,
    /// Parameter combinations the family cannot realize.
    pub skipped: Vec<String>,
    /// Runs that errored or failed a check, with the reason.
    pub failures: Vec<String>,
}

impl BatchResult {
    pub fn pass(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.valid)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row).expect("rows serialize to memory");
        }
        if self.rows.is_empty() {
            w.write_record([
                "family",
                "delta",
                "diameter",
                "n",
                "seed",
                "protocol",
                "rounds",
                "max_label_bits",
                "valid",
            ])
            .expect("header writes to memory");
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Rayon worker pool; same as `Sequential` without the `parallel` feature.
    Parallel,
}

#[derive(Clone, Debug)]
struct Job {
    spec: GenSpec,
}

enum Outcome {
    Rows(Vec<(Row, Option<String>)>),
    Skipped(String),
}

fn run_job(job: &Job, max_rounds: Option<Round>) -> Outcome {
    let spec = &job.spec;
    let key = format!("{} Δ={} D={} seed={}", spec.family, spec.delta, spec.diameter, spec.seed);
    let trees = match generate(spec) {
        Ok(t) => t,
        Err(e @ (GenError::Infeasible(..) | GenError::OutOfRange(..))) => {
            return Outcome::Skipped(format!("{key}: {e}"))
        }
        Err(e) => return Outcome::Rows(vec![(placeholder(spec, "none"), Some(format!("{key}: {e}")))]),
    };
    let class_delta = (spec.family == Family::Stars).then_some(spec.delta as u64);
    let rows = trees
        .iter()
        .enumerate()
        .map(|(i, t)| match run_tree(t, None, class_delta, max_rounds) {
            Ok((labeling, run)) => {
                let r = &run.report;
                let row = Row {
                    n: t.n(),
                    protocol: labeling.protocol().name().into(),
                    rounds: r.completion_round,
                    max_label_bits: r.max_label_bits,
                    valid: r.pass(),
                    ..placeholder(spec, "")
                };
                let why = (!r.pass()).then(|| format!("{key} tree {i}: {r:?}"));
                (row, why)
            }
            Err(e) => {
                (Row { n: t.n(), ..placeholder(spec, super::dispatch(t).name()) }, Some(format!("{key} tree {i}: {e}")))
            }
        })
        .collect();
    Outcome::Rows(rows)
}

fn placeholder(spec: &GenSpec, protocol: &str) -> Row {
    Row {
        family: spec.family.name().into(),
        delta: spec.delta,
        diameter: spec.diameter,
        n: 0,
        seed: spec.seed,
        protocol: protocol.into(),
        rounds: 0,
        max_label_bits: 0,
        valid: false,
    }
}

fn jobs(config: &Config) -> Vec<Job> {
    let mut out = Vec::new();
    for &family in &config.families {
        for &delta in &config.deltas {
            for &diameter in &config.diameters {
                for &seed in &config.seeds {
                    out.push(Job { spec: GenSpec { family, delta, diameter, seed, count: config.count } });
                }
            }
        }
    }
    out
}

pub fn run_experiment_with(config: &Config, exec: Exec) -> BatchResult {
    let jobs = jobs(config);
    let go = |j: &Job| run_job(j, config.max_rounds);
    let outcomes: Vec<Outcome> = match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            jobs.par_iter().map(go).collect()
        }
        _ => jobs.iter().map(go).collect(),
    };
    let mut result = BatchResult::default();
    for o in outcomes {
        match o {
            Outcome::Skipped(s) => result.skipped.push(s),
            Outcome::Rows(rows) => {
                for (row, why) in rows {
                    result.rows.push(row);
                    result.failures.extend(why);
                }
            }
        }
    }
    result.rows.sort();
    result
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn run_experiment(config: &Config) -> BatchResult {
    run_experiment_with(config, Exec::Parallel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_ranges_and_defaults() {
        let c: Config = "# sweep\nfamily=random\ndelta=3,4..6\ndelta=8\ndiameter=4..=6\nseeds=0..3\n".parse().unwrap();
        assert_eq!(c.deltas, vec![3, 4, 5, 8]);
        assert_eq!(c.diameters, vec![4, 5, 6]);
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert_eq!(c.count, 1);
        let lines: Config = "family=lines\ndiameter=10".parse().unwrap();
        assert_eq!(lines.deltas, vec![2]);
        assert!(matches!("delta=x".parse::<Config>(), Err(HarnessError::Config { line: 1, .. })));
        assert!(matches!("family=random\ndiameter=4".parse::<Config>(), Err(HarnessError::Config { .. })));
        assert!(matches!("colour=blue".parse::<Config>(), Err(HarnessError::Config { .. })));
    }

    #[test]
    fn small_sweep_passes_and_is_deterministic() {
        let c: Config = "delta=3,4,8\ndiameter=4,6\nseeds=0..5".parse().unwrap();
        let a = run_experiment_with(&c, Exec::Sequential);
        assert_eq!(a.rows.len(), 30);
        assert!(a.pass(), "{:?}", a.failures);
        let b = run_experiment_with(&c, Exec::Parallel);
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("family,delta,diameter,n,seed,protocol,rounds,max_label_bits,valid\n"));
    }

    #[test]
    fn mixed_families() {
        let c: Config = "family=lines,stars,feas\ndelta=8\ndiameter=6".parse().unwrap();
        let r = run_experiment(&c);
        assert!(r.pass(), "{:?}", r.failures);
        let protocols: std::collections::BTreeSet<&str> = r.rows.iter().map(|r| r.protocol.as_str()).collect();
        assert_eq!(protocols.into_iter().collect::<Vec<_>>(), vec!["d3", "line", "star"]);
    }
}
