use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Format;
use super::profile::{DegreeRow, ProfileNode};
use super::svg::{line_plot, Series};
use super::sweep::{SweepAggregate, SweepCell, SweepRecord};
use super::tables::{BayesRow, BayesSeedRow, ViolationNode, ViolationRow, ViolationSeedRow};
use super::ResultBundle;
use crate::error::{Error, Result};

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Column names of a CSV row type, in serialization order.
pub trait Columns {
    const COLUMNS: &'static [&'static str];
}

macro_rules! columns {
    ($t:ty, [$($c:literal),* $(,)?]) => {
        impl Columns for $t {
            const COLUMNS: &'static [&'static str] = &[$($c),*];
        }
    };
}

columns!(BayesRow, ["k", "mode", "accuracy_pct_mean", "accuracy_pct_std", "accuracy_pct_stderr", "seeds"]);
columns!(BayesSeedRow, ["k", "seed_index", "mode", "accuracy_pct", "test_nodes"]);
columns!(
    ViolationRow,
    ["attack", "budget", "k", "violated_pct_mean", "violated_pct_std", "violated_pct_stderr", "seeds"]
);
columns!(
    ViolationSeedRow,
    ["attack", "budget", "k", "seed_index", "counted_nodes", "flipped", "violated_pct"]
);
columns!(
    ViolationNode,
    ["attack", "k", "seed_index", "test_index", "degree", "bayes_correct", "model_correct", "plan_len", "t_g"]
);
columns!(
    SweepRecord,
    [
        "k", "seed_index", "classifier", "attack", "budget", "test_index", "degree", "t_f", "t_g", "budget_used",
        "clean_f_correct", "clean_agree",
    ]
);
columns!(
    SweepCell,
    [
        "k", "seed_index", "classifier", "attack", "budget", "test_accuracy_pct", "r_fg", "r_f", "r_g", "r_over",
        "r_adv", "f_beta", "node_count", "excluded_degree0", "excluded_incorrect", "excluded_disagree",
        "censored_f", "censored_g", "error",
    ]
);
columns!(
    SweepAggregate,
    [
        "k", "classifier", "attack", "budget", "seeds_ok", "test_accuracy_pct_mean", "r_over_mean", "r_over_std",
        "r_over_stderr", "r_adv_mean", "r_adv_std", "f_beta_mean", "f_beta_std", "r_f_mean", "r_fg_mean",
    ]
);
columns!(
    DegreeRow,
    [
        "k", "degree", "nodes", "min_censored", "min_mean", "min_q1", "min_median", "min_q3", "max_censored",
        "max_mean", "max_q1", "max_median", "max_q3",
    ]
);
columns!(ProfileNode, ["k", "seed_index", "node", "degree", "clean_correct", "min_steps", "max_steps"]);

/// CSV text with an explicit header, so an empty table still has one line.
pub fn csv_bytes<T: Serialize + Columns>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(T::COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Directory name of a K value, e.g. `K0.5`, `K1.0`.
pub fn k_dir(k: f64) -> String {
    if k.fract() == 0.0 {
        format!("K{k:.1}")
    } else {
        format!("K{k}")
    }
}

struct Out {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Out {
    fn put(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// Writes the bundle under `<out_dir>/<experiment>/` and returns the written
/// paths. `provenance.json` and `bundle.json` are always written.
///
/// Per-node sweep records go to `<K>/<classifier>/<attack>.csv` and the
/// matching per-seed metrics to `<K>/<classifier>/<attack>.json`.
pub fn emit_results(bundle: &ResultBundle, out_dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let csv = formats.contains(&Format::Csv);
    let json = formats.contains(&Format::Json);
    let svg = formats.contains(&Format::Svg);
    let mut out = Out { root: out_dir.join(&bundle.experiment), written: Vec::new() };

    out.put("provenance.json", &json_bytes(&bundle.provenance)?)?;
    out.put("bundle.json", &json_bytes(bundle)?)?;

    let empty_cells: Vec<SweepCell> = Vec::new();
    let cells = bundle.sweep.as_ref().map_or(&empty_cells, |s| &s.cells);
    if csv {
        out.put("summary.csv", &csv_bytes(cells)?)?;
    }
    if json {
        out.put("summary.json", &json_bytes(cells)?)?;
    }

    if let Some(t) = &bundle.bayes {
        if csv {
            out.put("bayes_table.csv", &csv_bytes(&t.rows)?)?;
            out.put("bayes_table_seeds.csv", &csv_bytes(&t.per_seed)?)?;
        }
        if json {
            out.put("bayes_table.json", &json_bytes(t)?)?;
        }
        if svg {
            let modes: BTreeSet<&str> = t.rows.iter().map(|r| r.mode.as_str()).collect();
            let series: Vec<Series> = modes
                .into_iter()
                .map(|m| Series {
                    name: m.into(),
                    points: t.rows.iter().filter(|r| r.mode == m).map(|r| (r.k, r.accuracy_pct_mean)).collect(),
                })
                .collect();
            out.put("bayes_accuracy.svg", line_plot("Bayes accuracy", "K", "accuracy (%)", &series).as_bytes())?;
        }
    }

    if let Some(t) = &bundle.violations {
        if csv {
            out.put("violation_table.csv", &csv_bytes(&t.rows)?)?;
            out.put("violation_table_seeds.csv", &csv_bytes(&t.per_seed)?)?;
            out.put("violation_nodes.csv", &csv_bytes(&t.nodes)?)?;
        }
        if json {
            out.put("violation_table.json", &json_bytes(t)?)?;
        }
        if svg {
            let attacks: BTreeSet<&str> = t.rows.iter().map(|r| r.attack.as_str()).collect();
            for a in attacks {
                let mut budgets: Vec<&str> = Vec::new();
                for r in t.rows.iter().filter(|r| r.attack == a) {
                    if !budgets.contains(&r.budget.as_str()) {
                        budgets.push(&r.budget);
                    }
                }
                let series: Vec<Series> = budgets
                    .into_iter()
                    .map(|b| Series {
                        name: b.into(),
                        points: t
                            .rows
                            .iter()
                            .filter(|r| r.attack == a && r.budget == b)
                            .map(|r| (r.k, r.violated_pct_mean))
                            .collect(),
                    })
                    .collect();
                let plot = line_plot(&format!("semantic violations, {a}"), "K", "violated (%)", &series);
                out.put(format!("violations_{a}.svg"), plot.as_bytes())?;
            }
        }
    }

    if let Some(s) = &bundle.sweep {
        if csv {
            out.put("aggregates.csv", &csv_bytes(&s.aggregates)?)?;
        }
        if json {
            out.put("aggregates.json", &json_bytes(&s.aggregates)?)?;
        }
        let mut groups: Vec<(f64, &str, &str)> = Vec::new();
        for c in &s.cells {
            let key = (c.k, c.classifier.as_str(), c.attack.as_str());
            if !groups.contains(&key) {
                groups.push(key);
            }
        }
        for (k, classifier, attack) in groups {
            let rel = Path::new(&k_dir(k)).join(classifier);
            if csv {
                let recs: Vec<&SweepRecord> = s
                    .records
                    .iter()
                    .filter(|r| r.k == k && r.classifier == classifier && r.attack == attack)
                    .collect();
                let recs: Vec<SweepRecord> = recs.into_iter().cloned().collect();
                out.put(rel.join(format!("{attack}.csv")), &csv_bytes(&recs)?)?;
            }
            if json {
                let mine: Vec<&SweepCell> = s
                    .cells
                    .iter()
                    .filter(|c| c.k == k && c.classifier == classifier && c.attack == attack)
                    .collect();
                out.put(rel.join(format!("{attack}.json")), &json_bytes(&mine)?)?;
            }
        }
        if svg {
            let mut combos: Vec<(&str, &str)> = Vec::new();
            for a in &s.aggregates {
                if !combos.contains(&(a.attack.as_str(), a.budget.as_str())) {
                    combos.push((&a.attack, &a.budget));
                }
            }
            for (attack, budget) in combos {
                let mut classifiers: Vec<&str> = Vec::new();
                for a in s.aggregates.iter().filter(|a| a.attack == attack && a.budget == budget) {
                    if !classifiers.contains(&a.classifier.as_str()) {
                        classifiers.push(&a.classifier);
                    }
                }
                let series: Vec<Series> = classifiers
                    .into_iter()
                    .map(|c| Series {
                        name: c.into(),
                        points: s
                            .aggregates
                            .iter()
                            .filter(|a| a.attack == attack && a.budget == budget && a.classifier == c)
                            .filter_map(|a| a.r_over_mean.map(|r| (a.k, 100.0 * r)))
                            .collect(),
                    })
                    .collect();
                let plot = line_plot(&format!("over-robustness, {attack}, {budget}"), "K", "R_over (%)", &series);
                out.put(format!("r_over_{attack}_{budget}.svg"), plot.as_bytes())?;
            }
        }
    }

    if let Some(p) = &bundle.profile {
        if csv {
            out.put("degree_profile.csv", &csv_bytes(&p.rows)?)?;
            out.put("degree_profile_nodes.csv", &csv_bytes(&p.nodes)?)?;
        }
        if json {
            out.put("degree_profile.json", &json_bytes(p)?)?;
        }
        if svg {
            let mut ks: Vec<f64> = Vec::new();
            for r in &p.rows {
                if !ks.contains(&r.k) {
                    ks.push(r.k);
                }
            }
            for k in ks {
                let rows: Vec<&DegreeRow> = p.rows.iter().filter(|r| r.k == k).collect();
                let series = vec![
                    Series {
                        name: "min median".into(),
                        points: rows.iter().filter_map(|r| r.min_median.map(|m| (r.degree as f64, m))).collect(),
                    },
                    Series {
                        name: "max median".into(),
                        points: rows.iter().filter_map(|r| r.max_median.map(|m| (r.degree as f64, m))).collect(),
                    },
                ];
                let title = format!("robustness by degree, {} {}", p.classifier, k_dir(k));
                out.put(format!("degree_profile_{}.svg", k_dir(k)), line_plot(&title, "degree", "steps", &series).as_bytes())?;
            }
        }
    }
    Ok(out.written)
}
