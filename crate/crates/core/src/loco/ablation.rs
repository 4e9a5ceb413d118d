use super::data::{Classifier, LocoData};
use super::harness::{run_loco, RunResult, RunSpec};
use super::metrics::EvalReport;
use crate::error::{Error, Result};
use crate::model::ClassWeightMode;
use serde::Serialize;
use std::fmt::{self, Write as _};
use std::str::FromStr;

pub const ABLATION_K: [usize; 3] = [16, 32, 48];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Toggle {
    OneEpoch,
    NoClassWeights,
    NoLabelSmoothing,
    /// MLP on mean-pooled inputs instead of the CNN.
    Mlp,
    K(usize),
}

impl FromStr for Toggle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = match s.trim() {
            "epochs=1" => Toggle::OneEpoch,
            "no_class_weights" => Toggle::NoClassWeights,
            "no_label_smoothing" => Toggle::NoLabelSmoothing,
            "mlp" => Toggle::Mlp,
            other => match other.strip_prefix("k=").and_then(|k| k.parse::<usize>().ok()) {
                Some(k) if ABLATION_K.contains(&k) => Toggle::K(k),
                _ => {
                    return Err(Error::Config(format!(
                        "unknown toggle {s:?}; expected epochs=1, no_class_weights, no_label_smoothing, mlp or k=16|32|48"
                    )))
                }
            },
        };
        Ok(t)
    }
}

impl fmt::Display for Toggle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Toggle::OneEpoch => f.write_str("epochs=1"),
            Toggle::NoClassWeights => f.write_str("no_class_weights"),
            Toggle::NoLabelSmoothing => f.write_str("no_label_smoothing"),
            Toggle::Mlp => f.write_str("mlp"),
            Toggle::K(k) => write!(f, "k={k}"),
        }
    }
}

impl Toggle {
    pub fn apply(self, base: &RunSpec) -> Result<RunSpec> {
        let mut s = base.clone();
        match self {
            Toggle::OneEpoch => s.train.epochs = 1,
            Toggle::NoClassWeights => s.train.class_weights = ClassWeightMode::None,
            Toggle::NoLabelSmoothing => s.train.label_smoothing = 0.0,
            Toggle::Mlp | Toggle::K(_) if base.classifier != Classifier::Cnn => {
                return Err(Error::Config(format!("toggle {self} needs a CNN base run")));
            }
            Toggle::Mlp => s.classifier = Classifier::Mlp,
            Toggle::K(k) => s.k = k,
        }
        s.name = format!("{} [{self}]", base.name);
        s.toggles = vec![self.to_string()];
        Ok(s)
    }
}

pub fn parse_toggles(names: &[String]) -> Result<Vec<Toggle>> {
    names.iter().map(|n| n.parse()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationRow {
    pub name: String,
    pub toggle: Option<String>,
    pub report: EvalReport,
    /// Pooled macro-F1 minus the base run's; `None` on the base row.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

/// Base run followed by one run per toggle, all with the same seed and folds.
pub fn run_ablation_grid(
    base: &RunSpec,
    data: &LocoData,
    toggles: &[Toggle],
) -> Result<(AblationTable, Vec<RunResult>)> {
    let specs: Vec<RunSpec> = toggles
        .iter()
        .map(|t| t.apply(base))
        .collect::<Result<_>>()?;
    let base_run = run_loco(data, base)?;
    let base_f1 = base_run.report.macro_f1;
    let mut rows = vec![AblationRow {
        name: base.name.clone(),
        toggle: None,
        report: base_run.report.clone(),
        delta: None,
    }];
    let mut runs = vec![base_run];
    for (t, s) in toggles.iter().zip(&specs) {
        let r = run_loco(data, s)?;
        rows.push(AblationRow {
            name: s.name.clone(),
            toggle: Some(t.to_string()),
            delta: Some(r.report.macro_f1 - base_f1),
            report: r.report.clone(),
        });
        runs.push(r);
    }
    Ok((AblationTable { rows }, runs))
}

impl AblationTable {
    /// Percentages with one decimal: `name,macro_f1,sd,delta`.
    pub fn to_csv(&self) -> String {
        let pct = |v: f64| format!("{:.1}", super::metrics::round1(100.0 * v));
        let mut out = String::from("name,macro_f1,sd,delta\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.name.replace(',', ";"),
                pct(r.report.macro_f1),
                r.report.fold_sd.map(pct).unwrap_or_default(),
                r.delta.map(pct).unwrap_or_default()
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggle_names_round_trip() {
        for s in [
            "epochs=1",
            "no_class_weights",
            "no_label_smoothing",
            "mlp",
            "k=16",
            "k=48",
        ] {
            assert_eq!(s.parse::<Toggle>().unwrap().to_string(), s);
        }
        assert!("k=20".parse::<Toggle>().is_err());
        assert!("dropout".parse::<Toggle>().is_err());
    }

    #[test]
    fn toggles_edit_the_spec() {
        let base = RunSpec {
            classifier: Classifier::Cnn,
            ..RunSpec::default()
        };
        assert_eq!(Toggle::OneEpoch.apply(&base).unwrap().train.epochs, 1);
        assert_eq!(Toggle::K(16).apply(&base).unwrap().k, 16);
        assert_eq!(
            Toggle::Mlp.apply(&base).unwrap().classifier,
            Classifier::Mlp
        );
        assert_eq!(
            Toggle::NoLabelSmoothing
                .apply(&base)
                .unwrap()
                .train
                .label_smoothing,
            0.0
        );
        assert!(Toggle::Mlp.apply(&RunSpec::default()).is_err());
    }
}
