use std::fmt::Write as _;
use std::path::Path;

use super::loocv::FoldResult;
use super::TrainError;
use crate::metrics::{MeanStd, MetricsError};

/// Per-fold results with mean ± sample std across held-out participants.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub folds: Vec<FoldResult>,
    pub mae: MeanStd,
    pub rmse: MeanStd,
    pub r2: MeanStd,
    pub stance_rmse: MeanStd,
    pub swing_rmse: MeanStd,
    /// `None` for single-output models.
    pub phase_accuracy: Option<MeanStd>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl EvalReport {
    pub fn from_folds(folds: Vec<FoldResult>) -> Self {
        let col = |f: &dyn Fn(&FoldResult) -> Option<f64>| -> Vec<f64> { folds.iter().filter_map(f).collect() };
        let phase = col(&|f| f.phase_accuracy);
        Self {
            mae: MeanStd::of(&col(&|f| Some(f.metrics.mae.0))),
            rmse: MeanStd::of(&col(&|f| Some(f.metrics.rmse.0))),
            r2: MeanStd::of(&col(&|f| Some(f.metrics.r2))),
            stance_rmse: MeanStd::of(&col(&|f| f.stance_swing.stance.map(|v| v.0))),
            swing_rmse: MeanStd::of(&col(&|f| f.stance_swing.swing.map(|v| v.0))),
            phase_accuracy: (!phase.is_empty()).then(|| MeanStd::of(&phase)),
            folds,
        }
    }

    pub fn min_r2(&self) -> f64 {
        self.folds.iter().map(|f| f.metrics.r2).fold(f64::INFINITY, f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "row,participant,windows,mae_nmkg,rmse_nmkg,r2,stance_rmse_nmkg,swing_rmse_nmkg,phase_accuracy\n",
        );
        for f in &self.folds {
            let _ = writeln!(
                s,
                "fold,{},{},{:.6},{:.6},{:.6},{},{},{}",
                f.test_participant,
                f.test_windows,
                f.metrics.mae.0,
                f.metrics.rmse.0,
                f.metrics.r2,
                opt(f.stance_swing.stance.map(|v| v.0)),
                opt(f.stance_swing.swing.map(|v| v.0)),
                opt(f.phase_accuracy)
            );
        }
        for (name, pick) in [("mean", true), ("std", false)] {
            let g = |m: &MeanStd| if pick { m.mean } else { m.std };
            let _ = writeln!(
                s,
                "{name},,,{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                g(&self.mae),
                g(&self.rmse),
                g(&self.r2),
                g(&self.stance_rmse),
                g(&self.swing_rmse),
                opt(self.phase_accuracy.as_ref().map(g))
            );
        }
        s
    }

    /// Epoch curves of every fold as CSV.
    pub fn curves_csv(&self) -> String {
        let mut s = String::from(
            "participant,epoch,train_torque_mse,train_stance_ce,val_torque_mse,val_stance_ce,val_r2,max_stance_loss_ratio,guarded_steps\n",
        );
        for f in &self.folds {
            for c in &f.curves {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    f.test_participant,
                    c.epoch,
                    c.train_torque_mse,
                    c.train_stance_ce,
                    c.val_torque_mse,
                    c.val_stance_ce,
                    c.val_r2,
                    c.max_stance_loss_ratio,
                    c.guarded_steps
                );
            }
        }
        s
    }

    /// Plain-text table, one metric per row, mean ± std across folds.
    pub fn summary_table(&self) -> String {
        let mut s = format!("{:<14} {:>20}\n", "metric", "mean ± std");
        let rows = [
            ("MAE (Nm/kg)", Some(self.mae)),
            ("RMSE (Nm/kg)", Some(self.rmse)),
            ("R²", Some(self.r2)),
            ("St. RMSE", Some(self.stance_rmse)),
            ("Sw. RMSE", Some(self.swing_rmse)),
            ("Phase Acc.", self.phase_accuracy),
        ];
        for (name, v) in rows {
            let cell = v.map_or_else(|| "n/a".to_string(), |m| m.to_string());
            let _ = writeln!(s, "{name:<14} {cell:>20}");
        }
        s
    }

    pub fn write(&self, csv_path: &Path) -> Result<(), TrainError> {
        let io = |e: std::io::Error| TrainError::Metrics(MetricsError::Io(e.to_string()));
        std::fs::write(csv_path, self.to_csv()).map_err(io)?;
        std::fs::write(csv_path.with_extension("curves.csv"), self.curves_csv()).map_err(io)?;
        std::fs::write(csv_path.with_extension("txt"), self.summary_table()).map_err(io)
    }
}
