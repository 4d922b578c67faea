use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::numerics::{NodeId, Tape};

/// Denominator floor for MAPE.
pub const MAPE_EPSILON: f64 = 1e-6;

/// Training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// Mean absolute error.
    L1,
    /// Mean squared error.
    L2,
    /// Mean absolute percentage error, in percent.
    Mape,
}

impl LossKind {
    #[allow(missing_docs)]
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::L2 => "l2",
            LossKind::Mape => "mape",
        }
    }

    /// Inverse of [`Self::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "l1" => Some(LossKind::L1),
            "l2" => Some(LossKind::L2),
            "mape" => Some(LossKind::Mape),
            _ => None,
        }
    }
}

fn mape_weights(gt: &[f64]) -> Vec<f64> {
    gt.iter().map(|g| 1.0 / libm::fabs(*g).max(MAPE_EPSILON)).collect()
}

/// Loss between two equal-length vectors.
pub fn loss_value(kind: LossKind, pred: &[f64], gt: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        bail!(Input, "loss of empty vectors");
    }
    if pred.len() != gt.len() {
        bail!(Input, "prediction has {} values, ground truth {}", pred.len(), gt.len());
    }
    let n = pred.len() as f64;
    let diffs = pred.iter().zip(gt).map(|(p, g)| p - g);
    Ok(match kind {
        LossKind::L1 => diffs.map(libm::fabs).sum::<f64>() / n,
        LossKind::L2 => diffs.map(|d| d * d).sum::<f64>() / n,
        LossKind::Mape => {
            let w = mape_weights(gt);
            100.0 * diffs.zip(w).map(|(d, w)| libm::fabs(d) * w).sum::<f64>() / n
        }
    })
}

/// Record the loss of `pred` against constant `gt` on the tape.
pub fn loss_node(tape: &mut Tape, kind: LossKind, pred: NodeId, gt: &[f64]) -> Result<NodeId> {
    let (rows, cols) = tape.shape(pred);
    if rows * cols == 0 {
        bail!(Input, "loss of empty vectors");
    }
    if rows * cols != gt.len() {
        bail!(Input, "prediction has {} values, ground truth {}", rows * cols, gt.len());
    }
    let target = tape.constant(rows, cols, gt.to_vec())?;
    let diff = tape.sub(pred, target)?;
    Ok(match kind {
        LossKind::L1 => {
            let a = tape.abs(diff);
            tape.mean(a)
        }
        LossKind::L2 => {
            let sq = tape.mul(diff, diff)?;
            tape.mean(sq)
        }
        LossKind::Mape => {
            let a = tape.abs(diff);
            let w = tape.constant(rows, cols, mape_weights(gt))?;
            let weighted = tape.mul(a, w)?;
            let m = tape.mean(weighted);
            tape.scale(m, 100.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        for kind in [LossKind::L1, LossKind::L2, LossKind::Mape] {
            assert_eq!(loss_value(kind, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
            assert!(loss_value(kind, &[], &[]).is_err());
            assert!(loss_value(kind, &[1.0], &[1.0, 2.0]).is_err());
        }
        assert_eq!(loss_value(LossKind::Mape, &[1.0], &[2.0]).unwrap(), 50.0);
        assert_eq!(loss_value(LossKind::L2, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(loss_value(LossKind::L1, &[0.0, 3.0], &[1.0, 1.0]).unwrap(), 1.5);
        assert_eq!(loss_value(LossKind::Mape, &[1e-6], &[0.0]).unwrap(), 100.0);
    }

    #[test]
    fn tape_matches_value() {
        let pred = [0.5, -1.0, 2.0, 0.0];
        let gt = [0.25, 1.0, 2.5, 1e-9];
        for kind in [LossKind::L1, LossKind::L2, LossKind::Mape] {
            let mut tape = Tape::new();
            let p = tape.constant(2, 2, pred.to_vec()).unwrap();
            let l = loss_node(&mut tape, kind, p, &gt).unwrap();
            let want = loss_value(kind, &pred, &gt).unwrap();
            assert!((tape.value(l)[0] - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in [LossKind::L1, LossKind::L2, LossKind::Mape] {
            assert_eq!(LossKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(LossKind::from_name("huber"), None);
    }
}
