//! Classification scores.

/// Fraction of matching labels; 0 for empty input.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "prediction and label counts differ");
    if truth.is_empty() {
        return 0.0;
    }
    pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64
}

/// `confusion[truth][pred]` counts.
pub fn confusion(pred: &[usize], truth: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut m = vec![vec![0; n_classes]; n_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        m[t][p] += 1;
    }
    m
}

/// Unweighted mean of per-class F1 over the classes that occur in either
/// the labels or the predictions.
pub fn macro_f1(pred: &[usize], truth: &[usize], n_classes: usize) -> f64 {
    let m = confusion(pred, truth, n_classes);
    let mut sum = 0.0;
    let mut present = 0;
    for c in 0..n_classes {
        let tp = m[c][c] as f64;
        let actual: usize = m[c].iter().sum();
        let predicted: usize = m.iter().map(|row| row[c]).sum();
        if actual == 0 && predicted == 0 {
            continue;
        }
        present += 1;
        let denom = (actual + predicted) as f64;
        sum += 2.0 * tp / denom;
    }
    if present == 0 {
        0.0
    } else {
        sum / present as f64
    }
}
