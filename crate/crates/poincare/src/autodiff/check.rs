//! Central-difference verification of tape gradients.

use crate::autodiff::{Tape, Var};
use crate::error::{PoincareError, Result};

/// Compare the analytic gradient of `f` against central differences at
/// `point`; returns the max over leaf coordinates of
/// `|analytic - cd| / (|cd| + 1e-8)`.
pub fn grad_check<F>(f: F, point: &[Vec<f64>], step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let eval = |coords: &[Vec<f64>]| -> Result<f64> {
        let mut t = Tape::new();
        let leaves: Vec<Var> = coords.iter().map(|cc| t.leaf(cc.clone())).collect();
        let out = f(&mut t, &leaves)?;
        if t.value(out).len() != 1 {
            return Err(PoincareError::Contract(
                "grad_check needs a scalar-valued function".into(),
            ));
        }
        Ok(t.value(out)[0])
    };

    // analytic pass
    let mut tape = Tape::new();
    let leaves: Vec<Var> = point.iter().map(|cc| tape.leaf(cc.clone())).collect();
    let out = f(&mut tape, &leaves)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = leaves.iter().map(|&l| grads.wrt(l).to_vec()).collect();

    let mut worst: f64 = 0.0;
    let mut work = point.to_vec();
    for (i, leaf) in point.iter().enumerate() {
        for j in 0..leaf.len() {
            work[i][j] = leaf[j] + step;
            let plus = eval(&work)?;
            work[i][j] = leaf[j] - step;
            let minus = eval(&work)?;
            work[i][j] = leaf[j];
            let cd = (plus - minus) / (2.0 * step);
            let rel = (analytic[i][j] - cd).abs() / (cd.abs() + 1e-8);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}
