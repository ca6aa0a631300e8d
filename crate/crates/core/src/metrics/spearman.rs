use alloc::vec::Vec;

use crate::error::{Error, Result};

/// 1-based ranks where tied values share the mean of their positions.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = alloc::vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
///
/// Returns `Ok(None)` when either input is constant (the correlation is
/// undefined); callers count such images as skipped.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "spearman inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Ok(None);
    }
    if let Some(index) = x.iter().chain(y).position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "spearman input",
            index,
        });
    }
    Ok(pearson(&fractional_ranks(x), &fractional_ranks(y)))
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        let (du, dv) = (u - ma, v - mb);
        sab += du * dv;
        saa += du * du;
        sbb += dv * dv;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / libm::sqrt(saa * sbb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn examples() {
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), Some(1.0));
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[30.0, 20.0, 10.0]).unwrap(), Some(-1.0));
        // ranks (1.5, 1.5, 3) vs (1, 2, 3): cov 1.5, var 1.5 and 2 -> 1.5 / sqrt(3)
        let r = spearman_rho(&[1.0, 1.0, 2.0], &[2.0, 3.0, 10.0]).unwrap().unwrap();
        assert!((r - 0.866_025_403_784_438_6).abs() < 1e-12);
    }

    #[test]
    fn undefined_cases() {
        assert_eq!(spearman_rho(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
        assert_eq!(spearman_rho(&[1.0, 2.0], &[3.0, 3.0]).unwrap(), None);
        assert_eq!(spearman_rho(&[1.0], &[1.0]).unwrap(), None);
        assert!(spearman_rho(&[1.0, 2.0], &[1.0]).is_err());
        assert!(spearman_rho(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(fractional_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(fractional_ranks(&[0.0, -0.0]), vec![1.5, 1.5]);
    }
}
