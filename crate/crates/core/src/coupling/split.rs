use crate::error::{invalid, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Splits a `N(0, σ² 2^m)` value `v` into `2^m` i.i.d. `N(0, σ²)` increments
/// summing to `v`: `N_i = v/2^m + (G_i − Ḡ)` with fresh `G_i ~ N(0, σ²)`.
/// Given `Σ N_i = v` this is exactly the conditional law of i.i.d.
/// Gaussians, so the increments are unconditionally i.i.d. `N(0, σ²)`.
/// The last increment absorbs the rounding residual.
pub fn skorohod_split<R: Rng + ?Sized>(
    v: f64,
    m: u32,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(sigma2 > 0.0) {
        return invalid("sigma2 must be positive");
    }
    if m == 0 || m > 40 {
        return invalid("split exponent must lie in [1, 40]");
    }
    let len = 1usize << m;
    let sigma = sigma2.sqrt();
    let mut g: Vec<f64> = (0..len)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mean = g.iter().sum::<f64>() / len as f64;
    let share = v / len as f64;
    for x in &mut g {
        *x = share + (*x - mean);
    }
    let head: f64 = g[..len - 1].iter().sum();
    g[len - 1] = v - head;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, StreamTag};

    #[test]
    fn increments_sum_to_total() {
        let mut rng = substream(1, StreamTag::Aux, 0);
        for &v in &[0.0, 1.5, -37.25, 1e6] {
            for m in 1..8 {
                let inc = skorohod_split(v, m, 2.0, &mut rng).unwrap();
                let total: f64 = inc.iter().sum();
                assert!((total - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pair_is_antisymmetric_at_zero() {
        let mut rng = substream(2, StreamTag::Aux, 0);
        let inc = skorohod_split(0.0, 1, 1.0, &mut rng).unwrap();
        assert_eq!(inc[0], -inc[1]);
    }

    #[test]
    fn needs_positive_exponent() {
        let mut rng = substream(2, StreamTag::Aux, 0);
        assert!(skorohod_split(1.0, 0, 1.0, &mut rng).is_err());
    }
}
