/// Below this edge probability `1 - prod` loses too many digits and the
/// complement is recomputed through `ln_1p`/`exp_m1`.
const CANCELLATION_CUTOFF: f64 = 1e-3;

/// Returns `1 - prod_k (1 - x_k)` for `x_k` in `[0, 1]`.
///
/// The product is accumulated directly; only when the result is small enough
/// for the subtraction to cancel is it recomputed in log space.
#[inline]
pub(crate) fn one_minus_product<I>(factors: I) -> f64
where
    I: Iterator<Item = f64> + Clone,
{
    let prod: f64 = factors.clone().map(|x| 1.0 - x).product();
    let pi = 1.0 - prod;
    if pi >= CANCELLATION_CUTOFF {
        return pi;
    }
    let log_sum: f64 = factors.map(|x| (-x).ln_1p()).sum();
    -log_sum.exp_m1()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_products_keep_precision() {
        let xs = [1e-20, 3e-20];
        let pi = one_minus_product(xs.iter().copied());
        assert!((pi - 4e-20).abs() < 1e-30);
    }

    #[test]
    fn matches_direct_form_for_moderate_values() {
        let xs = [0.25, 0.25];
        assert!((one_minus_product(xs.iter().copied()) - 0.4375).abs() < 1e-15);
        assert_eq!(one_minus_product([1.0, 0.3].iter().copied()), 1.0);
        assert_eq!(one_minus_product(std::iter::empty::<f64>()), 0.0);
    }
}
