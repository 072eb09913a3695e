/// Weighted least-squares nondecreasing fit by pool-adjacent-violators.
///
/// Panics if the slices differ in length.
pub fn isotonic_fit(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len(), "values and weights differ in length");
    // Each block holds (weighted mean, total weight, length).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        let mut cur = (v, w, 1usize);
        while let Some(&(m, pw, len)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let tw = pw + cur.1;
            let mean = if tw > 0.0 {
                (m * pw + cur.0 * cur.1) / tw
            } else {
                0.5 * (m + cur.0)
            };
            cur = (mean, tw, len + cur.2);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, _, len) in blocks {
        out.extend(std::iter::repeat_n(m, len));
    }
    out
}

/// Unweighted form of [`isotonic_fit`].
pub fn isotonic(values: &[f64]) -> Vec<f64> {
    isotonic_fit(values, &vec![1.0; values.len()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_input_is_unchanged() {
        let v = [0.1, 0.2, 0.2, 0.5, 0.9];
        assert_eq!(isotonic(&v), v.to_vec());
    }

    #[test]
    fn pools_violators() {
        assert_eq!(isotonic(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        let w = isotonic_fit(&[1.0, 0.0], &[3.0, 1.0]);
        assert_eq!(w, vec![0.75, 0.75]);
    }

    #[test]
    fn empty_input() {
        assert!(isotonic(&[]).is_empty());
    }
}
