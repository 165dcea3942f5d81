//! Holm step-down adjustment of a family of p-values.

/// Holm-adjusted p-values, in the input order.
///
/// With `p_(1) ≤ … ≤ p_(m)` the adjusted value of the `i`-th smallest is
/// `max_{k ≤ i} min(1, (m − k + 1)·p_(k))`.
pub fn holm_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        let scaled = ((m - rank) as f64 * p[i]).min(1.0);
        running = running.max(scaled);
        out[i] = running;
    }
    out
}
