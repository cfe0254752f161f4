//! Rate statistics, per-layer normalization, threshold crossing estimation
//! and linear fits.

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Logical error rate per layer from the total rate over `depth` layers.
///
/// `P_layer = P_max (1 − (1 − P_total/P_max)^{1/D})`, where `P_max` is the
/// fully-mixed ceiling `1 − 2^{−n}`.
pub fn per_layer_rate(p_total: f64, depth: usize, n_qubits: usize) -> f64 {
    let p_max = 1.0 - 2f64.powi(-(n_qubits as i32));
    assert!(
        (0.0..=p_max + 1e-12).contains(&p_total),
        "total rate {p_total} outside [0, {p_max}]"
    );
    if depth == 0 {
        return p_total;
    }
    p_max * (1.0 - (1.0 - p_total / p_max).powf(1.0 / depth as f64))
}

/// One measured point of a threshold scan.
#[derive(Clone, Copy, Debug)]
pub struct RatePoint {
    pub distance: usize,
    pub p: f64,
    pub errors: u64,
    pub shots: u64,
    /// Normalized (per-layer) rate used for crossing estimation.
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct ThresholdResult {
    /// Crossing estimate, or None when the curves do not cross in range.
    pub p_th: Option<f64>,
    pub ci: Option<(f64, f64)>,
    /// Per-distance slope exponents d ln(rate) / d ln(p) at low p.
    pub slopes: Vec<(usize, f64)>,
}

/// Crossing point of two log-log interpolated curves, if any.
fn pairwise_crossing(a: &[(f64, f64)], b: &[(f64, f64)]) -> Option<f64> {
    // Points share the p grid; walk segments of the difference.
    let mut prev: Option<(f64, f64)> = None;
    for (&(pa, ra), &(_, rb)) in a.iter().zip(b.iter()) {
        if ra <= 0.0 || rb <= 0.0 {
            prev = None;
            continue;
        }
        let diff = ra.ln() - rb.ln();
        if let Some((p0, d0)) = prev {
            if d0 == 0.0 {
                return Some(p0);
            }
            if d0.signum() != diff.signum() {
                // Linear interpolation in ln p.
                let (l0, l1) = (p0.ln(), pa.ln());
                let t = d0 / (d0 - diff);
                return Some((l0 + t * (l1 - l0)).exp());
            }
        }
        prev = Some((pa, diff));
    }
    None
}

fn crossing_estimate(points: &[RatePoint]) -> Option<f64> {
    let mut distances: Vec<usize> = points.iter().map(|r| r.distance).collect();
    distances.sort_unstable();
    distances.dedup();
    let curve = |d: usize| -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> =
            points.iter().filter(|r| r.distance == d).map(|r| (r.p, r.rate)).collect();
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        v
    };
    let mut crossings = Vec::new();
    for w in distances.windows(2) {
        if let Some(c) = pairwise_crossing(&curve(w[0]), &curve(w[1])) {
            crossings.push(c);
        }
    }
    if crossings.is_empty() {
        return None;
    }
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(crossings[crossings.len() / 2])
}

/// Threshold from pairwise curve crossings with a bootstrap confidence
/// interval, plus low-p slope exponents per distance.
pub fn estimate_threshold(points: &[RatePoint], slope_at: f64, seed: u64) -> ThresholdResult {
    use rand::{Rng, SeedableRng};
    let p_th = crossing_estimate(points);
    let ci = p_th.map(|_| {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Vec::new();
        for _ in 0..400 {
            let resampled: Vec<RatePoint> = points
                .iter()
                .map(|r| {
                    let p_hat = r.errors as f64 / r.shots.max(1) as f64;
                    let mut errs = 0u64;
                    // Binomial resample via normal approximation for large
                    // counts, exact Bernoulli loop for small ones.
                    if r.shots > 10_000 && r.errors > 100 {
                        let mean = r.shots as f64 * p_hat;
                        let sd = (r.shots as f64 * p_hat * (1.0 - p_hat)).sqrt();
                        let g: f64 = standard_normal(&mut rng);
                        errs = (mean + sd * g).round().max(0.0) as u64;
                    } else {
                        for _ in 0..r.shots.min(20_000) {
                            if rng.gen_bool(p_hat.clamp(0.0, 1.0)) {
                                errs += 1;
                            }
                        }
                        if r.shots > 20_000 {
                            errs = (errs as f64 * r.shots as f64 / 20_000.0) as u64;
                        }
                    }
                    let scale = r.rate / p_hat.max(1e-300);
                    RatePoint {
                        errors: errs,
                        rate: (errs as f64 / r.shots as f64) * scale,
                        ..*r
                    }
                })
                .collect();
            if let Some(c) = crossing_estimate(&resampled) {
                samples.push(c);
            }
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if samples.is_empty() {
            (0.0, f64::INFINITY)
        } else {
            (samples[samples.len() * 25 / 1000], samples[samples.len() * 975 / 1000 - 1])
        }
    });

    let mut distances: Vec<usize> = points.iter().map(|r| r.distance).collect();
    distances.sort_unstable();
    distances.dedup();
    let slopes = distances
        .iter()
        .map(|&d| {
            let pts: Vec<(f64, f64)> = points
                .iter()
                .filter(|r| r.distance == d && r.rate > 0.0 && r.p <= slope_at * 1.8 && r.p >= slope_at / 1.8)
                .map(|r| (r.p.ln(), r.rate.ln()))
                .collect();
            let slope = if pts.len() >= 2 { linear_fit(&pts).0 } else { f64::NAN };
            (d, slope)
        })
        .collect();
    ThresholdResult { p_th, ci, slopes }
}

fn standard_normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    use rand::Rng;
    // Box-Muller.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Least-squares slope/intercept and R² of y on x.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    assert!(points.len() >= 2, "fit needs at least two points");
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 =
        points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_layer_identities() {
        assert_eq!(per_layer_rate(0.0, 14, 10), 0.0);
        let p = 0.123;
        assert!((per_layer_rate(p, 1, 10) - p).abs() < 1e-12);
        let p_max = 1.0 - 2f64.powi(-10);
        assert!((per_layer_rate(p_max, 14, 10) - p_max).abs() < 1e-9);
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(50, 1000, 1.96);
        assert!(lo < 0.05 && 0.05 < hi);
        assert!(hi - lo < 0.03);
    }

    /// Synthetic curves rate = (p/p_th)^⌊(d+1)/2⌋ recover the planted
    /// threshold.
    #[test]
    fn synthetic_crossing_recovers_planted_threshold() {
        let p_th = 0.00718;
        let mut points = Vec::new();
        for &d in &[3usize, 5, 7] {
            let k = ((d + 1) / 2) as f64;
            for i in 0..8 {
                let p = 0.002 * 4.0f64.powf(i as f64 / 7.0);
                let rate = (p / p_th).powf(k) * 0.08;
                points.push(RatePoint {
                    distance: d,
                    p,
                    errors: (rate * 1e6) as u64,
                    shots: 1_000_000,
                    rate,
                });
            }
        }
        let out = estimate_threshold(&points, 0.0025, 7);
        let got = out.p_th.expect("crossing found");
        assert!((got - p_th).abs() / p_th < 0.05, "got {got}");
        let (lo, hi) = out.ci.unwrap();
        assert!(lo <= p_th && p_th <= hi, "CI ({lo}, {hi})");
        for (d, slope) in out.slopes {
            let expect = ((d + 1) / 2) as f64;
            assert!((slope - expect).abs() < 0.2, "d={d} slope {slope}");
        }
    }

    #[test]
    fn monotone_curves_have_no_crossing() {
        let mut points = Vec::new();
        for &d in &[3usize, 5] {
            for i in 0..5 {
                let p = 0.002 + 0.001 * i as f64;
                // Larger distance strictly better everywhere: no crossing.
                let rate = p * 10.0 / d as f64;
                points.push(RatePoint { distance: d, p, errors: 100, shots: 10_000, rate });
            }
        }
        let out = estimate_threshold(&points, 0.0025, 3);
        assert!(out.p_th.is_none());
    }

    #[test]
    fn fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 + 1.0)).collect();
        let (slope, intercept, r2) = linear_fit(&pts);
        assert!((slope - 3.0).abs() < 1e-9);
        assert!((intercept - 1.0).abs() < 1e-9);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
