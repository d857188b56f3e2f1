use std::time::Instant;

use anyhow::Result;

/// Runs `f` once to warm caches, then `reps` more times; returns the median wall time in
/// seconds and the last result.
pub fn median_time<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut out = f()?;
    let mut times = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        out = std::hint::black_box(f()?);
        times.push(t.elapsed().as_secs_f64());
    }
    Ok((median(&mut times), out))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// First x where a − b changes sign, linearly interpolated between samples. A sample
/// where the difference is exactly zero counts as a crossing.
pub fn crossover(x: &[f64], a: &[f64], b: &[f64]) -> Option<f64> {
    let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
    for i in 0..d.len() {
        if d[i] == 0.0 {
            return Some(x[i]);
        }
        if i + 1 < d.len() && d[i] * d[i + 1] < 0.0 {
            let t = d[i] / (d[i] - d[i + 1]);
            return Some(x[i] + t * (x[i + 1] - x[i]));
        }
    }
    None
}
