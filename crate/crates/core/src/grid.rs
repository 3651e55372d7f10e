//! Inclusive sample grids (`a:b:step`) and α-level grids.

use thiserror::Error;

/// Values within this distance of the right end are snapped onto it.
pub const SNAP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("malformed grid `{0}`; expected `start:stop:step` or a single number")]
    Syntax(String),
    #[error("grid step must be positive, got {0}")]
    Step(f64),
    #[error("grid stop {stop} is below start {start}")]
    Reversed { start: f64, stop: f64 },
    #[error("grid `{0}` would contain more than 10^7 points")]
    TooLarge(String),
}

/// Points `start, start+step, …` up to and including `stop`.
///
/// Points are computed as `start + i*step` (no accumulated drift) and the
/// final point is snapped to `stop` when it lands within [`SNAP`] of it. When
/// `step` is `1/m` and `start` a multiple of it, points are `k/m`, so decimal
/// grids such as `0:1:0.05` hit `0.35` exactly.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, GridError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(GridError::Step(step));
    }
    if stop < start {
        return Err(GridError::Reversed { start, stop });
    }
    let span = (stop - start) / step;
    if span > 1e7 {
        return Err(GridError::TooLarge(format!("{start}:{stop}:{step}")));
    }
    let n = (span + 1e-9).floor() as usize;
    let m = (1.0 / step).round();
    let k0 = (start * m).round();
    let rational = m >= 1.0 && (1.0 / step - m).abs() <= 1e-9 * m && (start * m - k0).abs() <= 1e-9 * m.max(k0.abs());
    let mut out: Vec<f64> = (0..=n)
        .map(|i| if rational { (k0 + i as f64) / m } else { start + i as f64 * step })
        .collect();
    let last = *out.last().expect("nonempty");
    if (stop - last).abs() <= SNAP.max(step * 1e-9) {
        *out.last_mut().expect("nonempty") = stop;
    } else if last < stop && stop - last > SNAP {
        // step does not divide the span; keep the right end inclusive
        out.push(stop);
    }
    Ok(out)
}

/// `n` evenly spaced points on `[lo, hi]` (both ends included).
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Parse `a:b:step` or a single number.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, GridError> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| GridError::Syntax(text.to_string()));
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [a, b, s] => linspace_step(num(a)?, num(b)?, num(s)?),
        _ => Err(GridError::Syntax(text.to_string())),
    }
}

/// Replace grid values lying within [`SNAP`] of a knot with the knot itself.
pub fn snap_to(values: &mut [f64], knots: &[f64]) {
    for v in values.iter_mut() {
        for &k in knots {
            if (*v - k).abs() <= SNAP {
                *v = k;
            }
        }
    }
}

/// Sort, deduplicate, and check an α grid lies in `[0, 1]`.
pub fn normalize_alpha_grid(mut alphas: Vec<f64>) -> Option<Vec<f64>> {
    if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
        return None;
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup_by(|a, b| (*a - *b).abs() <= SNAP);
    Some(alphas)
}

/// The default 21-level grid {0, 0.05, …, 1}.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}
