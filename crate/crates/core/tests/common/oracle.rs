//! Independent reference arithmetic, written against plain arrays so it
//! shares no code with the library.

pub const W_COM: [f64; 5] = [0.20, 0.15, 0.20, 0.25, 0.20];

pub fn weighted_sum(w: &[f64; 5], s: &[f64; 5]) -> f64 {
    let mut t = 0.0;
    for i in 0..5 {
        t += w[i] * s[i];
    }
    t
}

pub fn survive(s: &[f64; 5], sigma: &[f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = sigma[i] * s[i];
    }
    out
}

/// `max(s, r)` capped by the ceiling.
pub fn recovered(post: &[f64; 5], reauth: &[f64; 5], ceiling: &[f64; 5]) -> [f64; 5] {
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = post[i].max(reauth[i]).min(ceiling[i]);
    }
    out
}

/// `alpha * Σ unit_j (1 − σ_j)` where accepted components use `verify`.
pub fn cost(alpha: f64, sigma: &[f64; 5], full: &[f64; 5], verify: &[f64; 5], accepted: &[bool; 5]) -> f64 {
    let mut t = 0.0;
    for i in 0..5 {
        let unit = if accepted[i] { verify[i] } else { full[i] };
        t += unit * (1.0 - sigma[i]);
    }
    alpha * t
}

/// Minutes strictly below `threshold` along a piecewise-linear curve.
/// Repeated abscissae encode jumps.
pub fn minutes_below(points: &[(f64, f64)], threshold: f64) -> f64 {
    let mut total = 0.0;
    for seg in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
        let dx = x1 - x0;
        if dx <= 0.0 {
            continue;
        }
        let below0 = y0 < threshold;
        let below1 = y1 < threshold;
        total += if below0 && below1 {
            dx
        } else if !below0 && !below1 {
            0.0
        } else {
            let cross = x0 + dx * (threshold - y0) / (y1 - y0);
            if below0 { cross - x0 } else { x1 - cross }
        };
    }
    total
}

/// The figure-2 breakpoints, transcribed separately from the scenario file.
pub const FIGURE_2: &[(f64, f64)] = &[
    (0.0, 0.92),
    (10.0, 0.90),
    (10.0, 0.71),
    (12.0, 0.78),
    (18.0, 0.82),
    (18.0, 0.35),
    (22.0, 0.42),
    (28.0, 0.48),
    (35.0, 0.48),
    (35.0, 0.22),
    (38.0, 0.30),
    (42.0, 0.35),
    (55.0, 0.35),
    (65.0, 0.35),
    (65.0, 0.48),
    (68.0, 0.55),
    (72.0, 0.60),
    (72.0, 0.71),
    (75.0, 0.80),
    (78.0, 0.85),
    (78.0, 0.88),
    (82.0, 0.90),
    (90.0, 0.92),
];

/// Bounds of an adversary-forced trust gap, in seconds.
pub const ADVERSARY_GAP_S: (f64, f64) = (2.0, 15.0);
