//! Composite trapezoid rule with a bounded step.

/// Composite trapezoid over `[a, b]` with `n` equal panels.
pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

/// Number of panels so that no panel is wider than `max_step`.
pub fn panels_for(width: f64, max_step: f64) -> usize {
    if width <= 0.0 {
        return 1;
    }
    ((width / max_step).ceil() as usize).max(1)
}

/// Composite trapezoid over `[a, b]` whose panels are at most `max_step` wide.
pub fn trapezoid_max_step<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, max_step: f64) -> f64 {
    trapezoid(f, a, b, panels_for(b - a, max_step))
}
