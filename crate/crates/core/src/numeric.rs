//! Small numerical helpers shared by the modules.

/// Running Neumaier (improved Kahan) sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        self.carry += if self.sum.abs() >= v.abs() {
            (self.sum - t) + v
        } else {
            (v - t) + self.sum
        };
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(samples: &[f64], dx: f64) -> f64 {
    match samples {
        [] | [_] => 0.0,
        [first, inner @ .., last] => {
            dx * (0.5 * (first + last) + compensated_sum(inner.iter().copied()))
        }
    }
}

/// `|a − b| / max(|a|, |b|, scale)`.
pub fn relative_error(a: f64, b: f64, scale: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(scale);
    if denom == 0.0 {
        0.0
    } else {
        (a - b).abs() / denom
    }
}
