//! Order-fixed reductions for Monte Carlo estimates.

/// Running per-component mean and centred second moment (Welford), with the
/// pairwise merge of Chan et al. Merging in a fixed order gives results that
/// do not depend on how the work was scheduled.
#[derive(Clone, Debug)]
pub struct Moments {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(width: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; width],
            m2: vec![0.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.mean.len());
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &xi) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = xi - *m;
            *m += d / n;
            *s += d * (xi - *m);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.n += other.n;
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Unbiased sample variance per component.
    pub fn variance(&self) -> Vec<f64> {
        let d = (self.n.max(2) - 1) as f64;
        self.m2.iter().map(|s| (s / d).max(0.0)).collect()
    }

    /// Standard error of the mean per component.
    pub fn stderr(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.variance().into_iter().map(|v| (v / n).sqrt()).collect()
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner = compensated_sum(values[1..n - 1].iter().copied());
            dt * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin() + 3.0).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let mut whole = Moments::new(1);
        xs.iter().for_each(|x| whole.push(&[*x]));
        let mut merged = Moments::new(1);
        for chunk in xs.chunks(77) {
            let mut m = Moments::new(1);
            chunk.iter().for_each(|x| m.push(&[*x]));
            merged.merge(&m);
        }
        for m in [&whole, &merged] {
            assert!((m.mean()[0] - mean).abs() < 1e-13);
            assert!((m.variance()[0] - var).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_is_exact_for_lines() {
        let v: Vec<f64> = (0..11).map(|k| 2.0 * k as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&v, 0.1) - 2.0).abs() < 1e-14);
        assert_eq!(trapezoid(&[5.0], 0.1), 0.0);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
