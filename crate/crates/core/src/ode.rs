//! Classical fixed-step fourth-order Runge–Kutta on complex state slices.

use num_complex::Complex64;

pub(crate) struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
}

impl Rk4 {
    pub(crate) fn new(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z,
        }
    }

    /// Advances `y` from `t` to `t + dt` for `y' = f(t, y)`; `f` writes the
    /// derivative into its third argument.
    pub(crate) fn step<F>(&mut self, f: &mut F, t: f64, dt: f64, y: &mut [Complex64])
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let half = 0.5 * dt;
        f(t, y, &mut self.k1);
        axpy(&mut self.stage, y, half, &self.k1);
        f(t + half, &self.stage, &mut self.k2);
        axpy(&mut self.stage, y, half, &self.k2);
        f(t + half, &self.stage, &mut self.k3);
        axpy(&mut self.stage, y, dt, &self.k3);
        f(t + dt, &self.stage, &mut self.k4);
        let w = dt / 6.0;
        for i in 0..y.len() {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }
}

fn axpy(out: &mut [Complex64], y: &[Complex64], a: f64, k: &[Complex64]) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = y + k * a;
    }
}

/// Uniform step plan: `segments` equal intervals on `[0, t_max]`, each split
/// into `steps_per_segment` steps no longer than `max_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepPlan {
    pub t_max: f64,
    pub segments: usize,
    pub steps_per_segment: usize,
}

impl StepPlan {
    pub(crate) fn new(t_max: f64, segments: usize, max_step: f64) -> Self {
        let seg = t_max / segments as f64;
        let steps_per_segment = ((seg / max_step) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self {
            t_max,
            segments,
            steps_per_segment,
        }
    }

    pub(crate) fn halved(self) -> Self {
        Self {
            steps_per_segment: 2 * self.steps_per_segment,
            ..self
        }
    }

    pub(crate) fn segment_length(&self) -> f64 {
        self.t_max / self.segments as f64
    }

    pub(crate) fn dt(&self) -> f64 {
        self.segment_length() / self.steps_per_segment as f64
    }

    pub(crate) fn sample_time(&self, k: usize) -> f64 {
        if k == self.segments {
            self.t_max
        } else {
            self.segment_length() * k as f64
        }
    }

    pub(crate) fn total_steps(&self) -> usize {
        self.segments * self.steps_per_segment
    }
}
