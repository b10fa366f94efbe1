//! AdamW with decoupled weight decay and a one-cycle learning-rate
//! schedule: linear warmup to the peak rate, cosine decay to zero.

#[derive(Clone, Debug)]
pub struct OptimConfig {
    pub lr_peak: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
}

impl OptimConfig {
    pub fn new(lr_peak: f64, weight_decay: f64, total_steps: usize, warmup_frac: f64) -> Self {
        assert!(warmup_frac > 0.0 && warmup_frac < 1.0);
        assert!(total_steps > 0);
        OptimConfig {
            lr_peak,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            total_steps,
            warmup_frac,
        }
    }
}

/// One-cycle schedule value at `step`: linear ramp 0 → lr_peak over the
/// warmup fraction, then cosine decay lr_peak → 0.
pub fn one_cycle_lr(step: usize, cfg: &OptimConfig) -> f64 {
    assert!(step <= cfg.total_steps);
    let warmup = cfg.warmup_frac * cfg.total_steps as f64;
    let t = step as f64;
    if t <= warmup {
        cfg.lr_peak * t / warmup
    } else {
        let span = cfg.total_steps as f64 - warmup;
        let phase = (t - warmup) / span;
        cfg.lr_peak * 0.5 * (1.0 + (std::f64::consts::PI * phase).cos())
    }
}

/// First/second moment state for a flat parameter vector.
#[derive(Clone, Debug)]
pub struct OptimState {
    pub step: usize,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl OptimState {
    pub fn new(num_params: usize) -> Self {
        OptimState {
            step: 0,
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
        }
    }

    /// One AdamW update at learning rate `lr`. Decoupled weight decay is
    /// applied before the adaptive step; moments are bias-corrected.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64, cfg: &OptimConfig) {
        assert_eq!(params.len(), self.first_moment.len());
        assert_eq!(grads.len(), params.len());
        let t = (self.step + 1) as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let decay = 1.0 - lr * cfg.weight_decay;
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            *p *= decay;
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        self.step += 1;
    }
}
