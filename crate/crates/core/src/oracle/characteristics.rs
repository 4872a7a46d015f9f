//! Reference solution of the closed transport loop by characteristics.
//!
//! Along `z + t = const` the state obeys `d/dt x = -(alpha + eps h) x`, so
//! `x(z, t)` is either damped initial data (`z + t < 1`) or damped inflow data
//! `b(t - (1 - z))`. The inflow `b(t) = -eps psi(x(t))` satisfies a Volterra
//! equation of the second kind, which is marched on a fine uniform time grid with
//! the trapezoid rule (implicit in the newest value).

/// Fine-grid reference solver; coefficients are plain functions of `z`.
pub struct CharacteristicsOracle<H, F, X> {
    alpha: f64,
    eps: f64,
    h: H,
    f: F,
    x0: X,
    /// intervals per unit time for the inflow history
    resolution: usize,
    /// cumulative `int_0^z h` on `resolution + 1` nodes
    h_cum: Vec<f64>,
    inflow: Vec<f64>,
}

impl<H, F, X> CharacteristicsOracle<H, F, X>
where
    H: Fn(f64) -> f64,
    F: Fn(f64) -> f64,
    X: Fn(f64) -> f64,
{
    pub fn new(alpha: f64, eps: f64, h: H, f: F, x0: X, resolution: usize) -> Self {
        let dz = 1.0 / resolution as f64;
        let mut h_cum = vec![0.0; resolution + 1];
        for i in 1..=resolution {
            h_cum[i] = h_cum[i - 1] + 0.5 * dz * (h((i - 1) as f64 * dz) + h(i as f64 * dz));
        }
        Self {
            alpha,
            eps,
            h,
            f,
            x0,
            resolution,
            h_cum,
            inflow: Vec::new(),
        }
    }

    fn h_integral(&self, z: f64) -> f64 {
        let pos = z.clamp(0.0, 1.0) * self.resolution as f64;
        let i = (pos.floor() as usize).min(self.resolution - 1);
        let w = pos - i as f64;
        let dz = 1.0 / self.resolution as f64;
        // exact for h linear on the cell
        let hi = (self.h)(i as f64 * dz);
        let hz = (self.h)(z.clamp(0.0, 1.0));
        self.h_cum[i] + 0.5 * w * dz * (hi + hz)
    }

    fn initial_damping(&self, z: f64, t: f64) -> f64 {
        (-self.alpha * t - self.eps * (self.h_integral(z + t) - self.h_integral(z))).exp()
    }

    fn inflow_damping(&self, z: f64) -> f64 {
        (-self.alpha * (1.0 - z) - self.eps * (self.h_integral(1.0) - self.h_integral(z))).exp()
    }

    /// Integrate `f(z) x0(z + t) damping` over `z in [0, 1 - t]` (composite Simpson).
    fn initial_part(&self, t: f64) -> f64 {
        let len = 1.0 - t;
        if len <= 0.0 {
            return 0.0;
        }
        let m = 2 * ((self.resolution as f64 * len).ceil() as usize).max(8);
        let dz = len / m as f64;
        let g = |z: f64| (self.f)(z) * (self.x0)(z + t) * self.initial_damping(z, t);
        let mut s = g(0.0) + g(len);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * dz);
        }
        s * dz / 3.0
    }

    /// March the inflow history up to `t_end`.
    pub fn solve_inflow(&mut self, t_end: f64) {
        let r = self.resolution;
        let dt = 1.0 / r as f64;
        let steps = (t_end * r as f64).ceil() as usize;
        let mut b = Vec::with_capacity(steps + 1);
        // weights of the memory integral: r = t - 1 + z, z = r + 1 - t
        let kernel: Vec<f64> = (0..=r)
            .map(|l| {
                let z = l as f64 * dt;
                (self.f)(z) * self.inflow_damping(z)
            })
            .collect();
        for m in 0..=steps {
            let t = m as f64 * dt;
            let init = self.initial_part(t);
            // memory nodes l = m - r .. m, i.e. z_l = 1 - (m - l) dt
            let lo = m.saturating_sub(r);
            let mut mem = 0.0;
            for (idx, l) in (lo..m).enumerate() {
                let z_index = r - (m - l);
                let w = if idx == 0 { 0.5 } else { 1.0 };
                mem += w * dt * kernel[z_index] * b[l];
            }
            let self_weight = if m == lo { 0.0 } else { 0.5 * dt * kernel[r] };
            let value = -self.eps * (init + mem) / (1.0 + self.eps * self_weight);
            b.push(value);
        }
        self.inflow = b;
    }

    /// Inflow value `x(1, t)` by linear interpolation of the marched history.
    pub fn inflow(&self, t: f64) -> f64 {
        let pos = t * self.resolution as f64;
        let i = (pos.floor() as usize).min(self.inflow.len().saturating_sub(2));
        let w = pos - i as f64;
        (1.0 - w) * self.inflow[i] + w * self.inflow[i + 1]
    }

    /// `x(z, t)`; call [`Self::solve_inflow`] with at least `t` first.
    pub fn state(&self, z: f64, t: f64) -> f64 {
        if t == 0.0 {
            (self.x0)(z)
        } else if z + t < 1.0 - 1e-12 {
            (self.x0)(z + t) * self.initial_damping(z, t)
        } else {
            self.inflow(t - (1.0 - z)) * self.inflow_damping(z)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncoupled_inflow_is_zero_and_state_is_shift() {
        let mut o = CharacteristicsOracle::new(1.0, 0.0, |_| 1.0, |_| 1.0, |z: f64| z.cos(), 256);
        o.solve_inflow(2.0);
        assert!(o.inflow.iter().all(|&b| b == 0.0));
        let v = o.state(0.2, 0.3);
        assert!((v - 0.5f64.cos() * (-0.3f64).exp()).abs() < 1e-14);
        assert_eq!(o.state(0.5, 0.7), 0.0);
    }

    #[test]
    fn initial_inflow_is_minus_eps_psi() {
        let mut o = CharacteristicsOracle::new(1.0, 0.05, |_| 1.0, |_| 1.0, |_| 1.0, 512);
        o.solve_inflow(0.1);
        assert!((o.inflow(0.0) + 0.05).abs() < 1e-12);
    }

    #[test]
    fn inflow_converges_under_refinement() {
        let run = |r| {
            let mut o = CharacteristicsOracle::new(
                1.0,
                0.3,
                |z: f64| 1.0 + z,
                |z: f64| 2.0 - z,
                |z: f64| (2.0 * z).sin() + 1.0,
                r,
            );
            o.solve_inflow(1.5);
            o.inflow(1.5)
        };
        let (a, b, c) = (run(256), run(512), run(1024));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.5, "observed ratio {ratio}");
    }
}
