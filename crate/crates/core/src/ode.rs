//! Fixed-step classical Runge-Kutta integration over flat `f64` state vectors.

/// Reusable RK4 stepper. Holds the stage buffers so a long simulation does
/// not allocate per step.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    scratch: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            scratch: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.k1.len()
    }

    /// Advance `state` from `t` to `t + dt` in place.
    ///
    /// `rhs(t, y, dydt)` writes the derivative of `y` at time `t` into `dydt`.
    /// Errors raised by `rhs` abort the step and leave `state` untouched.
    pub fn step<E, F>(&mut self, t: f64, dt: f64, state: &mut [f64], mut rhs: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        assert_eq!(state.len(), self.dim(), "state dimension mismatch");
        rhs(t, state, &mut self.k1)?;
        self.remaining_stages(t, dt, state, rhs)
    }

    /// Like [`Rk4::step`], with the derivative at `(t, state)` already known.
    pub fn step_with_slope<E, F>(&mut self, t: f64, dt: f64, state: &mut [f64], slope: &[f64], rhs: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        assert_eq!(state.len(), self.dim(), "state dimension mismatch");
        self.k1.copy_from_slice(slope);
        self.remaining_stages(t, dt, state, rhs)
    }

    fn remaining_stages<E, F>(&mut self, t: f64, dt: f64, state: &mut [f64], mut rhs: F) -> Result<(), E>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
    {
        let half = 0.5 * dt;
        stage(&mut self.scratch, state, &self.k1, half);
        rhs(t + half, &self.scratch, &mut self.k2)?;
        stage(&mut self.scratch, state, &self.k2, half);
        rhs(t + half, &self.scratch, &mut self.k3)?;
        stage(&mut self.scratch, state, &self.k3, dt);
        rhs(t + dt, &self.scratch, &mut self.k4)?;

        for (i, y) in state.iter_mut().enumerate() {
            *y += dt * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]) / 6.0;
        }
        Ok(())
    }
}

/// `out = y + h * k`, elementwise.
fn stage(out: &mut [f64], y: &[f64], k: &[f64], h: f64) {
    for ((o, y), k) in out.iter_mut().zip(y).zip(k) {
        *o = y + h * k;
    }
}
