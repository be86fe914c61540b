//! Fixed-step explicit integrators.

use nalgebra::{DMatrix, DVector};

/// State that can be advanced by an explicit Runge–Kutta scheme.
pub trait OdeState: Clone {
    /// `self + h * k`
    fn add_scaled(&self, k: &Self, h: f64) -> Self;
}

impl OdeState for DVector<f64> {
    fn add_scaled(&self, k: &Self, h: f64) -> Self {
        self + k * h
    }
}

impl OdeState for DMatrix<f64> {
    fn add_scaled(&self, k: &Self, h: f64) -> Self {
        self + k * h
    }
}

impl<A: OdeState, B: OdeState> OdeState for (A, B) {
    fn add_scaled(&self, k: &Self, h: f64) -> Self {
        (self.0.add_scaled(&k.0, h), self.1.add_scaled(&k.1, h))
    }
}

/// One classical fourth-order Runge–Kutta step of `dx/dt = f(t, x)`.
pub fn rk4<S, F>(mut f: F, t: f64, x: &S, dt: f64) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let half = 0.5 * dt;
    let k1 = f(t, x);
    let k2 = f(t + half, &x.add_scaled(&k1, half));
    let k3 = f(t + half, &x.add_scaled(&k2, half));
    let k4 = f(t + dt, &x.add_scaled(&k3, dt));
    x.add_scaled(&k1, dt / 6.0)
        .add_scaled(&k2, dt / 3.0)
        .add_scaled(&k3, dt / 3.0)
        .add_scaled(&k4, dt / 6.0)
}

/// Forward Euler, kept as a low-order reference.
pub fn euler<S, F>(mut f: F, t: f64, x: &S, dt: f64) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    x.add_scaled(&f(t, x), dt)
}
