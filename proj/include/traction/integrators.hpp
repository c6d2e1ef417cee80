#pragma once

namespace traction {

/// One classical fourth-order Runge-Kutta step of dx/dt = f(x) for any state
/// type supporting `x + h * dx` arithmetic.
template <class State, class Derivative>
State rk4_step(const State& x, double h, Derivative&& f) {
    const State k1 = f(x);
    const State k2 = f(State(x + (0.5 * h) * k1));
    const State k3 = f(State(x + (0.5 * h) * k2));
    const State k4 = f(State(x + h * k3));
    return State(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

} // namespace traction
