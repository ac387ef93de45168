"""Warmup tuning: dual-averaging step size and windowed diagonal metric."""
import numpy as np

from .integrator import kinetic_energy, step


class DualAveraging:
    """Nesterov dual averaging of ``log(eps)`` toward a target acceptance.

    Defaults (gamma=0.05, t0=10, kappa=0.75, mu=log(10 eps0)) follow the
    usual NUTS settings.
    """

    def __init__(self, eps0, target=0.8, gamma=0.05, t0=10.0, kappa=0.75):
        self.target = target
        self.gamma = gamma
        self.t0 = t0
        self.kappa = kappa
        self.restart(eps0)

    def restart(self, eps0):
        self.mu = np.log(10.0 * eps0)
        self.counter = 0
        self.s_bar = 0.0
        self.x_bar = 0.0
        self.x = np.log(eps0)

    def update(self, accept_stat):
        """Feed one acceptance statistic; returns the next step size."""
        self.counter += 1
        a = min(1.0, accept_stat)
        eta = 1.0 / (self.counter + self.t0)
        self.s_bar = (1.0 - eta) * self.s_bar + eta * (self.target - a)
        self.x = self.mu - self.s_bar * np.sqrt(self.counter) / self.gamma
        w = self.counter ** -self.kappa
        self.x_bar = (1.0 - w) * self.x_bar + w * self.x
        return float(np.exp(self.x))

    @property
    def final_step_size(self):
        return float(np.exp(self.x_bar))


class WelfordVariance:
    def __init__(self, dim):
        self.dim = dim
        self.restart()

    def restart(self):
        self.n = 0
        self.mean = np.zeros(self.dim)
        self.m2 = np.zeros(self.dim)

    def add(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)

    def variance(self):
        return self.m2 / (self.n - 1)


class WindowedMetric:
    """Diagonal metric estimated over doubling windows.

    Schedule: an initial fast buffer (75 iterations) tuned on step size only,
    slow windows of 25, 50, 100, ... draws whose variance becomes the new
    metric, and a terminal fast buffer of 50. The last slow window is
    stretched to meet the terminal buffer. The variance is shrunk toward
    1e-3 as (n / (n + 5)) var + 1e-3 (5 / (n + 5)).
    """

    def __init__(self, dim, warmup, init_buffer=75, term_buffer=50, base_window=25):
        self.warmup = warmup
        self.init_buffer = init_buffer
        self.term_buffer = term_buffer
        self.base_window = base_window
        self.estimator = WelfordVariance(dim)
        self.counter = 0
        self.window_size = base_window
        self.next_window = init_buffer + base_window - 1

    @staticmethod
    def full_windowing(warmup, init_buffer=75, term_buffer=50, base_window=25):
        return warmup >= 150 and warmup >= init_buffer + term_buffer + base_window

    def _in_window(self):
        return (self.init_buffer <= self.counter < self.warmup - self.term_buffer
                and self.counter != self.warmup)

    def _window_end(self):
        return self.counter == self.next_window and self.counter != self.warmup

    def _advance_window(self):
        last = self.warmup - self.term_buffer - 1
        if self.next_window == last:
            return
        self.window_size *= 2
        self.next_window = self.counter + self.window_size
        if self.next_window != last and self.next_window + 2 * self.window_size >= self.warmup - self.term_buffer:
            self.next_window = last

    def learn(self, q):
        """Record a warmup draw; returns the new inverse-mass diagonal at the
        end of a slow window, otherwise ``None``."""
        out = None
        if self._in_window():
            self.estimator.add(q)
        if self._window_end():
            self._advance_window()
            n = self.estimator.n
            var = self.estimator.variance()
            out = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            self.estimator.restart()
        self.counter += 1
        return out


def find_reasonable_step_size(q, logp, grad, eps, inv_mass, logp_grad, rng):
    """Double or halve ``eps`` until a single leapfrog step crosses an
    acceptance probability of 0.8."""
    log_target = np.log(0.8)

    def delta_h(e):
        p = rng.standard_normal(q.size) / np.sqrt(inv_mass)
        H0 = -logp + kinetic_energy(p, inv_mass)
        _, p1, lp1, _ = step(q, p, grad, e, inv_mass, logp_grad)
        H1 = -lp1 + kinetic_energy(p1, inv_mass)
        return H0 - H1 if np.isfinite(H1) else -np.inf

    direction = 1 if delta_h(eps) > log_target else -1
    for _ in range(100):
        dh = delta_h(eps)
        if direction == 1 and not dh > log_target:
            break
        if direction == -1 and not dh < log_target:
            break
        eps = eps * 2.0 if direction == 1 else eps * 0.5
        if eps > 1e7 or eps < 1e-300:
            raise RuntimeError("could not find a reasonable step size; posterior may be improper")
    return eps
