"""Forward simulation of the networked agent dynamics.

Each agent integrates dx_i/dt = f_i(y_i) with y = -L x.  The integrator is
classical fixed-step RK4: the right-hand side is continuous but not
Lipschitz at consensus, where adaptive step control chatters, so a
deterministic fixed step plus an explicit freeze rule at the consensus
threshold is both reproducible and honest about resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteState, NotStronglyConnected
from .graph import WeightedDigraph, is_strongly_connected, laplacian
from .protocols import ProtocolBank

__all__ = [
    "SimulationConfig",
    "Trajectory",
    "rhs",
    "integrate",
    "disagreement",
    "lyapunov_value",
    "lyapunov_trace",
    "settling_time",
]


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 1e-3
    t_max: float = 20.0
    eps_consensus: float = 1e-9
    record_stride: int = 10
    freeze_on_consensus: bool = True

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max > 0 or self.dt > self.t_max:
            raise ValueError("need 0 < dt <= t_max")
        if not self.eps_consensus > 0:
            raise ValueError("eps_consensus must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be a positive integer")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), n)
    disagreement: np.ndarray
    lyapunov: np.ndarray | None = None
    settled_at: float | None = None

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def disagreement(x: np.ndarray) -> float:
    """max_i x_i - min_i x_i."""
    x = np.asarray(x, dtype=float)
    return float(x.max() - x.min())


def rhs(g: WeightedDigraph, bank: ProtocolBank, x: np.ndarray) -> np.ndarray:
    """Protocol vector field: u_i = f_i((-L x)_i)."""
    L = laplacian(g)
    return bank.eval(-(L @ np.asarray(x, dtype=float)))


def settling_time(traj: Trajectory, eps: float) -> float | None:
    """Earliest recorded time after which disagreement never exceeds eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ok = traj.disagreement <= eps
    if not ok[-1]:
        return None
    # first index of the trailing all-True run
    bad = np.flatnonzero(~ok)
    k = 0 if bad.size == 0 else bad[-1] + 1
    return float(traj.times[k])


def integrate(
    cfg: SimulationConfig,
    g: WeightedDigraph,
    bank: ProtocolBank,
    x0: np.ndarray,
) -> Trajectory:
    """Fixed-step RK4 on [0, t_max] with optional freeze at consensus.

    Records every ``record_stride`` steps plus the final step.  Once the
    disagreement drops below the threshold (with freezing enabled) the states
    snap to their arithmetic mean and stay constant, which suppresses
    floating-point chatter around the non-Lipschitz equilibrium.
    """
    x = np.array(x0, dtype=float)
    if x.shape != (g.n,):
        raise ValueError("x0 length must equal agent count")
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    if len(bank) != g.n:
        raise ValueError("bank size must equal agent count")

    L = laplacian(g)
    dt = cfg.dt
    n_steps = max(1, int(round(cfg.t_max / dt)))
    stride = cfg.record_stride

    def deriv(xv):
        return bank.eval(-(L @ xv))

    rec_idx = [0]
    rec_states = [x.copy()]
    frozen = disagreement(x) <= cfg.eps_consensus and cfg.freeze_on_consensus
    if frozen:
        x[:] = x.mean()
        rec_states[0] = x.copy()
    k_frozen = 0 if frozen else None

    for k in range(1, n_steps + 1):
        if frozen:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            k1 = deriv(x)
            k2 = deriv(x + 0.5 * dt * k1)
            k3 = deriv(x + 0.5 * dt * k2)
            k4 = deriv(x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"state non-finite at t={k * dt:g}; reduce dt")
        if cfg.freeze_on_consensus and float(x.max() - x.min()) <= cfg.eps_consensus:
            x[:] = x.mean()
            frozen = True
            k_frozen = k
        if k % stride == 0 or k == n_steps or frozen:
            rec_idx.append(k)
            rec_states.append(x.copy())

    if frozen and (k_frozen is not None) and k_frozen < n_steps:
        # exact solution is constant after consensus; fill remaining records
        tail = list(range(((k_frozen // stride) + 1) * stride, n_steps + 1, stride))
        if not tail or tail[-1] != n_steps:
            tail.append(n_steps)
        for k in tail:
            if k > rec_idx[-1]:
                rec_idx.append(k)
                rec_states.append(x.copy())

    times = np.array(rec_idx, dtype=float) * dt
    states = np.vstack(rec_states)
    dis = states.max(axis=1) - states.min(axis=1)
    traj = Trajectory(times=times, states=states, disagreement=dis)
    traj.settled_at = settling_time(traj, cfg.eps_consensus)
    return traj


def lyapunov_value(
    g: WeightedDigraph,
    omega: np.ndarray,
    bank: ProtocolBank,
    x: np.ndarray,
) -> float:
    """V(x) = sum_i omega_i * F_i(y_i), y = -L x; zero exactly at consensus."""
    if not is_strongly_connected(g):
        raise NotStronglyConnected("Lyapunov value requires a strongly connected graph")
    y = -(laplacian(g) @ np.asarray(x, dtype=float))
    return float(np.dot(np.asarray(omega, dtype=float), bank.antiderivatives(y)))


def lyapunov_trace(
    g: WeightedDigraph,
    omega: np.ndarray,
    bank: ProtocolBank,
    traj: Trajectory,
) -> np.ndarray:
    """V along the recorded states; also stored on the trajectory."""
    v = np.array([lyapunov_value(g, omega, bank, x) for x in traj.states])
    traj.lyapunov = v
    return v
