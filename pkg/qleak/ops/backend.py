import torch

from .statevector import NoiseSpec, expval_z_batch, sample_expval_z_batch


class QuantumBackend():
    """The modeled cloud device that executes circuits for the victim.

    With `shots == 0` expectations are exact. Readout noise then only
    contracts them by (1 - 2p), which is the exact mean of a flipped bit.
    With `shots > 0` every circuit is sampled from one seeded generator, so a
    run is reproducible as long as circuits are submitted in the same order.

    Args:
        shots (int): 0 for analytic mode, else shots per circuit. Default: 0.
        noise (NoiseSpec | dict | None): Readout noise. Default: None.
        seed (int): Seed of the sampling generator. Default: 0.
    """

    def __init__(self, shots=0, noise=None, seed=0):
        if shots < 0:
            raise ValueError(f'shots must be >= 0, got {shots}')
        self.shots = int(shots)
        self.noise = NoiseSpec.from_opt(noise)
        self.seed = int(seed)
        self.generator = torch.Generator().manual_seed(self.seed)
        self.n_executions = 0

    @property
    def analytic(self):
        return self.shots == 0

    def expvals(self, states, n_qubits):
        """Pauli-Z expectation of every qubit for a batch of final states.

        Args:
            states (Tensor): Shape (*batch, 2**n_qubits).
            n_qubits (int): Register size.

        Returns:
            Tensor: Shape (*batch, n_qubits), float64.
        """
        self.n_executions += states[..., 0].numel()
        flip = self.noise.readout_flip_prob
        if self.analytic:
            out = expval_z_batch(states, n_qubits)
            return out * (1.0 - 2.0 * flip) if flip > 0 else out
        return sample_expval_z_batch(states, n_qubits, self.shots, self.generator, flip)

    def __repr__(self):
        return (f'{self.__class__.__name__}(shots={self.shots}, '
                f'readout_flip_prob={self.noise.readout_flip_prob}, seed={self.seed})')
