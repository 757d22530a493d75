"""Config-file templates shared by the experiment scripts."""


def three_qubit_config(
    mode: str,
    batch_size: int,
    seed: int,
    budget: int,
    learning_rate: float,
    test_every: int,
    duration: float = 10.0,
    segments: int = 100,
) -> str:
    return f"""[model]
kind = "three_qubit_coupling"
duration = {duration}
segments = {segments}

[target]
kind = "toffoli"

[distribution]
kind = "uniform_box"
half_width = 0.2

[optimizer]
learning_rate = {learning_rate}
sample_budget = {budget}
momentum_lambda = 0.1
test_set_size = 1000
test_every = {test_every}

[batch]
mode = "{mode}"
size = {batch_size}

[run]
seed = {seed}
"""


def noisy_qubit_config(
    mode: str,
    batch_size: int,
    seed: int,
    budget: int,
    learning_rate: float,
    test_every: int,
    amp_sigma: float = 0.05,
    duration: float = 2.0,
    segments: int = 40,
    bound: float = 3.14159265358979312,
) -> str:
    return f"""[model]
kind = "noisy_qubit"
duration = {duration}
segments = {segments}
bound = {bound}

[target]
kind = "rx_pi"

[distribution]
kind = "fourier_noise"
amp_sigma = {amp_sigma}

[optimizer]
learning_rate = {learning_rate}
sample_budget = {budget}
momentum_lambda = 0.1
test_set_size = 1000
test_every = {test_every}

[batch]
mode = "{mode}"
size = {batch_size}

[run]
seed = {seed}
"""
