import numpy as np


from curloc.evaluation.metrics import PredictionRecord
from curloc.geometry import clamp_to_unit, encode_box
from curloc.policy import PolicyParams
from curloc.simulation.task import TaskSpec, sample_ground_truth


def evaluate_policy(
    params: PolicyParams, task: TaskSpec, samples: int, seed: int
) -> list[PredictionRecord]:
    """
    Deterministic predictions of the policy (its mean, no sampling noise)
    on held-out ground truths drawn from the task.
    """
    rng = np.random.default_rng(seed)
    records = []
    for index in range(samples):
        gt = sample_ground_truth(task, rng)
        pred = clamp_to_unit(encode_box(gt) + params.mean)
        records.append(PredictionRecord(id=f"{index:05d}", pred=pred, gt=gt))
    return records
