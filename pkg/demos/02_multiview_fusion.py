"""Why fusing views helps: two half-informative views beat either alone.

View A only knows whether a sample belongs to classes {c0,c1} or {c2,c3};
view B only knows the class within each pair. A forest on either view cannot
do better than 50%. Averaging their dissimilarity matrices and classifying
on the fused kernel recovers all four classes.
"""

import numpy as np

from rfsvm import FeatureView, assemble_dataset, run_rfsvm, run_single_view_baseline
from rfsvm.ingest import RunConfig

rng = np.random.default_rng(42)
n_per_class = 30
labels = [f"c{k}" for k in range(4) for _ in range(n_per_class)]
pair = np.array([k // 2 for k in range(4) for _ in range(n_per_class)])
within = np.array([k % 2 for k in range(4) for _ in range(n_per_class)])

centers = np.array([[0.0, 0.0], [4.0, 4.0]])
view_a = centers[pair] + rng.normal(0, 0.7, size=(len(labels), 2))
view_b = centers[within] + rng.normal(0, 0.7, size=(len(labels), 2))

ids = tuple(f"s{i:03d}" for i in range(len(labels)))
dataset = assemble_dataset(
    [FeatureView("pair_view", ids, view_a), FeatureView("within_view", ids, view_b)],
    dict(zip(ids, labels)),
)

config = RunConfig(n_trees=150, n_repeats=5, rng_seed=3, c_grid=(0.01, 1.0, 100.0))

for name in dataset.view_names:
    report = run_single_view_baseline(dataset, name, config)
    print(f"forest on {name:12s}: {report.mean_accuracy * 100:5.1f}% "
          f"± {report.std_accuracy * 100:.1f}")

fused = run_rfsvm(dataset, None, config)
print(f"fused (both views) : {fused.mean_accuracy * 100:5.1f}% "
      f"± {fused.std_accuracy * 100:.1f}   best {fused.best_accuracy * 100:.1f}%")
