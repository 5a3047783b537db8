"""Walk the timeliness weighting function across a gold interval.

Inside the interval the score is exactly 1; outside it decays with Gaussian
tails, wider on the early side. Run: python3 demos/01_timeliness_curve.py
"""

from spot_eval import TaskKind, TimelinessConfig, timeliness_score

cfg = TimelinessConfig()
task = TaskKind.SQA
t_s, t_e = 97.5, 102.5
sigma_early = cfg.sigma_early[task]
sigma_late = cfg.sigma_late[task]

print(f"gold interval [{t_s}, {t_e}]  sigma_early={sigma_early}  sigma_late={sigma_late}\n")
print(f"{'tau':>8} {'score':>10}  ")
for tau in [90, 93, 95, 96.5, 97.5, 100, 102.5, 103.5, 105, 107, 110]:
    score = timeliness_score(tau, t_s, t_e, sigma_early, sigma_late)
    bar = "#" * round(40 * score)
    print(f"{tau:>8} {score:>10.6f}  {bar}")

print("\nearly responses outscore equally-distant late ones:")
for delta in (1.0, 2.0, 4.0):
    early = timeliness_score(t_s - delta, t_s, t_e, sigma_early, sigma_late)
    late = timeliness_score(t_e + delta, t_s, t_e, sigma_early, sigma_late)
    print(f"  delta={delta:>4}  early={early:.4f}  late={late:.4f}")
