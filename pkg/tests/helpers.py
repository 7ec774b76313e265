from slowelm.config import RunConfig

TINY = RunConfig(
    objects=2,
    speeds=1,
    distances=1,
    total_rotation=360.0,
    events_per_degree=50.0,
    n_w=500,
    stride=125,
    n_hidden=150,
    k=12,
    k_sweep=(4, 12),
    spans=(0.0, 45.0, 90.0),
    bench_ks=(4, 12),
    bench_duration=0.2,
)
