"""Experiment presets, one per throughput figure (fig2 .. fig7)."""

from __future__ import annotations

from typing import Optional

from .montecarlo import Algorithm, ExperimentConfig

DEFAULT_TRIALS = 10_000

FIG2_GRID = [1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 50, 60, 70, 80, 100, 120, 140]
WIDE_GRID = [1, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 35, 40, 50,
             60, 70, 80, 100, 120, 140, 160, 180, 200]
FIG5_USERS = [20, 40, 80]
FIG5_SNRS = list(range(0, 21, 2))


def _fig2(seed, trials):
    return [
        ExperimentConfig(algorithm=Algorithm.PU2RC, n_t=2, m=8, snr_db=snr, user_grid=FIG2_GRID,
                         trials=trials, seed=seed, label=f"PU2RC_N16_snr{snr:02d}dB")
        for snr in (0, 5, 30)
    ]


def _pu2rc_vs_zf(seed, trials):
    out = []
    for n, bits in ((16, 4), (64, 6)):
        out.append(ExperimentConfig(algorithm=Algorithm.PU2RC, n_t=4, m=n // 4, snr_db=5.0,
                                    user_grid=WIDE_GRID, trials=trials, seed=seed))
        out.append(ExperimentConfig(algorithm=Algorithm.ZF_SDMA, n_t=4, codebook_bits=bits,
                                    snr_db=5.0, user_grid=WIDE_GRID, trials=trials, seed=seed))
    return out


def _fig5(seed, trials):
    out = []
    for snr in FIG5_SNRS:
        out.append(ExperimentConfig(algorithm=Algorithm.PU2RC, n_t=4, m=16, snr_db=snr,
                                    user_grid=FIG5_USERS, trials=trials, seed=seed,
                                    label=f"PU2RC_N64_snr{snr:02d}dB"))
        out.append(ExperimentConfig(algorithm=Algorithm.ZF_SDMA, n_t=4, codebook_bits=6,
                                    snr_db=snr, user_grid=FIG5_USERS, trials=trials, seed=seed,
                                    label=f"ZF_SDMA_N64_snr{snr:02d}dB"))
    return out


def _fig6(seed, trials):
    out = [
        ExperimentConfig(algorithm=Algorithm.PU2RC, n_t=2, m=n // 2, snr_db=5.0,
                         user_grid=WIDE_GRID, trials=trials, seed=seed)
        for n in (2, 4, 8, 16)
    ]
    out.append(ExperimentConfig(algorithm=Algorithm.DPC, n_t=2, snr_db=5.0, user_grid=WIDE_GRID,
                                trials=trials, seed=seed))
    return out


def _fig7(seed, trials):
    return [
        ExperimentConfig(algorithm=Algorithm.PU2RC, n_t=4, m=4, snr_db=5.0, user_grid=WIDE_GRID,
                         trials=trials, seed=seed, sinr_feedback_bits=bits)
        for bits in (None, 1, 2, 3)
    ]


PRESETS = {
    "fig2": _fig2,
    "fig3": _pu2rc_vs_zf,
    "fig4": _pu2rc_vs_zf,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig7": _fig7,
}


def preset_configs(name: str, seed: int = 0, trials: Optional[int] = None) -> list[ExperimentConfig]:
    try:
        build = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
    return build(seed, trials or DEFAULT_TRIALS)
