import csv
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from sphquad_kit.types import ConvergenceRow, SweepRow, WeightStats

PathLike = Union[str, Path]


def _write(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_error_sweep(rows: List[SweepRow], path: PathLike) -> None:
    _write(path, ("rule_id", "node_count", "degree", "abs_error"),
           ((r.rule_id, r.node_count, "" if r.degree is None else r.degree, f"{r.abs_error:.17g}")
            for r in rows))


def write_weight_stats(stats: List[Tuple[str, WeightStats]], path: PathLike,
                       histogram_path: Optional[PathLike] = None) -> None:
    """One row of extrema and band share per rule; histogram bins optionally go to a second file."""
    _write(path, ("rule_id", "w_min", "w_min_count", "w_max", "w_max_count", "band_lo", "band_hi", "band_fraction"),
           ((rule_id, f"{s.min_value:.17g}", s.min_count, f"{s.max_value:.17g}", s.max_count,
             f"{s.band[0]:.17g}", f"{s.band[1]:.17g}", f"{s.band_fraction:.6f}") for rule_id, s in stats))
    if histogram_path is not None:
        _write(histogram_path, ("rule_id", "lower", "upper", "count"),
               ((rule_id, f"{lo:.17g}", f"{hi:.17g}", count)
                for rule_id, s in stats for lo, hi, count in s.histogram))


def write_convergence_log(rows: List[ConvergenceRow], path: PathLike) -> None:
    _write(path, ("step", "N", "residual_inf", "damping", "dof", "equations"),
           ((r.step, r.degree, f"{r.residual_inf:.6e}", f"{r.damping:.6e}", r.dof, r.equations)
            for r in rows))


def write_residual_history(history: List[Tuple[int, float]], path: PathLike) -> None:
    _write(path, ("iteration", "relative_residual"),
           ((it, f"{res:.6e}") for it, res in history))
