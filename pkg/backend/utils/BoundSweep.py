import sys
from pathlib import Path
import csv
import time
from datetime import datetime
from typing import Optional, Sequence

sys.path.append(str(Path(__file__).parent.parent.parent))
from backend.core.normbound.extremal import auto_schedule, extremal_even, moment_residuals, odd_case_sweep
from backend.core.normbound.moments import lindsay_bound
from backend.core.normbound.optimization.lp_oracle import refinement_study
from backend.core.normbound.utils import format_decimal, format_rational, format_scientific

# Parameter ranges
even_ks = [2, 4, 6, 8, 10, 12, 16, 20]
odd_ks = [3, 5]
refinement_ks = [2, 4]
refinement_counts = [10, 20, 40, 80]
refinement_extent = 6.0

# Base output directory structure
BASE_OUTPUT_DIR = Path(__file__).parent.parent.parent / "results"


def get_csv_output_path(study: str, description: str = "", base_dir: Optional[Path] = None) -> Path:
    """
    Generate organized CSV output path with incremental naming

    Args:
        study: Type of study (even, odd_limit, refinement)
        description: Optional description for the run
        base_dir: Root of the results tree, BASE_OUTPUT_DIR if None

    Returns:
        Path: results/<study>/<study>_NNN[_description]_<timestamp>.csv
    """
    study_dir = (base_dir or BASE_OUTPUT_DIR) / study
    study_dir.mkdir(parents=True, exist_ok=True)

    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")

    # Highest existing run number, e.g. "odd_limit_003_k3_20241225_123456.csv"
    prefix = f"{study}_"
    max_num = 0
    for file in study_dir.glob(f"{study}_*.csv"):
        number = file.stem[len(prefix):].split('_')[0]
        if number.isdigit():
            max_num = max(max_num, int(number))

    next_num = max_num + 1
    if description:
        filename = f"{study}_{next_num:03d}_{description}_{timestamp}.csv"
    else:
        filename = f"{study}_{next_num:03d}_{timestamp}.csv"

    csv_path = study_dir / filename
    print(f"Output will be saved to: {csv_path}")
    return csv_path


def run_even_table(ks: Sequence[int] = even_ks, base_dir: Optional[Path] = None) -> Path:
    """Extremal p0 against the exact bound for each even k"""
    csv_output_path = get_csv_output_path("even", "extremal_table", base_dir)

    with open(csv_output_path, mode="w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow([
            "k", "bound_rational", "bound_decimal", "p0", "abs_error",
            "max_moment_residual", "duration_seconds"
        ])
        for k in ks:
            start_time = time.perf_counter()
            d = extremal_even(k)
            duration = time.perf_counter() - start_time
            bound = lindsay_bound(k)
            writer.writerow([
                k, format_rational(bound), format_decimal(bound), format_decimal(d.p0),
                format_scientific(abs(d.p0 - float(bound))),
                format_scientific(max(moment_residuals(d))),
                round(duration, 4)
            ])
            print(f"k={k}: p0={d.p0:.15f} bound={format_rational(bound)}")
    return csv_output_path


def run_odd_limit_study(ks: Sequence[int] = odd_ks, count: int = 12, base_dir: Optional[Path] = None) -> Path:
    """p0 along the automatic largest-node schedule for each odd k"""
    csv_output_path = get_csv_output_path("odd_limit", "k" + "_".join(str(k) for k in ks), base_dir)

    with open(csv_output_path, mode="w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow([
            "k", "largest_node_square", "feasible", "p0", "target_bound", "gap",
            "tail_mass", "tail_bound", "constrained_slope", "diagnostics"
        ])
        for k in ks:
            sweep = odd_case_sweep(k, auto_schedule(k, count))
            target = float(sweep.target_bound)
            for record in sweep.records:
                writer.writerow([
                    k, format_scientific(record.largest_square), int(record.feasible),
                    format_decimal(record.p0), format_rational(sweep.target_bound),
                    format_scientific(target - record.p0),
                    format_scientific(record.tail_mass), format_scientific(record.tail_bound),
                    format_scientific(record.constrained_slope), record.diagnostics
                ])
            feasible = sweep.p0_column()
            if feasible:
                print(f"k={k}: {len(feasible)}/{len(sweep.records)} feasible, "
                      f"final p0={feasible[-1]:.12f} target={format_rational(sweep.target_bound)}")
            else:
                print(f"k={k}: no feasible records")
    return csv_output_path


def run_refinement_study(ks: Sequence[int] = refinement_ks, counts: Sequence[int] = refinement_counts,
                         extent: float = refinement_extent, base_dir: Optional[Path] = None) -> Path:
    """Grid LP optimum as the uniform grid is refined, extremal nodes excluded"""
    csv_output_path = get_csv_output_path("refinement", "lp_grid", base_dir)

    with open(csv_output_path, mode="w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow([
            "k", "count", "grid_points", "status", "objective", "bound", "gap", "pivots"
        ])
        for k in ks:
            bound = lindsay_bound(k)
            print(f"Refining grid for k={k}...")
            for count, solution in refinement_study(k, extent, counts):
                writer.writerow([
                    k, count, len(solution.grid), solution.status.value,
                    format_decimal(solution.objective), format_rational(bound),
                    format_scientific(float(bound) - solution.objective), solution.pivots
                ])
    return csv_output_path


if __name__ == "__main__":
    if len(sys.argv) > 1:
        mode = sys.argv[1]
    else:
        print("Choose study:")
        print("1. even - Extremal p0 against the exact bound")
        print("2. odd - Odd-k escape-to-infinity sweep")
        print("3. refinement - Grid LP refinement")
        choice = input("Enter choice (1/2/3): ").strip()
        mode = {"1": "even", "2": "odd", "3": "refinement"}.get(choice, "even")

    print(f"Running {mode} study...")
    print(f"Results will be organized in: {BASE_OUTPUT_DIR}")

    if mode == "even":
        run_even_table()
    elif mode == "odd":
        run_odd_limit_study()
    elif mode == "refinement":
        run_refinement_study()
    else:
        print(f"Unknown study '{mode}'. Running even table.")
        run_even_table()
