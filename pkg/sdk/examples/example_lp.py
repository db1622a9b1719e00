from backend.core.normbound.extremal import extremal_even
from backend.core.normbound.optimization.lp_oracle import GridLP, build_grid, solve_lp

def main():
    nodes = extremal_even(2).positive_nodes
    solution = solve_lp(GridLP.for_moments(build_grid(5.0, 40, nodes), 2))
    print(f"LP optimum: {solution.objective:.12f}")
    print(f"Active support: {solution.active_support}")

if __name__ == "__main__":
    main()
