from backend.core.normbound.moments import lindsay_bound
from backend.core.normbound.utils import format_rational

def main():
    for k in (2, 4, 6, 8):
        bound = lindsay_bound(k)
        print(f"k={k}: p0 <= {format_rational(bound)}, deviation <= {format_rational(bound / 2)}")

if __name__ == "__main__":
    main()
