from backend.core.normbound.extremal import extremal_even, verify_half_bound

def main():
    d = extremal_even(4)
    for location, mass in d.atoms():
        print(f"{location:+.12f}  {mass:.12f}")
    print(f"F(0) = {d.cdf(0.0):.12f}")
    print(f"Checks passed: {verify_half_bound(4, distribution=d).passed}")

if __name__ == "__main__":
    main()
