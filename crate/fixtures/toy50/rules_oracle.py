"""Brute-force recomputation of a user's 30-row rule table for this fixture.

Usage: python3 rules_oracle.py USER > expected.csv

Shares no code with the Rust implementation; used to check golden/rules-*.csv.
"""
import itertools
import math
import sys
from collections import Counter, defaultdict

COMPONENTS = ["SF", "SFS", "SMPF", "SMPSF"]


def load(path):
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n").split("::") for line in f if line.strip()]


def age_bin(a):
    return "A" if a <= 25 else ("B" if a <= 40 else "C")


def main(target):
    ratings = defaultdict(dict)
    for u, m, r, _ in load("ratings.dat"):
        ratings[int(u)][int(m)] = int(r)
    genres = {int(m): set(g.split("|")) for m, _, g in load("movies.dat")}
    profile = {int(u): (g, age_bin(int(a))) for u, g, a, *_ in load("users.dat")}

    liked = {}
    for u, items in ratings.items():
        threshold = math.floor(sum(items.values()) / len(items))
        liked[u] = {m for m, r in items.items() if r >= threshold}

    counts = Counter(m for items in ratings.values() for m in items)
    means = {m: sum(r[m] for r in ratings.values() if m in r) / c for m, c in counts.items()}
    movie_order = sorted(counts, key=lambda m: (-counts[m], -means[m], m))
    top_movies = set(movie_order[:5])
    genre_counts = Counter()
    for m, c in counts.items():
        for g in genres[m]:
            genre_counts[g] += c
    top_genres = set(sorted(genre_counts, key=lambda g: (-genre_counts[g], g))[:5])

    others = [u for u in ratings if u != target]
    target_genres = set().union(*(genres[m] for m in liked[target]))
    base = {
        "SF": {v for v in others if liked[v] & liked[target]},
        "SFS": {v for v in others if any(genres[m] & target_genres for m in liked[v])},
        "SMPF": {v for v in others if liked[v] & top_movies},
        "SMPSF": {v for v in others if any(genres[m] & top_genres for m in liked[v])},
    }
    gender, age = profile[target]
    sup = {
        False: {v for v in others if profile[v][0] == gender},
        True: {v for v in others if profile[v] == (gender, age)},
    }

    subsets = []
    for size in range(1, 5):
        subsets.extend(itertools.combinations(COMPONENTS, size))

    t_items = set(ratings[target])
    print("row_index,use_age,components,member_count,precision")
    row = 0
    for use_age in (False, True):
        for subset in subsets:
            row += 1
            members = set(sup[use_age])
            for c in subset:
                members &= base[c]
            c_items = set().union(*(ratings[v].keys() for v in members)) if members else set()
            union = t_items | c_items
            precision = len(t_items & c_items) / len(union) if union else 0.0
            print(f"{row},{str(use_age).lower()},{'&'.join(subset)},{len(members)},{precision:.4f}")


if __name__ == "__main__":
    main(int(sys.argv[1]))
