"""Regenerate tests/golden/rng_vectors.json from the stream construction.

Only rerun this on purpose: the file pins the generator across releases and
ports, so a changed output means a changed stream construction.
"""
import argparse
import json
from pathlib import Path

from pcmcts.rng import StreamKey, derive_seed, derive_stream

CASES = [
    (42, [("tree", 0)]),
    (42, [("tree", 1)]),
    (0, []),
    (42, [("tree", 0), ("rollout", 3)]),
    ((1 << 64) - 1, [("episode", 0)]),
]
DRAWS = 5


def vectors():
    out = []
    for seed, path in CASES:
        key = StreamKey(seed, tuple((label, index) for label, index in path))
        rng = derive_stream(key)
        out.append({
            "seed": seed,
            "path": [list(p) for p in path],
            "material": key.material().decode("ascii"),
            "sha256": key.digest().hex(),
            "derived_seed": derive_seed(key),
            "draws": [repr(rng.random()) for _ in range(DRAWS)],
        })
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/golden/rng_vectors.json")
    args = parser.parse_args()
    doc = {
        "generator": "MT19937 genrand_res53, seeded via init_by_array with the first 16 SHA-256 bytes (little endian)",
        "key_text": "<seed> followed by /<label>:<index> per path element",
        "vectors": vectors(),
    }
    args.out.write_text(json.dumps(doc, indent=2) + "\n")
    print(args.out)


if __name__ == "__main__":
    main()
