"""Writes the .fjs fixtures in this directory.

kacem1 and kacem2 are transcriptions of the 4x5 and 8x8 Kacem tables.
kacem3 and kacem4 are seeded stand-ins with the shape of the 10x7 and
15x10 instances; see README.md.
"""
import random
from pathlib import Path

HERE = Path(__file__).parent

K1 = [
    [[2, 5, 4, 1, 2], [5, 4, 5, 7, 5], [4, 5, 5, 4, 5]],
    [[2, 5, 4, 7, 8], [5, 6, 9, 8, 5], [4, 5, 4, 54, 5]],
    [[9, 8, 6, 7, 9], [6, 1, 2, 5, 4], [2, 5, 4, 2, 4], [4, 5, 2, 1, 5]],
    [[1, 5, 2, 4, 12], [5, 1, 2, 1, 2]],
]

K2 = [
    [{1: 5, 2: 3, 3: 5, 4: 3, 5: 3, 7: 10, 8: 9}, {1: 10, 3: 5, 4: 8, 5: 3, 6: 9, 7: 9, 8: 6}, {2: 10, 4: 5, 5: 6, 6: 2, 7: 4, 8: 5}],
    [{1: 5, 2: 7, 3: 3, 4: 9, 5: 8, 7: 9}, {2: 8, 3: 5, 4: 2, 5: 6, 6: 7, 7: 10, 8: 9}, {2: 10, 4: 5, 5: 6, 6: 4, 7: 1, 8: 7}, {1: 10, 2: 8, 3: 9, 4: 6, 5: 4, 6: 7}],
    [{1: 10, 4: 7, 5: 6, 6: 5, 7: 2, 8: 4}, {2: 10, 3: 6, 4: 4, 5: 8, 6: 9, 7: 10}, {1: 1, 2: 4, 3: 5, 4: 6, 6: 10, 8: 7}],
    [{1: 3, 2: 1, 3: 6, 4: 5, 5: 9, 6: 7, 7: 8, 8: 4}, {1: 12, 2: 11, 3: 7, 4: 8, 5: 10, 6: 5, 7: 6, 8: 9}, {1: 4, 2: 6, 3: 2, 4: 10, 5: 3, 6: 9, 7: 5, 8: 7}],
    [{1: 3, 2: 6, 3: 7, 4: 8, 5: 9, 7: 10}, {1: 10, 3: 7, 4: 4, 5: 9, 6: 8, 7: 6}, {2: 9, 3: 8, 4: 7, 5: 4, 6: 2, 7: 7}, {1: 11, 2: 9, 4: 6, 5: 7, 6: 5, 7: 3, 8: 6}],
    [{1: 6, 2: 7, 3: 1, 4: 4, 5: 6, 6: 9, 8: 10}, {1: 11, 3: 9, 4: 9, 5: 9, 6: 7, 7: 6, 8: 4}, {1: 10, 2: 5, 3: 9, 4: 10, 5: 11, 7: 10}],
    [{1: 5, 2: 4, 3: 2, 4: 6, 5: 7, 7: 10}, {2: 9, 4: 9, 5: 11, 6: 9, 7: 10, 8: 5}, {2: 8, 3: 9, 4: 3, 5: 8, 6: 6, 8: 10}],
    [{1: 2, 2: 8, 3: 5, 4: 9, 6: 4, 8: 10}, {1: 7, 2: 4, 3: 7, 4: 8, 5: 9, 7: 10}, {1: 9, 2: 9, 4: 8, 5: 5, 6: 6, 7: 7, 8: 1}, {1: 9, 3: 3, 4: 7, 5: 1, 6: 5, 7: 8}],
]


def standin(seed, ops_per_job, machines, dmax):
    rng = random.Random(seed)
    jobs = []
    for n_ops in ops_per_job:
        job = []
        for _ in range(n_ops):
            base = rng.randint(1, dmax)
            k = rng.randint(max(1, machines // 2), machines)
            chosen = sorted(rng.sample(range(1, machines + 1), k))
            job.append({m: max(1, base + rng.randint(-2, 3)) for m in chosen})
        jobs.append(job)
    return jobs


def write(name, jobs, machines):
    ops = [op for job in jobs for op in job]
    flex = sum(len(op) for op in ops) / len(ops)
    lines = [f"{len(jobs)} {machines} {flex:.2f}"]
    for job in jobs:
        toks = [str(len(job))]
        for op in job:
            toks.append(str(len(op)))
            for m, d in sorted(op.items()):
                toks += [str(m), str(d)]
        lines.append(" ".join(toks))
    (HERE / f"{name}.fjs").write_text("\n".join(lines) + "\n")


write("kacem1", [[dict(enumerate(op, 1)) for op in job] for job in K1], 5)
write("kacem2", K2, 8)
write("kacem3", standin(3, [3] * 9 + [2], 7, 10), 7)
write("kacem4", standin(4, [4] * 11 + [3] * 4, 10, 10), 10)
