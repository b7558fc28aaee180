"""Shared test oracles and generators (kept independent of the code under test)."""

from __future__ import annotations

import itertools
import random
import string
from fractions import Fraction

WORDS = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima mike november "
    "oscar papa quebec romeo sierra tango uniform victor whiskey xray yankee zulu malware "
    "registry process network payload stealer loader inject persist encrypt beacon"
).split()


def brute_force_lcs(a, b) -> int:
    """LCS length by enumerating subsequences of the shorter sequence."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)

    def is_subsequence(sub, seq):
        it = iter(seq)
        return all(x in it for x in sub)

    for size in range(len(short), 0, -1):
        for idx in itertools.combinations(range(len(short)), size):
            if is_subsequence([short[i] for i in idx], long_):
                return size
    return 0


def hex_digest(rng: random.Random, length: int) -> str:
    return "".join(rng.choice("0123456789abcdef") for _ in range(length))


def iso_timestamp(rng: random.Random) -> str:
    return (
        f"20{rng.randint(10, 29)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d} "
        f"{rng.randint(0, 23):02d}:{rng.randint(0, 59):02d}:{rng.randint(0, 59):02d}"
    )


def random_report(rng: random.Random) -> tuple[dict, list[str]]:
    """A Cuckoo-shaped document with hashes, timestamps, sizes and durations planted.

    Returns the document and the planted strings that must never reach the
    distilled output.
    """
    planted: list[str] = []

    def plant_hash():
        h = hex_digest(rng, rng.choice((32, 40, 64)))
        planted.append(h)
        return h

    def plant_ts():
        t = iso_timestamp(rng)
        planted.append(t)
        return t

    def plant_size():
        s = rng.randint(900_000_000, 999_999_999)
        planted.append(str(s))
        return s

    def words(n):
        return " ".join(rng.choice(WORDS) for _ in range(n))

    duration = rng.randint(80_000_000, 89_999_999)
    planted.append(str(duration))
    epoch = f"{rng.randint(1_400_000_000, 1_799_999_999)}.{rng.randint(100, 999)}"
    planted.append(epoch)

    doc = {
        "info": {"duration": duration, "started": plant_ts(), "ended": plant_ts(), "version": "2.0.7"},
        "target": {"category": "file", "file": {"name": words(1) + ".exe", "size": plant_size(),
                                                 "md5": plant_hash(), "sha256": plant_hash()}},
        "signatures": [],
        "behavior": {"processes": []},
        "network": {"dns": [], "http": [], "tcp": [], "hosts": []},
        "dropped": [],
    }
    for _ in range(rng.randint(0, 6)):
        desc = words(rng.randint(2, 10))
        if rng.random() < 0.5:
            desc += f" at {plant_ts()}"
        marks = [{"type": "ioc", "ioc": rng.choice([plant_hash(), words(2), f"C:\\temp\\{plant_hash()}.exe"])}
                 for _ in range(rng.randint(0, 3))]
        doc["signatures"].append({"name": "_".join(rng.sample(WORDS, 2)), "description": desc,
                                  "severity": rng.randint(0, 5), "marks": marks})
    pids = rng.sample(range(100, 5000), rng.randint(0, 4))
    for i, pid in enumerate(pids):
        calls = []
        for _ in range(rng.randint(0, 40)):
            args = {"FileName": f"C:\\{words(1)}\\{words(1)}.dat"}
            if rng.random() < 0.4:
                args["FileSize"] = plant_size()
            if rng.random() < 0.3:
                args["Length"] = plant_size()
            if rng.random() < 0.3:
                args["md5"] = plant_hash()
            if rng.random() < 0.3:
                args["Timestamp"] = plant_ts()
            if rng.random() < 0.2:
                args["Buffer"] = f"hash={plant_hash()}"
            calls.append({"api": rng.choice(["NtCreateFile", "RegSetValueExA", "connect", "NtWriteFile"]),
                          "category": rng.choice(["file", "registry", "network"]),
                          "arguments": args, "status": rng.random() < 0.8, "time": float(epoch)})
        cmd = f"{words(1)}.exe --id {plant_hash()}" if rng.random() < 0.5 else f"{words(1)}.exe"
        doc["behavior"]["processes"].append({
            "process_id": pid, "parent_id": pids[i - 1] if i else 4, "process_name": words(1) + ".exe",
            "command_line": cmd, "first_seen": float(epoch), "calls": calls,
        })
    for _ in range(rng.randint(0, 5)):
        doc["network"]["dns"].append({"request": f"{words(1)}.{rng.choice(['com', 'net', 'org'])}"})
    for _ in range(rng.randint(0, 4)):
        doc["network"]["tcp"].append({"dst": f"10.{rng.randint(0, 255)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}",
                                      "dport": rng.randint(1, 65535)})
    for _ in range(rng.randint(0, 4)):
        doc["dropped"].append({"filepath": f"C:\\Users\\{words(1)}\\{words(1)}.bin", "type": "data",
                               "size": plant_size(), "md5": plant_hash(), "sha1": plant_hash()})
    return doc, planted


def random_text(rng: random.Random, min_words: int = 1, max_words: int = 60) -> str:
    out = []
    for _ in range(rng.randint(min_words, max_words)):
        w = rng.choice(WORDS) if rng.random() < 0.8 else "".join(rng.choices(string.ascii_letters + string.digits, k=rng.randint(1, 9)))
        out.append(w)
        r = rng.random()
        if r < 0.1:
            out[-1] += "."
        elif r < 0.13:
            out[-1] += ","
        elif r < 0.15:
            out[-1] += "!"
    return " ".join(out)


CAND = ["the", "malware", "deletes", "files"]
REF = ["malware", "deletes", "system", "files"]

# (candidate, reference, rouge1, rouge2, rougeL) counted by hand
HAND_PAIRS = [
    (CAND, REF, Fraction(3, 4), Fraction(1, 3), Fraction(3, 4)),
    (["a", "b"], ["a", "b"], 1, 1, 1),
    (["a", "b"], ["c", "d"], 0, 0, 0),
    (["a", "a", "a"], ["a"], Fraction(1, 2), 0, Fraction(1, 2)),
    (["a", "b", "c"], ["c", "b", "a"], 1, 0, Fraction(1, 3)),
    (["a"], ["a", "b", "c", "d"], Fraction(2, 5), 0, Fraction(2, 5)),
    ([], ["a"], 0, 0, 0),
    (["a", "b", "a", "b"], ["a", "b"], Fraction(2, 3), Fraction(1, 2), Fraction(2, 3)),
    (["x", "a", "b", "y", "c"], ["a", "b", "c"], Fraction(3, 4), Fraction(1, 3), Fraction(3, 4)),
    # LCS a,c,d (2 of the 3 reference bigrams are absent from the candidate order)
    (["a", "b", "c", "d", "e"], ["a", "c", "d", "f"], Fraction(2, 3), Fraction(2, 7), Fraction(2, 3)),
    (["the", "cat"], ["the", "cat", "sat"], Fraction(4, 5), Fraction(2, 3), Fraction(4, 5)),
    (["a", "b", "c", "a"], ["a", "a"], Fraction(2, 3), 0, Fraction(2, 3)),
]
