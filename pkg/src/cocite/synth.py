"""Seeded synthetic citation corpus with planted co-citation kinetics.

Every planted pair gets two fresh member publications and its own set of
citing articles, one per co-citation event, so the pair's yearly
co-citation series is exactly the planted one. Citing articles also cite a
few background publications; background publications cite each other
uniformly at random, which keeps incidental co-citation counts small.
"""

from __future__ import annotations

import bisect
import csv
import random
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from pathlib import Path

from cocite.errors import ConfigError

SUBJECT_CODES = (
    "BGMB", "MED", "PHY", "CS", "CHE", "ENG", "MTH", "IMM", "NEU", "PSY", "MAT",
    "ABS", "EPS", "ENS", "CEN", "SS", "PTP", "HP", "DCS", "BMA", "EEF", "EGY",
    "A&H", "GEN",
)  # fmt: skip
SUBJECT_WEIGHTS = (14, 8, 8, 6, 6, 5, 4, 3, 3, 3, 3, 3, 2, 2, 2, 2, 2, 1, 1, 1, 1, 1, 1, 1)

BACKGROUND_FIRST_YEAR = 1960
VIOLATION_KINDS = ("unresolved", "self", "missing_year", "future", "duplicate")


@dataclass
class GenConfig:
    seed: int = 42
    delayed: int = 50
    flash: int = 50
    ordinary: int = 500
    publications: int = 0  # total target; 0 → background_pubs background publications
    edges: int = 0  # total edge-line target; 0 → background_refs per background pub
    background_pubs: int = 5000
    background_refs: int = 8
    violations: int = 50
    end_year: int = 2018
    window_start: int = 1985
    window_end: int = 1995


@dataclass
class Corpus:
    nodes: list[tuple[str, int | None, str, tuple[str, ...]]] = field(default_factory=list)
    edges: list[tuple[str, str]] = field(default_factory=list)
    planted: list[tuple[str, str, str, str]] = field(default_factory=list)
    violations: dict[str, int] = field(default_factory=dict)


class _Generator:
    def __init__(self, cfg: GenConfig) -> None:
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.corpus = Corpus()
        self.n_citing = 0
        self.n_members = 0

    # -- series shapes -------------------------------------------------------
    # Each returns (member_years, counts from the first possible year to end).

    def _span(self, fpy: int) -> int:
        return self.cfg.end_year - fpy + 1

    def _member_years(self, fpy: int, oldest: int = 1970) -> tuple[int, int]:
        other = self.rng.randint(oldest, fpy)
        return (fpy, other) if self.rng.random() < 0.5 else (other, fpy)

    def _window_offsets(self, fpy: int, lo: int, hi: int) -> list[int]:
        """Offsets in [lo, hi) whose year falls inside the source window."""
        w0, w1 = self.cfg.window_start, self.cfg.window_end
        return [t for t in range(lo, hi) if w0 <= fpy + t <= w1]

    def _sleep(self, fpy: int, length: int, restless: bool = False) -> list[int]:
        rng = self.rng
        if restless:
            counts = [1] * length
            for t in rng.sample(range(length), rng.randint(1, length)):
                counts[t] = 2
            return counts
        counts = [0] * length
        counts[rng.choice(self._window_offsets(fpy, 0, length))] = 1
        budget = rng.randint(1, length) - 1
        open_slots = [t for t in range(length) if counts[t] < 2]
        while budget and open_slots:
            t = rng.choice(open_slots)
            counts[t] += 1
            budget -= 1
            if counts[t] == 2:
                open_slots.remove(t)
        return counts

    def _awake(self, counts: list[int], span: int, min_total: int = 100) -> list[int]:
        """Append awakening, ramp to a peak >= 20, and a tail below the peak."""
        rng = self.rng
        room = span - len(counts)
        peak = rng.randint(20, 40)
        ramp = 0 if rng.random() < 0.1 else rng.randint(1, min(8, room - 10))
        if ramp == 0:
            counts.append(peak)
        else:
            first = rng.randint(3, 8)
            for k in range(ramp):
                counts.append(min(peak - 1, first + (peak - first) * k // ramp))
            counts.append(peak)
        while len(counts) < span:
            counts.append(rng.randint(3, 6))
        top = counts.index(peak)
        tail = list(range(top + 1, span))
        while sum(counts) < min_total:
            t = rng.choice(tail)
            if counts[t] < peak - 1:
                counts[t] += 1
        return counts

    def delayed(self) -> tuple[tuple[int, int], list[int]]:
        fpy = self.rng.randint(1976, 1984)
        sleep = self._sleep(fpy, self.rng.randint(10, 16))
        return self._member_years(fpy), self._awake(sleep, self._span(fpy))

    def _single_burst(self, fpy: int, tm: int, peak: int, cap: int = 99, min_total: int = 20) -> list[int]:
        rng = self.rng
        counts = [0] * tm
        for t in range(1, tm):
            counts[t] = 1 if rng.random() < 0.3 else 0
        counts[rng.choice(self._window_offsets(fpy, 1, tm))] = 1
        counts.append(peak)
        span = self._span(fpy)
        while len(counts) < span:
            counts.append(rng.choice((0, 0, 1, 1, 2)))
        post = list(range(tm + 1, span))
        while sum(counts) > cap:
            t = rng.choice(post)
            if counts[t]:
                counts[t] -= 1
        while sum(counts) < min_total:
            t = rng.choice(post)
            if counts[t] < 3:
                counts[t] += 1
        return counts

    def flash(self) -> tuple[tuple[int, int], list[int]]:
        fpy = self.rng.randint(1976, 1984)
        peak = self.rng.randint(20, 30)
        # tm <= peak keeps every pre-peak count on or under the reference line
        counts = self._single_burst(fpy, self.rng.randint(10, 20), peak)
        return self._member_years(fpy), counts

    # -- ordinary kinds ------------------------------------------------------

    def early_awakening(self):
        fpy = self.rng.randint(1980, 1984)
        length = self.rng.randint(1, 5)
        sleep = [self.rng.randint(0, 2) for _ in range(length)]
        return self._member_years(fpy), self._awake(sleep, self._span(fpy))

    def short_sleep(self):
        fpy = self.rng.randint(1976, 1984)
        length = self.rng.randint(5, 9)
        sleep = [self.rng.randint(0, 1) for _ in range(length)]
        return self._member_years(fpy), self._awake(sleep, self._span(fpy))

    def restless_sleep(self):
        fpy = self.rng.randint(1976, 1984)
        sleep = self._sleep(fpy, self.rng.randint(10, 16), restless=True)
        return self._member_years(fpy), self._awake(sleep, self._span(fpy))

    def old_member(self):
        fpy = self.rng.randint(1976, 1984)
        sleep = self._sleep(fpy, self.rng.randint(10, 16))
        old = self.rng.randint(1955, 1969)
        years = (fpy, old) if self.rng.random() < 0.5 else (old, fpy)
        return years, self._awake(sleep, self._span(fpy))

    def low_peak(self):
        fpy = self.rng.randint(1976, 1990)
        counts = [self.rng.randint(3, 6) for _ in range(self._span(fpy))]
        while sum(counts) < 100:
            t = self.rng.randrange(len(counts))
            counts[t] = min(19, counts[t] + 1)
        return self._member_years(fpy), counts

    def band_early_peak(self):
        rng = self.rng
        fpy = rng.randint(1980, 1984)
        tm = rng.randint(2, 9)
        counts = [rng.randint(0, 2) for _ in range(tm)] + [rng.randint(15, 30)]
        span = self._span(fpy)
        while len(counts) < span:
            counts.append(rng.randint(0, 2))
        keep = rng.choice(self._window_offsets(fpy, tm + 1, span))
        counts[keep] = max(counts[keep], 1)
        post = [t for t in range(tm + 1, span) if t != keep]
        while sum(counts) >= 100:
            t = rng.choice(post)
            if counts[t]:
                counts[t] -= 1
        while sum(counts) < 20:
            counts[rng.choice(post)] += 1
        return self._member_years(fpy), counts

    def band_multi_peak(self):
        fpy = self.rng.randint(1976, 1984)
        first = self.rng.randint(22, 30)
        tm = self.rng.randint(10, 20)
        counts = self._single_burst(fpy, tm, first, cap=99 - 29)
        post = range(tm + 2, len(counts))
        counts[self.rng.choice(post)] = self.rng.randint(20, first - 1)
        return self._member_years(fpy), counts

    def band_no_burst(self):
        fpy = self.rng.randint(1976, 1984)
        peak = self.rng.randint(10, 19)
        counts = self._single_burst(fpy, self.rng.randint(10, peak), peak)
        return self._member_years(fpy), counts

    def low_total(self):
        fpy = self.rng.randint(1976, 1992)
        span = self._span(fpy)
        counts = [0] * span
        counts[self.rng.choice(self._window_offsets(fpy, 0, span))] = 1
        for _ in range(self.rng.randint(0, 15)):
            t = self.rng.randrange(span)
            if counts[t] < 2:
                counts[t] += 1
        return self._member_years(fpy), counts

    ORDINARY_KINDS: tuple[tuple[str, int], ...] = (
        ("early_awakening", 8),
        ("short_sleep", 8),
        ("restless_sleep", 8),
        ("old_member", 8),
        ("low_peak", 8),
        ("band_early_peak", 15),
        ("band_multi_peak", 15),
        ("band_no_burst", 15),
        ("low_total", 15),
    )

    # -- corpus assembly -------------------------------------------------------

    def _subjects(self) -> tuple[str, ...]:
        if self.rng.random() < 0.03:
            return ()
        k = 1 if self.rng.random() < 0.7 else 2
        return tuple(sorted(set(self.rng.choices(SUBJECT_CODES, SUBJECT_WEIGHTS, k=k))))

    def _plant(self, population: str, kind: str, shape: Callable) -> None:
        (ya, yb), counts = shape()
        fpy = max(ya, yb)
        assert len(counts) == self.cfg.end_year - fpy + 1, kind
        assert any(counts[t] for t in self._window_offsets(fpy, 0, len(counts))), kind
        a = f"M{self.n_members:06d}"
        b = f"M{self.n_members + 1:06d}"
        self.n_members += 2
        self.corpus.nodes.append((a, ya, "article", self._subjects()))
        self.corpus.nodes.append((b, yb, "article", self._subjects()))
        self.corpus.planted.append((a, b, population, kind))
        for t, c in enumerate(counts):
            for _ in range(c):
                self.citing.append((fpy + t, a, b))

    def build(self) -> Corpus:
        cfg = self.cfg
        rng = self.rng
        self.citing: list[tuple[int, str, str]] = []
        for _ in range(cfg.delayed):
            self._plant("delayed", "delayed", self.delayed)
        for _ in range(cfg.flash):
            self._plant("flash", "flash", self.flash)
        names = [k for k, _ in self.ORDINARY_KINDS]
        weights = [w for _, w in self.ORDINARY_KINDS]
        for _ in range(cfg.ordinary):
            kind = rng.choices(names, weights)[0]
            self._plant("ordinary", kind, getattr(self, kind))

        n_missing = cfg.violations // len(VIOLATION_KINDS) + 1 if cfg.violations else 0
        planted_pubs = self.n_members + len(self.citing) + n_missing
        if cfg.publications:
            n_bg = cfg.publications - planted_pubs
            if n_bg < 100:
                raise ConfigError(
                    f"publications: {cfg.publications} leaves {n_bg} background "
                    f"publications after {planted_pubs} planted ones (need >= 100)"
                )
        else:
            n_bg = cfg.background_pubs

        # background publications, ids ordered by year
        bg_years = sorted(
            min(cfg.end_year, BACKGROUND_FIRST_YEAR + int((cfg.end_year - BACKGROUND_FIRST_YEAR + 1) * rng.random() ** 0.7))
            for _ in range(n_bg)
        )
        bg_ids = [f"B{i:07d}" for i in range(n_bg)]
        for pub_id, year in zip(bg_ids, bg_years):
            pub_type = rng.choices(("article", "review", "conference"), (80, 12, 8))[0]
            self.corpus.nodes.append((pub_id, year, pub_type, self._subjects()))

        edges: list[tuple[str, str]] = []
        for n, (year, a, b) in enumerate(self.citing):
            pub_id = f"C{n:07d}"
            self.corpus.nodes.append((pub_id, year, "article", self._subjects()))
            edges.append((pub_id, a))
            edges.append((pub_id, b))
            hi = bisect.bisect_right(bg_years, year)
            for j in rng.sample(range(hi), min(hi, rng.randint(3, 4))):
                edges.append((pub_id, bg_ids[j]))

        n_violation = cfg.violations
        if cfg.edges:
            n_bg_edges = cfg.edges - len(edges) - n_violation
            if n_bg_edges < 0:
                raise ConfigError(
                    f"edges: {cfg.edges} is below the {len(edges) + n_violation} "
                    "edges the planted populations need"
                )
        else:
            n_bg_edges = n_bg * cfg.background_refs
        bg_edges = self._background_edges(bg_ids, bg_years, n_bg_edges)
        edges.extend(bg_edges)
        edges.extend(self._violations(bg_ids, bg_years, bg_edges, n_missing))
        rng.shuffle(edges)
        self.corpus.edges = edges
        self.corpus.nodes.sort(key=lambda row: row[0])
        return self.corpus

    def _background_edges(self, ids: list[str], years: list[int], n: int) -> list[tuple[str, str]]:
        rng = self.rng
        limits = [bisect.bisect_right(years, y) for y in years]
        citable = [i for i, hi in enumerate(limits) if hi > 1]
        seen: set[tuple[int, int]] = set()
        out: list[tuple[str, str]] = []
        capacity = sum(limits[i] - 1 for i in citable)
        if n > capacity:
            raise ConfigError(f"edges: cannot place {n} background edges among {len(ids)} publications")
        while len(out) < n:
            i = rng.choice(citable)
            j = rng.randrange(limits[i])
            if i == j or (i, j) in seen:
                continue
            seen.add((i, j))
            out.append((ids[i], ids[j]))
        return out

    def _violations(self, ids, years, bg_edges, n_missing) -> list[tuple[str, str]]:
        cfg = self.cfg
        rng = self.rng
        tally = dict.fromkeys(VIOLATION_KINDS, 0)
        missing = [f"Y{k:05d}" for k in range(n_missing)]
        for pub_id in missing:
            self.corpus.nodes.append((pub_id, None, "article", ()))
        out = []
        later = [i for i, y in enumerate(years) if y < years[-1]]
        for k in range(cfg.violations):
            kind = VIOLATION_KINDS[k % len(VIOLATION_KINDS)]
            i = rng.randrange(len(ids))
            if kind == "unresolved":
                out.append((ids[i], f"ZZ{k:05d}"))
            elif kind == "self":
                out.append((ids[i], ids[i]))
            elif kind == "missing_year":
                out.append((ids[i], rng.choice(missing)))
            elif kind == "future":
                i = rng.choice(later)
                j = rng.randrange(bisect.bisect_right(years, years[i]), len(ids))
                out.append((ids[i], ids[j]))
            else:
                out.append(rng.choice(bg_edges))
            tally[kind] += 1
        self.corpus.violations = tally
        return out


def generate(cfg: GenConfig) -> Corpus:
    return _Generator(cfg).build()


def write_corpus(corpus: Corpus, cfg: GenConfig, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "nodelist": out / "nodelist.csv",
        "edgelist": out / "edgelist.csv",
        "planted": out / "planted.csv",
        "gen_manifest": out / "gen_manifest.txt",
    }
    with open(paths["nodelist"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("id", "year", "type", "subjects"))
        for pub_id, year, pub_type, codes in corpus.nodes:
            w.writerow((pub_id, "" if year is None else year, pub_type, "|".join(codes)))
    with open(paths["edgelist"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("citing_id", "cited_id"))
        w.writerows(corpus.edges)
    with open(paths["planted"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("a", "b", "population", "kind"))
        w.writerows(corpus.planted)
    with open(paths["gen_manifest"], "w", encoding="utf-8") as fh:
        for key, value in asdict(cfg).items():
            fh.write(f"{key}={value}\n")
        fh.write(f"publications_written={len(corpus.nodes)}\n")
        fh.write(f"edges_written={len(corpus.edges)}\n")
        for kind in VIOLATION_KINDS:
            fh.write(f"violation.{kind}={corpus.violations.get(kind, 0)}\n")
    return paths


def read_planted(path: str | Path) -> dict[str, set[tuple[str, str]]]:
    """Planted pairs grouped by population."""
    groups: dict[str, set[tuple[str, str]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault(row["population"], set()).add((row["a"], row["b"]))
    return groups
