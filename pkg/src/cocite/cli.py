"""Command-line pipeline: ``cocite <command> [--config FILE] [--key value ...]``.

Exit codes: 0 success, 1 usage/configuration, 2 data error, 3 resource error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import errno
import logging
import sys
import time
from pathlib import Path

from cocite import ingest, kinetics, pairgen, stats, subjects, synth
from cocite.config import Manifest, PipelineConfig
from cocite.errors import CociteError, ConfigError

logger = logging.getLogger("cocite")

STAGES = ("ingest", "pairs", "count", "detect", "stats", "subjects")
PREREQUISITE = {"pairs": None, "count": "pairs", "detect": "count", "stats": "detect", "subjects": "detect"}
OUTPUTS = {
    "ingest": ("curation_report.csv", "source_articles.csv"),
    "pairs": ("pairs.csv",),
    "count": ("frequencies.csv", "kinetics.csv", "kinetics_wide.csv"),
    "detect": (
        "delayed.csv",
        "flash_in_pan.csv",
        "band_screen.csv",
        "sleeping_beauties.csv",
        "detect_report.csv",
    ),
    "stats": ("histogram.csv", "ecdf.csv", "percentiles.csv", "summary.csv"),
    "subjects": ("subjects.dot", "subjects.graphml", "subjects_report.csv"),
}


class PipelineStateError(ConfigError):
    pass


def _open_w(path: Path):
    return open(path, "w", newline="", encoding="utf-8")


def _write_metrics(path: Path, rows: list[tuple[str, int]]) -> None:
    with _open_w(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("metric", "count"))
        w.writerows(rows)


class Pipeline:
    def __init__(self, config: PipelineConfig, force: bool = False) -> None:
        self.cfg = config
        self.force = force
        self.workdir = Path(config.workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.manifest = Manifest(self.workdir)
        self._graph: ingest.CitationGraph | None = None
        self._report: ingest.CurationReport | None = None
        if self.manifest.exists and self.manifest.config_hash != config.config_hash():
            if not force:
                raise PipelineStateError(
                    f"{self.manifest.path} was written with a different configuration; "
                    "use a fresh workdir or pass --force"
                )
            self.manifest.reset()

    def path(self, name: str) -> Path:
        return self.workdir / name

    # -- inputs ----------------------------------------------------------------

    def graph(self) -> ingest.CitationGraph:
        if self._graph is None:
            for key in ("nodelist", "edgelist"):
                value = getattr(self.cfg, key)
                if not value:
                    raise ConfigError(f"{key}: required")
                if not Path(value).is_file():
                    raise ConfigError(f"{key}: no such file {value!r}")
            self._graph, self._report = ingest.load_graph(self.cfg.nodelist, self.cfg.edgelist)
        return self._graph

    # -- stage bookkeeping -----------------------------------------------------

    def _check(self, stage: str) -> None:
        need = PREREQUISITE.get(stage)
        if need and need not in self.manifest.completed:
            raise PipelineStateError(f"stage {stage!r} needs {need!r} to have completed first")
        leftovers = [
            n for n in OUTPUTS[stage] if self.path(n).exists() and stage not in self.manifest.completed
        ]
        if leftovers and not self.force:
            raise PipelineStateError(
                f"partial pipeline state in {self.workdir}: {', '.join(leftovers)} exist but "
                f"stage {stage!r} is not recorded as complete; pass --force to overwrite"
            )

    def run(self, stage: str) -> None:
        self._check(stage)
        # rerunning a stage invalidates everything after it
        if stage in self.manifest.completed:
            idx = STAGES.index(stage)
            self.manifest.completed = [s for s in self.manifest.completed if STAGES.index(s) < idx]
        started = time.perf_counter()
        written = getattr(self, f"stage_{stage}")()
        self.manifest.record(stage, written)
        self.manifest.save(self.cfg)
        logger.info("stage %s done in %.1fs", stage, time.perf_counter() - started)

    # -- stages -----------------------------------------------------------------

    def stage_ingest(self) -> list[Path]:
        graph = self.graph()
        out = [self.path("curation_report.csv"), self.path("source_articles.csv")]
        with _open_w(out[0]) as fh:
            self._report.write_csv(fh)
        sources = ingest.select_source_articles(
            graph, (self.cfg.window_start, self.cfg.window_end), self.cfg.min_refs, self.cfg.pub_type
        )
        with _open_w(out[1]) as fh:
            fh.write("id\n")
            fh.writelines(f"{s}\n" for s in sorted(sources))
        logger.info("%d source articles", len(sources))
        return out

    def stage_pairs(self) -> list[Path]:
        graph = self.graph()
        sources = ingest.select_source_articles(
            graph, (self.cfg.window_start, self.cfg.window_end), self.cfg.min_refs, self.cfg.pub_type
        )
        spill = Path(self.cfg.spill_dir) if self.cfg.spill_dir else self.path("spill")
        spill.mkdir(parents=True, exist_ok=True)
        deduper = pairgen.dedup_pairs(
            pairgen.generate_pairs(graph, sources), self.cfg.memory_budget, str(spill)
        )
        out = self.path("pairs.csv")
        with _open_w(out) as fh:
            n = pairgen.write_pairs(deduper, fh)
        logger.info(
            "%d unique pairs from %d enumerated (%d spill runs)",
            n, deduper.input_records, deduper.spill_runs,
        )
        return [out]

    def stage_count(self) -> list[Path]:
        end_year = self.cfg.require_end_year()
        graph = self.graph()
        out = [self.path("frequencies.csv"), self.path("kinetics.csv")]
        wide = None
        with open(self.path("pairs.csv"), newline="", encoding="utf-8") as src, \
                _open_w(out[0]) as freq, _open_w(out[1]) as kin:
            writer = pairgen.CountWriter(freq, kin)
            wide_rows = []
            results = pairgen.count_parallel(
                pairgen.read_pairs(src), graph, end_year,
                partitions=self.cfg.partitions, batch=self.cfg.batch,
                series_min_total=self.cfg.kinetics_min_total,
            )  # fmt: skip
            for freq_row, series in results:
                writer.add(freq_row, series)
                if self.cfg.kinetics_wide and series is not None:
                    wide_rows.append((freq_row.pair, series))
        if self.cfg.kinetics_wide:
            wide = self.path("kinetics_wide.csv")
            with _open_w(wide) as fh:
                pairgen.write_wide_kinetics(wide_rows, fh)
            out.append(wide)
        logger.info("counted %d pairs, %d kinetic series", writer.pairs, writer.series)
        return out

    def stage_detect(self) -> list[Path]:
        cfg = self.cfg
        end_year = cfg.require_end_year()
        graph = self.graph()
        catalog = graph.catalog
        criteria, flash_criteria = cfg.criteria, cfg.flash
        with open(self.path("kinetics.csv"), newline="", encoding="utf-8") as fh:
            series_by_pair = kinetics.group_series(pairgen.read_kinetics(fh))

        delayed: list[kinetics.DetectionRecord] = []
        band: list[tuple[tuple[str, str], kinetics.YearSeries]] = []
        conservative = 0
        for key in sorted(series_by_pair):
            series = series_by_pair[key]
            total = sum(series.counts)
            years = (catalog[key[0]].year, catalog[key[1]].year)
            if total >= criteria.min_total:
                if (
                    max(series.counts) >= criteria.min_peak
                    and min(years) >= criteria.min_member_year
                ):
                    conservative += 1
                record = kinetics.detect_delayed(key, series, years, criteria)
                if record is not None:
                    delayed.append(record)
            if cfg.band_low <= total < cfg.band_high:
                band.append((key, series))
        screen = kinetics.screen_flash_in_pan(band, flash_criteria)

        members = sorted({r.a for r in delayed} | {r.b for r in delayed})
        vr_rows = []
        verdict_of = {}
        for pub_id in members:
            series = pairgen.citation_series(pub_id, graph, end_year)
            record = kinetics.detect_vanraan(series, cfg.vanraan, pub_id)
            verdict = record.verdict if record else kinetics.Verdict.NONE
            verdict_of[pub_id] = verdict
            summary = record.summary if record else kinetics.summarize(series, cfg.vr_awakening_threshold)
            vr_rows.append((
                pub_id, series.start_year, summary.total,
                kinetics.fmt_num(summary.awakening_year), kinetics.fmt_num(summary.sleep_duration),
                kinetics.fmt_num(summary.sleep_avg),
                kinetics.fmt_num(record.intensity if record else None), verdict.value,
            ))  # fmt: skip

        out = [self.path(n) for n in OUTPUTS["detect"]]
        with _open_w(out[0]) as fh:
            kinetics.write_detections(delayed, fh)
        with _open_w(out[1]) as fh:
            kinetics.write_detections(screen.flash, fh)
        outcome = screen.outcome()
        with _open_w(out[2]) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("a", "b", "total", "outcome"))
            for key, series in band:
                w.writerow((key[0], key[1], sum(series.counts), outcome[key]))
        with _open_w(out[3]) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("id", "year", "total", "awakening_year", "sleep_duration", "sleep_avg", "intensity", "verdict"))
            w.writerows(vr_rows)
        sb = kinetics.Verdict.SLEEPING_BEAUTY
        _write_metrics(out[4], [
            ("kinetic_pairs", len(series_by_pair)),
            ("conservative_filter_pairs", conservative),
            ("delayed_pairs", len(delayed)),
            ("delayed_slope_na", sum(1 for r in delayed if r.summary.slope is None)),
            ("delayed_members", len(members)),
            ("sleeping_beauties", sum(1 for v in verdict_of.values() if v is sb)),
            ("vanraan_inconclusive", sum(1 for v in verdict_of.values() if v is kinetics.Verdict.INCONCLUSIVE)),
            ("delayed_pairs_both_sleeping_beauties", sum(1 for r in delayed if verdict_of[r.a] is sb and verdict_of[r.b] is sb)),
            ("band_pairs", len(band)),
            ("band_removed_short_span", len(screen.removed_short_span)),
            ("band_removed_negative_beauty", len(screen.removed_negative_beauty)),
            ("band_removed_no_burst", len(screen.removed_no_burst)),
            ("band_survivors", len(screen.survivors)),
            ("flash_in_pan", len(screen.flash)),
        ])  # fmt: skip
        logger.info(
            "%d delayed co-citations, %d flash-in-the-pan, %d sleeping beauties",
            len(delayed), len(screen.flash), sum(1 for v in verdict_of.values() if v is sb),
        )
        return out

    def stage_stats(self) -> list[Path]:
        cfg = self.cfg
        with open(self.path("frequencies.csv"), newline="", encoding="utf-8") as fh:
            totals = [t for _, _, t in pairgen.read_frequencies(fh)]
        out = [self.path(n) for n in OUTPUTS["stats"]]
        with _open_w(out[0]) as fh:
            stats.histogram(totals, cfg.hist_top).write_csv(fh)
        rows = []
        if totals:
            with _open_w(out[1]) as fh:
                stats.write_ecdf(stats.ecdf(totals), fh)
            requested = cfg.requested_percentiles
            for p, v in stats.percentiles(totals, requested).items():
                rows.append(("cocitation", p, v))
            graph = self.graph()
            cites = [
                graph.citation_count(pub.id)
                for pub in graph.catalog.values()
                if pub.pub_type == cfg.pub_type
                and pub.year is not None
                and cfg.citation_years_start <= pub.year <= cfg.window_end
            ]
            if cites:
                for p, v in stats.percentiles(cites, requested).items():
                    rows.append(("citation", p, v))
        else:
            with _open_w(out[1]) as fh:
                stats.write_ecdf([], fh)
        with _open_w(out[2]) as fh:
            stats.write_percentiles(rows, fh)
        with open(self.path("delayed.csv"), newline="", encoding="utf-8") as fh:
            cohort = kinetics.read_detections(fh)
        with _open_w(out[3]) as fh:
            if cohort:
                stats.summarize_cohort(cohort).write_csv(fh)
            else:
                logger.warning("no delayed co-citations; summary table left empty")
                fh.write("statistic," + ",".join(stats.COLUMNS) + "\n")
        return out

    def stage_subjects(self) -> list[Path]:
        with open(self.path("delayed.csv"), newline="", encoding="utf-8") as fh:
            pairs = [(r.a, r.b) for r in kinetics.read_detections(fh)]
        if self._graph is not None:
            catalog = self._graph.catalog
        else:
            if not Path(self.cfg.nodelist).is_file():
                raise ConfigError(f"nodelist: no such file {self.cfg.nodelist!r}")
            with open(self.cfg.nodelist, newline="", encoding="utf-8") as fh:
                catalog = ingest.parse_nodelist(fh)
        overrides = None
        if self.cfg.subjects_override:
            with open(self.cfg.subjects_override, newline="", encoding="utf-8") as fh:
                overrides = subjects.read_subject_overrides(fh)
        graph = subjects.build_subject_graph(pairs, subjects.subject_map(catalog, overrides))
        out = []
        if graph.nodes:
            for fmt, name in (("dot", "subjects.dot"), ("graphml", "subjects.graphml")):
                path = self.path(name)
                path.write_text(subjects.export_graph(graph, fmt), encoding="utf-8")
                out.append(path)
        else:
            logger.warning("no delayed co-citations; subject graph not exported")
        report = self.path("subjects_report.csv")
        _write_metrics(report, [
            ("pairs", len(pairs)),
            ("articles", len({m for p in pairs for m in p})),
            ("unknown_subject_articles", graph.unknown_articles),
            ("nodes", len(graph.nodes)),
            ("edges", len(graph.edges)),
        ])  # fmt: skip
        out.append(report)
        return out


def run_gen(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    gen_cfg = synth.GenConfig(
        seed=cfg.seed,
        delayed=args.delayed,
        flash=args.flash,
        ordinary=args.ordinary,
        publications=args.publications,
        edges=args.edges,
        background_pubs=args.background_pubs,
        background_refs=args.background_refs,
        violations=args.violations,
        end_year=cfg.end_year or 2018,
        window_start=cfg.window_start,
        window_end=cfg.window_end,
    )
    out = args.out or cfg.workdir
    paths = synth.write_corpus(synth.generate(gen_cfg), gen_cfg, out)
    logger.info("synthetic corpus written to %s", paths["nodelist"].parent)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("--force", action="store_true", help="overwrite partial or stale state")
    common.add_argument("--log-level", default="INFO")
    group = common.add_argument_group("configuration overrides")
    for f in dataclasses.fields(PipelineConfig):
        group.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", metavar="VALUE")

    parser = _Parser(prog="cocite", description="Co-citation kinetics pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in STAGES + ("all",):
        sub.add_parser(name, parents=[common])
    gen = sub.add_parser("gen", parents=[common], help="write a seeded synthetic corpus")
    gen.add_argument("--out", help="output directory (default: workdir)")
    defaults = synth.GenConfig()
    for name in ("delayed", "flash", "ordinary", "publications", "edges",
                 "background_pubs", "background_refs", "violations"):  # fmt: skip
        gen.add_argument(f"--{name.replace('_', '-')}", type=int, default=getattr(defaults, name))
    return parser


def load_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {
        k[len("cfg_"):]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None
    }
    return cfg.updated(overrides).validate()


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args)
        if args.command == "gen":
            run_gen(cfg, args)
            return 0
        pipeline = Pipeline(cfg, force=args.force)
        for stage in STAGES if args.command == "all" else (args.command,):
            pipeline.run(stage)
    except CociteError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("%s", exc)
        if exc.errno in (errno.ENOSPC, errno.EDQUOT, errno.ENOMEM):
            return 3
        return 1 if isinstance(exc, FileNotFoundError) else 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
