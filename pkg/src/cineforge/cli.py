"""``cineforge`` command line: the offline preprocessing chain plus validation
and playback simulation.

Exit codes: 0 success, 1 validation failure, 2 provider failure, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import canonical
from .analyzer import HttpAnalysisProvider, MockAnalysisProvider, analyze_clip, clip_hash, probe_duration
from .assets import AssetCache, AssetRecord, Providers, build_providers, execute_jobs, load_provider_config, plan_jobs
from .descriptors import Feature, parse_feature_document, serialize_document, validate_document
from .errors import CineforgeError, ParseError, ProviderError, ValidationFailure
from .planner import ClipInfo, build_plan
from .playback import export_manifest, load_manifest, load_plan, save_plan, simulate, write_ndjson
from .room import RoomModel, load_detailed_scan, load_simple_scan

log = logging.getLogger("cineforge")

EXIT_OK, EXIT_VALIDATION, EXIT_PROVIDER, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class PipelineConfig:
    providers: Path | None = None
    cache: Path | None = None
    seed: int = 0
    strict: bool = False
    parallelism: int = 1

    def __post_init__(self):
        if self.parallelism < 1:
            raise UsageError("--parallelism must be >= 1")


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        providers=getattr(args, "providers", None),
        cache=getattr(args, "cache", None),
        seed=getattr(args, "seed", 0),
        strict=getattr(args, "strict", False),
        parallelism=getattr(args, "parallelism", 1),
    )


# --------------------------------------------------------------------------
# stages


def load_room(path: Path) -> RoomModel:
    raw = path.read_bytes()
    try:
        data = json.loads(raw)
    except ValueError:
        data = None
    if isinstance(data, dict) and "mesh" in data:
        return load_detailed_scan(path)
    return load_simple_scan(raw)


def _analysis_provider(kind: str, config: dict, clip: Path):
    entry = config.get("analyzer") or {}
    if kind == "mock":
        fixtures = entry.get("fixtures")
        return MockAnalysisProvider(Path(fixtures) if fixtures else clip.parent)
    if not entry.get("endpoint"):
        raise UsageError("--provider http needs an 'analyzer' endpoint in --providers")
    return HttpAnalysisProvider(entry["endpoint"], entry.get("model"), entry.get("auth_env", "CINEFORGE_ANALYZER_KEY"))


def stage_analyze(clip: Path, out: Path, provider_kind: str, cfg: PipelineConfig, movie: str | None, duration: float | None) -> None:
    try:
        data = clip.read_bytes()
    except OSError as exc:
        raise ProviderError(f"cannot read clip {clip}: {exc.strerror}", kind="io") from None
    if duration is None:
        try:
            duration = probe_duration(data)
        except ValueError as exc:
            raise UsageError(f"{clip}: {exc} (--duration)") from None
    provider = _analysis_provider(provider_kind, load_provider_config(cfg.providers), clip)
    mode = "strict" if cfg.strict else "lenient"

    def run(feature: Feature):
        return analyze_clip(clip, feature, provider, cache_dir=cfg.cache, audit_dir=out / "raw", mode=mode)

    with ThreadPoolExecutor(max_workers=cfg.parallelism) as pool:
        docs = list(pool.map(run, Feature))
    for doc in docs:
        canonical.atomic_write(out / f"{doc.feature.value}.json", serialize_document(doc))
        for w in doc.warnings:
            log.warning(w)
    info = {"clip_id": clip_hash(data), "duration": canonical.quantize(duration), "movie_name": movie or clip.stem}
    canonical.atomic_write(out / "clip.json", canonical.dumps(info))


def _read_descriptors(directory: Path, mode: str):
    try:
        info = json.loads((directory / "clip.json").read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"{directory}: missing or unreadable clip.json ({exc})") from None
    clip = ClipInfo(info["clip_id"], float(info["duration"]), info.get("movie_name", ""))
    docs = {}
    for feature in Feature:
        path = directory / f"{feature.value}.json"
        if path.is_file():
            docs[feature] = parse_feature_document(path.read_bytes(), feature, mode=mode)
    return clip, docs


def stage_validate(descriptors: Path, strict: bool) -> bool:
    mode = "strict" if strict else "lenient"
    clip, docs = _read_descriptors(descriptors, mode)
    clean = True
    for feature, doc in docs.items():
        report = validate_document(doc, clip.duration, mode="lenient")
        status = "ok" if report.ok else f"{len(report.violations)} violation(s)"
        print(f"{feature.value}: {status}")
        for v in report.violations:
            print(f"  [{v.rule}] {v.message}")
        for w in report.warnings:
            print(f"  warning: {w}")
        clean = clean and report.ok
    return clean or not strict


def stage_plan(descriptors: Path, room_path: Path, out: Path, cfg: PipelineConfig) -> Path:
    clip, docs = _read_descriptors(descriptors, "strict" if cfg.strict else "lenient")
    if cfg.strict:
        for doc in docs.values():
            validate_document(doc, clip.duration, mode="strict")
    plan = build_plan(docs, load_room(room_path), clip, seed=cfg.seed)
    path = out / "plan.json"
    save_plan(plan, path)
    return path


def stage_bake(plan_path: Path, out: Path, cfg: PipelineConfig, providers: Providers | None = None) -> list[AssetRecord]:
    plan = load_plan(plan_path)
    providers = providers or build_providers(load_provider_config(cfg.providers))
    cache = AssetCache(cfg.cache or out / "cache")
    records = execute_jobs(plan_jobs(plan), providers, cache, parallelism=cfg.parallelism)
    canonical.atomic_write(out / "records.json", canonical.dumps([r.to_json() for r in records]))
    return records


def _load_records(path: Path) -> list[AssetRecord]:
    return [AssetRecord(**r) for r in json.loads(path.read_text(encoding="utf-8"))]


def stage_export(plan_path: Path, records_path: Path, out: Path) -> Path:
    path = out / "manifest.json"
    export_manifest(load_plan(plan_path), _load_records(records_path), path)
    return path


def stage_simulate(manifest_path: Path, t_from: float, t_to: float | None, step: float, out: Path | None) -> None:
    manifest = load_manifest(manifest_path)
    t_to = manifest.plan.schedule.clip_duration if t_to is None else t_to
    items = simulate(manifest, t_from, t_to, step)
    if out is None:
        write_ndjson(items, sys.stdout)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        lines = []

        class _Buf:
            def write(self, s):
                lines.append(s)

        write_ndjson(items, _Buf())
        canonical.atomic_write(out, "".join(lines))


# --------------------------------------------------------------------------
# argument handling


def _parser() -> _Parser:
    p = _Parser(prog="cineforge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, *names):
        if "providers" in names:
            sp.add_argument("--providers", type=Path, help="provider config JSON")
        if "cache" in names:
            sp.add_argument("--cache", type=Path, help="cache directory (default: <out>/cache)")
        if "parallelism" in names:
            sp.add_argument("--parallelism", type=int, default=1)
        if "seed" in names:
            sp.add_argument("--seed", type=int, default=0)
        if "strict" in names:
            sp.add_argument("--strict", action="store_true")

    sp = sub.add_parser("analyze", help="clip -> descriptor files")
    sp.add_argument("--clip", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--provider", choices=("mock", "http"), default="mock")
    sp.add_argument("--movie")
    sp.add_argument("--duration", type=float)
    common(sp, "providers", "cache", "parallelism", "strict")

    sp = sub.add_parser("validate", help="descriptors -> report")
    sp.add_argument("--descriptors", type=Path, required=True)
    common(sp, "strict")

    sp = sub.add_parser("plan", help="descriptors + room -> plan.json")
    sp.add_argument("--descriptors", type=Path, required=True)
    sp.add_argument("--room", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    common(sp, "seed", "strict")

    sp = sub.add_parser("bake", help="plan -> generated assets")
    sp.add_argument("--plan", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    common(sp, "providers", "cache", "parallelism")

    sp = sub.add_parser("export", help="plan + baked assets -> manifest.json")
    sp.add_argument("--plan", type=Path, required=True)
    sp.add_argument("--records", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)

    sp = sub.add_parser("simulate", help="manifest -> NDJSON event stream")
    sp.add_argument("--manifest", type=Path, required=True)
    sp.add_argument("--from", dest="t_from", type=float, default=0.0)
    sp.add_argument("--to", dest="t_to", type=float)
    sp.add_argument("--step", type=float, default=0.5)
    sp.add_argument("--out", type=Path)

    sp = sub.add_parser("all", help="run the full chain")
    sp.add_argument("--clip", type=Path, required=True)
    sp.add_argument("--room", type=Path, required=True)
    sp.add_argument("--out", type=Path, required=True)
    sp.add_argument("--provider", choices=("mock", "http"), default="mock")
    sp.add_argument("--movie")
    sp.add_argument("--duration", type=float)
    sp.add_argument("--step", type=float, default=0.5)
    common(sp, "providers", "cache", "parallelism", "seed", "strict")
    return p


def run_command(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
        if args.command is None:
            raise UsageError("cineforge: a subcommand is required (see --help)")
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        cfg = _config(args)
        return _dispatch(args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ParseError as exc:
        print(f"invalid descriptor: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProviderError as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (CineforgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def _dispatch(args, cfg: PipelineConfig) -> int:
    cmd = args.command
    if cmd == "analyze":
        stage_analyze(args.clip, args.out, args.provider, cfg, args.movie, args.duration)
    elif cmd == "validate":
        return EXIT_OK if stage_validate(args.descriptors, args.strict) else EXIT_VALIDATION
    elif cmd == "plan":
        stage_plan(args.descriptors, args.room, args.out, cfg)
    elif cmd == "bake":
        records = stage_bake(args.plan, args.out, cfg)
        if any(not r.ok for r in records):
            print(f"{sum(not r.ok for r in records)} asset job(s) failed; see records.json", file=sys.stderr)
            return EXIT_PROVIDER
    elif cmd == "export":
        stage_export(args.plan, args.records, args.out)
    elif cmd == "simulate":
        stage_simulate(args.manifest, args.t_from, args.t_to, args.step, args.out)
    elif cmd == "all":
        out = args.out
        cfg.cache = cfg.cache or out / "cache"
        stage_analyze(args.clip, out / "descriptors", args.provider, cfg, args.movie, args.duration)
        plan_path = stage_plan(out / "descriptors", args.room, out, cfg)
        records = stage_bake(plan_path, out, cfg)
        manifest = stage_export(plan_path, out / "records.json", out)
        stage_simulate(manifest, 0.0, None, args.step, out / "simulation.ndjson")
        if any(not r.ok for r in records):
            print(f"{sum(not r.ok for r in records)} asset job(s) failed; manifest flags them", file=sys.stderr)
            return EXIT_PROVIDER
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
