"""
PolyHex command line entry point.

Every stage is a subcommand that reads the files written by the previous one;
`pipeline` runs them all. Exit codes: 0 success, 1 usage, 2 stage failure.
"""

import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np
import yaml
from pydantic import ValidationError

from .core import (
    ConfigError,
    I18nConfig,
    PipelineConfig,
    PipelineError,
    configure_i18n,
    configure_logging,
    get_logger,
    set_locale,
)
from .dataset import generate_dataset, load_dataset, write_dataset
from .gcn import (
    forward_classify,
    load_model,
    save_model,
    search_learning_rate,
    train_centroid,
    train_classifier,
)
from .mesh import (
    build_face_graph,
    load_hex_mesh,
    load_tri_mesh,
    normalize_to_unit_box,
    save_hex_mesh,
    save_tri_mesh,
)
from .pathopt import BoundaryResult, extract_paths, load_paths, save_paths
from .polycube import NUM_TYPES, template
from .quality import optimize, pillow, quality_report, write_report
from .segmentation import load_segmentation, save_segmentation
from .services.pipeline import (
    ClassifyStage,
    HexMeshStage,
    LoadStage,
    NormalizeStage,
    PathStage,
    PipelineContext,
    RefineStage,
    SegmentStage,
    probability_row,
    run_pipeline,
    run_stages,
)

logger = get_logger("polyhex.main")

EXIT_USAGE = 1
EXIT_STAGE = 2


# ----------------------------------------------------------------- helpers


def _parse_types(text: str) -> List[int]:
    """'1-11' or '1,3,5' (ranges and lists may be mixed)."""
    types: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            values = range(int(lo), int(hi) + 1) if sep else [int(lo)]
        except ValueError:
            raise click.BadParameter(f"invalid type list: {text}") from None
        types.extend(values)
    bad = [t for t in types if not 1 <= t <= NUM_TYPES]
    if bad or not types:
        raise click.BadParameter(f"type ids must lie in 1..{NUM_TYPES}: {text}")
    return types


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise click.BadParameter(f"invalid number list: {text}") from None


def _load_config(
    path: Optional[Path], overrides: Sequence[str], **fields: Any
) -> PipelineConfig:
    """YAML file, then `--set` pairs, then the explicit flags that were given."""
    try:
        cfg = PipelineConfig.from_yaml(path) if path is not None else PipelineConfig()
        data = cfg.with_overrides(list(overrides)).model_dump()
        for key, value in fields.items():
            if value is None:
                continue
            *parents, leaf = key.split(".")
            target = data
            for part in parents:
                target = target[part]
            target[leaf] = value
        return PipelineConfig.model_validate(data)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from None
    except ValidationError as exc:
        raise click.UsageError(f"invalid configuration: {exc}") from None
    except yaml.YAMLError as exc:
        raise click.UsageError(f"unreadable configuration {path}: {exc}") from None


def _setup_logging(path: Optional[Path], verbose: bool) -> None:
    data: Dict[str, Any] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    section = dict(data.get("logging", {}) or {})
    if verbose:
        section["level"] = "DEBUG"
    configure_logging({"logging": section})


def _sibling(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


config_option = click.option(
    "--config",
    "-c",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="YAML configuration file",
)
set_option = click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override a configuration value (repeatable)",
)


# --------------------------------------------------------------------- cli


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging")
@click.option("--locale", "-l", default="en_US", help="Message language (en_US/zh_CN)")
@click.option(
    "--log-config",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="YAML file with a logging: section",
)
@click.version_option(package_name="polyhex")
def cli(verbose: bool, locale: str, log_config: Optional[Path]) -> None:
    """Polycube-based all-hex mesh generation."""
    configure_i18n(I18nConfig(default_locale=locale))
    set_locale(locale)
    _setup_logging(log_config, verbose)


@cli.command("gen-dataset")
@click.option("--types", default="1-11", show_default=True, help="Template ids, e.g. 1-11 or 1,3")
@click.option("--per-type", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=None, help="Base seed (default: config seed)")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), required=True)
@config_option
@set_option
def gen_dataset(
    types: str,
    per_type: int,
    seed: Optional[int],
    out: Path,
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Generate deformed polycube surfaces with their labels."""
    if per_type < 1:
        raise click.BadParameter("--per-type must be at least 1")
    cfg = _load_config(config, overrides, seed=seed)
    samples = generate_dataset(_parse_types(types), per_type, cfg.seed, cfg.dataset)
    manifest = write_dataset(samples, out)
    click.echo(f"{len(samples)} samples -> {manifest}")


@cli.command()
@click.option(
    "--dataset",
    "dataset_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    required=True,
)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option(
    "--kind",
    type=click.Choice(["classifier", "centroid"]),
    default="classifier",
    show_default=True,
)
@click.option("--type", "type_id", type=int, default=None, help="Template id (centroid kind)")
@click.option("--lr-grid", default=None, help="Comma-separated learning rates to search")
@click.option("--epochs", type=int, default=None)
@config_option
@set_option
def train(
    dataset_dir: Path,
    out: Path,
    kind: str,
    type_id: Optional[int],
    lr_grid: Optional[str],
    epochs: Optional[int],
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Train the classifier or a per-type centroid regressor."""
    section = "train" if kind == "classifier" else "centroid_train"
    cfg = _load_config(config, overrides, **{f"{section}.epochs": epochs})
    samples = load_dataset(dataset_dir)

    if kind == "classifier":
        if lr_grid:
            best, results = search_learning_rate(samples, cfg.train, _parse_floats(lr_grid))
            result = results[best]
            for lr, r in results.items():
                click.echo(f"lr {lr:g}: val {r.final_val_metric}")
        else:
            result = train_classifier(samples, cfg.train)
    else:
        if type_id is None:
            raise click.UsageError("--type is required for --kind centroid")
        samples = [s for s in samples if s.label == type_id]
        result = train_centroid(samples, cfg.centroid_train)

    save_model(result.model, out)
    trace = _sibling(out, ".trace.txt")
    result.write_trace(str(trace))
    click.echo(f"model -> {out}, trace -> {trace}, final val {result.final_val_metric}")


@cli.command()
@click.option("--model", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--mesh", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
def predict(model: Path, mesh: Path) -> None:
    """Print P1..P11 (percent) for a surface mesh."""
    net = load_model(model, "classifier")
    surface = normalize_to_unit_box(load_tri_mesh(mesh))
    probs = forward_classify(net, build_face_graph(surface))
    click.echo(" ".join(f"P{i}" for i in range(1, NUM_TYPES + 1)))
    click.echo(probability_row(probs))
    click.echo(f"type {int(np.argmax(probs)) + 1}")


@cli.command("segment")
@click.option("--mesh", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--type", "type_id", type=int, default=None, help="Template id (skips the classifier)")
@click.option("--model", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--centroid-model", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option(
    "--mesh-out",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Segmented surface (default: next to --out)",
)
@config_option
@set_option
def segment_cmd(
    mesh: Path,
    out: Path,
    type_id: Optional[int],
    model: Optional[Path],
    centroid_model: Optional[Path],
    mesh_out: Optional[Path],
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Normalize, classify, refine and segment a surface."""
    cfg = _load_config(config, overrides, oracle_type=type_id)
    cfg = cfg.model_copy(
        update={
            "mesh": mesh,
            "model": model or cfg.model,
            "centroid_model": centroid_model or cfg.centroid_model,
        }
    )
    ctx = run_stages(
        [LoadStage(), NormalizeStage(), ClassifyStage(), RefineStage(), SegmentStage()],
        PipelineContext(cfg),
    )
    mesh_out = mesh_out or _sibling(out, ".obj")
    save_tri_mesh(ctx.mesh, mesh_out)
    save_segmentation(ctx.segmentation, out)
    click.echo(f"type {ctx.type_id}: {ctx.segmentation.k} patches -> {out}, surface -> {mesh_out}")


@cli.command("pathopt")
@click.option("--mesh", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option(
    "--segmentation", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True
)
@click.option("--type", "type_id", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@click.option("--lambda0", type=float, default=None, help="Edge-length weight on sharp edges")
@click.option("--lambda1", type=float, default=None, help="Turning-angle weight")
@click.option("--lambda2", type=float, default=None, help="Goal-deviation weight")
@config_option
@set_option
def pathopt_cmd(
    mesh: Path,
    segmentation: Path,
    type_id: int,
    out: Path,
    lambda0: Optional[float],
    lambda1: Optional[float],
    lambda2: Optional[float],
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Reroute patch boundaries along shortest paths between corners.

    Writes the paths to --out and the (possibly refined) surface and
    relabelled segmentation next to it.
    """
    cfg = _load_config(
        config,
        overrides,
        **{"paths.lambda0_sharp": lambda0, "paths.lambda1": lambda1, "paths.lambda2": lambda2},
    )
    ctx = PipelineContext(cfg, mesh=load_tri_mesh(mesh), pc=template(type_id))
    ctx.segmentation = load_segmentation(segmentation)
    run_stages([PathStage()], ctx)
    save_paths(ctx.boundaries.paths, out)
    save_tri_mesh(ctx.mesh, _sibling(out, ".obj"))
    save_segmentation(ctx.segmentation, _sibling(out, ".seg.txt"))
    click.echo(f"{len(ctx.boundaries.paths.paths)} paths -> {out}")


@cli.command("hexmesh")
@click.option("--mesh", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True)
@click.option(
    "--segmentation", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True
)
@click.option("--paths", "paths_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--type", "type_id", type=int, required=True)
@click.option("--level", type=int, default=None, help="Octree level")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True)
@config_option
@set_option
def hexmesh_cmd(
    mesh: Path,
    segmentation: Path,
    paths_file: Optional[Path],
    type_id: int,
    level: Optional[int],
    out: Path,
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Octree hex mesh of a segmented surface (before pillowing)."""
    cfg = _load_config(config, overrides, **{"hex.level": level})
    surface = load_tri_mesh(mesh)
    seg = load_segmentation(segmentation)
    pc = template(type_id)
    paths = load_paths(paths_file) if paths_file is not None else extract_paths(surface, seg, pc)
    ctx = PipelineContext(cfg, mesh=surface, pc=pc, segmentation=seg)
    ctx.boundaries = BoundaryResult(seg, paths, surface)
    run_stages([HexMeshStage()], ctx)
    report = quality_report(ctx.hexes)
    save_hex_mesh(ctx.hexes, out, report.per_element)
    click.echo(
        f"{ctx.hexes.n_vertices} vertices, {ctx.hexes.n_elements} hexes, "
        f"min SJ {report.min:.4f} -> {out}"
    )


@cli.command("quality")
@click.option(
    "--hex",
    "hex_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    required=True,
)
@click.option(
    "--mesh",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    default=None,
    help="Input surface; without it only the report is written",
)
@click.option("--paths", "paths_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--pillow/--no-pillow", "do_pillow", default=None)
@click.option("--sj-threshold", type=float, default=None)
@click.option("--max-iters", type=int, default=None)
@click.option("--alpha", type=float, default=None)
@config_option
@set_option
def quality_cmd(
    hex_file: Path,
    mesh: Optional[Path],
    paths_file: Optional[Path],
    out: Optional[Path],
    do_pillow: Optional[bool],
    sj_threshold: Optional[float],
    max_iters: Optional[int],
    alpha: Optional[float],
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Scaled-Jacobian report; with --mesh also pillow and optimize."""
    cfg = _load_config(
        config,
        overrides,
        **{
            "quality.pillow": do_pillow,
            "quality.sj_threshold": sj_threshold,
            "quality.max_iters": max_iters,
            "quality.alpha": alpha,
        },
    )
    hexes = load_hex_mesh(hex_file)
    if mesh is None:
        report = quality_report(hexes)
    else:
        if cfg.quality.pillow:
            hexes = pillow(hexes, cfg.quality.pillow_offset)
        paths = load_paths(paths_file) if paths_file is not None else None
        hexes, report = optimize(hexes, load_tri_mesh(mesh), cfg=cfg.quality, paths=paths)
        target = out or _sibling(hex_file, ".opt.vtk")
        save_hex_mesh(hexes, target, report.per_element)
    report_path = _sibling(out or hex_file, ".quality.txt")
    write_report(report, report_path)
    click.echo(
        f"{report.n_elements} hexes, min SJ {report.min:.4f}, mean {report.mean:.4f}, "
        f"{report.n_negative} negative -> {report_path}"
    )


@cli.command("pipeline")
@click.option("--mesh", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--model", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--centroid-model", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option(
    "--oracle-type", type=int, default=None, help="Use template TYPE instead of the models"
)
@click.option("--level", type=int, default=None, help="Octree level")
@click.option("--lambda0", type=float, default=None)
@click.option("--lambda1", type=float, default=None)
@click.option("--lambda2", type=float, default=None)
@click.option("--seed", type=int, default=None)
@config_option
@set_option
def pipeline_cmd(
    mesh: Optional[Path],
    out: Optional[Path],
    model: Optional[Path],
    centroid_model: Optional[Path],
    oracle_type: Optional[int],
    level: Optional[int],
    lambda0: Optional[float],
    lambda1: Optional[float],
    lambda2: Optional[float],
    seed: Optional[int],
    config: Optional[Path],
    overrides: Sequence[str],
) -> None:
    """Surface mesh to optimized all-hex mesh."""
    cfg = _load_config(
        config,
        overrides,
        mesh=mesh,
        output=out,
        model=model,
        centroid_model=centroid_model,
        oracle_type=oracle_type,
        seed=seed,
        **{
            "hex.level": level,
            "paths.lambda0_sharp": lambda0,
            "paths.lambda1": lambda1,
            "paths.lambda2": lambda2,
        },
    )
    logger.info(f"📁 输入: {cfg.mesh}, 输出: {cfg.output}, 八叉树层级 {cfg.hex.level}")
    run_pipeline(cfg, echo=click.echo)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and map failures onto exit codes."""
    try:
        cli.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except PipelineError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_STAGE
    except Exception as exc:
        logger.exception(f"❌ 未处理的异常: {exc}")
        click.echo(f"error: {exc}", err=True)
        return EXIT_STAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
