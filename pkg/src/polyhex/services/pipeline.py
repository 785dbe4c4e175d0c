"""
流水线服务

按顺序运行各阶段: 读入 -> 归一化 -> 分类 -> 预细分 -> 分割 -> 路径优化 ->
六面体生成 -> 垫层 -> 质量优化 -> 保存。任何阶段的异常都以 StageFailure
的形式带上阶段名称向上抛出。
"""

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import ConfigError, PipelineError, StageFailure
from ..core.i18n import _
from ..core.interfaces import PipelineStage
from ..core.logging import get_logger
from ..core.types import PipelineConfig
from ..gcn import GcnModel, forward_classify, load_model
from ..hexgen import assemble_hex_mesh
from ..mesh import (
    HexMesh,
    TriMesh,
    build_face_graph,
    detect_sharp_edges,
    load_tri_mesh,
    normalize_to_unit_box,
    refine_uniform,
    save_hex_mesh,
)
from ..pathopt import BoundaryResult, optimize_boundaries
from ..polycube import NUM_TYPES, PolycubeStructure, template
from ..quality import QualityReport, optimize, pillow, quality_report
from ..segmentation import Segmentation, segment

logger = get_logger(__name__)

MAX_PRE_REFINE = 4


@dataclass
class PipelineContext:
    """Everything the stages read and produce."""

    cfg: PipelineConfig
    mesh: Optional[TriMesh] = None
    input_counts: Tuple[int, int] = (0, 0)
    probabilities: Optional[np.ndarray] = None
    type_id: Optional[int] = None
    pc: Optional[PolycubeStructure] = None
    centroid_model: Optional[GcnModel] = None
    segmentation: Optional[Segmentation] = None
    boundaries: Optional[BoundaryResult] = None
    hexes: Optional[HexMesh] = None
    report: Optional[QualityReport] = None
    timings: Dict[str, float] = field(default_factory=dict)

    def require(self, name: str) -> Any:
        value = getattr(self, name)
        if value is None:
            raise PipelineError(
                code="MISSING_INPUT",
                message=f"'{name}' has not been produced by an earlier stage",
                details={"field": name},
            )
        return value


# ------------------------------------------------------------------ stages


class LoadStage(PipelineStage):
    name = "load"

    def run(self, context: PipelineContext) -> None:
        path = context.cfg.mesh
        if path is None:
            raise ConfigError.from_key("MISSING_FILE", "errors.pipeline.missing_file", path="mesh")
        if not Path(path).exists():
            raise ConfigError.from_key("MISSING_FILE", "errors.pipeline.missing_file", path=str(path))
        mesh = load_tri_mesh(path)
        context.input_counts = (mesh.n_vertices, mesh.n_faces)
        context.mesh = mesh

    def describe(self, context: PipelineContext) -> str:
        v, f = context.input_counts
        return f"{v} vertices, {f} triangles"


class NormalizeStage(PipelineStage):
    name = "normalize"

    def run(self, context: PipelineContext) -> None:
        mesh = normalize_to_unit_box(context.require("mesh"))
        sharp = detect_sharp_edges(mesh, context.cfg.paths.sharp_angle)
        context.mesh = mesh.with_sharp_edges(sharp)

    def describe(self, context: PipelineContext) -> str:
        assert context.mesh is not None
        return f"{len(context.mesh.sharp_edges)} sharp edges"


class ClassifyStage(PipelineStage):
    """Template type from the classifier, or from `oracle_type`."""

    name = "classify"

    def run(self, context: PipelineContext) -> None:
        cfg = context.cfg
        if cfg.oracle_type is not None:
            probs = np.zeros(NUM_TYPES)
            probs[cfg.oracle_type - 1] = 1.0
        else:
            if cfg.model is None:
                raise ConfigError.from_key(
                    "MISSING_FILE", "errors.pipeline.missing_file", path="model"
                )
            model = load_model(cfg.model, "classifier")
            mesh: TriMesh = context.require("mesh")
            probs = forward_classify(model, build_face_graph(mesh))
        context.probabilities = probs
        context.type_id = int(np.argmax(probs)) + 1
        context.pc = template(context.type_id)
        if cfg.centroid_model is not None:
            context.centroid_model = load_model(cfg.centroid_model, "centroid")

    def describe(self, context: PipelineContext) -> str:
        mode = "oracle" if context.cfg.oracle_type is not None else "model"
        return f"type {context.type_id} ({mode})"


class RefineStage(PipelineStage):
    """Split coarse inputs until every lattice facet gets enough triangles."""

    name = "refine"

    def run(self, context: PipelineContext) -> None:
        mesh: TriMesh = context.require("mesh")
        pc: PolycubeStructure = context.require("pc")
        wanted = context.cfg.hex.min_faces_per_facet * pc.surface_area
        rounds = 0
        while mesh.n_faces < wanted and rounds < MAX_PRE_REFINE:
            mesh = refine_uniform(mesh)
            rounds += 1
        if rounds:
            sharp = detect_sharp_edges(mesh, context.cfg.paths.sharp_angle)
            mesh = mesh.with_sharp_edges(sharp)
            logger.info(f"预细分 {rounds} 次: {mesh.n_faces} 个三角形 (目标 {wanted})")
        context.mesh = mesh


class SegmentStage(PipelineStage):
    name = "segment"

    def run(self, context: PipelineContext) -> None:
        cfg = context.cfg
        pc: PolycubeStructure = context.require("pc")
        centroids = pc.face_centroids(normalized=True) if cfg.oracle_type is not None else None
        context.segmentation = segment(
            context.require("mesh"),
            pc,
            context.centroid_model,
            cfg.segment,
            centroids=centroids,
        )

    def describe(self, context: PipelineContext) -> str:
        assert context.segmentation is not None
        return f"{context.segmentation.k} patches"


class PathStage(PipelineStage):
    name = "pathopt"

    def run(self, context: PipelineContext) -> None:
        result = optimize_boundaries(
            context.require("mesh"),
            context.require("segmentation"),
            context.require("pc"),
            context.cfg.paths,
        )
        context.boundaries = result
        context.mesh = result.mesh
        context.segmentation = result.segmentation

    def describe(self, context: PipelineContext) -> str:
        assert context.boundaries is not None
        return f"{len(context.boundaries.paths.paths)} paths"


class HexMeshStage(PipelineStage):
    name = "hexmesh"

    def run(self, context: PipelineContext) -> None:
        boundaries: BoundaryResult = context.require("boundaries")
        context.hexes = assemble_hex_mesh(
            boundaries.mesh,
            boundaries.segmentation,
            context.require("pc"),
            context.cfg.hex.level,
            paths=boundaries.paths,
            weights=context.cfg.paths,
        )

    def describe(self, context: PipelineContext) -> str:
        assert context.hexes is not None
        return f"{context.hexes.n_vertices} vertices, {context.hexes.n_elements} hexes"


class PillowStage(PipelineStage):
    name = "pillow"

    def run(self, context: PipelineContext) -> None:
        hexes: HexMesh = context.require("hexes")
        q = context.cfg.quality
        if q.pillow:
            context.hexes = pillow(hexes, q.pillow_offset)

    def describe(self, context: PipelineContext) -> str:
        assert context.hexes is not None
        return f"{context.hexes.n_elements} hexes"


class OptimizeStage(PipelineStage):
    name = "optimize"

    def run(self, context: PipelineContext) -> None:
        boundaries: BoundaryResult = context.require("boundaries")
        context.hexes, context.report = optimize(
            context.require("hexes"),
            boundaries.mesh,
            cfg=context.cfg.quality,
            paths=boundaries.paths,
        )

    def describe(self, context: PipelineContext) -> str:
        assert context.report is not None
        return f"min SJ {context.report.min:.4f} after {context.report.iterations} iterations"


class SaveStage(PipelineStage):
    name = "save"

    def run(self, context: PipelineContext) -> None:
        hexes: HexMesh = context.require("hexes")
        if context.report is None:
            context.report = quality_report(hexes)
        out = Path(context.cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        save_hex_mesh(hexes, out, context.report.per_element)
        stats = [probability_row(context.probabilities), statistics_row(context)]
        stats_path(out).write_text("\n".join(stats) + "\n", encoding="utf-8")


def default_stages() -> List[PipelineStage]:
    return [
        LoadStage(),
        NormalizeStage(),
        ClassifyStage(),
        RefineStage(),
        SegmentStage(),
        PathStage(),
        HexMeshStage(),
        PillowStage(),
        OptimizeStage(),
        SaveStage(),
    ]


# ----------------------------------------------------------------- reports


def stats_path(output: Path) -> Path:
    return output.with_name(output.name + ".stats.txt")


def probability_row(probs: Optional[np.ndarray]) -> str:
    """P1..P11 as percentages with two decimals."""
    if probs is None:
        return ""
    return " ".join(f"{100.0 * float(p):.2f}" for p in probs)


def statistics_row(context: PipelineContext) -> str:
    """Input (vertices, elements), octree level, output (vertices, elements), worst Jacobian."""
    v_in, f_in = context.input_counts
    v_out = context.hexes.n_vertices if context.hexes is not None else 0
    e_out = context.hexes.n_elements if context.hexes is not None else 0
    worst = context.report.min if context.report is not None else float("nan")
    return (
        f"({v_in:,} {f_in:,}) | {context.cfg.hex.level} | ({v_out:,} {e_out:,}) | {worst:.2f}"
    )


# ------------------------------------------------------------------ runner


def run_stages(stages: Sequence[PipelineStage], context: PipelineContext) -> PipelineContext:
    for stage in stages:
        logger.info(_("messages.stage_started", stage=stage.name))
        started = time.perf_counter()
        try:
            stage.run(context)
        except StageFailure:
            raise
        except Exception as exc:
            logger.exception(f"阶段 {stage.name} 失败: {exc}")
            raise StageFailure.wrap(stage.name, exc) from exc
        elapsed = time.perf_counter() - started
        context.timings[stage.name] = elapsed
        logger.info(
            _("messages.stage_finished", stage=stage.name, seconds=elapsed)
            + f": {stage.describe(context)}"
        )
    return context


def run_pipeline(
    cfg: PipelineConfig,
    echo: Optional[Callable[[str], None]] = None,
    stages: Optional[Sequence[PipelineStage]] = None,
) -> PipelineContext:
    """Mesh -> hex mesh; the probability and statistics rows go to `echo`."""
    context = run_stages(stages or default_stages(), PipelineContext(cfg))
    if echo is not None:
        echo(_("messages.probabilities"))
        echo(probability_row(context.probabilities))
        echo(_("messages.statistics"))
        echo(statistics_row(context))
    logger.info(_("messages.done", path=str(cfg.output)))
    return context
