"""Deterministic full-coverage tiling of large training images.

Tiles overlap so that any object no larger than ``tile * overlap_ratio`` on
both axes sits entirely inside at least one tile. Annotations are clipped to
each tile and kept when enough of the box survives.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .config import thread_count
from .geometry import BBox

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TileGrid:
    image_w: int
    image_h: int
    tile: int
    overlap_ratio: float
    offsets_x: tuple[int, ...]
    offsets_y: tuple[int, ...]

    def origins(self):
        """Tile origins in row-major order (y outer, x inner)."""
        return [(x, y) for y in self.offsets_y for x in self.offsets_x]

    def tile_size(self) -> tuple[int, int]:
        return (min(self.tile, self.image_w), min(self.tile, self.image_h))

    def __len__(self):
        return len(self.offsets_x) * len(self.offsets_y)


@dataclass
class TileSpec:
    source_image: str
    origin: tuple[int, int]
    size: tuple[int, int]
    annotations: list = field(default_factory=list)


def _axis_offsets(dim: int, tile: int, stride: int) -> tuple[int, ...]:
    if dim <= tile:
        return (0,)
    last = dim - tile
    offs = list(range(0, last, stride))
    if not offs or offs[-1] != last:
        offs.append(last)
    return tuple(offs)


def plan_grid(image_w: int, image_h: int, tile: int = 1280, overlap_ratio: float = 0.2) -> TileGrid:
    if tile <= 0:
        raise ValueError(f"tile must be positive, got {tile}")
    if not 0.0 <= overlap_ratio < 1.0:
        raise ValueError(f"overlap_ratio must be in [0, 1), got {overlap_ratio}")
    if image_w <= 0 or image_h <= 0:
        raise ValueError(f"image size must be positive, got {image_w}x{image_h}")
    stride = max(1, math.floor(tile * (1.0 - overlap_ratio)))
    return TileGrid(
        image_w,
        image_h,
        tile,
        overlap_ratio,
        _axis_offsets(image_w, tile, stride),
        _axis_offsets(image_h, tile, stride),
    )


def remap_annotations(boxes, origin, size, min_visibility: float = 0.5):
    """Clip boxes to a tile and shift them to tile-local coordinates.

    Returns ``[(index, local_box, visibility)]`` for boxes whose surviving
    area fraction is at least ``min_visibility``.
    """
    if not 0.0 < min_visibility <= 1.0:
        raise ValueError(f"min_visibility must be in (0, 1], got {min_visibility}")
    ox, oy = origin
    tw, th = size
    out = []
    for i, b in enumerate(boxes):
        x1, y1 = max(b.x, ox), max(b.y, oy)
        x2, y2 = min(b.x2, ox + tw), min(b.y2, oy + th)
        if x2 <= x1 or y2 <= y1:
            continue
        vis = (x2 - x1) * (y2 - y1) / b.area
        if vis + 1e-12 < min_visibility:
            continue
        out.append((i, BBox(x1 - ox, y1 - oy, x2 - x1, y2 - y1), min(1.0, vis)))
    return out


def plan_tiles(source, image_w, image_h, boxes, tile=1280, overlap_ratio=0.2, min_visibility=0.5):
    """One :class:`TileSpec` per grid cell with its remapped annotations.

    Annotation entries are ``(index_into_boxes, local_box, visibility)``.
    """
    grid = plan_grid(image_w, image_h, tile, overlap_ratio)
    size = grid.tile_size()
    return [
        TileSpec(source, origin, size, remap_annotations(boxes, origin, size, min_visibility))
        for origin in grid.origins()
    ]


def tile_name(stem: str, x_off: int, y_off: int, ext: str) -> str:
    return f"{stem}__x{x_off}_y{y_off}{ext}"


# -- slice-level augmentation -----------------------------------------------


def _identity(pixels, boxes, size):
    return pixels, list(boxes)


def _hflip(pixels, boxes, size):
    tw = size[0]
    flipped = None if pixels is None else np.ascontiguousarray(pixels[:, ::-1])
    return flipped, [BBox(tw - b.x - b.w, b.y, b.w, b.h) for b in boxes]


TRANSFORMS: dict[str, Callable] = {"none": _identity, "horizontal_flip": _hflip}


def augment_tile(pixels, boxes, size, transform: str = "none"):
    """Apply a named geometric transform to tile pixels and tile-local boxes."""
    try:
        fn = TRANSFORMS[transform]
    except KeyError:
        raise ValueError(f"unsupported transform {transform!r}; choose from {sorted(TRANSFORMS)}") from None
    return fn(pixels, boxes, size)


# -- dataset driver ---------------------------------------------------------


@dataclass
class SliceResult:
    coco: dict
    errors: list[str]
    tiles_written: int


def _slice_one(img_entry, anns, image_dir: Path, out_dir: Path, tile, overlap, min_vis):
    from PIL import Image

    path = image_dir / img_entry["file_name"]
    with Image.open(path) as im:
        im.load()
        w, h = im.size
        boxes = [BBox(*map(float, a["bbox"])) for a in anns]
        stem, ext = Path(img_entry["file_name"]).stem, Path(img_entry["file_name"]).suffix
        tiles = []
        for spec in plan_tiles(img_entry["id"], w, h, boxes, tile, overlap, min_vis):
            (ox, oy), (tw, th) = spec.origin, spec.size
            name = tile_name(stem, ox, oy, ext)
            im.crop((ox, oy, ox + tw, oy + th)).save(out_dir / name)
            tiles.append((name, ox, oy, tw, th, [(anns[i], b, v) for i, b, v in spec.annotations]))
    return tiles


def slice_dataset(
    image_dir,
    coco: dict,
    out_dir,
    tile: int = 1280,
    overlap_ratio: float = 0.2,
    min_visibility: float = 0.5,
) -> SliceResult:
    """Tile every image of a COCO dataset; writes tile images and ``annotations.json``."""
    plan_grid(1, 1, tile, overlap_ratio)  # parameter validation
    if not 0.0 < min_visibility <= 1.0:
        raise ValueError(f"min_visibility must be in (0, 1], got {min_visibility}")
    image_dir, out_dir = Path(image_dir), Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    images = sorted(coco.get("images", []), key=lambda e: (str(e["file_name"]), e["id"]))
    anns_by_image: dict = {}
    for a in sorted(coco.get("annotations", []), key=lambda a: a.get("id", 0)):
        anns_by_image.setdefault(a["image_id"], []).append(a)

    def work(entry):
        try:
            return entry, _slice_one(
                entry, anns_by_image.get(entry["id"], []), image_dir, out_dir / "images", tile, overlap_ratio, min_visibility
            ), None
        except (OSError, ValueError) as exc:
            return entry, None, f"{entry['file_name']}: {exc}"

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(work, images))

    out_images, out_anns, errors = [], [], []
    for entry, tiles, err in results:
        if err:
            log.warning("skipping image: %s", err)
            errors.append(err)
            continue
        for name, ox, oy, tw, th, kept in tiles:
            img_id = len(out_images) + 1
            out_images.append(
                {
                    "id": img_id,
                    "file_name": name,
                    "width": tw,
                    "height": th,
                    "source_image_id": entry["id"],
                    "source_file_name": entry["file_name"],
                    "x_off": ox,
                    "y_off": oy,
                }
            )
            for src, b, vis in kept:
                out_anns.append(
                    {
                        "id": len(out_anns) + 1,
                        "image_id": img_id,
                        "category_id": src.get("category_id", 1),
                        "bbox": [round(v, 4) for v in b],
                        "area": round(b.w * b.h, 4),
                        "iscrowd": src.get("iscrowd", 0),
                        "visibility": round(vis, 6),
                        "source_annotation_id": src.get("id"),
                    }
                )
    out = {
        "images": out_images,
        "annotations": out_anns,
        "categories": coco.get("categories", [{"id": 1, "name": "object"}]),
    }
    with open(out_dir / "annotations.json", "w") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return SliceResult(out, errors, len(out_images))
