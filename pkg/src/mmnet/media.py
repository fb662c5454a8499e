"""Addressed object storage and the synthetic region-based media model.

Images are labeled-region documents (canvas, tagged regions, drawn
decorations), which makes every media function exactly computable: counting
and detection read the declared regions, extraction crops and translates,
subtraction removes the extracted content using the recorded crop offset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .errors import DanglingAddress, OutOfBounds, TypeMismatch, UnknownShape
from .values import (
    INT_T,
    JPG_T,
    OID_T,
    RECT_T,
    STR_T,
    Value,
    format_rect,
    mk_int,
    mk_oid,
    parse_rect,
)

SHAPES = ("oval", "rect")


@dataclass(frozen=True)
class Region:
    tag: str
    box: tuple[int, int, int, int]


@dataclass(frozen=True)
class Decoration:
    shape: str
    color: str
    box: tuple[int, int, int, int]


@dataclass(frozen=True)
class SyntheticImage:
    width: int
    height: int
    regions: tuple[Region, ...] = ()
    decorations: tuple[Decoration, ...] = ()
    source_offset: tuple[int, int] | None = None  # crop provenance, set by extract

    def __post_init__(self):
        for r in self.regions:
            self._check_box(r.box, "region")
        for d in self.decorations:
            self._check_box(d.box, "decoration")

    def _check_box(self, box, what):
        x1, y1, x2, y2 = box
        if not (0 <= x1 <= x2 <= self.width and 0 <= y1 <= y2 <= self.height):
            raise OutOfBounds(f"{what} box {format_rect(box)} exceeds "
                              f"{self.width}x{self.height} canvas")


def empty_image(width=100, height=100) -> SyntheticImage:
    return SyntheticImage(width, height)


def count_features(img: SyntheticImage, feature: str) -> int:
    """countIMGs: number of regions carrying the feature tag; 0 when none."""
    return sum(1 for r in img.regions if r.tag == feature)


def detect_features(img: SyntheticImage, feature: str):
    """detectIMG: boxes of regions tagged with the feature, region order,
    duplicates collapsed."""
    boxes = []
    for r in img.regions:
        if r.tag == feature and r.box not in boxes:
            boxes.append(r.box)
    return boxes


def _contains(outer, inner) -> bool:
    return (outer[0] <= inner[0] and outer[1] <= inner[1]
            and inner[2] <= outer[2] and inner[3] <= outer[3])


def _translate(box, dx, dy):
    return (box[0] + dx, box[1] + dy, box[2] + dx, box[3] + dy)


def extract(img: SyntheticImage, seg: tuple[int, int, int, int]) -> SyntheticImage:
    """extractIMG: crop to the segment. Keeps regions/decorations fully
    inside the segment, translated to the new origin; records the crop
    origin so a later subtraction can re-align."""
    if not (0 <= seg[0] <= seg[2] <= img.width and 0 <= seg[1] <= seg[3] <= img.height):
        raise OutOfBounds(f"segment {format_rect(seg)} exceeds canvas")
    dx, dy = -seg[0], -seg[1]
    regions = tuple(Region(r.tag, _translate(r.box, dx, dy))
                    for r in img.regions if _contains(seg, r.box))
    decorations = tuple(Decoration(d.shape, d.color, _translate(d.box, dx, dy))
                        for d in img.decorations if _contains(seg, d.box))
    return SyntheticImage(seg[2] - seg[0], seg[3] - seg[1], regions, decorations,
                          source_offset=(seg[0], seg[1]))


def subtract(img: SyntheticImage, part: SyntheticImage) -> SyntheticImage:
    """sub: remove the part's content from the image. Regions whose (tag,
    box) match a part region after re-translation by the part's recorded
    offset are dropped; decorations lying inside the removed area go too.
    Canvas is unchanged."""
    ox, oy = part.source_offset if part.source_offset is not None else (0, 0)
    removed = {(r.tag, _translate(r.box, ox, oy)) for r in part.regions}
    area = (ox, oy, ox + part.width, oy + part.height)
    regions = tuple(r for r in img.regions if (r.tag, r.box) not in removed)
    decorations = tuple(d for d in img.decorations if not _contains(area, d.box))
    return replace(img, regions=regions, decorations=decorations)


def mark(img: SyntheticImage, seg, shape: str, color: str) -> SyntheticImage:
    """markIMG: draw a colored shape around the segment; regions untouched."""
    if shape not in SHAPES:
        raise UnknownShape(f"shape {shape!r} not in {SHAPES}")
    if not color:
        raise TypeMismatch("color must be a named color")
    if not (0 <= seg[0] <= seg[2] <= img.width and 0 <= seg[1] <= seg[3] <= img.height):
        raise OutOfBounds(f"segment {format_rect(seg)} exceeds canvas")
    return replace(img, decorations=img.decorations + (Decoration(shape, color, seg),))


class ObjectStore:
    """Immutable address -> object map; addresses unique by construction."""

    __slots__ = ("_objects",)

    def __init__(self, objects=None):
        self._objects = dict(objects) if objects else {}

    def src(self, address: str) -> SyntheticImage:
        if address not in self._objects:
            raise DanglingAddress(f"no object at address {address!r}")
        return self._objects[address]

    def address_of(self, obj: SyntheticImage) -> str:
        for a, o in self._objects.items():
            if o == obj:
                return a
        raise DanglingAddress("object is not stored")

    def put_or_update(self, address: str, obj: SyntheticImage) -> "ObjectStore":
        objects = dict(self._objects)
        objects[address] = obj
        return ObjectStore(objects)

    def remove(self, address: str) -> "ObjectStore":
        if address not in self._objects:
            return self
        objects = dict(self._objects)
        del objects[address]
        return ObjectStore(objects)

    def addresses(self):
        return self._objects.keys()

    def items(self):
        return self._objects.items()

    def __contains__(self, address: str) -> bool:
        return address in self._objects

    def __len__(self):
        return len(self._objects)

    def __eq__(self, other):
        return isinstance(other, ObjectStore) and self._objects == other._objects

    def __repr__(self):
        return f"ObjectStore({len(self._objects)} objects)"


EMPTY_STORE = ObjectStore()


# -- function symbols ----------------------------------------------------------

def _as_image(v, sym) -> SyntheticImage:
    if isinstance(v, Value) and v.type.is_media:
        v = v.payload
    if not isinstance(v, SyntheticImage):
        raise TypeMismatch(f"{sym} expects a media object")
    return v


def _media_value(img: SyntheticImage) -> Value:
    return Value(JPG_T, img)


def register_media_functions(domain):
    """Install src/addr and the image functions into a type domain."""

    def fn_src(store, addr_v):
        if not isinstance(addr_v, Value) or addr_v.type != OID_T:
            raise TypeMismatch("src expects an oid")
        return _media_value(store.src(addr_v.payload))

    def fn_addr(store, media_v):
        return mk_oid(store.address_of(_as_image(media_v, "addr")))

    def fn_count(store, media_v, feature_v):
        return mk_int(count_features(_as_image(media_v, "countIMGs"),
                                     _feature_text(feature_v)))

    def fn_detect(store, media_v, feature_v):
        img = _as_image(media_v, "detectIMG")
        boxes = detect_features(img, _feature_text(feature_v))
        st = domain.set_type((RECT_T,))
        return Value(st, tuple((Value(RECT_T, b),) for b in boxes))

    def fn_extract(store, media_v, seg_v):
        return _media_value(extract(_as_image(media_v, "extractIMG"),
                                    _rect_payload(seg_v)))

    def fn_sub(store, media_v, part_v):
        return _media_value(subtract(_as_image(media_v, "sub"),
                                     _as_image(part_v, "sub")))

    def fn_mark(store, media_v, seg_v, shape_v, color_v):
        return _media_value(mark(_as_image(media_v, "markIMG"),
                                 _rect_payload(seg_v),
                                 _text(shape_v, "shape"), _text(color_v, "color")))

    domain.add_function("src", None, JPG_T, fn_src, needs_store=True)
    domain.add_function("addr", None, OID_T, fn_addr, needs_store=True)
    domain.add_function("countIMGs", None, INT_T, fn_count, needs_store=True)
    domain.add_function("detectIMG", None, None, fn_detect, needs_store=True)
    domain.add_function("extractIMG", None, JPG_T, fn_extract, needs_store=True)
    domain.add_function("sub", None, JPG_T, fn_sub, needs_store=True)
    domain.add_function("markIMG", None, JPG_T, fn_mark, needs_store=True)


def _feature_text(v) -> str:
    if isinstance(v, Value) and v.type.kind in ("string", "literal"):
        return v.payload
    raise TypeMismatch("feature pattern must be a string or literal")


def _text(v, what) -> str:
    if isinstance(v, Value) and v.type.kind in ("string", "literal"):
        return v.payload
    raise TypeMismatch(f"{what} must be a string")


def _rect_payload(v):
    if isinstance(v, Value) and v.type == RECT_T:
        return v.payload
    if isinstance(v, Value) and v.type.kind == "literal":
        return parse_rect(v.payload)
    raise TypeMismatch("segment must be a rect")


# -- serialization ---------------------------------------------------------------

def image_to_doc(img: SyntheticImage) -> dict:
    doc = {
        "width": img.width,
        "height": img.height,
        "regions": [{"tag": r.tag, "box": format_rect(r.box)} for r in img.regions],
        "decorations": [{"shape": d.shape, "color": d.color, "box": format_rect(d.box)}
                        for d in img.decorations],
        "sourceOffset": list(img.source_offset) if img.source_offset else None,
    }
    return doc


def image_from_doc(doc: dict) -> SyntheticImage:
    regions = tuple(Region(r["tag"], parse_rect(r["box"]))
                    for r in doc.get("regions", ()))
    decorations = tuple(Decoration(d["shape"], d["color"], parse_rect(d["box"]))
                        for d in doc.get("decorations", ()))
    offset = doc.get("sourceOffset")
    return SyntheticImage(doc["width"], doc["height"], regions, decorations,
                          tuple(offset) if offset else None)


def dump_store(store: ObjectStore) -> str:
    docs = {addr: image_to_doc(img) for addr, img in sorted(store.items())}
    return json.dumps(docs, indent=2, sort_keys=True) + "\n"


def load_store(text: str) -> ObjectStore:
    docs = json.loads(text) if text.strip() else {}
    return ObjectStore({addr: image_from_doc(doc) for addr, doc in docs.items()})
