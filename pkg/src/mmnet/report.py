"""Report artifacts: delimited tables plus matplotlib renderings.

The run path writes the trace log, final storage files and a marking table;
with rendering on, every stored image becomes a PNG (regions as filled
boxes, decorations as colored outlines). The explore path writes state and
edge tables next to the DOT export and a depth-profile figure.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
from matplotlib.patches import Ellipse, Rectangle  # noqa: E402

from .media import SyntheticImage, dump_store
from .rdf import serialize_ntriples
from .runtime import LTS, Snapshot, marking_summary
from .values import render_tuple


def render_image(img: SyntheticImage, path: str, title: str | None = None):
    fig, ax = plt.subplots(figsize=(4, 4 * max(img.height, 1) / max(img.width, 1)))
    ax.add_patch(Rectangle((0, 0), img.width, img.height, fill=False,
                           edgecolor="black", linewidth=1.5))
    for r in img.regions:
        x1, y1, x2, y2 = r.box
        ax.add_patch(Rectangle((x1, y1), x2 - x1, y2 - y1, facecolor="0.85",
                               edgecolor="0.4"))
        ax.text((x1 + x2) / 2, (y1 + y2) / 2, r.tag, ha="center", va="center",
                fontsize=7)
    for d in img.decorations:
        x1, y1, x2, y2 = d.box
        if d.shape == "oval":
            patch = Ellipse(((x1 + x2) / 2, (y1 + y2) / 2), x2 - x1, y2 - y1,
                            fill=False, edgecolor=d.color, linewidth=2)
        else:
            patch = Rectangle((x1, y1), x2 - x1, y2 - y1, fill=False,
                              edgecolor=d.color, linewidth=2)
        ax.add_patch(patch)
    ax.set_xlim(-2, img.width + 2)
    ax.set_ylim(-2, img.height + 2)
    ax.invert_yaxis()
    ax.set_aspect("equal")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_store(store, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for addr, img in sorted(store.items()):
        path = os.path.join(out_dir, f"{addr}.png")
        render_image(img, path, title=addr)
        paths.append(path)
    return paths


def write_marking_csv(snap: Snapshot, path: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["place", "count", "tokens"])
        for p in sorted(snap.marking):
            ms = snap.marking[p]
            rendered = "; ".join(f"{render_tuple(tok)} x{n}"
                                 for tok, n in sorted(
                                     ms.items(), key=lambda kv: render_tuple(kv[0])))
            w.writerow([p, len(ms), rendered])
    return path


def write_run_artifacts(out_dir: str, trace, snap: Snapshot,
                        render: bool = False):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trace.log"), "w", encoding="utf-8") as fh:
        for step in trace:
            fh.write(step.render() + "\n")
    with open(os.path.join(out_dir, "final.nt"), "w", encoding="utf-8") as fh:
        fh.write(serialize_ntriples(snap.storage.metadata))
    with open(os.path.join(out_dir, "final.objects.json"), "w",
              encoding="utf-8") as fh:
        fh.write(dump_store(snap.storage.objects))
    write_marking_csv(snap, os.path.join(out_dir, "marking.csv"))
    if render:
        render_store(snap.storage.objects, os.path.join(out_dir, "render"))


def state_ids(lts: LTS):
    return {k: f"s{i}" for i, k in enumerate(sorted(lts.states))}


def write_lts_tables(lts: LTS, out_dir: str):
    os.makedirs(out_dir, exist_ok=True)
    ids = state_ids(lts)
    with open(os.path.join(out_dir, "states.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["state", "depth", "initial", "summary"])
        for k in sorted(lts.states):
            w.writerow([ids[k], lts.depths.get(k, ""),
                        "yes" if k == lts.initial else "",
                        marking_summary(lts.states[k])])
    with open(os.path.join(out_dir, "edges.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "transition", "binding", "target"])
        for src, t, binding, dst in lts.edges:
            w.writerow([ids[src], t, binding.render(), ids[dst]])


def lts_figure(lts: LTS, path: str):
    """States-per-depth profile with the headline numbers."""
    by_depth: dict[int, int] = {}
    for k in lts.states:
        d = lts.depths.get(k, 0)
        by_depth[d] = by_depth.get(d, 0) + 1
    depths = sorted(by_depth)
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(depths, [by_depth[d] for d in depths], color="#5499C7")
    ax.set_xlabel("depth")
    ax.set_ylabel("states")
    flag = " (truncated)" if lts.truncated else ""
    ax.set_title(f"{len(lts.states)} states, {len(lts.edges)} edges{flag}",
                 fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path
