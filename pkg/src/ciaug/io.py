"""Text and JSON formats for graphs, spectra, plans and assignments."""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import IO, Union

import numpy as np

from .graph import Graph

PathOrFile = Union[str, Path, IO[str]]


class ParseError(ValueError):
    """Malformed edge-list input; the message names the offending line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} at line {line}")
        self.line = line


def parse_edge_list(text: Union[str, IO[str]]) -> Graph:
    """Parse the ``n m`` header + ``i j [w]`` edge-list format.

    Blank lines and lines starting with ``#`` are ignored. Pairs are
    canonicalized to ``i < j``.

    Examples
    --------
    >>> g = parse_edge_list("3 2\\n0 1\\n2 1 0.5")
    >>> g.edges.tolist(), g.weights.tolist()
    ([[0, 1], [1, 2]], [1.0, 0.5])
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    header = None
    edges, weights, seen = [], [], {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ParseError("expected header 'n m'", lineno)
            try:
                n, m = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError("non-integer header", lineno) from None
            if n < 0 or m < 0:
                raise ParseError("negative header value", lineno)
            header = (n, m)
            continue
        if len(parts) not in (2, 3):
            raise ParseError("expected 'i j [w]'", lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError("malformed edge", lineno) from None
        n = header[0]
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(f"node index out of range [0, {n})", lineno)
        if i == j:
            raise ParseError("self-loop", lineno)
        if not np.isfinite(w) or w < 0:
            raise ParseError("negative weight", lineno)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(f"duplicate edge {key} (first seen at line {seen[key]})", lineno)
        seen[key] = lineno
        edges.append(key)
        weights.append(w)
    if header is None:
        raise ParseError("missing header", 1)
    if len(edges) != header[1]:
        raise ParseError(f"header declares {header[1]} edges, found {len(edges)}", lineno)
    return Graph(header[0], np.array(edges, dtype=np.int64).reshape(-1, 2), weights)


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    for (i, j), w in zip(g.edges.tolist(), g.weights.tolist()):
        lines.append(f"{i} {j}" if w == 1.0 else f"{i} {j} {w!r}")
    return "\n".join(lines) + "\n"


def graph_to_dict(g: Graph) -> dict:
    out = {
        "n": g.n,
        "edges": [[i, j, w] for (i, j), w in zip(g.edges.tolist(), g.weights.tolist())],
    }
    if g.features is not None:
        out["features"] = g.features.tolist()
    if g.labels is not None:
        out["labels"] = g.labels.tolist()
    return out


def graph_from_dict(obj: dict) -> Graph:
    try:
        n = int(obj["n"])
        raw = obj.get("edges", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid graph JSON: {exc}") from None
    edges = [(int(e[0]), int(e[1])) for e in raw]
    weights = [float(e[2]) if len(e) > 2 else 1.0 for e in raw]
    return Graph(
        n,
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        weights,
        features=obj.get("features"),
        labels=obj.get("labels"),
    )


def _dump(obj, target: PathOrFile) -> None:
    text = json.dumps(obj, separators=(",", ":"))
    if isinstance(target, (str, Path)):
        Path(target).write_text(text + "\n")
    else:
        target.write(text + "\n")


def _load(source: PathOrFile):
    if isinstance(source, (str, Path)):
        return json.loads(Path(source).read_text())
    return json.load(source)


def write_graph_json(g: Graph, target: PathOrFile) -> None:
    _dump(graph_to_dict(g), target)


def read_graph_json(source: PathOrFile) -> Graph:
    return graph_from_dict(_load(source))


def read_graph(path: Union[str, Path]) -> Graph:
    """Read a graph from ``.json`` or edge-list text, chosen by extension."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        return read_graph_json(path)
    return parse_edge_list(path.read_text())


def write_spectral_json(pair, target: PathOrFile) -> None:
    _dump({"eigenvalues": pair.eigenvalues.tolist(), "eigenvectors": pair.eigenvectors.tolist()}, target)


def read_spectral_json(source: PathOrFile):
    from .spectral import SpectralPair

    obj = _load(source)
    return SpectralPair(np.array(obj["eigenvalues"], dtype=float), np.array(obj["eigenvectors"], dtype=float))


def write_assignment_json(assignment, target: PathOrFile) -> None:
    _dump(assignment.labels.tolist(), target)


def read_assignment_json(source: PathOrFile):
    from .community import CommunityAssignment

    labels = np.array(_load(source), dtype=np.int64)
    return CommunityAssignment(labels, int(labels.max()) + 1 if len(labels) else 1)
