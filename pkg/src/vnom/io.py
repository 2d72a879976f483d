"""File formats, synthetic corpus generation, and result serialization.

Topic-graph files are UTF-8 text: header lines ``#n=<int>`` and ``#k=<int>``,
optional ``#vertex <id> <name>`` symbol-table lines, then one edge per line,
``e <u> <v> <count> <t1> ... <tK>``.  Any other ``#``-prefixed line is
metadata and is ignored by the reader.  Serialization is canonical (edges
sorted by pair, probabilities at 12 significant digits) so equal graphs
produce byte-equal files.

Attributed-graph files are analogous: ``#n=``/``#ke=`` headers, one
``v <id> <truth> <observed>`` line per vertex, and ``a <u> <v> <attr>`` edge
lines.

Every result file embeds the resolved configuration and seed as metadata
(comment lines in CSV, a ``meta`` object in JSON); timestamps live only
there, so the data sections are byte-stable for a fixed seed.
"""

from __future__ import annotations

import io as _io
import json
import math
from datetime import datetime, timezone

import numpy as np

from .errors import GraphFormatError, InputError
from .experiments import SurfaceResult, SweepResult
from .graph import AttributedGraph, TopicGraph
from .importance import ScreeningResult, TrialsResult
from .seeding import generator

_FORMAT_TAG_TOPIC = "# vnom topic-graph v1"
_FORMAT_TAG_ATTR = "# vnom attributed-graph v1"


def _fmt_prob(x: float) -> str:
    return f"{x:.12g}"


# ---------------------------------------------------------------------------
# topic-graph files
# ---------------------------------------------------------------------------

def write_topic_graph(g: TopicGraph, path, metadata: dict | None = None) -> None:
    lines = [_FORMAT_TAG_TOPIC]
    if metadata:
        for key in sorted(metadata):
            lines.append(f"# {key}: {metadata[key]}")
    lines.append(f"#n={g.n}")
    lines.append(f"#k={g.k_topics}")
    names = g.vertex_names or tuple(f"v{i}" for i in range(g.n))
    for i, name in enumerate(names):
        lines.append(f"#vertex {i} {name}")
    for e in range(g.num_edges):
        probs = " ".join(_fmt_prob(x) for x in g.topic_probs[e])
        lines.append(f"e {g.edge_u[e]} {g.edge_v[e]} {g.message_count[e]} {probs}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_topic_graph(path) -> TopicGraph:
    n = None
    k = None
    names: dict[int, str] = {}
    edges = []
    seen_pairs = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#n="):
                n = _parse_int(line[3:], lineno, "vertex count")
            elif line.startswith("#k="):
                k = _parse_int(line[3:], lineno, "topic count")
            elif line.startswith("#vertex "):
                parts = line.split(maxsplit=2)
                if len(parts) != 3:
                    raise GraphFormatError("malformed #vertex line", lineno)
                names[_parse_int(parts[1], lineno, "vertex id")] = parts[2]
            elif line.startswith("#"):
                continue  # metadata
            elif line.startswith("e "):
                if n is None or k is None:
                    raise GraphFormatError("edge before #n=/#k= headers", lineno)
                fields = line.split()
                if len(fields) != 4 + k:
                    raise GraphFormatError(
                        f"expected 'e u v count' plus {k} topic probabilities", lineno)
                u = _parse_int(fields[1], lineno, "endpoint")
                v = _parse_int(fields[2], lineno, "endpoint")
                count = _parse_int(fields[3], lineno, "message count")
                if not (0 <= u < n and 0 <= v < n):
                    raise GraphFormatError(f"unknown vertex id in edge ({u}, {v})", lineno)
                if u == v:
                    raise GraphFormatError("self-loop", lineno)
                if count < 1:
                    raise GraphFormatError("message count must be >= 1", lineno)
                pair = (min(u, v), max(u, v))
                if pair in seen_pairs:
                    raise GraphFormatError(f"duplicate edge ({pair[0]}, {pair[1]})", lineno)
                seen_pairs.add(pair)
                try:
                    probs = np.array([float(x) for x in fields[4:]])
                except ValueError:
                    raise GraphFormatError("malformed topic probability", lineno) from None
                if probs.min() < 0:
                    raise GraphFormatError("negative topic probability", lineno)
                total = probs.sum()
                if abs(total - 1.0) > 1e-6:
                    raise GraphFormatError(
                        f"topic distribution sums to {total!r}, expected 1", lineno)
                if abs(total - 1.0) > 1e-12:
                    probs = probs / total
                edges.append((u, v, count, probs))
            else:
                raise GraphFormatError(f"unrecognized line {line[:40]!r}", lineno)
    if n is None or k is None:
        raise GraphFormatError("missing #n= or #k= header")
    vertex_names = None
    if names:
        missing = set(range(n)) - names.keys()
        if missing:
            raise GraphFormatError(f"symbol table misses vertex {min(missing)}")
        vertex_names = tuple(names[i] for i in range(n))
    return TopicGraph.from_edges(n, edges, k, vertex_names)


def _parse_int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise GraphFormatError(f"malformed {what} {text!r}", lineno) from None


# ---------------------------------------------------------------------------
# attributed-graph files
# ---------------------------------------------------------------------------

def write_attributed_graph(g: AttributedGraph, path, metadata: dict | None = None) -> None:
    lines = [_FORMAT_TAG_ATTR]
    if metadata:
        for key in sorted(metadata):
            lines.append(f"# {key}: {metadata[key]}")
    lines.append(f"#n={g.n}")
    lines.append(f"#ke={g.k_edge_attrs}")
    for i in range(g.n):
        lines.append(f"v {i} {int(g.truth[i])} {int(g.observed[i])}")
    for e in range(g.num_edges):
        lines.append(f"a {g.edge_u[e]} {g.edge_v[e]} {g.edge_attr[e]}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_attributed_graph(path) -> AttributedGraph:
    n = None
    ke = None
    truth = {}
    observed = {}
    edges = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#n="):
                n = _parse_int(line[3:], lineno, "vertex count")
            elif line.startswith("#ke="):
                ke = _parse_int(line[4:], lineno, "attribute count")
            elif line.startswith("#"):
                continue
            elif line.startswith("v "):
                fields = line.split()
                if len(fields) != 4:
                    raise GraphFormatError("malformed vertex line", lineno)
                vid = _parse_int(fields[1], lineno, "vertex id")
                truth[vid] = _parse_int(fields[2], lineno, "truth label")
                observed[vid] = _parse_int(fields[3], lineno, "observed label")
            elif line.startswith("a "):
                fields = line.split()
                if len(fields) != 4:
                    raise GraphFormatError("malformed edge line", lineno)
                edges.append((_parse_int(fields[1], lineno, "endpoint"),
                              _parse_int(fields[2], lineno, "endpoint"),
                              _parse_int(fields[3], lineno, "edge attribute")))
            else:
                raise GraphFormatError(f"unrecognized line {line[:40]!r}", lineno)
    if n is None or ke is None:
        raise GraphFormatError("missing #n= or #ke= header")
    missing = set(range(n)) - truth.keys()
    if missing:
        raise GraphFormatError(f"missing vertex line for id {min(missing)}")
    try:
        return AttributedGraph.from_edges(
            n, edges,
            [truth[i] for i in range(n)],
            [observed[i] for i in range(n)],
            k_edge_attrs=ke)
    except InputError as exc:
        raise GraphFormatError(str(exc)) from exc


# ---------------------------------------------------------------------------
# synthetic corpus surrogate
# ---------------------------------------------------------------------------

def generate_surrogate(n: int = 184, k_topics: int = 32, density: float = 0.05, *,
                       group_size: int = 44, group_density: float = 0.62,
                       tilt: float = 0.5, concentration: float = 150.0,
                       mean_extra_messages: float = 1.0, seed) -> TopicGraph:
    """Random topic graph with a latent dense, topically-skewed group.

    Vertices 0..group_size-1 form a latent block: pairs inside it connect
    with probability ``group_density`` and their edges draw topic
    distributions tilted toward the first quarter of the topics; every other
    pair connects at the background rate chosen so the expected overall
    density equals ``density``.  ``tilt`` in [0, 1) moves within-block topic
    mass onto the hot topics; ``concentration`` controls how tightly each
    edge's distribution clusters around its group mean.  Message counts are
    1 + Poisson(mean_extra_messages).
    """
    if n < 4:
        raise InputError("n must be >= 4")
    if k_topics < 2:
        raise InputError("k_topics must be >= 2")
    if not 0.0 < density < 1.0:
        raise InputError("density must lie in (0, 1)")
    if not 2 <= group_size < n:
        raise InputError("group_size must lie in 2..n-1")
    if not 0.0 <= tilt < 1.0:
        raise InputError("tilt must lie in [0, 1)")
    if concentration <= 0:
        raise InputError("concentration must be positive")
    total_pairs = math.comb(n, 2)
    block_pairs = math.comb(group_size, 2)
    background = (density * total_pairs - group_density * block_pairs) / (total_pairs - block_pairs)
    if not 0.0 < background < 1.0:
        raise InputError(
            "density/group_size/group_density are inconsistent "
            f"(implied background rate {background:.4f})")

    rng = generator(seed)
    iu, iv = np.triu_indices(n, k=1)
    in_block = (iu < group_size) & (iv < group_size)
    p_edge = np.where(in_block, group_density, background)
    present = rng.random(iu.size) < p_edge
    eu, ev, edge_in_block = iu[present], iv[present], in_block[present]

    n_hot = max(1, k_topics // 4)
    uniform = np.full(k_topics, 1.0 / k_topics)
    hot = np.zeros(k_topics)
    hot[:n_hot] = 1.0 / n_hot
    tilted = (1.0 - tilt) * uniform + tilt * hot
    alphas = np.where(edge_in_block[:, None], tilted, uniform) * concentration
    raw = rng.standard_gamma(alphas)
    probs = raw / raw.sum(axis=1, keepdims=True)
    counts = 1 + rng.poisson(mean_extra_messages, size=eu.size)
    names = tuple(f"actor{i:03d}" for i in range(n))
    return TopicGraph(n, eu, ev, probs, counts, names)


# ---------------------------------------------------------------------------
# result serialization (CSV with metadata comments / JSON with a meta object)
# ---------------------------------------------------------------------------

def _meta_lines(kind: str, config: dict) -> list[str]:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return [
        f"# vnom {kind}",
        f"# created: {stamp}",
        f"# config: {json.dumps(config, sort_keys=True, default=str)}",
    ]


def _fnum(x) -> str:
    return repr(float(x))


def sweep_config(result: SweepResult) -> dict:
    spec = result.spec
    return {
        "n": spec.n,
        "p": [spec.p.q0, spec.p.q1, spec.p.q2],
        "s": [spec.s.q0, spec.s.q1, spec.s.q2],
        "m_values": list(spec.m_values),
        "m_prime_ratio": spec.m_prime_ratio,
        "m_prime_values": list(spec.m_prime_values) if spec.m_prime_values else None,
        "gamma_grid": list(spec.gamma_grid),
        "replicates": spec.replicates,
        "master_seed": spec.master_seed,
        "enforce_s2_eq_p2": spec.enforce_s2_eq_p2,
    }


def sweep_to_csv(result: SweepResult) -> str:
    spec = result.spec
    out = _io.StringIO()
    for line in _meta_lines("sweep", sweep_config(result)):
        out.write(line + "\n")
    for cell in result.cells:
        for criterion, gamma in sorted(cell.gamma_star.items()):
            out.write(f"# gamma_star: m={cell.m} m_prime={cell.m_prime} "
                      f"criterion={criterion} value={_fnum(gamma)}\n")
    for m, mp, reason in result.skipped:
        out.write(f"# skipped: m={m} m_prime={mp} reason={reason}\n")
    out.write("n,m,m_prime,p0,p1,p2,s0,s1,s2,gamma,criterion,mean,stderr,replicates\n")
    base = (f"{spec.n},{{m}},{{mp}},{_fnum(spec.p.q0)},{_fnum(spec.p.q1)},{_fnum(spec.p.q2)},"
            f"{_fnum(spec.s.q0)},{_fnum(spec.s.q1)},{_fnum(spec.s.q2)}")
    for cell in result.cells:
        prefix = base.format(m=cell.m, mp=cell.m_prime)
        for gamma in spec.gamma_grid:
            agg = cell.reports[gamma]
            for criterion in ("s_at_1", "mrr", "map"):
                out.write(f"{prefix},{_fnum(gamma)},{criterion},"
                          f"{_fnum(agg.mean(criterion))},{_fnum(agg.se(criterion))},"
                          f"{agg.n_replicates}\n")
    return out.getvalue()


def sweep_to_json(result: SweepResult) -> str:
    cells = []
    for cell in result.cells:
        cells.append({
            "m": cell.m,
            "m_prime": cell.m_prime,
            "replicates": cell.replicates,
            "gamma_star": {k: v for k, v in sorted(cell.gamma_star.items())},
            "reports": {
                _fnum(gamma): {
                    "s_at_1": {"mean": agg.mean_s_at_1, "stderr": agg.se_s_at_1},
                    "mrr": {"mean": agg.mrr, "stderr": agg.se_rr},
                    "map": {"mean": agg.map, "stderr": agg.se_ap},
                }
                for gamma, agg in cell.reports.items()
            },
        })
    data = {"cells": cells,
            "skipped": [{"m": m, "m_prime": mp, "reason": r} for m, mp, r in result.skipped]}
    doc = {"meta": {"kind": "sweep",
                    "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                    "config": sweep_config(result)},
           "data": data}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True)


def surface_to_csv(result: SurfaceResult, config: dict) -> str:
    out = _io.StringIO()
    for line in _meta_lines("surface", config):
        out.write(line + "\n")
    out.write("criterion,y,gamma,mean,stderr,replicates\n")
    for yi, y in enumerate(result.y_values):
        for gi, gamma in enumerate(result.gamma_grid):
            out.write(f"ap_y,{y},{_fnum(gamma)},{_fnum(result.ap_y_mean[yi, gi])},"
                      f"{_fnum(result.ap_y_se[yi, gi])},{result.replicates}\n")
    for gi, gamma in enumerate(result.gamma_grid):
        out.write(f"mrr,,{_fnum(gamma)},{_fnum(result.mrr_mean[gi])},"
                  f"{_fnum(result.mrr_se[gi])},{result.replicates}\n")
    for gi, gamma in enumerate(result.gamma_grid):
        out.write(f"map,,{_fnum(gamma)},{_fnum(result.map_mean[gi])},"
                  f"{_fnum(result.map_se[gi])},{result.replicates}\n")
    return out.getvalue()


def surface_to_json(result: SurfaceResult, config: dict) -> str:
    data = {
        "gamma_grid": list(result.gamma_grid),
        "y_values": list(result.y_values),
        "ap_y_mean": result.ap_y_mean.tolist(),
        "ap_y_stderr": result.ap_y_se.tolist(),
        "mrr_mean": result.mrr_mean.tolist(),
        "mrr_stderr": result.mrr_se.tolist(),
        "map_mean": result.map_mean.tolist(),
        "map_stderr": result.map_se.tolist(),
        "replicates": result.replicates,
    }
    doc = {"meta": {"kind": "surface",
                    "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                    "config": config},
           "data": data}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True)


def trials_to_csv(screening: ScreeningResult, trials: TrialsResult, config: dict) -> str:
    out = _io.StringIO()
    for line in _meta_lines("importance", config):
        out.write(line + "\n")
    out.write(f"# screening: attempts={screening.attempts} "
              f"accepted={screening.n_accepted} "
              f"acceptance_rate={_fnum(screening.acceptance_rate)}\n")
    out.write("bin_rho_lo,bin_rho_hi,bin_p_lo,bin_p_hi,n_partitions,n_reports,"
              "insufficient,gamma,criterion,mean,stderr\n")
    for key in sorted(trials.bins):
        b = trials.bins[key]
        prefix = (f"{_fnum(b.rho_lo)},{_fnum(b.rho_hi)},{_fnum(b.p_lo)},{_fnum(b.p_hi)},"
                  f"{b.n_partitions},{b.n_reports},{int(b.insufficient)}")
        for gamma in trials.gamma_grid:
            agg = b.per_gamma[gamma]
            for criterion in ("s_at_1", "mrr", "map"):
                out.write(f"{prefix},{_fnum(gamma)},{criterion},"
                          f"{_fnum(agg.mean(criterion))},{_fnum(agg.se(criterion))}\n")
        if b.fusion_advantage_mrr is not None:
            out.write(f"{prefix},,fusion_advantage_mrr,"
                      f"{_fnum(b.fusion_advantage_mrr)},\n")
    return out.getvalue()


def partitions_to_csv(trials: TrialsResult, config: dict) -> str:
    """Raw per-partition table (gap coordinates, rate estimates, metric means)."""
    out = _io.StringIO()
    for line in _meta_lines("importance-partitions", config):
        out.write(line + "\n")
    out.write("partition,delta_rho,delta_p,p1_hat,p2_hat,s1_hat,s2_hat,"
              "gamma,criterion,mean\n")
    for pt in trials.partitions:
        rates = pt.rates
        rate_cols = (",,,," if rates is None else
                     f"{_fnum(rates.p1)},{_fnum(rates.p2)},{_fnum(rates.s1)},{_fnum(rates.s2)},")
        prefix = f"{pt.index},{_fnum(pt.delta_rho)},{_fnum(pt.delta_p)},{rate_cols}"
        for gamma in trials.gamma_grid:
            out.write(f"{prefix}{_fnum(gamma)},s_at_1,{_fnum(pt.mean_s_at_1[gamma])}\n")
            out.write(f"{prefix}{_fnum(gamma)},mrr,{_fnum(pt.mean_rr[gamma])}\n")
            out.write(f"{prefix}{_fnum(gamma)},map,{_fnum(pt.mean_ap[gamma])}\n")
    return out.getvalue()


def rate_bins_csv(trials: TrialsResult, config: dict, width: float = 0.02) -> str:
    """Mean MRR per gamma, binned by each estimated edge-rate component.

    Partitions with rate estimates pool into half-open bins of the given
    width on each of p1/p2/s1/s2; one row per (component, bin, gamma).
    """
    from .importance import bin_index

    out = _io.StringIO()
    for line in _meta_lines("importance-rate-bins", {**config, "rate_bin_width": width}):
        out.write(line + "\n")
    out.write("component,bin_lo,bin_hi,n_partitions,gamma,mean_mrr\n")
    components = ("p1", "p2", "s1", "s2")
    groups: dict = {}
    for pt in trials.partitions:
        if pt.rates is None:
            continue
        for comp in components:
            key = (comp, bin_index(getattr(pt.rates, comp), width))
            groups.setdefault(key, []).append(pt)
    for comp, idx in sorted(groups):
        pts = groups[(comp, idx)]
        for gamma in trials.gamma_grid:
            mean = sum(pt.mean_rr[gamma] for pt in pts) / len(pts)
            out.write(f"{comp},{_fnum(idx * width)},{_fnum((idx + 1) * width)},"
                      f"{len(pts)},{_fnum(gamma)},{_fnum(mean)}\n")
    return out.getvalue()


def trials_to_json(screening: ScreeningResult, trials: TrialsResult, config: dict) -> str:
    bins = []
    for key in sorted(trials.bins):
        b = trials.bins[key]
        bins.append({
            "rho_lo": b.rho_lo, "rho_hi": b.rho_hi,
            "p_lo": b.p_lo, "p_hi": b.p_hi,
            "n_partitions": b.n_partitions,
            "n_reports": b.n_reports,
            "insufficient": b.insufficient,
            "fusion_advantage_mrr": b.fusion_advantage_mrr,
            "reports": {
                _fnum(gamma): {
                    "s_at_1": {"mean": agg.mean_s_at_1, "stderr": agg.se_s_at_1},
                    "mrr": {"mean": agg.mrr, "stderr": agg.se_rr},
                    "map": {"mean": agg.map, "stderr": agg.se_ap},
                }
                for gamma, agg in b.per_gamma.items()
            },
        })
    partitions = []
    for pt in trials.partitions:
        partitions.append({
            "partition": pt.index,
            "delta_rho": pt.delta_rho,
            "delta_p": pt.delta_p,
            "rates": None if pt.rates is None else
                {"p1": pt.rates.p1, "p2": pt.rates.p2, "s1": pt.rates.s1, "s2": pt.rates.s2},
            "mean_s_at_1": {_fnum(g): v for g, v in pt.mean_s_at_1.items()},
            "mean_rr": {_fnum(g): v for g, v in pt.mean_rr.items()},
            "mean_ap": {_fnum(g): v for g, v in pt.mean_ap.items()},
        })
    data = {
        "screening": {"attempts": screening.attempts,
                      "accepted": screening.n_accepted,
                      "acceptance_rate": screening.acceptance_rate},
        "bins": bins,
        "partitions": partitions,
    }
    doc = {"meta": {"kind": "importance",
                    "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                    "config": config},
           "data": data}
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=True)


def pmf_table_csv(tables: dict, tv_rows: list, config: dict) -> str:
    """Analytic PMF tables (and optional MC-vs-analytic TV rows).

    ``tables`` maps (statistic, vertex_class) -> PMF; ``tv_rows`` holds
    (statistic, vertex_class, tv_distance) triples.
    """
    out = _io.StringIO()
    for line in _meta_lines("analytic", config):
        out.write(line + "\n")
    out.write("record,statistic,vertex_class,k,value\n")
    for (stat, cls), pmf in tables.items():
        for k, prob in zip(pmf.support, pmf.probs):
            out.write(f"pmf,{stat},{cls},{k},{_fnum(prob)}\n")
    for stat, cls, tv in tv_rows:
        out.write(f"tv,{stat},{cls},,{_fnum(tv)}\n")
    return out.getvalue()


def data_section(text: str) -> str:
    """The non-metadata part of a CSV document (everything but '#' lines)."""
    return "".join(line for line in text.splitlines(keepends=True)
                   if not line.startswith("#"))


def json_data_section(text: str) -> str:
    """Canonical serialization of a JSON document's data subtree."""
    return json.dumps(json.loads(text)["data"], sort_keys=True)
