"""JSON and CSV formats shared by the CLI.

Every JSON document carries ``"format_version": 1``. Matrices are stored as
row-major nested lists. Output is deterministic: keys are sorted and floats
use Python's shortest round-trip repr.
"""

import csv
import io
import json
import os
import tempfile

import numpy as np

from .model import FitResult, ModelParams

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path, text):
    """Write `text` to `path` via a temporary file and rename; no partial files on failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _floats(a):
    return np.asarray(a, dtype=float).tolist()


def variables_to_list(names, categories):
    return [{"name": n, "categories": list(c)} for n, c in zip(names, categories)]


def fit_result_to_dict(result, variables=None):
    p = result.params
    out = {
        "format_version": FORMAT_VERSION,
        "blocks": list(p.blocks),
        "rank": p.n_components,
        "lambda": float(result.lam),
        "mu": _floats(p.mu),
        "d": _floats(p.d),
        "U": _floats(p.U),
        "V": _floats(p.V),
        "trace": _floats(result.deviance_trace),
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "effective_rank": int(result.effective_rank),
    }
    if variables is not None:
        out["variables"] = variables
    return out


def fit_result_from_dict(doc):
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {doc.get('format_version')!r}")
    try:
        p = len(doc["d"])
        n = len(doc["U"])
        K = len(doc["mu"])
        params = ModelParams(
            mu=doc["mu"],
            U=np.reshape(np.asarray(doc["U"], dtype=float), (n, p)),
            d=doc["d"],
            V=np.reshape(np.asarray(doc["V"], dtype=float), (K, p)),
            blocks=doc["blocks"],
        )
        return FitResult(
            params=params,
            deviance_trace=np.asarray(doc["trace"], dtype=float),
            converged=bool(doc["converged"]),
            iterations=int(doc["iterations"]),
            lam=float(doc["lambda"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed fit result: {exc}") from exc


def qut_result_to_dict(result):
    return {
        "format_version": FORMAT_VERSION,
        "lambda_qut": float(result.lambda_qut),
        "estimated_rank": int(result.estimated_rank),
        "alpha": float(result.alpha_used),
        "replicates": int(result.null_singular_values.size),
        "seed": int(result.seed),
        "null_singular_values": _floats(result.null_singular_values),
    }


def cv_result_to_dict(result):
    return {
        "format_version": FORMAT_VERSION,
        "rank": int(result.rank),
        "folds": int(result.folds),
        "seed": int(result.seed),
        "fold_seed": int(result.fold_seed),
        "lambda_grid": _floats(result.lambda_grid),
        "mean_heldout_deviance": _floats(result.mean_heldout_deviance),
        "lambda_star": float(result.lambda_star),
    }


def _fmt(x):
    return repr(float(x))


def coordinates_csv(rows, row_labels, categories, cat_labels):
    """CSV with one line per individual and per category: ``kind,label,dim1..dimp``."""
    rows = np.asarray(rows, dtype=float)
    categories = np.asarray(categories, dtype=float)
    p = rows.shape[1]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "label"] + [f"dim{s + 1}" for s in range(p)])
    for label, r in zip(row_labels, rows):
        writer.writerow(["row", label] + [_fmt(x) for x in r])
    for label, a in zip(cat_labels, categories):
        writer.writerow(["category", label] + [_fmt(x) for x in a])
    return buf.getvalue()


def category_labels(variables, blocks):
    if variables:
        return [f"{v['name']}={c}" for v in variables for c in v["categories"]]
    return [f"v{j + 1}={k + 1}" for j, b in enumerate(blocks) for k in range(b)]
