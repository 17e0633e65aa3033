"""CSV/JSON persistence and SVG figure emission.

Determinism contract: identical config + seed must reproduce CSV and
manifest outputs byte for byte, so nothing here records wall-clock
data, and the SVG backend is pinned to a fixed hash salt with the date
metadata stripped (figures are then deterministic too, though only the
data they render is contractual).
"""

from __future__ import annotations

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

from .errors import InputError  # noqa: E402
from .mesh import TriMesh  # noqa: E402

plt.rcParams["svg.hashsalt"] = "superliouville"
_SVG_KWARGS = {"format": "svg", "metadata": {"Date": None}}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if np.isfinite(val) else repr(val)
    if isinstance(obj, (np.bool_, bool)):
        # bool subclasses int, so this check has to come first
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def write_manifest(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest {path} is not valid JSON: {exc}") from None


def save_spinor_csv(path, psi) -> None:
    psi = np.asarray(psi, dtype=complex)
    with open(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex_id", "re_0", "im_0", "re_1", "im_1"])
        for i, (p0, p1) in enumerate(psi):
            writer.writerow([i, repr(float(p0.real)), repr(float(p0.imag)),
                             repr(float(p1.real)), repr(float(p1.imag))])


def load_spinor_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["vertex_id", "re_0", "im_0", "re_1", "im_1"]:
            raise InputError(f"{path}: not a spinor CSV")
        for row in reader:
            rows.append([float(row[1]) + 1j * float(row[2]),
                         float(row[3]) + 1j * float(row[4])])
    return np.array(rows, dtype=complex)


def write_rows_csv(path, header, rows) -> None:
    with open(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _triangulation(mesh: TriMesh) -> mtri.Triangulation:
    return mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                              mesh.triangles)


def plot_scalar_field(mesh: TriMesh, values, path, title: str, cbar_label: str = "") -> None:
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    tpc = ax.tripcolor(_triangulation(mesh), np.asarray(values, dtype=float),
                       shading="gouraud", cmap="viridis")
    fig.colorbar(tpc, ax=ax, label=cbar_label)
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, **_SVG_KWARGS)
    plt.close(fig)


def plot_spinor_magnitude(mesh: TriMesh, psi, path) -> None:
    mag = np.sqrt(np.sum(np.abs(np.asarray(psi, dtype=complex)) ** 2, axis=1))
    plot_scalar_field(mesh, mag, path, "spinor magnitude", cbar_label="|psi|")


def plot_spectrum(eigenvalues, rho, path) -> None:
    lam = np.asarray(eigenvalues, dtype=float)
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    ax.hlines(lam, 0.1, 0.9, colors="tab:blue", linewidth=0.8)
    if rho is not None:
        ax.axhline(rho, color="tab:red", linestyle="--", linewidth=1.2,
                   label=f"rho = {rho:.6g}")
        ax.legend(loc="best")
    ax.axhline(0.0, color="black", linewidth=0.6)
    lo = np.sort(lam[lam < 0])[-12:] if np.any(lam < 0) else np.zeros(0)
    hi = np.sort(lam[lam > 0])[:12] if np.any(lam > 0) else np.zeros(0)
    window = np.concatenate([lo, hi, [0.0, rho if rho else 0.0]])
    pad = 0.3 * (window.max() - window.min() + 1e-9)
    ax.set_ylim(window.min() - pad, window.max() + pad)
    ax.set_xticks([])
    ax.set_ylabel("eigenvalue")
    ax.set_title("weighted spectrum near zero")
    fig.tight_layout()
    fig.savefig(path, **_SVG_KWARGS)
    plt.close(fig)


def plot_energy_history(diagnostics, path) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.2, 5.2), sharex=True)
    if len(diagnostics.iterations):
        ax1.plot(diagnostics.iterations, diagnostics.energies, "-o", markersize=3)
        ax2.semilogy(diagnostics.iterations,
                     np.maximum(diagnostics.grad_norms, 1e-300), "-s",
                     markersize=3, color="tab:orange")
    ax1.set_ylabel("energy at path max")
    ax2.set_ylabel("constrained gradient")
    ax2.set_xlabel("iteration")
    ax1.set_title("minimax deformation history")
    fig.tight_layout()
    fig.savefig(path, **_SVG_KWARGS)
    plt.close(fig)


def plot_sweep(rows, path) -> None:
    """rows: (rho, energy, psi_norm, converged) tuples."""
    ok = [(r, e) for r, e, _, c in rows if c]
    bad = [(r, e) for r, e, _, c in rows if not c]
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    if ok:
        ax.plot(*zip(*ok), "o-", label="converged")
    if bad:
        ax.plot(*zip(*bad), "x", color="tab:red", label="failed")
    ax.set_xlabel("rho")
    ax.set_ylabel("energy")
    ax.set_title("energy along the rho sweep")
    if ok or bad:
        ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, **_SVG_KWARGS)
    plt.close(fig)
