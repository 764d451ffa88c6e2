"""Headless report figures (Agg backend, rendered straight to files)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import RdPoint


def plot_rd_curve(points: list[RdPoint], path, title: str = "Rate-distortion sweep") -> None:
    """Render one RD curve (bpp vs quality) as a PNG."""
    pts = sorted(points, key=lambda p: p.bpp)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot([p.bpp for p in pts], [p.quality for p in pts], marker="o")
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel("PSNR (dB)")
    ax.set_title(title)
    ax.grid(True, alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_rd_curves(curves: dict[str, list[RdPoint]], path, title: str = "Rate-distortion comparison") -> None:
    """Render several labeled RD curves on one axis as a PNG."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, points in curves.items():
        pts = sorted(points, key=lambda p: p.bpp)
        ax.plot([p.bpp for p in pts], [p.quality for p in pts], marker="o", label=label)
    ax.set_xlabel("bits per pixel")
    ax.set_ylabel("quality")
    ax.set_title(title)
    ax.grid(True, alpha=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
