#!/usr/bin/env python3
"""Render figures from a chua-link output directory.

Usage:
    scripts/plot_run.py OUT_DIR [OUT_DIR ...]

Each OUT_DIR is a directory produced by one of the `chua-link`
subcommands. The script detects which artifacts are present
(`portrait.csv`, `message.csv`/`encrypted.csv`/`decrypted.csv`,
`sweep.csv`) and writes one PNG per figure next to the inputs.
"""

import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    print(f"wrote {path}")


def plot_portrait(out_dir: Path) -> None:
    df = pd.read_csv(out_dir / "portrait.csv")
    if "va_rx" in df.columns:
        # Coupled pair run: attractor, the synchronisation diagonal, and
        # the error trace on a log scale.
        fig, axes = plt.subplots(1, 3, figsize=(13, 4))
        axes[0].plot(df["va_tx"], df["vb_tx"], lw=0.3)
        axes[0].set(xlabel="$v_a$ tx (V)", ylabel="$v_b$ tx (V)", title="transmitter attractor")
        axes[1].plot(df["va_tx"], df["va_rx"], lw=0.3)
        axes[1].set(xlabel="$v_a$ tx (V)", ylabel="$v_a$ rx (V)", title="sync diagonal")
        axes[1].set_aspect("equal", adjustable="datalim")
        err = (df["va_tx"] - df["va_rx"]).abs()
        axes[2].semilogy(df["t"] * 1e3, err.clip(lower=1e-16), lw=0.5)
        axes[2].set(xlabel="t (ms)", ylabel="$|v_a$ tx $-$ $v_a$ rx$|$ (V)", title="sync error")
        save(fig, out_dir / "portrait.png")

        metrics_path = out_dir / "sync_metrics.json"
        if metrics_path.exists():
            metrics = json.loads(metrics_path.read_text())
            print(f"  normalized rms error: {metrics['normalized_rms']:.3e}")
    else:
        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        axes[0].plot(df["va"], df["vb"], lw=0.3)
        axes[0].set(xlabel="$v_a$ (V)", ylabel="$v_b$ (V)", title="phase portrait")
        axes[1].plot(df["t"] * 1e3, df["va"], lw=0.5)
        axes[1].set(xlabel="t (ms)", ylabel="$v_a$ (V)", title="waveform")
        save(fig, out_dir / "portrait.png")


def plot_traces(out_dir: Path) -> None:
    names = ["message.csv", "encrypted.csv", "decrypted.csv"]
    if not all((out_dir / n).exists() for n in names):
        return
    fig, axes = plt.subplots(3, 1, figsize=(10, 6), sharex=True)
    for ax, name in zip(axes, names):
        df = pd.read_csv(out_dir / name)
        ax.plot(df["t"] * 1e3, df["v"], lw=0.6)
        ax.set_ylabel(name.removesuffix(".csv"))
    axes[-1].set_xlabel("t (ms)")
    axes[0].set_title("message / ciphertext / recovered")
    save(fig, out_dir / "traces.png")


def plot_sweep(out_dir: Path) -> None:
    path = out_dir / "sweep.csv"
    if not path.exists():
        return
    df = pd.read_csv(path)
    ok = df[df["normalized_rms"].notna()]
    fig, ax = plt.subplots(figsize=(6, 4))
    if "r_c" in df.columns:
        finite = ok[ok["r_c"] != float("inf")]
        ax.loglog(finite["r_c"], finite["normalized_rms"], "o-")
        ax.set(xlabel="coupling resistance (Ω)", ylabel="normalized rms sync error")
        uncoupled = ok[ok["r_c"] == float("inf")]
        if not uncoupled.empty:
            ax.axhline(uncoupled["normalized_rms"].iloc[0], ls="--", c="gray", label="uncoupled")
            ax.legend()
    else:
        ax.plot(ok["mismatch"] * 100, ok["normalized_rms"], "o-", label="sync error")
        ax2 = ax.twinx()
        ax2.plot(ok["mismatch"] * 100, ok["message_ber"], "s--", c="tab:red", label="message BER")
        ax2.set_ylabel("message BER", color="tab:red")
        ax.set(xlabel="receiver resistance mismatch (%)", ylabel="normalized rms sync error")
    ax.set_title("parameter sweep")
    save(fig, out_dir / "sweep.png")


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 1
    for arg in sys.argv[1:]:
        out_dir = Path(arg)
        if not out_dir.is_dir():
            print(f"skipping {out_dir}: not a directory", file=sys.stderr)
            continue
        print(f"{out_dir}:")
        if (out_dir / "portrait.csv").exists():
            plot_portrait(out_dir)
        plot_traces(out_dir)
        plot_sweep(out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
