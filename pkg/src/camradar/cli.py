"""Command-line runner for the fusion pipeline."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import desk_scale, load_config, paper_scale
from .pipeline import DUMP_STAGES, run_pipeline, scene_for_config, write_report
from .synthscene import load_scene, save_scene


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="camradar",
        description="Run the camera/4D-radar fusion pipeline on a scene and "
                    "report detection and occupancy metrics.")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scene", type=Path, help="scene directory to load")
    src.add_argument("--synth", type=int, metavar="SEED",
                     help="generate a synthetic scene from SEED (default 0)")
    p.add_argument("--config", type=Path, help="JSON configuration file")
    p.add_argument("--paper-scale", action="store_true",
                   help="use the full-scale configuration (slow)")
    p.add_argument("--frames", type=int, default=None, metavar="T",
                   help="temporal window: total frames including the current one")
    p.add_argument("--sweeps", type=int, default=None, metavar="N",
                   help="radar sweeps accumulated per frame")
    p.add_argument("--steps", type=int, default=4,
                   help="scene timesteps to process (synthetic scenes)")
    p.add_argument("--dump", action="append", default=[], metavar="STAGE",
                   help=f"dump a stage every frame; stages: {', '.join(DUMP_STAGES)}")
    p.add_argument("--report", type=Path, default=None,
                   help="metrics JSON path (default OUT_DIR/report.json)")
    p.add_argument("--out-dir", type=Path, default=Path("out"),
                   help="directory for dumps, predictions and PR curves")
    p.add_argument("--save-scene", type=Path, default=None, metavar="DIR",
                   help="serialize the scene being processed to DIR")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
        elif args.paper_scale:
            cfg = paper_scale()
        else:
            cfg = desk_scale()
        if args.frames is not None:
            from dataclasses import replace
            cfg = replace(cfg, temporal_frames=args.frames).validate()
        if args.sweeps is not None:
            from dataclasses import replace
            cfg = replace(cfg, sweeps=args.sweeps).validate()
        if args.synth is not None:
            from dataclasses import replace
            cfg = replace(cfg, seed=args.synth).validate()

        if args.scene:
            scene = load_scene(args.scene)
            steps = scene.config.n_steps
        else:
            scene = scene_for_config(cfg, n_steps=args.steps)
            steps = args.steps
        if args.save_scene:
            save_scene(scene, args.save_scene)

        for stage in args.dump:
            if stage not in DUMP_STAGES:
                raise ValueError(
                    f"unknown stage {stage!r}; valid stages: {', '.join(DUMP_STAGES)}")

        result = run_pipeline(cfg, scene, n_frames=steps,
                              dump_stages=args.dump, out_dir=args.out_dir)
        report_path = args.report or (args.out_dir / "report.json")
        write_report(result, report_path, args.out_dir)

        det = result["report"]["detection"]
        occ = result["report"]["occupancy"]
        print(f"frames: {result['report']['frames']}")
        print(f"mAP: {det['mAP']:.4f}  ODS: {det['ODS']:.4f}")
        print(f"SC IoU: {occ['SC_IoU']:.4f}  mIoU: {occ['mIoU']:.4f}")
        print(f"report: {report_path}")
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
